use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use shrinkpred_core::risk::{estimate_risks, risk_curve, Method};
use shrinkpred_core::{ProblemConfig, StreamFactory};

const ALL: [Method; 5] =
    [Method::Uniform, Method::PluginE1, Method::PluginE2, Method::EmpiricalBayes { c: 3.0 }, Method::SteinBayes];

fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = StreamFactory::new(seed).stream(0);
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    a.qr().q()
}

#[test]
fn risk_is_rotation_invariant() {
    let d = 6;
    let mu = DVector::from_vec(vec![1.5, -0.5, 0.0, 2.0, 0.3, -1.0]);
    let q = random_orthogonal(d, 3);
    assert!((q.transpose() * &q - DMatrix::identity(d, d)).amax() < 1e-12);
    let a = ProblemConfig::new(1.0, 0.2, mu.clone()).unwrap();
    let b = ProblemConfig::new(1.0, 0.2, &q * mu).unwrap();
    // Different seeds so the two estimates are independent.
    let ra = estimate_risks(&ALL, &a, 3000, 1, 16).unwrap();
    let rb = estimate_risks(&ALL, &b, 3000, 2, 16).unwrap();
    for (x, y) in ra.iter().zip(&rb) {
        let se = x.std_err.hypot(y.std_err);
        assert!((x.value - y.value).abs() < 3.0 * se, "{x:?} vs {y:?}");
    }
}

#[test]
fn uniform_risk_is_flat_and_plugins_dominate_it() {
    let grid: Vec<f64> = (0..=8).map(f64::from).collect();
    let (u, v) = (1.0, 0.1);
    let curve =
        risk_curve(&[Method::Uniform, Method::PluginE1, Method::PluginE2], &grid, 10, u, v, 2000, 5, 1).unwrap();
    let pu = curve.series(Method::Uniform).unwrap();
    let (lo, hi) = pu.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), e| (a.min(e.value), b.max(e.value)));
    let se = pu.iter().map(|e| e.std_err).fold(0.0, f64::max);
    assert!(hi - lo < 4.0 * se, "spread {} vs se {se}", hi - lo);
    for m in [Method::PluginE1, Method::PluginE2] {
        for (e, base) in curve.series(m).unwrap().iter().zip(pu) {
            assert!(e.value <= base.value + 3.0 * e.std_err.hypot(base.std_err), "{e:?} vs {base:?}");
        }
    }
}

#[test]
fn reruns_are_bit_identical() {
    let cfg = ProblemConfig::on_axis(5, 1.0, 0.5, 1.0).unwrap();
    let a = estimate_risks(&ALL, &cfg, 300, 99, 8).unwrap();
    let b = estimate_risks(&ALL, &cfg, 300, 99, 8).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.value.to_bits(), y.value.to_bits());
        assert_eq!(x.std_err.to_bits(), y.std_err.to_bits());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| estimate_risks(&ALL, &cfg, 300, 99, 8).unwrap());
    assert_eq!(a, c);
}
