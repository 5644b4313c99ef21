//! Versioned CSV output and the risk-curve reader used by `plot`.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const MAGIC: &str = "# shrinkpred-csv v1";

pub const RISK_HEADER: [&str; 9] = ["method", "mu_norm", "d", "u", "v", "trials", "seed", "kl_risk", "std_err"];

/// Renders a table with the version line first. Floats use Rust's shortest
/// round-trip formatting, so reading the file back recovers them exactly.
pub fn render(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "{MAGIC}").expect("writing to a Vec cannot fail");
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let encode = |e: csv::Error| CliError::config(format!("cannot encode CSV: {e}"));
        w.write_record(header).map_err(encode)?;
        for row in rows {
            w.write_record(row).map_err(encode)?;
        }
        w.flush().map_err(|e| CliError::io("<buffer>", e))?;
    }
    Ok(buf)
}

/// Writes bytes to `path`, or to stdout when no path is given.
pub fn emit(bytes: &[u8], path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskRow {
    pub method: String,
    pub mu_norm: f64,
    pub d: usize,
    pub u: f64,
    pub v: f64,
    pub trials: usize,
    pub seed: u64,
    pub kl_risk: f64,
    pub std_err: f64,
}

impl RiskRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.method.clone(),
            self.mu_norm.to_string(),
            self.d.to_string(),
            self.u.to_string(),
            self.v.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
            self.kl_risk.to_string(),
            self.std_err.to_string(),
        ]
    }
}

/// Parses a risk-curve table. Errors carry the 1-based line number in `path`.
pub fn parse_risk_csv(path: &Path, text: &str) -> CliResult<Vec<RiskRow>> {
    let fail = |line: u64, message: String| CliError::Input { path: path.to_path_buf(), line, message };
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    if first.trim_end() != MAGIC {
        return Err(fail(1, format!("expected version line '{MAGIC}'")));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    // Lines in `body` are offset by the version line.
    let line_of = |pos: Option<&csv::Position>| pos.map_or(2, |p| p.line() + 1);

    let header = reader.headers().map_err(|e| fail(line_of(e.position()), e.to_string()))?.clone();
    if header.is_empty() {
        return Err(fail(2, "missing column header".into()));
    }
    if header.iter().ne(RISK_HEADER.iter().copied()) {
        return Err(fail(2, format!("expected columns {}", RISK_HEADER.join(","))));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| fail(line_of(e.position()), e.to_string()))?;
        let line = line_of(record.position());
        let field = |i: usize| record.get(i).unwrap_or_default().trim();
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
            s.parse().map_err(|_| format!("{name}: cannot parse '{s}'"))
        }
        let parsed = (|| -> Result<RiskRow, String> {
            let row = RiskRow {
                method: field(0).to_string(),
                mu_norm: num(field(1), "mu_norm")?,
                d: num(field(2), "d")?,
                u: num(field(3), "u")?,
                v: num(field(4), "v")?,
                trials: num(field(5), "trials")?,
                seed: num(field(6), "seed")?,
                kl_risk: num(field(7), "kl_risk")?,
                std_err: num(field(8), "std_err")?,
            };
            if row.method.is_empty() {
                return Err("method: empty".into());
            }
            if !(row.mu_norm.is_finite() && row.kl_risk.is_finite()) {
                return Err("mu_norm and kl_risk must be finite".into());
            }
            Ok(row)
        })();
        rows.push(parsed.map_err(|m| fail(line, m))?);
    }
    if rows.is_empty() {
        return Err(fail(text.lines().count().max(1) as u64, "no data rows".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, mu: f64, risk: f64) -> RiskRow {
        RiskRow { method: method.into(), mu_norm: mu, d: 10, u: 1.0, v: 0.1, trials: 5, seed: 9, kl_risk: risk, std_err: 0.01 }
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![row("pu", 0.0, 11.989_476_363_991_853), row("e2", 0.5, 1.0 / 3.0)];
        let bytes = render(&RISK_HEADER, &rows.iter().map(RiskRow::to_record).collect::<Vec<_>>()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("# shrinkpred-csv v1\nmethod,mu_norm,"));
        assert_eq!(parse_risk_csv(Path::new("x.csv"), &text).unwrap(), rows);
    }

    #[test]
    fn errors_name_the_line() {
        let p = Path::new("r.csv");
        let head = format!("{MAGIC}\n{}\n", RISK_HEADER.join(","));
        let line_of = |text: &str| match parse_risk_csv(p, text).unwrap_err() {
            CliError::Input { line, .. } => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line_of("method\n"), 1);
        assert_eq!(line_of(&format!("{MAGIC}\nfoo,bar\n")), 2);
        assert_eq!(line_of(&head), 2);
        assert_eq!(line_of(&format!("{head}pu,0,10,1,0.1,5,9,1.0,0.1\npu,1,10,1,0.1,5,9,oops,0.1\n")), 4);
        assert_eq!(line_of(&format!("{head}pu,0,10,1,0.1,5,9,1.0,0.1\npu,1,10\n")), 4);
        assert!(parse_risk_csv(p, &format!("{head}pu,0,10,1,0.1,5,9,1.0,0.1\n")).is_ok());
    }
}
