//! Scalar special functions and one-dimensional quadrature.

mod gamma;
mod quadrature;

pub use gamma::{
    ln_gamma, ln_lower_incomplete_gamma, ln_phi, lower_incomplete_gamma_regularized, phi,
};
pub use quadrature::{build_quadrature, QuadratureRule, MIN_ORDER, NODE_BUDGET};
