//! Dense linear algebra and randomness substrate.

mod linear_map;
mod matrix_io;
mod random;
pub mod serde_vec;

pub use linear_map::{LinearMap, DEFAULT_RANK_TOL};
pub use matrix_io::{format_matrix, parse_matrix, parse_vector};
pub use random::{gaussian_matrix, gaussian_vector, unit_vector, RngStream};

use statrs::function::gamma::ln_gamma;

/// Expected Euclidean length of a standard Gaussian vector in ℝ^m.
///
/// Evaluated as `√2·Γ((m+1)/2)/Γ(m/2)` in the log domain, so it stays finite
/// for large `m`.
pub fn expected_gauss_length(m: usize) -> crate::Result<f64> {
    if m == 0 {
        return Err(crate::Error::invalid("expected_gauss_length needs m >= 1"));
    }
    let m = m as f64;
    Ok(std::f64::consts::SQRT_2 * (ln_gamma((m + 1.0) / 2.0) - ln_gamma(m / 2.0)).exp())
}
