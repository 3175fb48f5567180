//! ℓ1 and ℓ2 recovery programs with optimality certificates.
//!
//! `P1`: min ‖x‖₁ s.t. Ax = b. `P1^ε`: min ‖x‖₁ s.t. ‖Ax − b‖ ≤ ε.
//! `P2` and `P2^ε` are the ℓ2 analogues.
//!
//! Every result carries a dual vector `y`, scaled to be dual feasible, and
//! the duality gap `f(x) − ⟨y, b⟩ + ε‖y‖`, which bounds the suboptimality.

mod l1;
mod l2;
mod recovery;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use l1::{solve_p1, solve_p1_noisy, solve_p1_noisy_with, solve_p1_with, AdmmOptions};
pub use l2::{solve_p2, solve_p2_noisy};
pub use recovery::{duplicate_column_instance, exact_recovery_test, DuplicateInstance, RecoveryReport, Uniqueness};

/// Absolute tolerance on residual norms.
pub const FEAS_TOL: f64 = 1e-8;

/// Default relative tolerance on the duality gap.
pub const CERT_TOL: f64 = 1e-9;

/// Margin for strict dual feasibility in uniqueness certificates.
pub const UNIQUE_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    MaxIter,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    /// Dual vector, scaled so the dual norm of `Aᵀy` is at most 1.
    #[serde(with = "crate::numkernel::serde_vec")]
    pub y: DVector<f64>,
    pub dual_value: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveResult {
    #[serde(with = "crate::numkernel::serde_vec")]
    pub x_star: DVector<f64>,
    pub objective: f64,
    /// `‖Ax − b‖₂`.
    pub eq_residual: f64,
    pub status: Status,
    pub iterations: usize,
    pub certificate: Certificate,
    /// Support of the solution when it came from exact support polishing.
    pub support: Option<Vec<usize>>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}
