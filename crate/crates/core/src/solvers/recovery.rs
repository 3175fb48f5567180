use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{solve_p1, CERT_TOL};
use crate::error::check_dim;
use crate::lp::{sup_norm_dual, LpOutcome};
use crate::numkernel::LinearMap;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Uniqueness {
    Unique,
    NotUnique,
    /// Dual margin within the tolerance band around 1.
    Unverified,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryReport {
    /// `‖x* − x0‖₂ ≤ tol·‖x0‖₂` for the computed basis pursuit solution.
    pub recovered: bool,
    pub uniqueness: Uniqueness,
    pub relative_error: f64,
    /// Smallest achievable `‖(Aᵀy)_{S^c}‖_∞` over `A_Sᵀy = sgn(x0_S)`.
    pub dual_margin: Option<f64>,
    pub injective_on_support: bool,
}

impl RecoveryReport {
    pub fn passed(&self) -> bool {
        self.recovered && self.uniqueness == Uniqueness::Unique
    }
}

/// Whether basis pursuit returns `x0` from `Ax0`, and whether `x0` is the
/// unique solution.
///
/// Uniqueness holds iff `A_S` is injective and some `y` has `A_Sᵀy = sgn(x0_S)`
/// with `‖(Aᵀy)_{S^c}‖_∞ < 1`; the smallest such norm comes from an LP and is
/// compared against `1 ± tol`.
pub fn exact_recovery_test(a: &LinearMap, x0: &DVector<f64>, tol: f64) -> Result<RecoveryReport> {
    check_dim(a.cols(), x0.len())?;
    let x0n = x0.norm();
    if x0n == 0.0 {
        return Err(Error::invalid("exact_recovery_test needs x0 != 0"));
    }
    let b = a.matrix() * x0;
    let sol = solve_p1(a, &b, CERT_TOL)?;
    let relative_error = (&sol.x_star - x0).norm() / x0n;

    let support: Vec<usize> = (0..x0.len()).filter(|&i| x0[i] != 0.0).collect();
    let signs: Vec<f64> = support.iter().map(|&i| x0[i].signum()).collect();
    let injective = LinearMap::new(a.columns(&support))?.kernel_dim() == 0;
    let dual = sup_norm_dual(a.matrix(), &support, &signs)?;
    let (uniqueness, dual_margin) = match dual {
        LpOutcome::Infeasible => (Uniqueness::NotUnique, None),
        LpOutcome::Optimal((t, _)) => {
            let u = if !injective || t > 1.0 + tol {
                Uniqueness::NotUnique
            } else if t < 1.0 - tol {
                Uniqueness::Unique
            } else {
                Uniqueness::Unverified
            };
            (u, Some(t))
        }
    };
    Ok(RecoveryReport {
        recovered: relative_error <= tol,
        uniqueness,
        relative_error,
        dual_margin,
        injective_on_support: injective,
    })
}

/// `[A, a_i]` with the signal padded by one zero.
#[derive(Clone, Debug)]
pub struct DuplicateInstance {
    pub a: LinearMap,
    pub x0: DVector<f64>,
    /// `x*` padded with a zero last entry.
    pub x_star: DVector<f64>,
    pub index: usize,
}

impl DuplicateInstance {
    /// Moves the weight `(1 − θ)·x*(i)` from column `i` to its copy.
    /// Objective and `Ãx` are the same for every θ ∈ [0, 1].
    pub fn solution_family(&self, theta: f64) -> Result<DVector<f64>> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid("theta must lie in [0, 1]"));
        }
        let mut x = self.x_star.clone();
        let d = x.len() - 1;
        let xi = x[self.index];
        x[self.index] = theta * xi;
        x[d] = (1.0 - theta) * xi;
        Ok(x)
    }
}

/// Appends a copy of column `i` of `A`, where `i ∈ supp(x*) ∖ supp(x0)`.
pub fn duplicate_column_instance(
    a: &LinearMap,
    x_star: &DVector<f64>,
    x0: &DVector<f64>,
    i: usize,
) -> Result<DuplicateInstance> {
    check_dim(a.cols(), x_star.len())?;
    check_dim(a.cols(), x0.len())?;
    if i >= a.cols() || x_star[i] == 0.0 || x0[i] != 0.0 {
        return Err(Error::invalid("column index must lie in supp(x*) but not in supp(x0)"));
    }
    let (m, d) = (a.rows(), a.cols());
    let am = a.matrix();
    let ext = DMatrix::from_fn(m, d + 1, |r, c| if c < d { am[(r, c)] } else { am[(r, i)] });
    let pad = |v: &DVector<f64>| DVector::from_fn(d + 1, |k, _| if k < d { v[k] } else { 0.0 });
    Ok(DuplicateInstance {
        a: LinearMap::new(ext)?,
        x0: pad(x0),
        x_star: pad(x_star),
        index: i,
    })
}
