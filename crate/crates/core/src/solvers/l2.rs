use nalgebra::DVector;

use super::{Certificate, SolveResult, Status, FEAS_TOL};
use crate::error::check_dim;
use crate::numkernel::LinearMap;
use crate::{Error, Result};

/// Minimum-norm solution `A⁺b`.
pub fn solve_p2(a: &LinearMap, b: &DVector<f64>) -> Result<SolveResult> {
    check_dim(a.rows(), b.len())?;
    let dist = a.range_residual(b)?;
    if dist > FEAS_TOL * (1.0 + b.norm()) {
        return Err(Error::Infeasible(format!("b is {dist:.3e} away from range(A)")));
    }
    let x = a.pinv_apply(b)?;
    let y = a.pinv_transpose_apply(&x)?;
    finish(a, b, 0.0, x, y, 0)
}

/// Minimum ℓ2 norm subject to `‖Ax − b‖ ≤ ε`.
///
/// Unless the origin is feasible the constraint is active at the optimum, so
/// `x = (AᵀA + λI)⁻¹Aᵀb` with the ridge parameter `λ > 0` chosen such that
/// the residual equals ε. The residual is increasing in λ, which makes the
/// search a monotone bisection in log λ. The result lies in `(ker A)^⊥`.
pub fn solve_p2_noisy(a: &LinearMap, b: &DVector<f64>, eps: f64) -> Result<SolveResult> {
    check_dim(a.rows(), b.len())?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::invalid("eps must be finite and nonnegative"));
    }
    if eps == 0.0 {
        return solve_p2(a, b);
    }
    let bn = b.norm();
    if eps >= bn {
        let x = DVector::zeros(a.cols());
        return finish(a, b, eps, x, DVector::zeros(a.rows()), 0);
    }
    let perp = a.range_residual(b)?;
    if perp > eps {
        return Err(Error::Infeasible(format!("dist(b, range A) = {perp:.3e} exceeds eps")));
    }
    let c = a.left_coefficients(b)?;
    let sv = a.singular_values();
    let resid = |lam: f64| -> f64 {
        let mut r2 = perp * perp;
        for i in 0..c.len() {
            let f = lam / (sv[i] * sv[i] + lam);
            r2 += f * f * c[i] * c[i];
        }
        r2.sqrt()
    };
    let smax2 = a.sigma_max().powi(2);
    let (mut lo, mut hi) = (1e-30 * smax2.max(1e-300), smax2.max(1e-300));
    while resid(hi) < eps {
        hi *= 4.0;
    }
    let mut iterations = 0;
    for _ in 0..300 {
        iterations += 1;
        let mid = (lo * hi).sqrt();
        if resid(mid) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 <= 1e-15 {
            break;
        }
    }
    let lam = 0.5 * (lo + hi);
    let coeffs = DVector::from_fn(c.len(), |i, _| sv[i] * c[i] / (sv[i] * sv[i] + lam));
    let x = a.row_space_basis() * coeffs;
    let y = (b - a.matrix() * &x) / lam;
    finish(a, b, eps, x, y, iterations)
}

fn finish(
    a: &LinearMap,
    b: &DVector<f64>,
    eps: f64,
    x: DVector<f64>,
    y: DVector<f64>,
    iterations: usize,
) -> Result<SolveResult> {
    // The dual objective is positively homogeneous, so the best multiple of
    // y puts ‖Aᵀy‖₂ on the unit sphere or at zero.
    let aty = a.apply_transpose(&y)?.norm();
    let y = if aty > 0.0 && y.dot(b) - eps * y.norm() > 0.0 {
        y / aty
    } else {
        DVector::zeros(y.len())
    };
    let objective = x.norm();
    let dual_value = y.dot(b) - eps * y.norm();
    let eq_residual = (a.matrix() * &x - b).norm();
    Ok(SolveResult {
        objective,
        eq_residual,
        status: Status::Optimal,
        iterations,
        certificate: Certificate {
            gap: objective - dual_value,
            dual_value,
            y,
        },
        x_star: x,
        support: None,
    })
}
