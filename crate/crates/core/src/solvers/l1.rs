use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Certificate, SolveResult, Status, CERT_TOL, FEAS_TOL};
use crate::error::check_dim;
use crate::lp::{sup_norm_dual, LpOutcome};
use crate::numkernel::LinearMap;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmOptions {
    pub max_iter: usize,
    /// Primal and dual residual target, relative to the iterate scale.
    pub residual_tol: f64,
    /// Iterations between support-polishing attempts.
    pub polish_every: usize,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        AdmmOptions {
            max_iter: 50_000,
            residual_tol: 1e-9,
            polish_every: 20,
        }
    }
}

fn soft(v: &DVector<f64>, k: f64) -> DVector<f64> {
    v.map(|x| x.signum() * (x.abs() - k).max(0.0))
}

fn support_of(z: &DVector<f64>) -> (Vec<usize>, Vec<f64>) {
    let s: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
    let signs = s.iter().map(|&i| z[i].signum()).collect();
    (s, signs)
}

fn scatter(d: usize, support: &[usize], vals: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(d);
    for (k, &i) in support.iter().enumerate() {
        x[i] = vals[k];
    }
    x
}

/// Scales `y` to `‖Aᵀy‖_∞ = 1` (or zero when its dual value is negative)
/// and evaluates the gap.
fn certificate(a: &DMatrix<f64>, b: &DVector<f64>, eps: f64, x: &DVector<f64>, y: DVector<f64>) -> Certificate {
    let dual_norm = a.tr_mul(&y).amax();
    let y = if dual_norm > 0.0 && y.dot(b) - eps * y.norm() > 0.0 {
        y / dual_norm
    } else {
        DVector::zeros(y.len())
    };
    let dual_value = y.dot(b) - eps * y.norm();
    Certificate {
        gap: x.lp_norm(1) - dual_value,
        dual_value,
        y,
    }
}

fn result(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: DVector<f64>,
    cert: Certificate,
    status: Status,
    iterations: usize,
    support: Option<Vec<usize>>,
) -> SolveResult {
    SolveResult {
        objective: x.lp_norm(1),
        eq_residual: (a * &x - b).norm(),
        x_star: x,
        status,
        iterations,
        certificate: cert,
        support,
    }
}

fn gap_ok(cert: &Certificate, x: &DVector<f64>, tol: f64) -> bool {
    cert.gap <= tol * (1.0 + x.lp_norm(1))
}

/// Basis pursuit `min ‖x‖₁ s.t. Ax = b`.
///
/// ADMM with soft-thresholding and affine projection locates the support;
/// the solution is then recomputed exactly on that support and certified
/// with an LP dual `y` satisfying `A_Sᵀy = sgn(x_S)`, `‖Aᵀy‖_∞ ≤ 1`.
pub fn solve_p1(a: &LinearMap, b: &DVector<f64>, tol: f64) -> Result<SolveResult> {
    solve_p1_with(a, b, tol, &AdmmOptions::default())
}

pub fn solve_p1_with(a: &LinearMap, b: &DVector<f64>, tol: f64, opts: &AdmmOptions) -> Result<SolveResult> {
    check_dim(a.rows(), b.len())?;
    let tol = if tol > 0.0 { tol } else { CERT_TOL };
    let am = a.matrix();
    let d = a.cols();
    let dist = a.range_residual(b)?;
    if dist > FEAS_TOL * (1.0 + b.norm()) {
        return Err(Error::Infeasible(format!("b is {dist:.3e} away from range(A)")));
    }
    if b.norm() == 0.0 {
        let x = DVector::zeros(d);
        let cert = certificate(am, b, 0.0, &x, DVector::zeros(a.rows()));
        return Ok(result(am, b, x, cert, Status::Optimal, 0, Some(vec![])));
    }

    let x_ls = a.pinv_apply(b)?;
    let mut z = x_ls.clone();
    let mut u = DVector::zeros(d);
    let mut x = x_ls.clone();
    let mut rho = 1.0 / x_ls.amax().max(1e-300);
    let mut last_support: Option<Vec<usize>> = None;

    for it in 1..=opts.max_iter {
        let v = &z - &u;
        let av_b = am * &v - b;
        x = &v - a.pinv_apply(&av_b)?;
        let z_old = std::mem::replace(&mut z, soft(&(&x + &u), 1.0 / rho));
        u += &x - &z;

        let r = (&x - &z).norm();
        let s = rho * (&z - &z_old).norm();
        let scale = 1.0 + x.norm();

        if it % opts.polish_every == 0 {
            let (supp, signs) = support_of(&z);
            if last_support.as_ref() == Some(&supp) {
                if let Some(res) = polish_p1(a, b, &supp, &signs, tol, it)? {
                    return Ok(res);
                }
            }
            last_support = Some(supp);
        }
        if r <= opts.residual_tol * scale && s <= opts.residual_tol * scale {
            let (supp, signs) = support_of(&z);
            if let Some(res) = polish_p1(a, b, &supp, &signs, tol, it)? {
                return Ok(res);
            }
            let y = a.pinv_transpose_apply(&(&u * rho))?;
            let cert = certificate(am, b, 0.0, &x, y);
            let status = if gap_ok(&cert, &x, tol) {
                Status::Optimal
            } else {
                Status::MaxIter
            };
            return Ok(result(am, b, x, cert, status, it, None));
        }
        if it % 10 == 0 {
            if r > 10.0 * s {
                rho *= 2.0;
                u /= 2.0;
            } else if s > 10.0 * r {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    let y = a.pinv_transpose_apply(&(&u * rho))?;
    let cert = certificate(am, b, 0.0, &x, y);
    let status = if gap_ok(&cert, &x, tol) {
        Status::Optimal
    } else {
        Status::MaxIter
    };
    Ok(result(am, b, x, cert, status, opts.max_iter, None))
}

fn polish_p1(
    a: &LinearMap,
    b: &DVector<f64>,
    supp: &[usize],
    signs: &[f64],
    tol: f64,
    it: usize,
) -> Result<Option<SolveResult>> {
    if supp.is_empty() || supp.len() > a.rows() {
        return Ok(None);
    }
    let a_s = LinearMap::new(a.columns(supp))?;
    if a_s.kernel_dim() > 0 {
        return Ok(None);
    }
    let xs = a_s.pinv_apply(b)?;
    if (a_s.matrix() * &xs - b).norm() > FEAS_TOL {
        return Ok(None);
    }
    if xs.iter().zip(signs).any(|(v, s)| v * s <= 0.0) {
        return Ok(None);
    }
    let LpOutcome::Optimal((t, y)) = sup_norm_dual(a.matrix(), supp, signs)? else {
        return Ok(None);
    };
    if t > 1.0 + tol {
        return Ok(None);
    }
    let x = scatter(a.cols(), supp, &xs);
    let cert = certificate(a.matrix(), b, 0.0, &x, y);
    if !gap_ok(&cert, &x, tol) {
        return Ok(None);
    }
    Ok(Some(result(
        a.matrix(),
        b,
        x,
        cert,
        Status::Optimal,
        it,
        Some(supp.to_vec()),
    )))
}

/// `min ‖x‖₁ s.t. ‖Ax − b‖₂ ≤ ε`.
///
/// ADMM on the splitting `x = z`, `Ax = w` with `w` in the ball `B(b, ε)`.
/// On a stable support `S` with signs `s` the KKT system
/// `A_SᵀA_S x_S = A_Sᵀb − s/μ`, `‖b − Ax‖ = ε` has the closed-form
/// multiplier `μ = ‖(A_S⁺)ᵀs‖ / √(ε² − dist(b, range A_S)²)`, and
/// `y = μ(b − Ax)` certifies it.
pub fn solve_p1_noisy(a: &LinearMap, b: &DVector<f64>, eps: f64, tol: f64) -> Result<SolveResult> {
    solve_p1_noisy_with(a, b, eps, tol, &AdmmOptions::default())
}

pub fn solve_p1_noisy_with(
    a: &LinearMap,
    b: &DVector<f64>,
    eps: f64,
    tol: f64,
    opts: &AdmmOptions,
) -> Result<SolveResult> {
    check_dim(a.rows(), b.len())?;
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::invalid("eps must be finite and nonnegative"));
    }
    if eps == 0.0 {
        return solve_p1_with(a, b, tol, opts);
    }
    let tol = if tol > 0.0 { tol } else { CERT_TOL };
    let am = a.matrix();
    let (m, d) = (a.rows(), a.cols());
    if b.norm() <= eps {
        let x = DVector::zeros(d);
        let cert = certificate(am, b, eps, &x, DVector::zeros(m));
        return Ok(result(am, b, x, cert, Status::Optimal, 0, Some(vec![])));
    }
    let dist = a.range_residual(b)?;
    if dist > eps {
        return Err(Error::Infeasible(format!("dist(b, range A) = {dist:.3e} exceeds eps")));
    }

    // (I + AᵀA)⁻¹ = I − V diag(σ²/(1+σ²)) Vᵀ
    let v = a.row_space_basis();
    let shrink = DVector::from_fn(a.rank(), |i, _| {
        let s2 = a.singular_values()[i].powi(2);
        s2 / (1.0 + s2)
    });
    let inv = DMatrix::identity(d, d) - v * DMatrix::from_diagonal(&shrink) * v.transpose();

    let ball = |w: &DVector<f64>| -> DVector<f64> {
        let r = w - b;
        let n = r.norm();
        if n <= eps {
            w.clone()
        } else {
            b + r * (eps / n)
        }
    };

    let x_ls = a.pinv_apply(b)?;
    let mut x = x_ls.clone();
    let mut z = x_ls.clone();
    let mut w = ball(&(am * &x));
    let mut u1 = DVector::zeros(d);
    let mut u2 = DVector::zeros(m);
    let mut rho = 1.0 / x_ls.amax().max(1e-300);
    let mut last_support: Option<Vec<usize>> = None;

    for it in 1..=opts.max_iter {
        x = &inv * (&z - &u1 + am.tr_mul(&(&w - &u2)));
        let ax = am * &x;
        let z_old = std::mem::replace(&mut z, soft(&(&x + &u1), 1.0 / rho));
        let w_old = std::mem::replace(&mut w, ball(&(&ax + &u2)));
        u1 += &x - &z;
        u2 += &ax - &w;

        let r = ((&x - &z).norm_squared() + (&ax - &w).norm_squared()).sqrt();
        let s = rho * ((&z - &z_old).norm_squared() + am.tr_mul(&(&w - &w_old)).norm_squared()).sqrt();
        let scale = 1.0 + x.norm();

        if it % opts.polish_every == 0 {
            let (supp, signs) = support_of(&z);
            if last_support.as_ref() == Some(&supp) {
                if let Some(res) = polish_p1_noisy(a, b, eps, &supp, &signs, tol, it)? {
                    return Ok(res);
                }
            }
            last_support = Some(supp);
        }
        if r <= opts.residual_tol * scale && s <= opts.residual_tol * scale {
            let (supp, signs) = support_of(&z);
            if let Some(res) = polish_p1_noisy(a, b, eps, &supp, &signs, tol, it)? {
                return Ok(res);
            }
            return Ok(fallback_noisy(am, b, eps, &z, &u2, rho, tol, it));
        }
        if it % 10 == 0 {
            if r > 10.0 * s {
                rho *= 2.0;
                u1 /= 2.0;
                u2 /= 2.0;
            } else if s > 10.0 * r {
                rho /= 2.0;
                u1 *= 2.0;
                u2 *= 2.0;
            }
        }
    }
    Ok(fallback_noisy(am, b, eps, &z, &u2, rho, tol, opts.max_iter))
}

#[allow(clippy::too_many_arguments)]
fn fallback_noisy(
    am: &DMatrix<f64>,
    b: &DVector<f64>,
    eps: f64,
    z: &DVector<f64>,
    u2: &DVector<f64>,
    rho: f64,
    tol: f64,
    it: usize,
) -> SolveResult {
    let y = -u2 * rho;
    let cert = certificate(am, b, eps, z, y);
    let feasible = (am * z - b).norm() <= eps + FEAS_TOL;
    let status = if feasible && gap_ok(&cert, z, tol) {
        Status::Optimal
    } else {
        Status::MaxIter
    };
    result(am, b, z.clone(), cert, status, it, None)
}

fn polish_p1_noisy(
    a: &LinearMap,
    b: &DVector<f64>,
    eps: f64,
    supp: &[usize],
    signs: &[f64],
    tol: f64,
    it: usize,
) -> Result<Option<SolveResult>> {
    if supp.is_empty() || supp.len() > a.rows() {
        return Ok(None);
    }
    let a_s = LinearMap::new(a.columns(supp))?;
    if a_s.kernel_dim() > 0 {
        return Ok(None);
    }
    let s = DVector::from_column_slice(signs);
    let x_ls = a_s.pinv_apply(b)?;
    let r_ls = (b - a_s.matrix() * &x_ls).norm();
    if r_ls >= eps {
        return Ok(None);
    }
    let wv = a_s.pinv_transpose_apply(&s)?;
    let mu = wv.norm() / (eps * eps - r_ls * r_ls).sqrt();
    if !(mu > 0.0 && mu.is_finite()) {
        return Ok(None);
    }
    let xs = &x_ls - a_s.pinv_apply(&wv)? / mu;
    if xs.iter().zip(signs).any(|(v, s)| v * s <= 0.0) {
        return Ok(None);
    }
    let x = scatter(a.cols(), supp, &xs);
    let resid = b - a.matrix() * &x;
    if resid.norm() > eps + FEAS_TOL {
        return Ok(None);
    }
    let y = resid * mu;
    if a.matrix().tr_mul(&y).amax() > 1.0 + tol {
        return Ok(None);
    }
    let cert = certificate(a.matrix(), b, eps, &x, y);
    if !gap_ok(&cert, &x, tol) {
        return Ok(None);
    }
    Ok(Some(result(
        a.matrix(),
        b,
        x,
        cert,
        Status::Optimal,
        it,
        Some(supp.to_vec()),
    )))
}
