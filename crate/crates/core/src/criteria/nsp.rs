use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{half_patterns, index_set};
use crate::lp::{nsp_pattern_min, LpOutcome};
use crate::numkernel::LinearMap;
use crate::{Error, Result};

/// Strictness margin for the NSP comparison.
const NSP_MARGIN: f64 = 1e-9;

/// Slack on the RNSP optimum.
pub const RNSP_TOL: f64 = 1e-8;

/// Smallest `‖η_{S^c}‖₁` over kernel vectors with `‖η_S‖₁ = 1`, or `None`
/// when no kernel vector touches `S`.
///
/// Solved as one LP per sign pattern σ on `S` (up to global sign) with the
/// normalization `⟨σ, η_S⟩ = 1`. The NSP holds iff the value exceeds 1.
pub fn nsp_margin(a: &LinearMap, support: &[usize]) -> Result<Option<f64>> {
    let s = index_set(a.cols(), support)?;
    let patterns = half_patterns(s.len())?;
    if a.kernel_dim() == 0 || s.is_empty() {
        return Ok(None);
    }
    let kernel = a.kernel_basis();
    let mut best: Option<f64> = None;
    for sigma in &patterns {
        if let LpOutcome::Optimal(v) = nsp_pattern_min(kernel, &s, sigma)? {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    Ok(best)
}

/// Null space property: `‖η_S‖₁ < ‖η_{S^c}‖₁` for every nonzero `η ∈ ker A`.
pub fn nsp_check(a: &LinearMap, support: &[usize]) -> Result<bool> {
    Ok(nsp_margin(a, support)?.is_none_or(|v| v > 1.0 + NSP_MARGIN))
}

#[derive(Clone, Debug, Serialize)]
pub struct RnspResult {
    pub holds: bool,
    /// Certified upper bound on `max_{‖x‖≤1} ‖x_T‖₁ − γ‖x_{T^c}‖₁ − τ‖Ax‖₂`.
    pub worst_slack: f64,
    /// Value attained by an explicit unit vector; a lower bound on the same maximum.
    pub witness_value: f64,
    #[serde(with = "crate::numkernel::serde_vec::option")]
    pub witness: Option<DVector<f64>>,
}

/// Robust null space property `‖x_T‖₁ ≤ γ‖x_{T^c}‖₁ + τ‖Ax‖₂`.
///
/// For a sign pattern σ on `T` (zero elsewhere, call it `c`) the maximum of
/// `⟨c, x⟩ − γ‖x_{T^c}‖₁ − τ‖Ax‖₂` over the unit ball equals the distance
/// from `c` to `{γw + τAᵀu : ‖w‖_∞ ≤ 1, w_T = 0, ‖u‖₂ ≤ 1}`. The squared
/// distance is minimized over `u` by accelerated projected gradient, giving
/// an upper bound, and the residual direction gives a matching lower bound.
pub fn rnsp_check(a: &LinearMap, t: &[usize], gamma: f64, tau: f64) -> Result<RnspResult> {
    if !(0.0..1.0).contains(&gamma) || !tau.is_finite() || tau < 0.0 {
        return Err(Error::invalid("need 0 <= gamma < 1 and finite tau >= 0"));
    }
    let d = a.cols();
    let t = index_set(d, t)?;
    let patterns = half_patterns(t.len())?;
    let mut on = vec![false; d];
    for &i in &t {
        on[i] = true;
    }
    let mut worst = 0.0_f64;
    let mut lower = 0.0_f64;
    let mut witness = None;
    for sigma in &patterns {
        let mut c = DVector::zeros(d);
        for (&i, &s) in t.iter().zip(sigma) {
            c[i] = s;
        }
        let (upper, x) = rnsp_pattern(a.matrix(), &c, &on, gamma, tau, a.sigma_max())?;
        worst = worst.max(upper);
        if let Some(x) = x {
            let v = rnsp_objective(a, &x, &on, gamma, tau)?;
            if v > lower {
                lower = v;
                witness = Some(x);
            }
        }
    }
    Ok(RnspResult {
        holds: worst <= RNSP_TOL,
        worst_slack: worst,
        witness_value: lower,
        witness,
    })
}

/// `‖x_T‖₁ − γ‖x_{T^c}‖₁ − τ‖Ax‖₂`.
fn rnsp_objective(a: &LinearMap, x: &DVector<f64>, on: &[bool], gamma: f64, tau: f64) -> Result<f64> {
    let (mut inside, mut outside) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        if on[i] {
            inside += v.abs();
        } else {
            outside += v.abs();
        }
    }
    Ok(inside - gamma * outside - tau * a.apply(x)?.norm())
}

/// Residual `c − γw − τAᵀu` with the optimal `w`, and half its squared norm.
fn residual(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    on: &[bool],
    gamma: f64,
    tau: f64,
    u: &DVector<f64>,
) -> (DVector<f64>, f64) {
    let z = a.tr_mul(u) * tau;
    let r = DVector::from_fn(c.len(), |i, _| {
        if on[i] {
            c[i] - z[i]
        } else {
            -z[i].signum() * (z[i].abs() - gamma).max(0.0)
        }
    });
    let f = 0.5 * r.norm_squared();
    (r, f)
}

fn ball(u: DVector<f64>) -> DVector<f64> {
    let n = u.norm();
    if n > 1.0 {
        u / n
    } else {
        u
    }
}

/// Returns `(upper bound, unit witness)` for one sign pattern.
fn rnsp_pattern(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    on: &[bool],
    gamma: f64,
    tau: f64,
    sigma_max: f64,
) -> Result<(f64, Option<DVector<f64>>)> {
    const MAX_ITER: usize = 50_000;
    let m = a.nrows();
    let lip = tau * tau * sigma_max * sigma_max;
    let mut u = DVector::zeros(m);
    let (mut r, mut f) = residual(a, c, on, gamma, tau, &u);
    if lip > 0.0 {
        let mut y = u.clone();
        let mut k = 1.0_f64;
        for _ in 0..MAX_ITER {
            if f <= 1e-24 {
                break;
            }
            let (ry, _) = residual(a, c, on, gamma, tau, &y);
            // ∇f(y) = −τ A r(y)
            let grad = a * &ry * (-tau);
            let next = ball(&y - grad / lip);
            let (rn, fnext) = residual(a, c, on, gamma, tau, &next);
            if fnext > f {
                // restart momentum
                k = 1.0;
                y = u.clone();
                continue;
            }
            let k_next = 0.5 * (1.0 + (1.0 + 4.0 * k * k).sqrt());
            let prev = std::mem::replace(&mut u, next);
            y = &u + (&u - &prev) * ((k - 1.0) / k_next);
            k = k_next;
            let done = f - fnext <= 1e-15 * f;
            r = rn;
            f = fnext;
            if done {
                break;
            }
        }
    }
    if !f.is_finite() {
        return Err(Error::Solver("rnsp inner solver diverged".into()));
    }
    let dist = (2.0 * f).sqrt();
    let rn = r.norm();
    Ok((dist, (rn > 0.0).then(|| r / rn)))
}
