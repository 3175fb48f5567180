use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::index_set;
use crate::cones::l1_descent_cone;
use crate::numkernel::{gaussian_vector, RngStream};
use crate::report::ExperimentReport;
use crate::{record, Error, Result};

/// Parameters of the `(γ, τ)`-RNSP with respect to `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnspParams {
    pub gamma: f64,
    pub tau: f64,
    pub t: Vec<usize>,
}

/// `c = (δ_s + √5·√(d/s + 1)·δ_2s/(1 + δ_s))/(1 − δ_s)`.
pub fn rip_to_asc_cos(delta_s: f64, delta_2s: f64, d: usize, s: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&delta_s) || !(delta_2s >= 0.0 && delta_2s.is_finite()) {
        return Err(Error::invalid("need 0 <= delta_s < 1 and finite delta_2s >= 0"));
    }
    if s == 0 || s > d {
        return Err(Error::invalid("need 1 <= s <= d"));
    }
    let ratio = d as f64 / s as f64;
    Ok((delta_s + 5f64.sqrt() * (ratio + 1.0).sqrt() * delta_2s / (1.0 + delta_s)) / (1.0 - delta_s))
}

/// Angle `arccos(c)` guaranteed by the RIP constants, or `None` when `c ≥ 1`.
pub fn rip_to_asc_angle(delta_s: f64, delta_2s: f64, d: usize, s: usize) -> Result<Option<f64>> {
    let c = rip_to_asc_cos(delta_s, delta_2s, d, s)?;
    Ok((c < 1.0).then(|| c.max(0.0).acos()))
}

/// Splits the complement of `s0` into blocks of size `s` by descending `|u(i)|`
/// (ties by ascending index). The last block may be shorter.
pub fn block_partition(u: &DVector<f64>, s0: &[usize], s: usize) -> Result<Vec<Vec<usize>>> {
    if s == 0 {
        return Err(Error::invalid("block size must be positive"));
    }
    let s0 = index_set(u.len(), s0)?;
    let mut rest: Vec<usize> = (0..u.len()).filter(|i| s0.binary_search(i).is_err()).collect();
    rest.sort_by(|&i, &j| u[j].abs().total_cmp(&u[i].abs()));
    Ok(rest.chunks(s).map(|c| c.to_vec()).collect())
}

/// Samples the ℓ1 descent cone at `x0` and checks
/// `Σ_i ‖u_{S_i}‖₂ < √5‖u‖₂` with `S_0 = supp(x0)` and the monotone blocks.
pub fn check_sqrt5_bound(x0: &DVector<f64>, trials: usize, rng: &mut RngStream) -> Result<ExperimentReport> {
    let d = x0.len();
    let s0: Vec<usize> = (0..d).filter(|&i| x0[i] != 0.0).collect();
    if s0.is_empty() {
        return Err(Error::invalid("x0 must be nonzero"));
    }
    let cone = l1_descent_cone(x0)?;
    let s = s0.len();
    let mut report = ExperimentReport::new(
        "sqrt5_block_bound",
        Some(rng.seed()),
        serde_json::json!({ "d": d, "s": s, "trials": trials }),
    );
    let mut worst: f64 = 0.0;
    let mut used = 0usize;
    for t in 0..trials {
        let mut r = rng.substream(t as u64);
        let u = cone.project(&gaussian_vector(&mut r, d))?;
        let un = u.norm();
        if un < 1e-8 {
            continue;
        }
        used += 1;
        let mut total: f64 = s0.iter().map(|&i| u[i] * u[i]).sum::<f64>().sqrt();
        for block in block_partition(&u, &s0, s)? {
            total += block.iter().map(|&i| u[i] * u[i]).sum::<f64>().sqrt();
        }
        worst = worst.max(total / un);
    }
    report.aggregate("max_ratio", worst);
    report.aggregate("samples_used", used as f64);
    report.record(record! { "max_ratio" => worst, "samples_used" => used });
    report.check("max ratio < sqrt(5)", worst, 5f64.sqrt(), -1e-10);
    Ok(report)
}

/// RNSP constants implied by a separation angle θ that holds for every
/// `x0` supported on `t`: `γ = cos²(θ/2)`, `τ = √|T|/(σ_min·sin(θ/2))`.
pub fn asc_to_rnsp(theta: f64, sigma_min: f64, t: &[usize]) -> Result<RnspParams> {
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(Error::invalid("theta must lie in (0, pi/2]"));
    }
    if !(sigma_min > 0.0 && sigma_min.is_finite()) {
        return Err(Error::invalid("sigma_min must be positive"));
    }
    let half = 0.5 * theta;
    Ok(RnspParams {
        gamma: half.cos().powi(2),
        tau: (t.len() as f64).sqrt() / (sigma_min * half.sin()),
        t: t.to_vec(),
    })
}

/// Lower bound `(1 − γ)/(2τ)` on the restricted singular value over the ℓ1
/// descent cone at any `x0` supported on `T`.
pub fn rnsp_to_rsv_bound(gamma: f64, tau: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) || !(tau > 0.0) {
        return Err(Error::invalid("need 0 <= gamma < 1 and tau > 0"));
    }
    Ok((1.0 - gamma) / (2.0 * tau))
}
