//! Monte Carlo Gaussian widths and statistical dimensions, the width
//! expansion bound, and the escape-through-a-mesh tail experiment.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cones::Cone;
use crate::numkernel::{expected_gauss_length, gaussian_matrix, gaussian_vector, RngStream};
use crate::report::ExperimentReport;
use crate::rsv::{restricted_sv, RsvOptions};
use crate::{record, Error, Result};

/// Smallest accepted Monte Carlo sample size.
pub const MIN_SAMPLES: usize = 1000;

/// Samples per RNG substream; fixes the draw layout independent of threads.
const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthMethod {
    /// `‖Π_C g‖`; equals the supremum when it is nonnegative, else 0.
    Projection,
    /// Closed-form `sup_{x∈C∩S} ⟨x, g⟩`.
    ExactSupport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub stderr: f64,
    pub samples: usize,
    pub method: WidthMethod,
}

impl WidthEstimate {
    fn from_values(v: &[f64], method: WidthMethod) -> WidthEstimate {
        let (mean, stderr) = mean_stderr(v);
        WidthEstimate {
            mean,
            stderr,
            samples: v.len(),
            method,
        }
    }
}

pub(crate) fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Evaluates `f` on `n` standard Gaussian vectors in ℝ^d. Chunk `c` draws
/// from `rng.substream(c)`, so results do not depend on the thread count.
pub(crate) fn gaussian_samples<T, F>(d: usize, n: usize, rng: &RngStream, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&DVector<f64>) -> Result<T> + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<T>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng.substream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len).map(|_| f(&gaussian_vector(&mut r, d))).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} samples")));
    }
    Ok(())
}

fn width_method(cone: &Cone) -> WidthMethod {
    match cone {
        Cone::Subspace { .. } | Cone::Circular { .. } => WidthMethod::ExactSupport,
        _ => WidthMethod::Projection,
    }
}

/// One sample of `sup_{x∈C∩S} ⟨x, g⟩` (or its projection surrogate).
fn width_sample(cone: &Cone, method: WidthMethod, g: &DVector<f64>) -> Result<f64> {
    match method {
        WidthMethod::ExactSupport => {
            let n = g.norm();
            if n == 0.0 {
                return Ok(0.0);
            }
            Ok(n * cone.support_sphere(g)?)
        }
        WidthMethod::Projection => Ok(cone.project(g)?.norm()),
    }
}

fn reject_zero(cone: &Cone) -> Result<()> {
    if cone.is_zero() {
        return Err(Error::invalid("the cone {0} is not a supported input"));
    }
    Ok(())
}

/// `w(C∩S) = E sup_{x∈C∩S} ⟨x, g⟩`.
///
/// Subspaces and circular cones use the exact support function. Other cones
/// use `‖Π_C g‖`, which overestimates the width when the supremum can be
/// negative.
pub fn gaussian_width_mc(cone: &Cone, n: usize, rng: &RngStream) -> Result<WidthEstimate> {
    check_samples(n)?;
    reject_zero(cone)?;
    let method = width_method(cone);
    let v = gaussian_samples(cone.dim(), n, rng, |g| width_sample(cone, method, g))?;
    Ok(WidthEstimate::from_values(&v, method))
}

/// `δ(C) = E‖Π_C g‖²`.
pub fn statistical_dim_mc(cone: &Cone, n: usize, rng: &RngStream) -> Result<WidthEstimate> {
    check_samples(n)?;
    reject_zero(cone)?;
    let v = gaussian_samples(cone.dim(), n, rng, |g| Ok(cone.project(g)?.norm_squared()))?;
    Ok(WidthEstimate::from_values(&v, WidthMethod::Projection))
}

/// Reference value `d·sin²(α)` for the circular cone.
pub fn circ_stat_dim_formula(d: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::invalid("alpha must lie in (0, pi/2)"));
    }
    Ok(d as f64 * alpha.sin().powi(2))
}

/// Checks `w(C) ≤ w(C^∧θ) ≤ cos θ·w(C) + sin θ·ℓ_d` and the squared form
/// `w(C^∧θ)² ≤ w(C)² + √5·sin θ·ℓ_d²` for a circular cone, using the same
/// Gaussian draws for both cones.
pub fn width_expansion_check(cone: &Cone, theta: f64, n: usize, rng: &RngStream) -> Result<ExperimentReport> {
    check_samples(n)?;
    let Cone::Circular { d, alpha, .. } = cone else {
        return Err(Error::Unsupported("width_expansion_check needs a circular cone".into()));
    };
    let expanded = cone.circ_expansion(theta)?;
    let ell = expected_gauss_length(*d)?;
    let pairs = gaussian_samples(*d, n, rng, |g| {
        Ok((
            width_sample(cone, WidthMethod::ExactSupport, g)?,
            width_sample(&expanded, WidthMethod::ExactSupport, g)?,
        ))
    })?;
    let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (wa, sa) = mean_stderr(&a);
    let (wb, sb) = mean_stderr(&b);
    let (ct, st) = (theta.cos(), theta.sin());
    let (_, s_lower) = mean_stderr(&pairs.iter().map(|p| p.1 - p.0).collect::<Vec<_>>());
    let (_, s_upper) = mean_stderr(&pairs.iter().map(|p| p.1 - ct * p.0).collect::<Vec<_>>());

    let mut report = ExperimentReport::new(
        "width_expansion",
        Some(rng.seed()),
        serde_json::json!({ "d": d, "alpha": alpha, "theta": theta, "samples": n }),
    );
    report.record(record! {
        "w_c" => wa, "stderr_c" => sa, "w_expanded" => wb, "stderr_expanded" => sb, "ell_d" => ell,
    });
    report.aggregate("w_c", wa);
    report.aggregate("w_expanded", wb);
    report.check("w(C) <= w(C^theta)", wa, wb, 6.0 * s_lower);
    report.check(
        "w(C^theta) <= cos w(C) + sin ell",
        wb,
        ct * wa + st * ell,
        6.0 * s_upper,
    );
    report.check(
        "w(C^theta)^2 <= w(C)^2 + sqrt5 sin ell^2",
        wb * wb,
        wa * wa + 5f64.sqrt() * st * ell * ell,
        6.0 * (2.0 * wb.abs() * sb + 2.0 * wa.abs() * sa),
    );
    Ok(report)
}

/// Frequency of `σ̂_{C→ℝ^m}(A) ≤ ℓ_m − ŵ − t` over Gaussian `A`, compared
/// with `exp(−t²/2)` plus two binomial standard deviations.
///
/// `σ̂` comes from multi-start descent and can only overestimate the true
/// minimum, so the measured frequency can only undercount the event.
pub fn escape_mesh_experiment(
    cone: &Cone,
    m: usize,
    t: f64,
    trials: usize,
    rng: &RngStream,
) -> Result<ExperimentReport> {
    if trials < 500 {
        return Err(Error::invalid("escape experiment needs at least 500 trials"));
    }
    if m == 0 || !(t >= 0.0) {
        return Err(Error::invalid("need m >= 1 and t >= 0"));
    }
    let d = cone.dim();
    let width = gaussian_width_mc(cone, 100_000, &rng.substream(u64::MAX))?;
    let stat_dim = statistical_dim_mc(cone, 100_000, &rng.substream(u64::MAX - 1))?;
    let ell = expected_gauss_length(m)?;
    let threshold = ell - width.mean - t;
    let sigmas: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut r = rng.substream(k as u64);
            let a = gaussian_matrix(&mut r, m, d)?;
            let opts = RsvOptions {
                seed: k as u64,
                parallel: false,
                ..RsvOptions::default()
            };
            Ok(restricted_sv(&a, cone, &opts)?.sigma)
        })
        .collect::<Result<_>>()?;
    let hits = sigmas.iter().filter(|&&s| s <= threshold).count();
    let freq = hits as f64 / trials as f64;
    let bound = (-0.5 * t * t).exp().min(1.0);
    let margin = 2.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
    let regime = if threshold <= 0.0 {
        "vacuous_threshold"
    } else {
        "informative"
    };

    let mut report = ExperimentReport::new(
        "escape_mesh",
        Some(rng.seed()),
        serde_json::json!({ "d": d, "cone": cone.variant_name(), "m": m, "t": t, "trials": trials }),
    );
    for (k, s) in sigmas.iter().enumerate() {
        report.record(record! { "trial" => k, "sigma" => *s, "event" => *s <= threshold });
    }
    report.aggregate("width", width.mean);
    report.aggregate("width_stderr", width.stderr);
    report.aggregate("stat_dim", stat_dim.mean);
    report.aggregate("ell_m", ell);
    report.aggregate("threshold", threshold);
    report.aggregate("frequency", freq);
    report.aggregate("bound", bound);
    report.note(format!("regime: {regime}"));
    if (m as f64) < stat_dim.mean {
        report.note("m is below the statistical dimension; the kernel typically meets the cone");
    }
    report.note("sigma is a descent estimate (upper bound); the event frequency can only be undercounted");
    report.check("frequency <= exp(-t^2/2) + 2 binomial sd", freq, bound, margin);
    Ok(report)
}

#[cfg(test)]
mod tests;
