//! Restricted singular values, separation angles and condition numbers.
//!
//! Both `σ_{C→ℝ^m}(A) = min_{x∈C,‖x‖=1} ‖Ax‖` and the separation angle share
//! one engine: `sin θ* = min_{x∈C,‖x‖=1} ‖Π_{(ker A)^⊥} x‖`, which is the
//! same as `cos θ* = max ‖Π_{ker A} x‖`. Subspace cones are solved exactly
//! by an SVD; other cones use multi-start projected gradient descent or, for
//! `d ≤ 4`, a certified branch-and-bound grid.

mod engine;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cones::Cone;
use crate::numkernel::LinearMap;
use crate::report::ExperimentReport;
use crate::{record, Error, Result};

/// Gains at or below this multiple of the Lipschitz constant count as zero.
pub const ZERO_GAIN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Multi-start projected gradient; an upper estimate.
    Descent,
    /// Branch and bound on the sphere; brackets the minimum within `lip·res`.
    Grid,
    /// Closed form for subspaces.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RsvOptions {
    pub method: Method,
    pub starts: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Angular resolution of the grid oracle in radians.
    pub res: f64,
    pub max_cells: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for RsvOptions {
    fn default() -> Self {
        RsvOptions {
            method: Method::Descent,
            starts: 32,
            max_iter: 10_000,
            rel_tol: 1e-10,
            res: 0.005,
            max_cells: 4_000_000,
            seed: 0,
            parallel: true,
        }
    }
}

impl RsvOptions {
    pub fn grid(res: f64) -> Self {
        RsvOptions {
            method: Method::Grid,
            res,
            ..Self::default()
        }
    }

    pub fn descent(seed: u64) -> Self {
        RsvOptions {
            seed,
            ..Self::default()
        }
    }

    /// Absolute error bound on a gain with Lipschitz constant `lip`.
    pub fn slack(&self, lip: f64) -> f64 {
        match self.method {
            Method::Grid => lip * self.res,
            Method::Exact => 1e-10 * lip,
            Method::Descent => 1e-6 * lip,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RsvResult {
    pub sigma: f64,
    #[serde(with = "crate::numkernel::serde_vec")]
    pub witness_x: DVector<f64>,
    pub method: Method,
    pub starts: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Certified `[lower, upper]` when the method provides one.
    pub bracket: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AngleResult {
    pub theta_star: f64,
    /// Unit vector of the cone closest to the kernel.
    #[serde(with = "crate::numkernel::serde_vec")]
    pub witness_x: DVector<f64>,
    /// Unit kernel vector closest to `witness_x`; absent when orthogonal.
    #[serde(with = "crate::numkernel::serde_vec::option")]
    pub witness_y: Option<DVector<f64>>,
    pub method: Method,
    pub converged: bool,
    /// Certified bracket on θ*.
    pub bracket: Option<(f64, f64)>,
}

impl AngleResult {
    pub fn sin_theta(&self) -> f64 {
        self.theta_star.sin()
    }
}

/// `σ_{C→ℝ^m}(A)`.
pub fn restricted_sv(a: &LinearMap, cone: &Cone, opts: &RsvOptions) -> Result<RsvResult> {
    let lip = a.sigma_max();
    let g = engine::min_gain(a.matrix(), lip, cone, opts)?;
    let sigma = if g.value <= ZERO_GAIN_TOL * lip { 0.0 } else { g.value };
    Ok(RsvResult {
        sigma,
        witness_x: g.witness,
        method: g.method,
        starts: g.starts,
        converged: g.converged,
        iterations: g.iterations,
        bracket: g.bracket,
    })
}

/// Largest θ with `C^∧θ ∩ ker A = {0}`.
pub fn separation_angle(a: &LinearMap, cone: &Cone, opts: &RsvOptions) -> Result<AngleResult> {
    if a.kernel_dim() == 0 {
        return Err(Error::NoKernel);
    }
    let row = a.row_space_basis().transpose();
    let g = engine::min_gain(&row, 1.0, cone, opts)?;
    let s = if g.value <= ZERO_GAIN_TOL {
        0.0
    } else {
        g.value.min(1.0)
    };
    let k = a.project_kernel(&g.witness)?;
    let kn = k.norm();
    Ok(AngleResult {
        theta_star: s.asin(),
        witness_y: (kn > 1e-12).then(|| k / kn),
        witness_x: g.witness,
        method: g.method,
        converged: g.converged,
        bracket: g
            .bracket
            .map(|(lo, hi)| (lo.clamp(0.0, 1.0).asin(), hi.clamp(0.0, 1.0).asin())),
    })
}

/// Grassmannian condition number `1/sin θ*`.
pub fn grassmann_cond(a: &LinearMap, cone: &Cone, opts: &RsvOptions) -> Result<f64> {
    cond_from_angle(separation_angle(a, cone, opts)?.theta_star)
}

pub fn cond_from_angle(theta_star: f64) -> Result<f64> {
    let s = theta_star.sin();
    if s <= 0.0 {
        return Err(Error::Overflow("separation angle is zero".into()));
    }
    Ok(1.0 / s)
}

/// Renegar condition number `σ_max(A)/σ_{C→ℝ^m}(A)`.
pub fn renegar_cond(a: &LinearMap, cone: &Cone, opts: &RsvOptions) -> Result<f64> {
    let sigma = restricted_sv(a, cone, opts)?.sigma;
    if sigma <= 0.0 {
        return Err(Error::Overflow("restricted singular value is zero".into()));
    }
    Ok(a.sigma_max() / sigma)
}

/// Checks `sin θ·σ_min ≤ σ ≤ sin θ·σ_max` and `𝒞 ≤ 𝒞_R ≤ (σ_max/σ_min)𝒞`.
///
/// The slack is the sum of both estimators' error bounds; for the grid
/// oracle this is `2·res·σ_max`.
pub fn check_sandwich(a: &LinearMap, cone: &Cone, opts: &RsvOptions) -> Result<ExperimentReport> {
    let rsv = restricted_sv(a, cone, opts)?;
    let ang = separation_angle(a, cone, opts)?;
    let (smax, smin) = (a.sigma_max(), a.sigma_min_nonzero());
    let sin = ang.sin_theta();
    let sigma = rsv.sigma;
    let tol = opts.slack(smax) + smax * opts.slack(1.0);

    let mut report = ExperimentReport::new(
        "sandwich",
        Some(opts.seed),
        serde_json::json!({ "m": a.rows(), "d": a.cols(), "cone": cone.variant_name(), "options": opts }),
    );
    report.record(record! {
        "sigma" => sigma, "sin_theta" => sin, "theta_star" => ang.theta_star,
        "sigma_min" => smin, "sigma_max" => smax,
        "rsv_converged" => rsv.converged, "angle_converged" => ang.converged,
    });
    report.check("sin_theta*sigma_min <= sigma", sin * smin, sigma, tol);
    report.check("sigma <= sin_theta*sigma_max", sigma, sin * smax, tol);
    if sigma > 0.0 && sin > 0.0 {
        let c = 1.0 / sin;
        let cr = smax / sigma;
        report.aggregate("grassmann_cond", c);
        report.aggregate("renegar_cond", cr);
        report.check("C <= C_R", c, cr, tol * c * cr / smax);
        report.check(
            "C_R <= (sigma_max/sigma_min) C",
            cr,
            smax / smin * c,
            tol * c * cr / smin,
        );
    } else {
        report.note("condition numbers infinite; only the gain sandwich is checked");
    }
    Ok(report)
}
