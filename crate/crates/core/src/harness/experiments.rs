use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::Value;

use super::config::{ExperimentConfig, ExperimentKind, MatrixSource};
use crate::cones::{l1_descent_cone, Cone};
use crate::gauss::{
    circ_stat_dim_formula, escape_mesh_experiment, gaussian_width_mc, statistical_dim_mc, width_expansion_check,
};
use crate::numkernel::{unit_vector, LinearMap, RngStream};
use crate::report::{svg_line_chart, ExperimentReport};
use crate::rsv::{check_sandwich, restricted_sv, separation_angle, RsvOptions};
use crate::solvers::{exact_recovery_test, solve_p1_noisy, Uniqueness};
use crate::{record, Result};

/// Gains or sines at or below this are treated as zero (bound vacuous).
const VACUOUS: f64 = 1e-8;

/// `s`-sparse vector with random support, signs and magnitudes in `[0.5, 1.5)`.
pub fn sparse_signal(rng: &mut RngStream, d: usize, s: usize) -> DVector<f64> {
    let mut x = DVector::zeros(d);
    for i in rng.subset(d, s) {
        x[i] = rng.sign() * (0.5 + rng.uniform());
    }
    x
}

/// Noise vector with `‖n‖₂ ≤ eps`.
fn noise(rng: &mut RngStream, m: usize, eps: f64) -> DVector<f64> {
    unit_vector(rng, m) * (eps * rng.uniform())
}

fn new_report(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(ExperimentReport::new(
        cfg.experiment.name(),
        Some(cfg.seed),
        serde_json::to_value(cfg)?,
    ))
}

fn trial_rsv(cfg: &ExperimentConfig, k: usize) -> RsvOptions {
    RsvOptions {
        seed: cfg.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
        ..cfg.rsv.clone()
    }
}

/// Runs the experiment named in `cfg`, on one thread when `cfg.parallel` is false.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let run = || match cfg.experiment {
        ExperimentKind::Robustness => run_robustness_experiment(cfg),
        ExperimentKind::Stability => run_stability_experiment(cfg),
        ExperimentKind::ExactImpliesStable => run_exact_implies_stable(cfg),
        ExperimentKind::PhaseSweep => run_phase_sweep(cfg),
        ExperimentKind::Sandwich => run_sandwich_sweep(cfg),
        ExperimentKind::WidthExpansion => {
            let cone = Cone::circular(cfg.d, cfg.alpha)?;
            let mut r = width_expansion_check(&cone, cfg.theta, cfg.samples, &RngStream::new(cfg.seed, 0))?;
            r.config = serde_json::to_value(cfg)?;
            Ok(r)
        }
        ExperimentKind::Escape => {
            let cone = match &cfg.cone {
                Some(spec) => spec.build()?,
                None => Cone::circular(cfg.d, cfg.alpha)?,
            };
            let mut r = escape_mesh_experiment(&cone, cfg.m, cfg.t, cfg.trials, &RngStream::new(cfg.seed, 0))?;
            r.config = serde_json::to_value(cfg)?;
            Ok(r)
        }
        ExperimentKind::CircStatDim => run_circ_stat_dim(cfg),
        ExperimentKind::Sqrt5 => {
            let mut rng = RngStream::new(cfg.seed, 0);
            let x0 = sparse_signal(&mut rng, cfg.d, cfg.s);
            let mut r = crate::criteria::check_sqrt5_bound(&x0, cfg.trials, &mut rng)?;
            r.config = serde_json::to_value(cfg)?;
            Ok(r)
        }
    };
    let mut report = if cfg.parallel {
        run()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| crate::Error::Solver(format!("thread pool: {e}")))?;
        pool.install(run)?
    };
    report.name = cfg.experiment.name().to_string();
    if cfg.record_timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

struct RobustTrial {
    sigma: f64,
    converged: bool,
    error: Option<f64>,
    solver_msg: Option<String>,
}

/// `‖x* − x0‖₂ ≤ 2ε/σ̂` for basis pursuit denoising, where `σ̂` is the
/// restricted singular value over the ℓ1 descent cone at `x0`.
pub fn run_robustness_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let trials: Vec<RobustTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| -> Result<RobustTrial> {
            let mut rng = RngStream::new(cfg.seed, k as u64);
            let a = cfg.matrix.load(&mut rng, cfg.m, cfg.d)?;
            let x0 = sparse_signal(&mut rng, a.cols(), cfg.s);
            let b = a.matrix() * &x0 + noise(&mut rng, a.rows(), cfg.eps);
            let rsv = restricted_sv(&a, &l1_descent_cone(&x0)?, &trial_rsv(cfg, k))?;
            let (error, solver_msg) = match solve_p1_noisy(&a, &b, cfg.eps, cfg.tolerances.solver) {
                Ok(sol) => ((&sol.x_star - &x0).norm().into(), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(RobustTrial {
                sigma: rsv.sigma,
                converged: rsv.converged,
                error,
                solver_msg,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = new_report(cfg)?;
    let (mut verified, mut unverifiable, mut failures) = (0usize, 0usize, 0usize);
    for (k, t) in trials.iter().enumerate() {
        let usable = t.converged && t.sigma > VACUOUS;
        let bound = if t.sigma > 0.0 {
            2.0 * cfg.eps / t.sigma
        } else {
            f64::INFINITY
        };
        report.record(record! {
            "trial" => k, "sigma" => t.sigma, "rsv_converged" => t.converged,
            "error" => t.error, "bound" => bound.is_finite().then_some(bound),
            "solver_error" => t.solver_msg.clone(), "verifiable" => usable,
        });
        let Some(err) = t.error else {
            failures += 1;
            continue;
        };
        if usable {
            verified += 1;
            report.check(
                format!("trial {k}: ||x*-x0|| <= 2 eps/sigma"),
                err,
                bound,
                cfg.tolerances.bound,
            );
        } else {
            unverifiable += 1;
        }
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    report.aggregate("verified_trials", verified as f64);
    report.aggregate("unverifiable_trials", unverifiable as f64);
    report.aggregate("solver_failures", failures as f64);
    report.aggregate(
        "pass_rate",
        if verified > 0 {
            passed as f64 / verified as f64
        } else {
            f64::NAN
        },
    );
    report.check("solver failures", failures as f64, 0.0, 0.0);
    Ok(report)
}

/// Constants from the stability proof with `‖·‖ ≤ γ‖·‖₁ ≤ γ²‖·‖`, `γ = √d`.
pub fn stability_constants(d: usize, sin_theta: f64, sigma_min: f64, sigma_max: f64) -> (f64, f64) {
    let gamma = (d as f64).sqrt();
    let k1 = 2.0 * gamma / (sin_theta * sigma_min);
    let k2 = (gamma * gamma * sigma_max / sigma_min + 1.0) / sin_theta + 2.0;
    (k1, k2)
}

struct StableTrial {
    sin_theta: f64,
    converged: bool,
    k1: f64,
    k2: f64,
    error_l1: Option<f64>,
    solver_msg: Option<String>,
}

/// Perturbs `x0` off its support, so `dist_{ℓ1}(x̌0, cone(𝒞)) = δ`.
fn perturb_off_support(rng: &mut RngStream, x0: &DVector<f64>, delta: f64) -> DVector<f64> {
    let mut p = DVector::from_fn(x0.len(), |i, _| if x0[i] == 0.0 { rng.normal() } else { 0.0 });
    let n1 = p.lp_norm(1);
    if n1 > 0.0 {
        p *= delta / n1;
    }
    x0 + p
}

/// `‖x* − x̌0‖₁ ≤ κ₁ε + κ₂·dist_{ℓ1}(x̌0, cone(𝒞))` for signals near the
/// `s`-sparse vectors on a fixed support.
pub fn run_stability_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let trials: Vec<StableTrial> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| -> Result<StableTrial> {
            let mut rng = RngStream::new(cfg.seed, k as u64);
            let a = cfg.matrix.load(&mut rng, cfg.m, cfg.d)?;
            let x0 = sparse_signal(&mut rng, a.cols(), cfg.s);
            let xc = perturb_off_support(&mut rng, &x0, cfg.delta);
            let b = a.matrix() * &xc + noise(&mut rng, a.rows(), cfg.eps);
            let ang = separation_angle(&a, &l1_descent_cone(&x0)?, &trial_rsv(cfg, k))?;
            let sin = ang.sin_theta();
            let (k1, k2) = stability_constants(a.cols(), sin, a.sigma_min_nonzero(), a.sigma_max());
            let (error_l1, solver_msg) = match solve_p1_noisy(&a, &b, cfg.eps, cfg.tolerances.solver) {
                Ok(sol) => ((&sol.x_star - &xc).lp_norm(1).into(), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(StableTrial {
                sin_theta: sin,
                converged: ang.converged,
                k1,
                k2,
                error_l1,
                solver_msg,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = new_report(cfg)?;
    let (mut verified, mut failures) = (0usize, 0usize);
    for (k, t) in trials.iter().enumerate() {
        let usable = t.converged && t.sin_theta > VACUOUS;
        let bound = t.k1 * cfg.eps + t.k2 * cfg.delta;
        report.record(record! {
            "trial" => k, "sin_theta" => t.sin_theta, "angle_converged" => t.converged,
            "kappa1" => t.k1.is_finite().then_some(t.k1), "kappa2" => t.k2.is_finite().then_some(t.k2),
            "error_l1" => t.error_l1, "bound" => bound.is_finite().then_some(bound),
            "solver_error" => t.solver_msg.clone(), "verifiable" => usable,
        });
        let Some(err) = t.error_l1 else {
            failures += 1;
            continue;
        };
        if usable {
            verified += 1;
            report.check(
                format!("trial {k}: ||x*-x0'||_1 <= k1 eps + k2 delta"),
                err,
                bound,
                cfg.tolerances.bound,
            );
        }
    }
    report.aggregate("verified_trials", verified as f64);
    report.aggregate("solver_failures", failures as f64);
    report.check("solver failures", failures as f64, 0.0, 0.0);
    Ok(report)
}

/// On small instances recovered exactly, the grid-certified separation
/// angle is positive and the stability bound holds with it.
pub fn run_exact_implies_stable(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let opts = &cfg.rsv;
    let slack = opts.slack(1.0);
    let mut report = new_report(cfg)?;
    let rows: Vec<Result<Value>> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| -> Result<Value> {
            let mut rng = RngStream::new(cfg.seed, k as u64);
            let a = cfg.matrix.load(&mut rng, cfg.m, cfg.d)?;
            let x0 = sparse_signal(&mut rng, a.cols(), cfg.s);
            let rec = exact_recovery_test(&a, &x0, cfg.tolerances.recovery)?;
            let ang = separation_angle(&a, &l1_descent_cone(&x0)?, &trial_rsv(cfg, k))?;
            let lower = ang.bracket.map_or(ang.theta_star, |b| b.0);
            // same support and signs, new magnitudes: same face of the ℓ1 ball
            let twin = x0.map(|v| {
                if v == 0.0 {
                    0.0
                } else {
                    v.signum() * (0.5 + rng.uniform())
                }
            });
            let twin_theta = separation_angle(&a, &l1_descent_cone(&twin)?, &trial_rsv(cfg, k))?.theta_star;
            let xc = perturb_off_support(&mut rng, &x0, cfg.delta);
            let b = a.matrix() * &xc + noise(&mut rng, a.rows(), cfg.eps);
            let sol = solve_p1_noisy(&a, &b, cfg.eps, cfg.tolerances.solver)?;
            let (k1, k2) = stability_constants(a.cols(), lower.sin(), a.sigma_min_nonzero(), a.sigma_max());
            Ok(serde_json::json!({
                "trial": k,
                "exact": rec.passed(),
                "not_unique": rec.uniqueness == Uniqueness::NotUnique && !rec.recovered,
                "theta_star": ang.theta_star,
                "theta_lower": lower,
                "twin_theta": twin_theta,
                "error_l1": (&sol.x_star - &xc).lp_norm(1),
                "bound": (k1 * cfg.eps + k2 * cfg.delta),
            }))
        })
        .collect();
    let mut included = 0usize;
    for (k, row) in rows.into_iter().enumerate() {
        let row = row?;
        let f = |key: &str| row[key].as_f64().unwrap_or(f64::NAN);
        let exact = row["exact"].as_bool().unwrap_or(false);
        if exact {
            included += 1;
            report.check(
                format!("trial {k}: theta* > grid slack"),
                slack,
                f("theta_star"),
                -f64::MIN_POSITIVE,
            );
            report.check(
                format!("trial {k}: same face, same angle"),
                (f("theta_star") - f("twin_theta")).abs(),
                0.0,
                1e-3,
            );
            if f("theta_lower") > 0.0 {
                report.check(
                    format!("trial {k}: stability bound"),
                    f("error_l1"),
                    f("bound"),
                    cfg.tolerances.bound,
                );
            }
        } else if row["not_unique"].as_bool().unwrap_or(false) {
            report.check(
                format!("trial {k}: failed recovery has theta* = 0"),
                f("theta_lower"),
                0.0,
                1e-12,
            );
        }
        if let Value::Object(map) = row {
            report.record(map.into_iter().collect());
        }
    }
    report.aggregate("exact_instances", included as f64);
    Ok(report)
}

/// Success rate of basis pursuit against `m`, with `ŵ²` and `δ̂` of the ℓ1
/// descent cone at an `s`-sparse point as reference lines.
pub fn run_phase_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let d = cfg.d;
    let mut x_ref = DVector::zeros(d);
    for i in 0..cfg.s {
        x_ref[i] = 1.0;
    }
    let cone = l1_descent_cone(&x_ref)?;
    let base = RngStream::new(cfg.seed, u64::MAX);
    let w = gaussian_width_mc(&cone, cfg.samples, &base.substream(0))?;
    let sd = statistical_dim_mc(&cone, cfg.samples, &base.substream(1))?;
    let w_sq = w.mean * w.mean;

    let mut report = new_report(cfg)?;
    let mut rates = Vec::with_capacity(cfg.m_values.len());
    for (j, &m) in cfg.m_values.iter().enumerate() {
        let ok: Vec<bool> = (0..cfg.trials)
            .into_par_iter()
            .map(|k| -> Result<bool> {
                let mut rng = RngStream::new(cfg.seed, (j * cfg.trials + k) as u64);
                let a = MatrixSource::Gaussian.load(&mut rng, m, d)?;
                let x0 = sparse_signal(&mut rng, d, cfg.s);
                Ok(exact_recovery_test(&a, &x0, cfg.tolerances.recovery)?.recovered)
            })
            .collect::<Result<_>>()?;
        let rate = ok.iter().filter(|&&b| b).count() as f64 / cfg.trials as f64;
        rates.push(rate);
        report.record(record! { "m" => m, "success_rate" => rate, "w_sq" => w_sq, "stat_dim" => sd.mean });
    }
    report.aggregate("w_sq", w_sq);
    report.aggregate("stat_dim", sd.mean);
    report.aggregate("stat_dim_stderr", sd.stderr);
    for (&m, &rate) in cfg.m_values.iter().zip(&rates) {
        if m >= d {
            report.check(format!("m = {m} >= d recovers always"), 1.0, rate, 0.0);
        }
    }
    let crossing = cfg
        .m_values
        .iter()
        .zip(&rates)
        .find(|(_, &r)| r >= 0.5)
        .map(|(&m, _)| m as f64);
    match crossing {
        Some(m50) if rates[0] < 0.5 => {
            report.aggregate("transition_m", m50);
            report.check("transition >= stat_dim - 4", sd.mean - 4.0, m50, 0.0);
            report.check("transition <= stat_dim + 4", m50, sd.mean + 4.0, 0.0);
        }
        _ => report.note("sweep does not bracket the 50% transition"),
    }
    Ok(report)
}

/// Line chart of a phase-sweep report: success rate with `ŵ²/d` and `δ̂/d`.
pub fn phase_sweep_svg(report: &ExperimentReport) -> Option<String> {
    let col = |key: &str| -> Option<Vec<f64>> { report.records.iter().map(|r| r.get(key)?.as_f64()).collect() };
    let x = col("m")?;
    let d = report.config.get("d")?.as_f64()?;
    let scaled = |v: Vec<f64>| v.into_iter().map(|y| y / d).collect::<Vec<_>>();
    Some(svg_line_chart(
        "recovery rate vs m",
        &x,
        &[
            ("success_rate", col("success_rate")?),
            ("w_sq / d", scaled(col("w_sq")?)),
            ("stat_dim / d", scaled(col("stat_dim")?)),
        ],
    ))
}

fn random_instance(rng: &mut RngStream, k: usize) -> Result<(LinearMap, Cone)> {
    let d = 3 + k % 2;
    let m = 1 + rng.index(d - 1);
    let a = crate::numkernel::gaussian_matrix(rng, m, d)?;
    let cone = if k % 4 < 2 {
        let alpha = 0.1 + 1.1 * rng.uniform();
        Cone::circular_with_axis(d, alpha, unit_vector(rng, d))?
    } else {
        let s = 1 + rng.index(d - 1);
        l1_descent_cone(&sparse_signal(rng, d, s))?
    };
    Ok((a, cone))
}

/// `sin θ*·σ_min ≤ σ ≤ sin θ*·σ_max` on random small instances.
pub fn run_sandwich_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let subs: Vec<(ExperimentReport, usize, usize, &'static str)> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = RngStream::new(cfg.seed, k as u64);
            let (a, cone) = random_instance(&mut rng, k)?;
            Ok((
                check_sandwich(&a, &cone, &trial_rsv(cfg, k))?,
                a.rows(),
                a.cols(),
                cone.variant_name(),
            ))
        })
        .collect::<Result<_>>()?;
    let mut report = new_report(cfg)?;
    for (k, (sub, m, d, name)) in subs.into_iter().enumerate() {
        let mut rec = sub.records.into_iter().next().unwrap_or_default();
        rec.insert("trial".into(), k.into());
        rec.insert("m".into(), m.into());
        rec.insert("d".into(), d.into());
        rec.insert("cone".into(), name.into());
        report.record(rec);
        for c in sub.checks {
            report.check(format!("trial {k}: {}", c.name), c.lhs, c.rhs, c.slack);
        }
    }
    Ok(report)
}

fn run_circ_stat_dim(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let cone = Cone::circular(cfg.d, cfg.alpha)?;
    let rng = RngStream::new(cfg.seed, 0);
    let est = statistical_dim_mc(&cone, cfg.samples, &rng)?;
    let w = gaussian_width_mc(&cone, cfg.samples, &rng.substream(1))?;
    let f = circ_stat_dim_formula(cfg.d, cfg.alpha)?;
    let mut report = new_report(cfg)?;
    report.record(record! {
        "stat_dim" => est.mean, "stderr" => est.stderr, "formula" => f,
        "width" => w.mean, "width_stderr" => w.stderr,
    });
    let band = 3.0 + 3.0 * est.stderr;
    report.check("stat_dim - formula <= 3 + 3 se", est.mean - f, 0.0, band);
    report.check("formula - stat_dim <= 3 + 3 se", f - est.mean, 0.0, band);
    let mc = 6.0 * (est.stderr + 2.0 * w.mean.abs() * w.stderr);
    report.check("w^2 <= stat_dim", w.mean * w.mean, est.mean, mc);
    report.check("stat_dim <= w^2 + 1", est.mean, w.mean * w.mean + 1.0, mc);
    Ok(report)
}
