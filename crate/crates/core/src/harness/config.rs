use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cones::ConeSpec;
use crate::numkernel::{gaussian_matrix, parse_matrix, LinearMap, RngStream};
use crate::rsv::RsvOptions;
use crate::{Error, Result};

/// Version of the config schema understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Robustness,
    Stability,
    ExactImpliesStable,
    PhaseSweep,
    Sandwich,
    WidthExpansion,
    Escape,
    CircStatDim,
    Sqrt5,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Robustness,
        ExperimentKind::Stability,
        ExperimentKind::ExactImpliesStable,
        ExperimentKind::PhaseSweep,
        ExperimentKind::Sandwich,
        ExperimentKind::WidthExpansion,
        ExperimentKind::Escape,
        ExperimentKind::CircStatDim,
        ExperimentKind::Sqrt5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Robustness => "robustness",
            ExperimentKind::Stability => "stability",
            ExperimentKind::ExactImpliesStable => "exact_implies_stable",
            ExperimentKind::PhaseSweep => "phase_sweep",
            ExperimentKind::Sandwich => "sandwich",
            ExperimentKind::WidthExpansion => "width_expansion",
            ExperimentKind::Escape => "escape",
            ExperimentKind::CircStatDim => "circ_stat_dim",
            ExperimentKind::Sqrt5 => "sqrt5",
        }
    }

    pub fn parse(name: &str) -> Result<ExperimentKind> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown experiment `{name}`")))
    }
}

/// Where a fixed measurement matrix comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSource {
    /// Fresh Gaussian matrices drawn per trial.
    Gaussian,
    Inline {
        rows: Vec<Vec<f64>>,
    },
    File {
        path: PathBuf,
    },
}

impl MatrixSource {
    /// The matrix for one trial; `rng` is only used for Gaussian sources.
    pub fn load(&self, rng: &mut RngStream, m: usize, d: usize) -> Result<LinearMap> {
        match self {
            MatrixSource::Gaussian => gaussian_matrix(rng, m, d),
            MatrixSource::Inline { rows } => {
                let m = rows.len();
                let d = rows.first().map_or(0, |r| r.len());
                if m == 0 || d == 0 || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::invalid("inline matrix must be a non-empty rectangle"));
                }
                LinearMap::new(DMatrix::from_fn(m, d, |i, j| rows[i][j]))
            }
            MatrixSource::File { path } => LinearMap::new(parse_matrix(&std::fs::read_to_string(path)?)?),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Added to every bound checked per trial.
    pub bound: f64,
    /// Primal-dual gap target of the ℓ1 solvers.
    pub solver: f64,
    /// Relative error accepted as exact recovery.
    pub recovery: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bound: 1e-4,
            solver: 1e-9,
            recovery: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

/// Experiment configuration, read from JSON with unknown keys rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub m: usize,
    pub d: usize,
    pub s: usize,
    pub eps: f64,
    /// ℓ1 distance of the perturbed signal from the sparse model.
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Measurement counts for the phase sweep.
    pub m_values: Vec<usize>,
    /// Monte Carlo sample size for widths and statistical dimensions.
    pub samples: usize,
    pub alpha: f64,
    pub theta: f64,
    pub t: f64,
    pub cone: Option<ConeSpec>,
    pub matrix: MatrixSource,
    pub tolerances: Tolerances,
    pub rsv: RsvOptions,
    pub output: OutputPaths,
    pub record_timing: bool,
    /// `false` runs everything on one thread.
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment: ExperimentKind::Robustness,
            m: 20,
            d: 40,
            s: 3,
            eps: 0.1,
            delta: 0.0,
            trials: 50,
            seed: 0,
            m_values: Vec::new(),
            samples: 100_000,
            alpha: std::f64::consts::FRAC_PI_8,
            theta: std::f64::consts::PI / 12.0,
            t: 2.0,
            cone: None,
            matrix: MatrixSource::Gaussian,
            tolerances: Tolerances::default(),
            rsv: RsvOptions::default(),
            output: OutputPaths::default(),
            record_timing: false,
            parallel: true,
        }
    }
}

impl ExperimentConfig {
    /// Defaults for `kind` with the given seed.
    pub fn for_experiment(kind: ExperimentKind, seed: u64) -> ExperimentConfig {
        let base = ExperimentConfig {
            experiment: kind,
            seed,
            ..Default::default()
        };
        match kind {
            ExperimentKind::Robustness => base,
            ExperimentKind::Stability => ExperimentConfig {
                eps: 0.05,
                delta: 0.05,
                ..base
            },
            ExperimentKind::ExactImpliesStable => ExperimentConfig {
                m: 2,
                d: 3,
                s: 1,
                eps: 0.05,
                delta: 0.02,
                trials: 10,
                rsv: RsvOptions::grid(0.005),
                ..base
            },
            ExperimentKind::PhaseSweep => ExperimentConfig {
                d: 40,
                s: 2,
                trials: 40,
                m_values: (4..=30).collect(),
                samples: 20_000,
                ..base
            },
            ExperimentKind::Sandwich => ExperimentConfig {
                trials: 100,
                rsv: RsvOptions::grid(0.005),
                ..base
            },
            ExperimentKind::WidthExpansion => ExperimentConfig {
                d: 50,
                alpha: std::f64::consts::FRAC_PI_8,
                theta: std::f64::consts::PI / 12.0,
                ..base
            },
            ExperimentKind::Escape => ExperimentConfig {
                d: 10,
                m: 8,
                alpha: std::f64::consts::FRAC_PI_8,
                t: 2.0,
                trials: 2000,
                ..base
            },
            ExperimentKind::CircStatDim => ExperimentConfig {
                d: 100,
                alpha: std::f64::consts::FRAC_PI_6,
                ..base
            },
            ExperimentKind::Sqrt5 => ExperimentConfig {
                d: 30,
                s: 3,
                trials: 10_000,
                ..base
            },
        }
    }

    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let counts = [
            ("m", self.m),
            ("d", self.d),
            ("s", self.s),
            ("trials", self.trials),
            ("samples", self.samples),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be at least 1")));
            }
        }
        if self.s > self.d {
            return Err(Error::invalid("s must not exceed d"));
        }
        for (name, v) in [
            ("eps", self.eps),
            ("delta", self.delta),
            ("t", self.t),
            ("theta", self.theta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and nonnegative")));
            }
        }
        let tol = &self.tolerances;
        if [tol.bound, tol.solver, tol.recovery]
            .iter()
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(Error::invalid("tolerances must be finite and nonnegative"));
        }
        if self.m_values.contains(&0) {
            return Err(Error::invalid("m_values entries must be at least 1"));
        }
        if self.experiment == ExperimentKind::PhaseSweep && self.m_values.is_empty() {
            return Err(Error::invalid("phase_sweep needs m_values"));
        }
        if let MatrixSource::File { path } = &self.matrix {
            if !path.exists() {
                return Err(Error::invalid(format!("matrix file {} does not exist", path.display())));
            }
        }
        Ok(())
    }
}
