//! Command-line front end for `angsep`.
//!
//! Exit codes: 0 on success or a passing check, 1 when a check or
//! experiment fails, 2 on usage or input errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use angsep::cones::{ConeSpec, Halfspace, Polytope};
use angsep::criteria::{check_rip_cross, nsp_check, nsp_margin, polytope_mu, rip_constants, rnsp_check, MuOptions};
use angsep::gauss::{gaussian_width_mc, statistical_dim_mc};
use angsep::harness::{run_experiment, write_outputs, ExperimentConfig, ExperimentKind};
use angsep::numkernel::{parse_matrix, parse_vector, LinearMap, RngStream};
use angsep::report::fmt_f64;
use angsep::rsv::{cond_from_angle, restricted_sv, separation_angle, Method, RsvOptions};
use angsep::solvers::{solve_p1, solve_p1_noisy, solve_p2, solve_p2_noisy};
use angsep::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Deserialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "angsep", version, about = "Angular separation and recovery-guarantee checks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config file (experiments)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleMethod {
    Descent,
    Grid,
    Exact,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, value_enum, default_value_t = OracleMethod::Descent)]
    method: OracleMethod,
    /// Grid resolution in radians
    #[arg(long, default_value_t = 0.005)]
    res: f64,
    #[arg(long, default_value_t = 32)]
    starts: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Restricted isometry constants δ_1..δ_k
    Rip {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        /// Also test the disjoint-support cross bound at sparsity s
        #[arg(long)]
        cross_s: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Null space property on a support
    Nsp {
        #[arg(long)]
        matrix: PathBuf,
        /// Comma-separated indices
        #[arg(long)]
        support: String,
    },
    /// Robust null space property with constants γ, τ on T
    Rnsp {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        support: String,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        tau: f64,
    },
    /// Restricted singular value σ_{C→ℝ^m}(A)
    Rsv {
        #[arg(long)]
        matrix: PathBuf,
        /// Cone as inline JSON or a path to a JSON file
        #[arg(long)]
        cone: String,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Separation angle θ* between a cone and ker A
    Angle {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        cone: String,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Solve a recovery program
    Solve {
        #[arg(value_enum)]
        program: Program,
        #[arg(long)]
        matrix: PathBuf,
        /// Measurement vector file
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Monte Carlo Gaussian width
    Width {
        #[arg(long)]
        cone: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Monte Carlo statistical dimension
    Statdim {
        #[arg(long)]
        cone: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Face constant μ(x0) of a polytope
    Mu {
        /// JSON file with `vertices` and `halfspaces`
        #[arg(long, conflicts_with = "cross_polytope")]
        polytope: Option<PathBuf>,
        /// Use the cross-polytope of this dimension
        #[arg(long)]
        cross_polytope: Option<usize>,
        #[arg(long)]
        x0: String,
        /// Spanning vector of U; repeat for more
        #[arg(long, required = true)]
        u: Vec<String>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Run a named experiment
    Experiment {
        name: String,
        /// Run trials on one thread
        #[arg(long)]
        single_thread: bool,
        /// Record wall time in the report
        #[arg(long)]
        timing: bool,
        /// Write the records as CSV here in addition to the report
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write an SVG chart here (phase sweep only)
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Program {
    P1,
    P1eps,
    P2,
    P2eps,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolytopeFile {
    vertices: Vec<Vec<f64>>,
    #[serde(default)]
    halfspaces: Vec<Halfspace>,
}

/// Result of a command before rendering.
struct Output {
    value: Value,
    csv: Option<String>,
    passed: bool,
}

impl Output {
    fn ok(value: Value) -> Output {
        Output {
            value,
            csv: None,
            passed: true,
        }
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(out) => match emit(&cli.common, &out) {
            Ok(()) if out.passed => EXIT_OK,
            Ok(()) => EXIT_FAIL,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Solver(_) | Error::Overflow(_) => EXIT_FAIL,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn emit(common: &Common, out: &Output) -> Result<(), Error> {
    let text = match common.format {
        Format::Json => serde_json::to_string_pretty(&out.value)? + "\n",
        Format::Csv => out.csv.clone().unwrap_or_else(|| flat_csv(&out.value)),
    };
    match &common.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// One-row CSV of a JSON object; nested keys are joined with '.', arrays
/// are space-separated.
fn flat_csv(v: &Value) -> String {
    let mut cols = Vec::new();
    flatten("", v, &mut cols);
    let header: Vec<&str> = cols.iter().map(|(k, _)| k.as_str()).collect();
    let row: Vec<&str> = cols.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), cell(other))),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => fmt_f64(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(xs) => xs.iter().map(cell).collect::<Vec<_>>().join(" "),
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> Result<LinearMap, Error> {
    LinearMap::new(parse_matrix(&read(path)?)?)
}

fn load_cone(arg: &str) -> Result<angsep::cones::Cone, Error> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read(Path::new(arg))?
    };
    let spec: ConeSpec = serde_json::from_str(&text)?;
    spec.build()
}

fn indices(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|e| Error::Parse(format!("bad index '{t}': {e}"))))
        .collect()
}

fn oracle(args: &OracleArgs, seed: u64) -> RsvOptions {
    let method = match args.method {
        OracleMethod::Descent => Method::Descent,
        OracleMethod::Grid => Method::Grid,
        OracleMethod::Exact => Method::Exact,
    };
    RsvOptions {
        method,
        res: args.res,
        starts: args.starts,
        seed,
        ..RsvOptions::default()
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, Error> {
    Ok(serde_json::to_value(x)?)
}

fn run(cli: &Cli) -> Result<Output, Error> {
    let seed = cli.common.seed.unwrap_or(0);
    match &cli.command {
        Command::Rip {
            matrix,
            k,
            cross_s,
            trials,
        } => {
            let a = load_matrix(matrix)?;
            let table = rip_constants(&a, *k)?;
            let csv = table.delta.iter().fold(String::from("k,delta\n"), |mut s, (k, d)| {
                s.push_str(&format!("{k},{}\n", fmt_f64(*d)));
                s
            });
            let mut value = to_value(&table)?;
            let mut passed = true;
            if let Some(s) = cross_s {
                let r = check_rip_cross(&a, *s, *trials, &mut RngStream::new(seed, 0))?;
                passed = r.passed;
                value["cross"] = to_value(&r)?;
            }
            Ok(Output {
                value,
                csv: Some(csv),
                passed,
            })
        }
        Command::Nsp { matrix, support } => {
            let a = load_matrix(matrix)?;
            let s = indices(support)?;
            let holds = nsp_check(&a, &s)?;
            let margin = nsp_margin(&a, &s)?;
            Ok(Output {
                value: json!({ "holds": holds, "margin": margin, "support": s }),
                csv: None,
                passed: holds,
            })
        }
        Command::Rnsp {
            matrix,
            support,
            gamma,
            tau,
        } => {
            let a = load_matrix(matrix)?;
            let r = rnsp_check(&a, &indices(support)?, *gamma, *tau)?;
            Ok(Output {
                passed: r.holds,
                value: to_value(&r)?,
                csv: None,
            })
        }
        Command::Rsv {
            matrix,
            cone,
            oracle: o,
        } => {
            let a = load_matrix(matrix)?;
            let r = restricted_sv(&a, &load_cone(cone)?, &oracle(o, seed))?;
            let mut value = to_value(&r)?;
            value["sigma_max"] = json!(a.sigma_max());
            value["renegar_cond"] = json!((r.sigma > 0.0).then(|| a.sigma_max() / r.sigma));
            Ok(Output::ok(value))
        }
        Command::Angle {
            matrix,
            cone,
            oracle: o,
        } => {
            let a = load_matrix(matrix)?;
            let r = separation_angle(&a, &load_cone(cone)?, &oracle(o, seed))?;
            let mut value = to_value(&r)?;
            value["grassmann_cond"] = json!(cond_from_angle(r.theta_star).ok());
            Ok(Output::ok(value))
        }
        Command::Solve {
            program,
            matrix,
            b,
            eps,
            tol,
        } => {
            let a = load_matrix(matrix)?;
            let b = parse_vector(&read(b)?)?;
            let r = match program {
                Program::P1 => solve_p1(&a, &b, *tol)?,
                Program::P1eps => solve_p1_noisy(&a, &b, *eps, *tol)?,
                Program::P2 => solve_p2(&a, &b)?,
                Program::P2eps => solve_p2_noisy(&a, &b, *eps)?,
            };
            Ok(Output::ok(to_value(&r)?))
        }
        Command::Width { cone, samples } => Ok(Output::ok(to_value(&gaussian_width_mc(
            &load_cone(cone)?,
            *samples,
            &RngStream::new(seed, 0),
        )?)?)),
        Command::Statdim { cone, samples } => Ok(Output::ok(to_value(&statistical_dim_mc(
            &load_cone(cone)?,
            *samples,
            &RngStream::new(seed, 0),
        )?)?)),
        Command::Mu {
            polytope,
            cross_polytope,
            x0,
            u,
            samples,
        } => {
            let p = match (polytope, cross_polytope) {
                (Some(path), _) => {
                    let f: PolytopeFile = serde_json::from_str(&read(path)?)?;
                    Polytope::new(
                        f.vertices.iter().map(|v| DVector::from_column_slice(v)).collect(),
                        f.halfspaces
                            .iter()
                            .map(|h| (DVector::from_column_slice(&h.normal), h.offset))
                            .collect(),
                    )?
                }
                (None, Some(d)) => Polytope::cross_polytope(*d)?,
                (None, None) => return Err(Error::InvalidInput("need --polytope or --cross-polytope".into())),
            };
            let u: Vec<DVector<f64>> = u.iter().map(|s| parse_vector(s)).collect::<Result<_, _>>()?;
            let opts = MuOptions {
                samples: *samples,
                seed,
                ..MuOptions::default()
            };
            Ok(Output::ok(to_value(&polytope_mu(&p, &parse_vector(x0)?, &u, &opts)?)?))
        }
        Command::Experiment {
            name,
            single_thread,
            timing,
            csv,
            svg,
        } => {
            let kind = ExperimentKind::parse(name)?;
            let mut cfg = match &cli.common.config {
                Some(path) => {
                    let cfg = ExperimentConfig::from_file(path)?;
                    if cfg.experiment != kind {
                        return Err(Error::InvalidInput(format!(
                            "config is for '{}', not '{}'",
                            cfg.experiment.name(),
                            kind.name()
                        )));
                    }
                    cfg
                }
                None => ExperimentConfig::for_experiment(kind, seed),
            };
            if let Some(s) = cli.common.seed {
                cfg.seed = s;
            }
            cfg.parallel &= !single_thread;
            cfg.record_timing |= timing;
            if csv.is_some() {
                cfg.output.csv = csv.clone();
            }
            if svg.is_some() {
                cfg.output.svg = svg.clone();
            }
            let report = run_experiment(&cfg)?;
            write_outputs(&cfg, &report)?;
            Ok(Output {
                value: to_value(&report)?,
                csv: Some(report.records_csv()),
                passed: report.passed,
            })
        }
    }
}
