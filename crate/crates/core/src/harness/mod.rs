//! Experiment configuration, runners and report output.

mod config;
mod experiments;

pub use config::{ExperimentConfig, ExperimentKind, MatrixSource, OutputPaths, Tolerances, SCHEMA_VERSION};
pub use experiments::{
    phase_sweep_svg, run_exact_implies_stable, run_experiment, run_phase_sweep, run_robustness_experiment,
    run_sandwich_sweep, run_stability_experiment, sparse_signal, stability_constants,
};

use std::path::Path;

use crate::report::ExperimentReport;
use crate::Result;

/// Writes the report and any CSV/SVG outputs requested in `cfg.output`.
pub fn write_outputs(cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    if let Some(p) = &cfg.output.report {
        write(p, &report.to_json()?)?;
    }
    if let Some(p) = &cfg.output.csv {
        write(p, &report.records_csv())?;
    }
    if let Some(p) = &cfg.output.svg {
        if let Some(svg) = experiments::phase_sweep_svg(report) {
            write(p, &svg)?;
        }
    }
    Ok(())
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests;
