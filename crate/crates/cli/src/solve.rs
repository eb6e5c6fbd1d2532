//! `csd1d solve`: one run, its requested checks and artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use csd1d_core::diagnostics::{
    charge_series, concentration_monitor, corollary_envelope_report, intrinsic_bound_report,
    trajectory_bilinear_reports, EXACT_TOL,
};
use csd1d_core::error::IterateDiff;
use csd1d_core::solver::{solve_decomposed, solve_global, SlabRecord};
use csd1d_core::{Backend, CsdError, DiagnosticReport, State, Trajectory};
use serde::Serialize;
use serde_json::json;

use crate::config::{Check, Format, RunConfig};
use crate::output::{trajectory_header, trajectory_rows, write_csv, write_json};
use crate::{CliError, Exit};

/// Window radius of the concentration check in `solve`.
pub const CONCENTRATION_RADIUS: f64 = 0.25;

#[derive(Debug, Serialize)]
struct SolveReport<'a> {
    status: &'static str,
    error: Option<String>,
    reports: &'a [DiagnosticReport],
    slabs: &'a [SlabRecord],
    /// Iterate differences of the failing slab, if any.
    failed_history: &'a [IterateDiff],
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    config: &'a RunConfig,
    versions: BTreeMap<&'static str, &'static str>,
    wall_time_s: f64,
}

fn versions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("csd1d", env!("CARGO_PKG_VERSION")),
        ("csd1d_core", csd1d_core::VERSION),
    ])
}

/// Relative charge drift allowed by the `charge` check: rounding only when
/// the scheme conserves charge exactly, `dx^2` otherwise.
pub fn charge_tolerance(cfg: &RunConfig, dx: f64) -> f64 {
    if cfg.model.m == 0.0 && cfg.solver.backend == Backend::March {
        EXACT_TOL
    } else {
        dx * dx
    }
}

pub fn run_checks(cfg: &RunConfig, s0: &State, traj: &Trajectory) -> Result<Vec<DiagnosticReport>, CsdError> {
    let p = cfg.model.p;
    let dx = s0.grid().dx();
    let mut out = Vec::new();
    for check in &cfg.run.checks {
        match check {
            Check::Charge => out.push(charge_series(traj, charge_tolerance(cfg, dx)).1),
            Check::Intrinsic => {
                let d = solve_decomposed(s0, cfg.run.t_final)?;
                out.push(intrinsic_bound_report(&d, p)?);
            }
            Check::CorollaryEnvelope => out.push(corollary_envelope_report(traj, p)?),
            Check::Concentration => {
                out.push(concentration_monitor(traj, CONCENTRATION_RADIUS.max(dx))?.1);
            }
            Check::Bilinear => out.extend(trajectory_bilinear_reports(traj, p)?),
        }
    }
    for r in &mut out {
        r.with("backend", json!(cfg.solver.backend));
    }
    Ok(out)
}

/// Runs the configured solve. Artifacts go to `out`, or to
/// `output.directory` when `out` is `None`.
pub fn run_solve(config_path: &Path, out: Option<&Path>) -> Result<Exit, CliError> {
    let start = Instant::now();
    let cfg = RunConfig::load(config_path)?;
    run_solve_config(&cfg, out, start)
}

pub fn run_solve_config(cfg: &RunConfig, out: Option<&Path>, start: Instant) -> Result<Exit, CliError> {
    let dir = out.map(PathBuf::from).unwrap_or_else(|| cfg.output.directory.clone());
    std::fs::create_dir_all(&dir)?;
    let s0 = cfg.initial_state()?;

    let mut reports = Vec::new();
    let mut slabs = Vec::new();
    let mut failed_history = Vec::new();
    let (exit, error) = match solve_global(&s0, cfg.run.t_final, &cfg.solver) {
        Ok(traj) => {
            reports = run_checks(cfg, &s0, &traj)?;
            slabs = traj.slabs().to_vec();
            if cfg.wants(Format::Csv) {
                write_csv(&dir.join("trajectory.csv"), &trajectory_header().iter().map(String::as_str).collect::<Vec<_>>(), trajectory_rows(&traj, cfg.model.p)?)?;
            }
            let exit = if reports.iter().all(|r| r.pass) {
                Exit::Success
            } else {
                Exit::ChecksFailed
            };
            (exit, None)
        }
        Err(e) => {
            let exit = Exit::for_error(&e);
            if exit == Exit::Usage {
                return Err(e.into());
            }
            if let CsdError::ConvergenceFailure { history, .. } = &e {
                failed_history = history.clone();
            }
            eprintln!("{e}");
            (exit, Some(e.to_string()))
        }
    };

    let status = match exit {
        Exit::Success => "ok",
        Exit::ChecksFailed => "checks_failed",
        Exit::ConvergenceFailure => "convergence_failure",
        Exit::DomainOverflow => "domain_overflow",
        Exit::Usage => unreachable!(),
    };
    if cfg.wants(Format::Json) {
        let report = SolveReport {
            status,
            error,
            reports: &reports,
            slabs: &slabs,
            failed_history: &failed_history,
        };
        write_json(&dir.join("report.json"), &report)?;
    }
    let meta = Meta {
        config: cfg,
        versions: versions(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("meta.json"), &meta)?;
    for r in &reports {
        println!("{:<24} lhs {:>12.5e}  rhs {:>12.5e}  {}", r.name, r.lhs, r.rhs, if r.pass { "pass" } else { "FAIL" });
    }
    Ok(exit)
}
