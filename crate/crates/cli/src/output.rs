//! Deterministic CSV and JSON writers.

use std::path::Path;

use csd1d_core::lattice::lp_norm;
use csd1d_core::{Result as CoreResult, Trajectory};
use serde::Serialize;

use crate::CliError;

/// Full-precision scientific notation (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

const FIELDS: [&str; 4] = ["psi_plus", "psi_minus", "a_plus", "a_minus"];
const NORMS: [&str; 4] = ["L1", "L2", "Lp", "Linf"];

pub fn trajectory_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for f in FIELDS {
        for n in NORMS {
            h.push(format!("{f}_{n}"));
        }
    }
    h.push("charge".to_string());
    h
}

/// One row per time level: `t`, then the L1, L2, Lp and Linf norms of each
/// field, then the charge.
pub fn trajectory_rows(traj: &Trajectory, p: f64) -> CoreResult<Vec<Vec<String>>> {
    let exps = [1.0, 2.0, p, f64::INFINITY];
    traj.states()
        .iter()
        .zip(traj.charge())
        .map(|(s, q)| {
            let mut row = vec![num(s.t)];
            for e in exps {
                row.push(num(lp_norm(&s.psi_plus, e)?));
            }
            for e in exps {
                row.push(num(lp_norm(&s.psi_minus, e)?));
            }
            for e in exps {
                row.push(num(lp_norm(&s.a_plus, e)?));
            }
            for e in exps {
                row.push(num(lp_norm(&s.a_minus, e)?));
            }
            row.push(num(*q));
            Ok(row)
        })
        .collect()
}
