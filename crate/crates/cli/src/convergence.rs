//! `csd1d convergence`: grid refinement study.

use std::path::{Path, PathBuf};

use csd1d_core::solver::solve_global;
use csd1d_core::Trajectory;

use crate::config::RunConfig;
use crate::output::{num, write_csv};
use crate::{CliError, Exit};

pub const FIELD_NAMES: [&str; 4] = ["psi_plus", "psi_minus", "a_plus", "a_minus"];

/// Sup over shared time levels of the per-field difference between a
/// trajectory and one on the twice-refined grid. Coarse cell `j` is compared
/// with the mean of fine cells `2j` and `2j + 1`.
pub fn level_difference(coarse: &Trajectory, fine: &Trajectory) -> Result<[f64; 4], CliError> {
    let (gc, gf) = (coarse.grid(), fine.grid());
    if gf.n_cells() != 2 * gc.n_cells() || fine.steps() != 2 * coarse.steps() {
        return Err(CliError::Config("fine trajectory must be the 2x refinement".into()));
    }
    let mut d = [0.0f64; 4];
    for (k, c) in coarse.states().iter().enumerate() {
        let f = &fine.states()[2 * k];
        for j in 0..gc.n_cells() {
            let (a, b) = (2 * j, 2 * j + 1);
            let pp = (f.psi_plus.values()[a] + f.psi_plus.values()[b]) * 0.5;
            let pm = (f.psi_minus.values()[a] + f.psi_minus.values()[b]) * 0.5;
            let ap = 0.5 * (f.a_plus.values()[a] + f.a_plus.values()[b]);
            let am = 0.5 * (f.a_minus.values()[a] + f.a_minus.values()[b]);
            d[0] = d[0].max((c.psi_plus.values()[j] - pp).norm());
            d[1] = d[1].max((c.psi_minus.values()[j] - pm).norm());
            d[2] = d[2].max((c.a_plus.values()[j] - ap).abs());
            d[3] = d[3].max((c.a_minus.values()[j] - am).abs());
        }
    }
    Ok(d)
}

/// One line of `convergence.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub field: &'static str,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub sup_diff: f64,
    /// `log2` of the previous pair's difference over this one; NaN for the
    /// first pair.
    pub order: f64,
}

/// Solves the configuration at `n, 2n, 4n, ...` (`levels` grids) and returns
/// the pairwise differences with their observed orders.
pub fn convergence_study(cfg: &RunConfig, levels: usize) -> Result<Vec<ConvergenceRow>, CliError> {
    if levels < 3 {
        return Err(CliError::Config(format!("levels must be >= 3, got {levels}")));
    }
    let n0 = cfg.grid.n_cells;
    let mut trajs = Vec::with_capacity(levels);
    for l in 0..levels {
        let c = cfg.with_cells(n0 << l);
        c.validate()?;
        let s0 = c.initial_state()?;
        trajs.push(solve_global(&s0, c.run.t_final, &c.solver)?);
    }
    let diffs = trajs
        .windows(2)
        .map(|w| level_difference(&w[0], &w[1]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for (f, name) in FIELD_NAMES.iter().enumerate() {
        for (i, d) in diffs.iter().enumerate() {
            let order = if i == 0 { f64::NAN } else { (diffs[i - 1][f] / d[f]).log2() };
            rows.push(ConvergenceRow {
                field: name,
                n_coarse: n0 << i,
                n_fine: n0 << (i + 1),
                sup_diff: d[f],
                order,
            });
        }
    }
    Ok(rows)
}

pub fn run_convergence(config_path: &Path, levels: usize, out: Option<&Path>) -> Result<Exit, CliError> {
    let cfg = RunConfig::load(config_path)?;
    let rows = convergence_study(&cfg, levels)?;
    let dir = out.map(PathBuf::from).unwrap_or_else(|| cfg.output.directory.clone());
    std::fs::create_dir_all(&dir)?;
    write_csv(
        &dir.join("convergence.csv"),
        &["field", "n_coarse", "n_fine", "sup_diff", "order"],
        rows.iter().map(|r| {
            vec![
                r.field.to_string(),
                r.n_coarse.to_string(),
                r.n_fine.to_string(),
                num(r.sup_diff),
                num(r.order),
            ]
        }),
    )?;
    for r in &rows {
        println!("{:<10} {:>6} -> {:<6} diff {:>12.5e}  order {:>6.3}", r.field, r.n_coarse, r.n_fine, r.sup_diff, r.order);
    }
    Ok(Exit::Success)
}
