//! Successive approximation on one time slab.
//!
//! Null couplings start from the zero iterate and feed every source from the
//! previous iterate. The identity coupling starts from the data held constant
//! in time and solves the spinor equations, which are linear in the new
//! iterate once the gauge field is frozen, exactly at each lattice point.
//! Both schemes share the implicit characteristic trapezoid as their fixed
//! point.

use num_complex::Complex64;

use super::state::{Level, SlabRecord, State, Trajectory};
use super::SolverConfig;
use crate::error::{CsdError, IterateDiff, Result};
use crate::lattice::{lp_norm_iter, spacetime_lp, Grid};
use crate::physics::CouplingKind;

/// Slabs whose measured contraction factor reaches this value are rejected
/// by the adaptive slab policy.
pub const CONTRACTION_TARGET: f64 = 0.5;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Iterate over a slab: one [`Level`] per time level `0..=steps`.
type Iterate = Vec<Level>;

#[inline]
fn at<T: Copy + Default>(v: &[T], j: isize) -> T {
    if j >= 0 && (j as usize) < v.len() {
        v[j as usize]
    } else {
        T::default()
    }
}

/// Sources of the diagonal system evaluated on one level.
fn sources(level: &Level, alpha: CouplingKind, m: f64) -> Level {
    let n = level.pp.len();
    let mut out = Level::zeros(n);
    for j in 0..n {
        let (pp, pm) = (level.pp[j], level.pm[j]);
        out.pp[j] = I * level.am[j] * pp - I * m * pm;
        out.pm[j] = I * level.ap[j] * pm - I * m * pp;
        let p = alpha.density(pp, pm);
        out.ap[j] = -p;
        out.am[j] = p;
    }
    out
}

/// Null-coupling update: every field is transported with sources taken from
/// `prev`.
fn null_update(data: &Level, prev: &Iterate, alpha: CouplingKind, m: f64, h: f64) -> Iterate {
    let n = data.pp.len();
    let half = 0.5 * h;
    let src: Vec<Level> = prev.iter().map(|l| sources(l, alpha, m)).collect();
    let mut out = Vec::with_capacity(prev.len());
    out.push(data.clone());
    for k in 0..prev.len() - 1 {
        let cur = &out[k];
        let (f0, f1) = (&src[k], &src[k + 1]);
        let mut next = Level::zeros(n);
        for j in 0..n {
            let (l, r) = (j as isize - 1, j as isize + 1);
            next.pp[j] = at(&cur.pp, l) + (at(&f0.pp, l) + f1.pp[j]) * half;
            next.ap[j] = at(&cur.ap, l) + (at(&f0.ap, l) + f1.ap[j]) * half;
            next.pm[j] = at(&cur.pm, r) + (at(&f0.pm, r) + f1.pm[j]) * half;
            next.am[j] = at(&cur.am, r) + (at(&f0.am, r) + f1.am[j]) * half;
        }
        out.push(next);
    }
    out
}

/// Identity-coupling update: gauge fields from the density of `prev`, then
/// the spinors solved level by level with the gauge field of `prev` frozen.
fn linear_update(data: &Level, prev: &Iterate, alpha: CouplingKind, m: f64, h: f64) -> Iterate {
    let n = data.pp.len();
    let a = 0.5 * h;
    let dens: Vec<Vec<f64>> = prev
        .iter()
        .map(|l| l.pp.iter().zip(&l.pm).map(|(&x, &y)| alpha.density(x, y)).collect())
        .collect();
    let mut out = Vec::with_capacity(prev.len());
    out.push(data.clone());
    let iam = I * a * m;
    for k in 0..prev.len() - 1 {
        let cur = &out[k];
        let (g0, g1) = (&dens[k], &dens[k + 1]);
        let (frozen0, frozen1) = (&prev[k], &prev[k + 1]);
        let mut next = Level::zeros(n);
        for j in 0..n {
            let (l, r) = (j as isize - 1, j as isize + 1);
            next.ap[j] = at(&cur.ap, l) - (at(g0, l) + g1[j]) * a;
            next.am[j] = at(&cur.am, r) + (at(g0, r) + g1[j]) * a;

            let (up_pp, up_pm_l) = (at(&cur.pp, l), at(&cur.pm, l));
            let f_plus = I * at(&frozen0.am, l) * up_pp - I * m * up_pm_l;
            let b_plus = up_pp + f_plus * a;
            let (up_pm, up_pp_r) = (at(&cur.pm, r), at(&cur.pp, r));
            let f_minus = I * at(&frozen0.ap, r) * up_pm - I * m * up_pp_r;
            let b_minus = up_pm + f_minus * a;

            let d_plus = 1.0 - I * a * frozen1.am[j];
            let d_minus = 1.0 - I * a * frozen1.ap[j];
            let det = d_plus * d_minus - iam * iam;
            next.pp[j] = (b_plus * d_minus - iam * b_minus) / det;
            next.pm[j] = (d_plus * b_minus - iam * b_plus) / det;
        }
        out.push(next);
    }
    out
}

fn sup_diff(a: &Iterate, b: &Iterate) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max(x.sup_diff(y)))
}

/// Weighted space-time distance between two iterates: sup-in-time `L^p`
/// differences of all fields plus three times the space-time `L^p`
/// differences of the products `psi_± A_∓` and `psi_+ psi_-`, summed over ±.
pub(crate) fn iterate_metric(grid: &Grid, a: &[Level], b: &[Level], p: f64) -> f64 {
    let steps = a.len() - 1;
    let dx = grid.dx();
    let sup_t = |f: &dyn Fn(&Level, &Level, usize) -> f64| {
        (0..=steps)
            .map(|k| lp_norm_iter((0..grid.n_cells()).map(|j| f(&a[k], &b[k], j)), dx, p))
            .fold(0.0, f64::max)
    };
    let st = |f: &dyn Fn(&Level, &Level, usize) -> f64| {
        spacetime_lp(grid, steps, p, |k, j| f(&a[k], &b[k], j))
    };
    let psi_p = sup_t(&|x, y, j| (x.pp[j] - y.pp[j]).norm());
    let psi_m = sup_t(&|x, y, j| (x.pm[j] - y.pm[j]).norm());
    let a_p = sup_t(&|x, y, j| (x.ap[j] - y.ap[j]).abs());
    let a_m = sup_t(&|x, y, j| (x.am[j] - y.am[j]).abs());
    let prod_p = st(&|x, y, j| (x.pp[j] * x.am[j] - y.pp[j] * y.am[j]).norm());
    let prod_m = st(&|x, y, j| (x.pm[j] * x.ap[j] - y.pm[j] * y.ap[j]).norm());
    let pair = st(&|x, y, j| (x.pp[j] * x.pm[j] - y.pp[j] * y.pm[j]).norm());
    psi_p + psi_m + a_p + a_m + 3.0 * (prod_p + prod_m) + 6.0 * pair
}

/// Largest ratio `d_{n+1} / d_n` over entries with `n ≥ 1` whose
/// denominator is still above the stopping tolerance.
pub(crate) fn contraction_factor(history: &[IterateDiff], tol: f64) -> f64 {
    history
        .windows(2)
        .filter(|w| w[0].n >= 1 && w[0].sup >= tol)
        .map(|w| w[1].sup / w[0].sup)
        .fold(0.0, f64::max)
}

pub(crate) struct SlabOutcome {
    pub trajectory: Trajectory,
    pub record: SlabRecord,
}

/// Runs the iteration over `steps` steps from `initial`. Non-convergence
/// within the iteration cap is an error carrying the difference history.
pub(crate) fn run_slab(initial: &State, steps: usize, cfg: &SolverConfig) -> Result<SlabOutcome> {
    let grid = initial.grid();
    let params = initial.params;
    let h = grid.dt();
    let data = initial.to_level();
    let n = grid.n_cells();
    let null = params.alpha.is_null();

    let (mut prev, first_n) = if null {
        (vec![Level::zeros(n); steps + 1], 0)
    } else {
        (vec![data.clone(); steps + 1], 1)
    };
    let mut history = Vec::new();
    for it in 0..cfg.max_picard_iters {
        let next = if null {
            null_update(&data, &prev, params.alpha, params.m, h)
        } else {
            linear_update(&data, &prev, params.alpha, params.m, h)
        };
        let sup = sup_diff(&next, &prev);
        let metric = iterate_metric(&grid, &next, &prev, params.p);
        history.push(IterateDiff {
            n: first_n + it,
            sup,
            metric,
        });
        prev = next;
        if !sup.is_finite() {
            break;
        }
        if sup < cfg.picard_tol {
            let contraction = contraction_factor(&history, cfg.picard_tol);
            let states = prev
                .into_iter()
                .enumerate()
                .map(|(k, l)| {
                    State::from_level(l, grid, initial.t + k as f64 * h, initial.step + k, params)
                })
                .collect();
            return Ok(SlabOutcome {
                trajectory: Trajectory::new(states, Vec::new()),
                record: SlabRecord {
                    start_step: initial.step,
                    steps,
                    iterations: it + 1,
                    contraction,
                    rejected: Vec::new(),
                    history,
                },
            });
        }
    }
    Err(CsdError::ConvergenceFailure {
        iterations: history.len(),
        last: history.last().map_or(f64::NAN, |d| d.sup),
        history,
    })
}

/// One Picard slab of length `cfg.slab_T` starting at `initial`.
///
/// Returns the converged slab and its iterate-difference history.
pub fn picard_slab(initial: &State, cfg: &SolverConfig) -> Result<(Trajectory, Vec<IterateDiff>)> {
    cfg.validate()?;
    let grid = initial.grid();
    let steps = grid.steps_for(cfg.slab_t)?;
    initial.check_contained(steps)?;
    let SlabOutcome {
        mut trajectory,
        record,
    } = run_slab(initial, steps, cfg)?;
    let history = record.history.clone();
    trajectory.slabs_mut().push(record);
    Ok((trajectory, history))
}
