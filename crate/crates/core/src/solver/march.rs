//! Explicit predictor-corrector marching along characteristics.
//!
//! The gauge term enters through the unimodular factor
//! `exp(i h Ā)` with `Ā` the trapezoid average of the gauge field along the
//! characteristic segment, so with `m = 0` each spinor is only re-phased and
//! shifted. The mass coupling and the gauge sources use a Heun step.

use num_complex::Complex64;

use super::state::{Level, State, Trajectory};
use crate::error::Result;
use crate::lattice::{ComplexField, Field, Grid, RealField};
use crate::physics::ModelParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
fn at<T: Copy + Default>(v: &[T], j: isize) -> T {
    if j >= 0 && (j as usize) < v.len() {
        v[j as usize]
    } else {
        T::default()
    }
}

/// Per-cell pieces of one step, kept so the decomposition can reuse them.
pub(crate) struct StepParts {
    pub next: Level,
    /// Phase increments of the right- and left-moving spinors.
    pub theta_plus: Vec<f64>,
    pub theta_minus: Vec<f64>,
    /// Mass contributions: `psi_±(next) = e^{i θ_±} psi_±(upstream) + mass_±`.
    pub mass_plus: Vec<Complex64>,
    pub mass_minus: Vec<Complex64>,
}

pub(crate) fn march_step(cur: &Level, params: &ModelParams, h: f64) -> StepParts {
    let n = cur.pp.len();
    let m = params.m;
    let alpha = params.alpha;
    let half = 0.5 * h;
    let dens: Vec<f64> = cur.pp.iter().zip(&cur.pm).map(|(&a, &b)| alpha.density(a, b)).collect();

    // Predictor.
    let mut pred_pp = vec![Complex64::default(); n];
    let mut pred_pm = vec![Complex64::default(); n];
    for j in 0..n {
        let (l, r) = (j as isize - 1, j as isize + 1);
        pred_pp[j] = Complex64::from_polar(1.0, h * at(&cur.am, l))
            * (at(&cur.pp, l) - I * m * h * at(&cur.pm, l));
        pred_pm[j] = Complex64::from_polar(1.0, h * at(&cur.ap, r))
            * (at(&cur.pm, r) - I * m * h * at(&cur.pp, r));
    }

    // Corrector.
    let mut next = Level::zeros(n);
    let mut theta_plus = vec![0.0; n];
    let mut theta_minus = vec![0.0; n];
    let mut mass_plus = vec![Complex64::default(); n];
    let mut mass_minus = vec![Complex64::default(); n];
    for j in 0..n {
        let (l, r) = (j as isize - 1, j as isize + 1);
        let p_star = alpha.density(pred_pp[j], pred_pm[j]);
        next.ap[j] = at(&cur.ap, l) - half * (at(&dens, l) + p_star);
        next.am[j] = at(&cur.am, r) + half * (at(&dens, r) + p_star);
    }
    for j in 0..n {
        let (l, r) = (j as isize - 1, j as isize + 1);
        let tp = half * (at(&cur.am, l) + next.am[j]);
        let tm = half * (at(&cur.ap, r) + next.ap[j]);
        let ep = Complex64::from_polar(1.0, tp);
        let em = Complex64::from_polar(1.0, tm);
        let mp = -I * m * half * (ep * at(&cur.pm, l) + pred_pm[j]);
        let mm = -I * m * half * (em * at(&cur.pp, r) + pred_pp[j]);
        next.pp[j] = ep * at(&cur.pp, l) + mp;
        next.pm[j] = em * at(&cur.pm, r) + mm;
        theta_plus[j] = tp;
        theta_minus[j] = tm;
        mass_plus[j] = mp;
        mass_minus[j] = mm;
    }
    StepParts {
        next,
        theta_plus,
        theta_minus,
        mass_plus,
        mass_minus,
    }
}

/// Marches `steps` steps from `initial`.
pub fn march(initial: &State, steps: usize) -> Result<Trajectory> {
    initial.check_contained(steps)?;
    Ok(march_unchecked(initial, steps))
}

pub(crate) fn march_unchecked(initial: &State, steps: usize) -> Trajectory {
    let grid = initial.grid();
    let h = grid.dt();
    let params = initial.params;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    let mut cur = initial.to_level();
    for k in 1..=steps {
        let next = march_step(&cur, &params, h).next;
        states.push(State::from_level(
            next.clone(),
            grid,
            initial.t + k as f64 * h,
            initial.step + k,
            params,
        ));
        cur = next;
    }
    Trajectory::new(states, Vec::new())
}

/// Marching trajectory split as `psi_± = psi_L± + psi_N±`, where `psi_L`
/// carries the data re-phased by the gauge field and `psi_N` starts at zero
/// and collects the mass coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedTrajectory {
    grid: Grid,
    params: ModelParams,
    /// Time of each level.
    pub times: Vec<f64>,
    pub psi_l_plus: Vec<ComplexField>,
    pub psi_l_minus: Vec<ComplexField>,
    pub psi_n_plus: Vec<ComplexField>,
    pub psi_n_minus: Vec<ComplexField>,
    pub a_plus: Vec<RealField>,
    pub a_minus: Vec<RealField>,
}

impl DecomposedTrajectory {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Initial spinor data `(psi_+0, psi_-0)`.
    pub fn initial_spinors(&self) -> (&ComplexField, &ComplexField) {
        (&self.psi_l_plus[0], &self.psi_l_minus[0])
    }

    /// `psi_L± + psi_N±` at level `k`.
    pub fn total(&self, k: usize) -> (ComplexField, ComplexField) {
        let sum = |a: &ComplexField, b: &ComplexField| {
            Field::from_vec_unchecked(
                self.grid,
                a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect(),
            )
        };
        (
            sum(&self.psi_l_plus[k], &self.psi_n_plus[k]),
            sum(&self.psi_l_minus[k], &self.psi_n_minus[k]),
        )
    }
}

/// Solves up to `t_final` with the marching backend, tracking the
/// decomposition alongside.
pub fn solve_decomposed(initial: &State, t_final: f64) -> Result<DecomposedTrajectory> {
    let grid = initial.grid();
    let steps = grid.steps_for(t_final)?;
    initial.check_contained(steps)?;
    let h = grid.dt();
    let n = grid.n_cells();
    let params = initial.params;
    let p0 = initial.psi_plus.values().to_vec();
    let m0 = initial.psi_minus.values().to_vec();

    let mut out = DecomposedTrajectory {
        grid,
        params,
        times: vec![initial.t],
        psi_l_plus: vec![initial.psi_plus.clone()],
        psi_l_minus: vec![initial.psi_minus.clone()],
        psi_n_plus: vec![Field::zeros(grid)],
        psi_n_minus: vec![Field::zeros(grid)],
        a_plus: vec![initial.a_plus.clone()],
        a_minus: vec![initial.a_minus.clone()],
    };
    let mut cur = initial.to_level();
    // Accumulated phases along each characteristic.
    let mut phi_plus = vec![0.0; n];
    let mut phi_minus = vec![0.0; n];
    let mut n_plus = vec![Complex64::default(); n];
    let mut n_minus = vec![Complex64::default(); n];
    for k in 1..=steps {
        let parts = march_step(&cur, &params, h);
        let mut new_phi_plus = vec![0.0; n];
        let mut new_phi_minus = vec![0.0; n];
        let mut new_n_plus = vec![Complex64::default(); n];
        let mut new_n_minus = vec![Complex64::default(); n];
        let mut l_plus = vec![Complex64::default(); n];
        let mut l_minus = vec![Complex64::default(); n];
        for j in 0..n {
            let (l, r) = (j as isize - 1, j as isize + 1);
            new_phi_plus[j] = at(&phi_plus, l) + parts.theta_plus[j];
            new_phi_minus[j] = at(&phi_minus, r) + parts.theta_minus[j];
            let ep = Complex64::from_polar(1.0, parts.theta_plus[j]);
            let em = Complex64::from_polar(1.0, parts.theta_minus[j]);
            new_n_plus[j] = ep * at(&n_plus, l) + parts.mass_plus[j];
            new_n_minus[j] = em * at(&n_minus, r) + parts.mass_minus[j];
            let src_plus = j as isize - k as isize;
            let src_minus = j as isize + k as isize;
            l_plus[j] = at(&p0, src_plus) * Complex64::from_polar(1.0, new_phi_plus[j]);
            l_minus[j] = at(&m0, src_minus) * Complex64::from_polar(1.0, new_phi_minus[j]);
        }
        phi_plus = new_phi_plus;
        phi_minus = new_phi_minus;
        n_plus = new_n_plus;
        n_minus = new_n_minus;
        let next = parts.next;
        out.times.push(initial.t + k as f64 * h);
        out.psi_l_plus.push(Field::from_vec_unchecked(grid, l_plus));
        out.psi_l_minus.push(Field::from_vec_unchecked(grid, l_minus));
        out.psi_n_plus.push(Field::from_vec_unchecked(grid, n_plus.clone()));
        out.psi_n_minus.push(Field::from_vec_unchecked(grid, n_minus.clone()));
        out.a_plus.push(Field::from_vec_unchecked(grid, next.ap.clone()));
        out.a_minus.push(Field::from_vec_unchecked(grid, next.am.clone()));
        cur = next;
    }
    Ok(out)
}
