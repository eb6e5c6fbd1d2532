use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CsdError, IterateDiff, Result};
use crate::lattice::{lp_norm_slice, ComplexField, Field, Grid, RealField};
use crate::physics::ModelParams;

/// The four diagonal unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    /// Step index of `t` on the grid's time lattice.
    pub step: usize,
    pub psi_plus: ComplexField,
    pub psi_minus: ComplexField,
    pub a_plus: RealField,
    pub a_minus: RealField,
    pub params: ModelParams,
}

impl State {
    pub fn new(
        psi_plus: ComplexField,
        psi_minus: ComplexField,
        a_plus: RealField,
        a_minus: RealField,
        params: ModelParams,
    ) -> Result<Self> {
        psi_plus.same_grid(&psi_minus)?;
        psi_plus.same_grid(&a_plus)?;
        psi_plus.same_grid(&a_minus)?;
        Ok(State {
            t: 0.0,
            step: 0,
            psi_plus,
            psi_minus,
            a_plus,
            a_minus,
            params,
        })
    }

    pub fn zeros(grid: Grid, params: ModelParams) -> Self {
        State {
            t: 0.0,
            step: 0,
            psi_plus: Field::zeros(grid),
            psi_minus: Field::zeros(grid),
            a_plus: Field::zeros(grid),
            a_minus: Field::zeros(grid),
            params,
        }
    }

    pub fn grid(&self) -> Grid {
        *self.psi_plus.grid()
    }

    /// `‖psi_+‖_2^2 + ‖psi_-‖_2^2`.
    pub fn charge(&self) -> f64 {
        let dx = self.grid().dx();
        self.psi_plus
            .values()
            .iter()
            .chain(self.psi_minus.values())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * dx
    }

    /// `[‖psi_+‖_p, ‖psi_-‖_p, ‖A_+‖_p, ‖A_-‖_p]`.
    pub fn norms(&self, p: f64) -> [f64; 4] {
        let dx = self.grid().dx();
        [
            lp_norm_slice(self.psi_plus.values(), dx, p),
            lp_norm_slice(self.psi_minus.values(), dx, p),
            lp_norm_slice(self.a_plus.values(), dx, p),
            lp_norm_slice(self.a_minus.values(), dx, p),
        ]
    }

    /// Smallness constant `M = 2 (sum of the four data norms)`.
    pub fn smallness(&self, p: f64) -> f64 {
        2.0 * self.norms(p).iter().sum::<f64>()
    }

    /// Fails when any field could reach the boundary within `steps` steps.
    pub fn check_contained(&self, steps: usize) -> Result<()> {
        self.psi_plus.check_contained(steps, "psi_plus")?;
        self.psi_minus.check_contained(steps, "psi_minus")?;
        self.a_plus.check_contained(steps, "a_plus")?;
        self.a_minus.check_contained(steps, "a_minus")
    }

    /// Largest pointwise difference over all four fields.
    pub fn sup_diff(&self, other: &State) -> Result<f64> {
        if self.grid() != other.grid() {
            return Err(CsdError::GridMismatch);
        }
        let c = |a: &ComplexField, b: &ComplexField| {
            a.values()
                .iter()
                .zip(b.values())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
        };
        let r = |a: &RealField, b: &RealField| {
            a.values()
                .iter()
                .zip(b.values())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        Ok(c(&self.psi_plus, &other.psi_plus)
            .max(c(&self.psi_minus, &other.psi_minus))
            .max(r(&self.a_plus, &other.a_plus))
            .max(r(&self.a_minus, &other.a_minus)))
    }

    /// The same fields with every field multiplied by `c`.
    pub fn scaled(&self, c: f64) -> State {
        State {
            psi_plus: self.psi_plus.scaled(c),
            psi_minus: self.psi_minus.scaled(c),
            a_plus: self.a_plus.scaled(c),
            a_minus: self.a_minus.scaled(c),
            ..self.clone()
        }
    }

    pub(crate) fn to_level(&self) -> Level {
        Level {
            pp: self.psi_plus.values().to_vec(),
            pm: self.psi_minus.values().to_vec(),
            ap: self.a_plus.values().to_vec(),
            am: self.a_minus.values().to_vec(),
        }
    }

    pub(crate) fn from_level(level: Level, grid: Grid, t: f64, step: usize, params: ModelParams) -> State {
        State {
            t,
            step,
            psi_plus: Field::from_vec_unchecked(grid, level.pp),
            psi_minus: Field::from_vec_unchecked(grid, level.pm),
            a_plus: Field::from_vec_unchecked(grid, level.ap),
            a_minus: Field::from_vec_unchecked(grid, level.am),
            params,
        }
    }
}

/// Raw arrays of one time level.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Level {
    pub pp: Vec<Complex64>,
    pub pm: Vec<Complex64>,
    pub ap: Vec<f64>,
    pub am: Vec<f64>,
}

impl Level {
    pub fn zeros(n: usize) -> Self {
        Level {
            pp: vec![Complex64::new(0.0, 0.0); n],
            pm: vec![Complex64::new(0.0, 0.0); n],
            ap: vec![0.0; n],
            am: vec![0.0; n],
        }
    }

    pub fn sup_diff(&self, other: &Level) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.pp.len() {
            m = m
                .max((self.pp[j] - other.pp[j]).norm())
                .max((self.pm[j] - other.pm[j]).norm())
                .max((self.ap[j] - other.ap[j]).abs())
                .max((self.am[j] - other.am[j]).abs());
        }
        m
    }
}

/// Bookkeeping for one Picard slab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabRecord {
    pub start_step: usize,
    pub steps: usize,
    pub iterations: usize,
    /// Largest ratio of successive iterate differences (0 when fewer than
    /// two ratios were available).
    pub contraction: f64,
    /// Slab lengths (in steps) that were tried and rejected before this one.
    pub rejected: Vec<usize>,
    pub history: Vec<IterateDiff>,
}

/// States at `t = t0, t0 + dt, ...` with per-slab iteration records.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<State>,
    slabs: Vec<SlabRecord>,
    charge: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn new(states: Vec<State>, slabs: Vec<SlabRecord>) -> Self {
        debug_assert!(!states.is_empty());
        let charge = states.iter().map(State::charge).collect();
        Trajectory {
            states,
            slabs,
            charge,
        }
    }

    pub fn grid(&self) -> Grid {
        self.states[0].grid()
    }

    pub fn params(&self) -> ModelParams {
        self.states[0].params
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn initial(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory is never empty")
    }

    /// Number of steps covered.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn slabs(&self) -> &[SlabRecord] {
        &self.slabs
    }

    pub(crate) fn slabs_mut(&mut self) -> &mut Vec<SlabRecord> {
        &mut self.slabs
    }

    /// Cached `‖psi_+‖_2^2 + ‖psi_-‖_2^2` per level.
    pub fn charge(&self) -> &[f64] {
        &self.charge
    }

    /// Appends `other`, whose first state must equal this one's last state.
    pub(crate) fn extend(&mut self, other: Trajectory) {
        let mut states = other.states.into_iter();
        states.next();
        for s in states {
            self.charge.push(s.charge());
            self.states.push(s);
        }
        self.slabs.extend(other.slabs);
    }
}
