//! Uniform characteristic-aligned grid, sampled fields, norms and masks.
//!
//! Cells are indexed `0..n_cells` with centers `x_j = x_min + (j + 1/2) dx`.
//! The time step is fixed to `dx`, so a `±1` characteristic moves exactly
//! one cell per step. Outside the grid every field is taken to be zero.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{CsdError, Result};

/// Fuzz (in units of `dx`) used when classifying cell centers against
/// mask boundaries that may fall on lattice points.
const MASK_SLACK_CELLS: f64 = 1e-9;

/// Relative size below which a sample counts as outside the support when
/// checking that a solution cone fits inside the grid.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    x_min: f64,
    n_cells: usize,
    dx: f64,
}

/// Builds a uniform grid on `[x_min, x_max]` with `n_cells` cells.
pub fn make_grid(x_min: f64, x_max: f64, n_cells: usize) -> Result<Grid> {
    if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
        return Err(CsdError::invalid(format!(
            "grid extent must be positive, got [{x_min}, {x_max}]"
        )));
    }
    if n_cells < 2 {
        return Err(CsdError::invalid(format!(
            "grid needs at least 2 cells, got {n_cells}"
        )));
    }
    Ok(Grid {
        x_min,
        n_cells,
        dx: (x_max - x_min) / n_cells as f64,
    })
}

impl Grid {
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.n_cells as f64 * self.dx
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Unit CFL: the time step is the cell width.
    pub fn dt(&self) -> f64 {
        self.dx
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |j| self.center(j))
    }

    /// Number of whole steps in `t`, or an error when `t` is not a multiple
    /// of `dt` (to 1e-9 relative).
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CsdError::invalid(format!("time must be >= 0, got {t}")));
        }
        let k = (t / self.dx).round();
        if (k * self.dx - t).abs() > 1e-9 * self.dx.max(t) {
            return Err(CsdError::invalid(format!(
                "time {t} is not a multiple of dt = {}",
                self.dx
            )));
        }
        Ok(k as usize)
    }

    /// Same grid refined by an integer factor (same extent).
    pub fn refined(&self, factor: usize) -> Result<Grid> {
        make_grid(self.x_min, self.x_max(), self.n_cells * factor)
    }
}

/// A sample type stored in a [`Field`]: real or complex double precision.
pub trait Sample:
    Copy
    + Default
    + PartialEq
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    fn modulus(self) -> f64;
    fn is_finite_sample(self) -> bool;
}

impl Sample for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite_sample(self) -> bool {
        self.is_finite()
    }
}

impl Sample for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite_sample(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Samples of one field on a grid at a single time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Sample> {
    grid: Grid,
    pub(crate) values: Vec<T>,
}

pub type ComplexField = Field<Complex64>;
pub type RealField = Field<f64>;

impl<T: Sample> Field<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(CsdError::invalid(format!(
                "field has {} samples, grid has {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite_sample()) {
            return Err(CsdError::invalid(format!("non-finite sample at cell {j}")));
        }
        Ok(Field { grid, values })
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Field { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            values: vec![T::default(); grid.n_cells()],
        }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> T) -> Result<Self> {
        let values = grid.centers().map(&mut f).collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Field::from_vec_unchecked(self.grid, self.values.iter().map(|&v| v * c).collect())
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::default())
    }

    pub fn same_grid<U: Sample>(&self, other: &Field<U>) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(CsdError::GridMismatch)
        }
    }

    /// Largest modulus among the `cells` outermost cells on either side.
    pub fn edge_band_max(&self, cells: usize) -> f64 {
        let n = self.values.len();
        let cells = cells.min(n);
        self.values[..cells]
            .iter()
            .chain(&self.values[n - cells..])
            .fold(0.0, |m, v| m.max(v.modulus()))
    }

    /// Fails with [`CsdError::DomainOverflow`] when the field could reach the
    /// boundary within `steps` unit-speed steps.
    pub fn check_contained(&self, steps: usize, name: &'static str) -> Result<()> {
        let band = steps + 1;
        let edge = self.edge_band_max(band);
        if edge > SUPPORT_TOL * self.sup() {
            return Err(CsdError::DomainOverflow {
                field: name,
                cells: band,
                edge,
            });
        }
        Ok(())
    }
}

/// Midpoint-rule `L^p` norm; `p = f64::INFINITY` gives the max modulus.
pub fn lp_norm<T: Sample>(f: &Field<T>, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_norm_slice(f.values(), f.grid.dx, p))
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(CsdError::invalid(format!("exponent p must be >= 1, got {p}")));
    }
    Ok(())
}

pub(crate) fn lp_norm_slice<T: Sample>(values: &[T], dx: f64, p: f64) -> f64 {
    lp_norm_iter(values.iter().map(|v| v.modulus()), dx, p)
}

pub(crate) fn lp_norm_iter(moduli: impl Iterator<Item = f64>, dx: f64, p: f64) -> f64 {
    if p.is_infinite() {
        moduli.fold(0.0, f64::max)
    } else if p == 1.0 {
        moduli.sum::<f64>() * dx
    } else if p == 2.0 {
        (moduli.map(|a| a * a).sum::<f64>() * dx).sqrt()
    } else {
        (moduli.map(|a| a.powf(p)).sum::<f64>() * dx).powf(1.0 / p)
    }
}

/// Midpoint-rule space-time norm over time levels `0..=steps`: cells in
/// space, trapezoid weights on the time nodes. `modulus(k, j)` gives the
/// sample at level `k`, cell `j`.
pub fn spacetime_lp(
    grid: &Grid,
    steps: usize,
    p: f64,
    mut modulus: impl FnMut(usize, usize) -> f64,
) -> f64 {
    let n = grid.n_cells();
    if p.is_infinite() {
        let mut m = 0.0f64;
        for k in 0..=steps {
            for j in 0..n {
                m = m.max(modulus(k, j));
            }
        }
        return m;
    }
    let h = grid.dx();
    let mut total = 0.0;
    for k in 0..=steps {
        let w = if steps > 0 && (k == 0 || k == steps) { 0.5 } else { 1.0 };
        let w = if steps == 0 { 0.0 } else { w };
        let mut row = 0.0;
        for j in 0..n {
            let a = modulus(k, j);
            row += if p == 1.0 { a } else { a.powf(p) };
        }
        total += w * row;
    }
    (total * h * h).powf(1.0 / p)
}

/// Trapezoid-rule time integral of per-level values over `0..=steps`.
pub fn time_integral(h: f64, values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let len = values.len();
    if len < 2 {
        return 0.0;
    }
    values
        .enumerate()
        .map(|(k, v)| if k == 0 || k == len - 1 { 0.5 * v } else { v })
        .sum::<f64>()
        * h
}

/// Exact lattice shift: `out[j] = f[j - k]` where defined, else `fill`.
pub fn shift<T: Sample>(f: &Field<T>, k: isize, fill: T) -> Result<Field<T>> {
    let n = f.values.len();
    if k.unsigned_abs() > n {
        return Err(CsdError::invalid(format!(
            "shift of {k} cells exceeds grid of {n} cells"
        )));
    }
    Ok(Field::from_vec_unchecked(f.grid, shift_slice(&f.values, k, fill)))
}

pub(crate) fn shift_slice<T: Copy>(values: &[T], k: isize, fill: T) -> Vec<T> {
    let n = values.len() as isize;
    (0..n)
        .map(|j| {
            let src = j - k;
            if (0..n).contains(&src) {
                values[src as usize]
            } else {
                fill
            }
        })
        .collect()
}

/// Largest midpoint-rule integral of `|f|` over `{y : |x - y| < r}` taken
/// over window centers `x` at every cell center. Cells cut by the window
/// edge contribute their overlapping fraction.
pub fn windowed_mass<T: Sample>(f: &Field<T>, r: f64) -> Result<f64> {
    let dx = f.grid.dx;
    if !(r >= dx * (1.0 - 1e-12)) {
        return Err(CsdError::invalid(format!(
            "window radius {r} is below the cell width {dx}"
        )));
    }
    let moduli: Vec<f64> = f.values.iter().map(|v| v.modulus()).collect();
    Ok(windowed_mass_moduli(&moduli, dx, r))
}

pub(crate) fn windowed_mass_moduli(moduli: &[f64], dx: f64, r: f64) -> f64 {
    let n = moduli.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &m in moduli {
        acc += m;
        prefix.push(acc);
    }
    // The window [x_j - r, x_j + r] covers cells j-w..=j+w fully and the two
    // cells at offset w+1 by the fraction `frac`.
    let half = r / dx;
    let (w, frac) = {
        let t = half - 0.5;
        let w = t.floor();
        (w as isize, t - w)
    };
    let mut best = 0.0f64;
    for j in 0..n as isize {
        let lo = (j - w).max(0) as usize;
        let hi = ((j + w + 1).min(n as isize)).max(0) as usize;
        let mut mass = if hi > lo { prefix[hi] - prefix[lo] } else { 0.0 };
        if frac > 0.0 {
            for e in [j - w - 1, j + w + 1] {
                if (0..n as isize).contains(&e) {
                    mass += frac * moduli[e as usize];
                }
            }
        }
        best = best.max(mass);
    }
    best * dx
}

/// Backward light cone over `I_R(x0) = [x0 - R, x0 + R]`: at time `t` the
/// active set is `{x : |x - x0| <= R - t}`, empty once `t > R`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TriangleMask {
    pub x0: f64,
    pub radius: f64,
}

impl TriangleMask {
    pub fn new(x0: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && x0.is_finite() && radius.is_finite()) {
            return Err(CsdError::invalid(format!(
                "mask radius must be positive, got {radius}"
            )));
        }
        Ok(TriangleMask { x0, radius })
    }

    /// Closed membership `|x - x0| <= R - t`, fuzzed by a tiny fraction of
    /// `dx` so lattice points on the edge classify consistently.
    pub fn contains(&self, grid: &Grid, x: f64, t: f64) -> bool {
        let reach = self.radius - t;
        reach >= -MASK_SLACK_CELLS * grid.dx()
            && (x - self.x0).abs() <= reach + MASK_SLACK_CELLS * grid.dx()
    }

    /// Strict interior `|x - x0| < R - t`.
    pub fn interior_contains(&self, grid: &Grid, x: f64, t: f64) -> bool {
        (x - self.x0).abs() < self.radius - t - MASK_SLACK_CELLS * grid.dx()
    }

    /// Indicator weights of the base interval `I_R(x0)` on the grid.
    pub fn base_indicator(&self, grid: &Grid) -> Vec<bool> {
        grid.centers().map(|x| self.contains(grid, x, 0.0)).collect()
    }

    pub fn indicator(&self, grid: &Grid, t: f64) -> Vec<bool> {
        grid.centers().map(|x| self.contains(grid, x, t)).collect()
    }
}

/// Zeroes `f` outside the cone slice at time `t`.
pub fn apply_mask<T: Sample>(f: &Field<T>, mask: &TriangleMask, t: f64) -> Field<T> {
    let grid = f.grid;
    let values = f
        .values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            if mask.contains(&grid, grid.center(j), t) {
                v
            } else {
                T::default()
            }
        })
        .collect();
    Field::from_vec_unchecked(grid, values)
}
