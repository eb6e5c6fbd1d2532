//! Scalar transport `(∂t ± ∂x) u = F` along lattice characteristics, and
//! the space-time bilinear estimate for pairs of transported fields.

use serde_json::json;

use crate::diagnostics::DiagnosticReport;
use crate::error::{CsdError, Result};
use crate::lattice::{
    check_exponent, lp_norm, lp_norm_iter, spacetime_lp, time_integral, Field, Grid, Sample,
    TriangleMask,
};

/// Relative slack allowed on continuum inequalities measured on the grid.
pub const ESTIMATE_REL_TOL: f64 = 1e-3;

/// Which characteristic family a transport equation follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    /// `∂t + ∂x`: moves one cell to the right per step.
    Right,
    /// `∂t - ∂x`: moves one cell to the left per step.
    Left,
}

impl Direction {
    /// Cell offset per step.
    #[inline]
    pub fn sign(self) -> isize {
        match self {
            Direction::Right => 1,
            Direction::Left => -1,
        }
    }
}

/// Source samples `F(t_k, x_j)` on time levels `0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTrace<T: Sample> {
    grid: Grid,
    rows: Vec<Vec<T>>,
}

impl<T: Sample> SourceTrace<T> {
    pub fn zeros(grid: Grid, steps: usize) -> Self {
        SourceTrace {
            grid,
            rows: vec![vec![T::default(); grid.n_cells()]; steps + 1],
        }
    }

    /// `f(t, x)` sampled at `t_k = k dt` and cell centers.
    pub fn from_fn(grid: Grid, steps: usize, mut f: impl FnMut(f64, f64) -> T) -> Result<Self> {
        let rows = (0..=steps)
            .map(|k| {
                let t = k as f64 * grid.dt();
                grid.centers().map(|x| f(t, x)).collect::<Vec<T>>()
            })
            .collect();
        Self::from_rows(grid, rows)
    }

    pub fn from_rows(grid: Grid, rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(CsdError::invalid("source trace needs at least one level"));
        }
        for row in &rows {
            if row.len() != grid.n_cells() {
                return Err(CsdError::GridMismatch);
            }
            if !row.iter().all(|v| v.is_finite_sample()) {
                return Err(CsdError::invalid("source trace contains non-finite samples"));
            }
        }
        Ok(SourceTrace { grid, rows })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.rows[k]
    }

    /// Trapezoid-in-time integral of `‖F(s)‖_p` over the first `steps` levels.
    pub fn integrated_norm(&self, p: f64, steps: usize) -> f64 {
        let dx = self.grid.dx();
        time_integral(
            self.grid.dt(),
            self.rows[..=steps]
                .iter()
                .map(|r| lp_norm_iter(r.iter().map(|v| v.modulus()), dx, p)),
        )
    }
}

/// One characteristic-trapezoid step:
/// `next[j] = prev[j-s] + h/2 (f_prev[j-s] + f_next[j])`, zero upstream of
/// the grid.
pub(crate) fn trapezoid_step<T: Sample>(
    prev: &[T],
    f_prev: Option<&[T]>,
    f_next: Option<&[T]>,
    dir: Direction,
    h: f64,
    next: &mut [T],
) {
    let n = prev.len();
    let half = 0.5 * h;
    for j in 0..n {
        let up = j as isize - dir.sign();
        let (u, fu) = if (0..n as isize).contains(&up) {
            let i = up as usize;
            (prev[i], f_prev.map_or(T::default(), |f| f[i]))
        } else {
            (T::default(), T::default())
        };
        let fn_ = f_next.map_or(T::default(), |f| f[j]);
        next[j] = if f_prev.is_none() && f_next.is_none() {
            u
        } else {
            u + (fu + fn_) * half
        };
    }
}

/// Solves `(∂t + sign ∂x) u = F` for `steps` steps; returns levels `0..=steps`.
///
/// With `source = None` the result is the exact lattice shift.
pub fn solve_transport<T: Sample>(
    u0: &Field<T>,
    source: Option<&SourceTrace<T>>,
    dir: Direction,
    steps: usize,
) -> Result<Vec<Field<T>>> {
    let grid = *u0.grid();
    u0.check_contained(steps, "u0")?;
    if let Some(f) = source {
        if *f.grid() != grid {
            return Err(CsdError::GridMismatch);
        }
        if f.steps() < steps {
            return Err(CsdError::invalid(format!(
                "source covers {} steps, {steps} requested",
                f.steps()
            )));
        }
        // A source sample at level k only travels the remaining steps.
        for k in 0..=steps {
            Field::from_vec_unchecked(grid, f.row(k).to_vec()).check_contained(steps - k, "F")?;
        }
    }
    let h = grid.dt();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(u0.clone());
    let mut buf = vec![T::default(); grid.n_cells()];
    for k in 0..steps {
        let prev = out[k].values();
        trapezoid_step(
            prev,
            source.map(|f| f.row(k)),
            source.map(|f| f.row(k + 1)),
            dir,
            h,
            &mut buf,
        );
        out.push(Field::from_vec_unchecked(grid, buf.clone()));
    }
    Ok(out)
}

fn bilinear_inner<T: Sample>(
    name: &str,
    u_plus0: &Field<T>,
    u_minus0: &Field<T>,
    f_plus: Option<&SourceTrace<T>>,
    f_minus: Option<&SourceTrace<T>>,
    p: f64,
    t: f64,
    mask: Option<&TriangleMask>,
) -> Result<DiagnosticReport> {
    check_exponent(p)?;
    u_plus0.same_grid(u_minus0)?;
    let grid = *u_plus0.grid();
    let steps = grid.steps_for(t)?;
    let plus = solve_transport(u_plus0, f_plus, Direction::Right, steps)?;
    let minus = solve_transport(u_minus0, f_minus, Direction::Left, steps)?;
    let h = grid.dt();

    let inside = |k: usize, j: usize| {
        mask.map_or(true, |m| m.contains(&grid, grid.center(j), k as f64 * h))
    };
    let lhs = spacetime_lp(&grid, steps, p, |k, j| {
        if inside(k, j) {
            plus[k].values()[j].modulus() * minus[k].values()[j].modulus()
        } else {
            0.0
        }
    });
    let factor = |u0: &Field<T>, f: Option<&SourceTrace<T>>| -> Result<f64> {
        let data = match mask {
            Some(m) => lp_norm(&crate::lattice::apply_mask(u0, m, 0.0), p)?,
            None => lp_norm(u0, p)?,
        };
        let forcing = match f {
            None => 0.0,
            Some(f) => time_integral(
                h,
                (0..steps + 1).map(|k| {
                    lp_norm_iter(
                        f.row(k)
                            .iter()
                            .enumerate()
                            .map(|(j, v)| if inside(k, j) { v.modulus() } else { 0.0 }),
                        grid.dx(),
                        p,
                    )
                }),
            ),
        };
        Ok(data + forcing)
    };
    let rhs = 0.5f64.powf(1.0 / p) * factor(u_plus0, f_plus)? * factor(u_minus0, f_minus)?;
    let mut report = DiagnosticReport::new(name, lhs, rhs, ESTIMATE_REL_TOL * rhs);
    report
        .with("n_cells", json!(grid.n_cells()))
        .with("p", json!(p))
        .with("T", json!(t));
    if let Some(m) = mask {
        report.with("x0", json!(m.x0)).with("R", json!(m.radius));
    }
    Ok(report)
}

/// Measures `‖u_+ u_-‖_{L^p([0,T]×R)}` against
/// `(1/2)^{1/p} Π_± (‖u_±0‖_p + ∫_0^T ‖F_±(s)‖_p ds)`, with `u_+` moving
/// right and `u_-` moving left.
pub fn bilinear_bound_check<T: Sample>(
    u_plus0: &Field<T>,
    u_minus0: &Field<T>,
    f_plus: Option<&SourceTrace<T>>,
    f_minus: Option<&SourceTrace<T>>,
    p: f64,
    t: f64,
) -> Result<DiagnosticReport> {
    bilinear_inner("bilinear", u_plus0, u_minus0, f_plus, f_minus, p, t, None)
}

/// Cone-restricted variant: the product is cut to the cone, data norms to its
/// base and source norms to the cone slice at each time.
pub fn masked_bilinear_check<T: Sample>(
    u_plus0: &Field<T>,
    u_minus0: &Field<T>,
    f_plus: Option<&SourceTrace<T>>,
    f_minus: Option<&SourceTrace<T>>,
    p: f64,
    t: f64,
    mask: &TriangleMask,
) -> Result<DiagnosticReport> {
    bilinear_inner(
        "bilinear_masked",
        u_plus0,
        u_minus0,
        f_plus,
        f_minus,
        p,
        t,
        Some(mask),
    )
}
