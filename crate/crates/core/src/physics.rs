//! Model definition: couplings, the diagonalizing change of variables and
//! initial-data generators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsdError, Result};
use crate::lattice::{ComplexField, Field, Grid, RealField};
use crate::solver::State;

/// Choice of the coupling matrix in the gauge equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CouplingKind {
    /// `alpha = gamma^0`, `P = Re(psi_+ conj(psi_-))`.
    #[serde(rename = "gamma0")]
    NullGamma0,
    /// `alpha = -i gamma^1`, `P = Im(psi_+ conj(psi_-))`.
    #[serde(rename = "gamma1")]
    NullGamma1,
    /// `alpha = I`, `P = (|psi_+|^2 + |psi_-|^2) / 2`.
    #[serde(rename = "identity")]
    Identity,
}

impl CouplingKind {
    pub const ALL: [CouplingKind; 3] = [
        CouplingKind::NullGamma0,
        CouplingKind::NullGamma1,
        CouplingKind::Identity,
    ];

    pub fn is_null(self) -> bool {
        !matches!(self, CouplingKind::Identity)
    }

    pub fn name(self) -> &'static str {
        match self {
            CouplingKind::NullGamma0 => "gamma0",
            CouplingKind::NullGamma1 => "gamma1",
            CouplingKind::Identity => "identity",
        }
    }

    /// Pointwise coupling density `P(psi_+, psi_-)`.
    #[inline]
    pub fn density(self, plus: Complex64, minus: Complex64) -> f64 {
        match self {
            CouplingKind::NullGamma0 => (plus * minus.conj()).re,
            CouplingKind::NullGamma1 => (plus * minus.conj()).im,
            CouplingKind::Identity => 0.5 * (plus.norm_sqr() + minus.norm_sqr()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: CouplingKind,
    /// Mass; zero is allowed (massless scaling regime).
    pub m: f64,
    /// Lebesgue exponent used by reports; the solver itself ignores it.
    pub p: f64,
}

impl ModelParams {
    pub fn new(alpha: CouplingKind, m: f64, p: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(CsdError::invalid(format!("mass must be >= 0, got {m}")));
        }
        crate::lattice::check_exponent(p)?;
        Ok(ModelParams { alpha, m, p })
    }
}

/// Change of variables `psi_± = psi1 ± psi2`, `A_± = A0 ∓ A1`.
pub fn diagonalize(
    psi1: &ComplexField,
    psi2: &ComplexField,
    a0: &RealField,
    a1: &RealField,
    params: ModelParams,
) -> Result<State> {
    psi1.same_grid(psi2)?;
    psi1.same_grid(a0)?;
    psi1.same_grid(a1)?;
    let grid = *psi1.grid();
    let zip_c = |f: fn(Complex64, Complex64) -> Complex64| {
        Field::from_vec_unchecked(
            grid,
            psi1.values().iter().zip(psi2.values()).map(|(&a, &b)| f(a, b)).collect(),
        )
    };
    let zip_r = |f: fn(f64, f64) -> f64| {
        Field::from_vec_unchecked(
            grid,
            a0.values().iter().zip(a1.values()).map(|(&a, &b)| f(a, b)).collect(),
        )
    };
    Ok(State {
        t: 0.0,
        step: 0,
        psi_plus: zip_c(|a, b| a + b),
        psi_minus: zip_c(|a, b| a - b),
        a_plus: zip_r(|a, b| a - b),
        a_minus: zip_r(|a, b| a + b),
        params,
    })
}

/// Inverse of [`diagonalize`]: returns `(psi1, psi2, A0, A1)`.
pub fn undiagonalize(state: &State) -> (ComplexField, ComplexField, RealField, RealField) {
    let grid = state.grid();
    let pp = state.psi_plus.values();
    let pm = state.psi_minus.values();
    let ap = state.a_plus.values();
    let am = state.a_minus.values();
    let c = |f: &dyn Fn(Complex64, Complex64) -> Complex64| {
        Field::from_vec_unchecked(grid, pp.iter().zip(pm).map(|(&a, &b)| f(a, b)).collect())
    };
    let r = |f: &dyn Fn(f64, f64) -> f64| {
        Field::from_vec_unchecked(grid, ap.iter().zip(am).map(|(&a, &b)| f(a, b)).collect())
    };
    (
        c(&|a, b| (a + b) * 0.5),
        c(&|a, b| (a - b) * 0.5),
        r(&|a, b| (a + b) * 0.5),
        r(&|a, b| (b - a) * 0.5),
    )
}

/// Pointwise coupling density field.
pub fn coupling_p(
    psi_plus: &ComplexField,
    psi_minus: &ComplexField,
    alpha: CouplingKind,
) -> Result<RealField> {
    psi_plus.same_grid(psi_minus)?;
    Ok(Field::from_vec_unchecked(
        *psi_plus.grid(),
        psi_plus
            .values()
            .iter()
            .zip(psi_minus.values())
            .map(|(&a, &b)| alpha.density(a, b))
            .collect(),
    ))
}

/// Shape of one initial-data field.
///
/// Real-valued fields (`A0`, `A1`) take the real part of the complex profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Zero,
    /// `amplitude * e^{i phase} * exp(-((x - center) / width)^2)`.
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude * e^{i phase}` on `[center - width/2, center + width/2)`.
    Box {
        center: f64,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Gaussian envelope times the plane wave `e^{i wavenumber x}`.
    ModulatedGaussian {
        center: f64,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
        wavenumber: f64,
    },
    /// Sum of `count` smooth compactly supported bumps with seeded centers,
    /// widths, moduli and phases, all supported inside `[lo, hi]`.
    RandomBumps {
        seed: u64,
        count: usize,
        lo: f64,
        hi: f64,
        min_width: f64,
        max_width: f64,
        amplitude: f64,
    },
}

/// Exact support of a generated profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Empty,
    /// Closure of the (open) set where the profile is non-zero.
    Bounded { lo: f64, hi: f64 },
    Unbounded,
}

#[derive(Debug, Clone, Copy)]
struct Bump {
    center: f64,
    width: f64,
    value: Complex64,
}

/// `C^∞` bump of unit height on `|s| < 1`.
#[inline]
fn bump_shape(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl DataSpec {
    fn validate(&self, grid: &Grid) -> Result<()> {
        let min = 2.0 * grid.dx();
        let check = |w: f64, what: &str| {
            if !(w.is_finite() && w > 0.0) {
                Err(CsdError::invalid(format!("{what} must be positive, got {w}")))
            } else if w < min {
                Err(CsdError::invalid(format!(
                    "{what} {w} is below two cells ({min}); the feature is unresolved"
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            DataSpec::Zero => Ok(()),
            DataSpec::Gaussian { width, .. }
            | DataSpec::Box { width, .. }
            | DataSpec::ModulatedGaussian { width, .. } => check(width, "width"),
            DataSpec::RandomBumps {
                lo,
                hi,
                min_width,
                max_width,
                ..
            } => {
                check(min_width, "min_width")?;
                if max_width < min_width {
                    return Err(CsdError::invalid("max_width must be >= min_width"));
                }
                if hi - lo < max_width {
                    return Err(CsdError::invalid(
                        "bump region [lo, hi] is narrower than max_width",
                    ));
                }
                Ok(())
            }
        }
    }

    fn bumps(&self) -> Vec<Bump> {
        let DataSpec::RandomBumps {
            seed,
            count,
            lo,
            hi,
            min_width,
            max_width,
            amplitude,
        } = *self
        else {
            return Vec::new();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let width = if max_width > min_width {
                    rng.gen_range(min_width..max_width)
                } else {
                    min_width
                };
                let (a, b) = (lo + width / 2.0, hi - width / 2.0);
                let center = if b > a { rng.gen_range(a..b) } else { a };
                let modulus = amplitude * rng.gen_range(0.2..1.0);
                let phase = rng.gen_range(0.0..2.0 * PI);
                Bump {
                    center,
                    width,
                    value: Complex64::from_polar(modulus, phase),
                }
            })
            .collect()
    }

    /// Support of the continuum profile.
    pub fn support(&self) -> Support {
        match *self {
            DataSpec::Zero => Support::Empty,
            DataSpec::Gaussian { amplitude, .. } | DataSpec::ModulatedGaussian { amplitude, .. }
                if amplitude == 0.0 =>
            {
                Support::Empty
            }
            DataSpec::Gaussian { .. } | DataSpec::ModulatedGaussian { .. } => Support::Unbounded,
            DataSpec::Box {
                center,
                width,
                amplitude,
                ..
            } => {
                if amplitude == 0.0 {
                    Support::Empty
                } else {
                    Support::Bounded {
                        lo: center - width / 2.0,
                        hi: center + width / 2.0,
                    }
                }
            }
            DataSpec::RandomBumps { .. } => {
                let bumps = self.bumps();
                if bumps.is_empty() {
                    return Support::Empty;
                }
                let lo = bumps.iter().map(|b| b.center - b.width / 2.0).fold(f64::INFINITY, f64::min);
                let hi = bumps.iter().map(|b| b.center + b.width / 2.0).fold(f64::NEG_INFINITY, f64::max);
                Support::Bounded { lo, hi }
            }
        }
    }

    fn sampler(&self) -> Box<dyn Fn(f64) -> Complex64> {
        match *self {
            DataSpec::Zero => Box::new(|_| Complex64::new(0.0, 0.0)),
            DataSpec::Gaussian {
                center,
                width,
                amplitude,
                phase,
            } => {
                let a = Complex64::from_polar(amplitude, phase);
                Box::new(move |x| {
                    let s = (x - center) / width;
                    a * (-s * s).exp()
                })
            }
            DataSpec::Box {
                center,
                width,
                amplitude,
                phase,
            } => {
                let a = Complex64::from_polar(amplitude, phase);
                let (lo, hi) = (center - width / 2.0, center + width / 2.0);
                Box::new(move |x| if x >= lo && x < hi { a } else { Complex64::new(0.0, 0.0) })
            }
            DataSpec::ModulatedGaussian {
                center,
                width,
                amplitude,
                phase,
                wavenumber,
            } => Box::new(move |x| {
                let s = (x - center) / width;
                Complex64::from_polar(amplitude * (-s * s).exp(), phase + wavenumber * x)
            }),
            DataSpec::RandomBumps { .. } => {
                let bumps = self.bumps();
                Box::new(move |x| {
                    bumps
                        .iter()
                        .map(|b| b.value * bump_shape(2.0 * (x - b.center) / b.width))
                        .sum()
                })
            }
        }
    }

    /// Samples the profile at cell centers.
    pub fn generate_complex(&self, grid: &Grid) -> Result<ComplexField> {
        self.validate(grid)?;
        let f = self.sampler();
        Field::from_fn(*grid, |x| f(x))
    }

    /// Real part of the profile at cell centers.
    pub fn generate_real(&self, grid: &Grid) -> Result<RealField> {
        self.validate(grid)?;
        let f = self.sampler();
        Field::from_fn(*grid, |x| f(x).re)
    }
}

/// Physical-variable initial data `(psi1, psi2, A0, A1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub psi1: DataSpec,
    pub psi2: DataSpec,
    pub a0: DataSpec,
    pub a1: DataSpec,
}

impl InitialData {
    pub fn zero() -> Self {
        InitialData {
            psi1: DataSpec::Zero,
            psi2: DataSpec::Zero,
            a0: DataSpec::Zero,
            a1: DataSpec::Zero,
        }
    }

    pub fn to_state(&self, grid: &Grid, params: ModelParams) -> Result<State> {
        diagonalize(
            &self.psi1.generate_complex(grid)?,
            &self.psi2.generate_complex(grid)?,
            &self.a0.generate_real(grid)?,
            &self.a1.generate_real(grid)?,
            params,
        )
    }
}
