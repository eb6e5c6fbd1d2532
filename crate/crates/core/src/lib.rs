//! Characteristic-lattice solver for the 1+1 dimensional Chern-Simons-Dirac
//! system in diagonal form, together with numerical checks of the a-priori
//! estimates that drive its global well-posedness theory.
//!
//! The unknowns are the spinor components `psi_plus`, `psi_minus` (complex)
//! and gauge components `a_plus`, `a_minus` (real), evolving by
//!
//! ```text
//! (d/dt ± d/dx) psi_± = i A_∓ psi_± − i m psi_∓
//! (d/dt ± d/dx) A_±   = ∓ P(psi_+, psi_-)
//! ```
//!
//! on a uniform grid with `dt == dx`, so every characteristic `x ∓ t` passes
//! through lattice points and free transport is an exact index shift.

pub mod diagnostics;
pub mod error;
pub mod lattice;
pub mod physics;
pub mod solver;
pub mod transport;

/// Crate version, echoed into run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use diagnostics::DiagnosticReport;
pub use error::{CsdError, Result};
pub use lattice::{make_grid, ComplexField, Field, Grid, RealField, Sample, TriangleMask};
pub use num_complex::Complex64;
pub use physics::{CouplingKind, DataSpec, InitialData, ModelParams};
pub use solver::{Backend, DecomposedTrajectory, SolverConfig, State, Trajectory};
pub use transport::{Direction, SourceTrace};
