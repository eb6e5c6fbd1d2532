//! Coupled solver: Picard slab iteration, the explicit marching backend,
//! the linear/nonlinear decomposition and global continuation.

mod global;
mod march;
mod picard;
mod state;

use serde::{Deserialize, Serialize};

pub use global::{lipschitz_probe, solve_global};
pub use march::{march, solve_decomposed, DecomposedTrajectory};
pub use picard::{picard_slab, CONTRACTION_TARGET};
pub use state::{SlabRecord, State, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    PicardSlab,
    March,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Slab length in time; must be a whole number of steps.
    #[serde(rename = "slab_T")]
    pub slab_t: f64,
    /// Sup-norm stopping tolerance between successive iterates.
    pub picard_tol: f64,
    pub max_picard_iters: usize,
    /// Halve the slab until the measured contraction factor is below 1/2.
    pub auto_slab: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            backend: Backend::PicardSlab,
            slab_t: 0.25,
            picard_tol: 1e-12,
            max_picard_iters: 50,
            auto_slab: true,
        }
    }
}

impl SolverConfig {
    pub fn march() -> Self {
        SolverConfig {
            backend: Backend::March,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.slab_t > 0.0 && self.slab_t.is_finite()) {
            return Err(crate::CsdError::invalid(format!(
                "slab_T must be positive, got {}",
                self.slab_t
            )));
        }
        if !(self.picard_tol > 0.0) {
            return Err(crate::CsdError::invalid("picard_tol must be positive"));
        }
        if self.max_picard_iters == 0 {
            return Err(crate::CsdError::invalid("max_picard_iters must be >= 1"));
        }
        Ok(())
    }
}
