//! Shared fixtures for the solver benchmarks.

use csd1d_core::physics::InitialData;
use csd1d_core::{make_grid, CouplingKind, DataSpec, ModelParams, State};

/// Smooth small data on `[-8, 8]` with `n_cells` cells.
pub fn smooth_state(n_cells: usize, alpha: CouplingKind, amplitude: f64) -> State {
    let grid = make_grid(-8.0, 8.0, n_cells).expect("valid grid");
    let g = |center: f64, width: f64| DataSpec::Gaussian {
        center,
        width,
        amplitude,
        phase: 0.3,
    };
    InitialData {
        psi1: g(-0.5, 0.8),
        psi2: g(0.4, 0.7),
        a0: g(0.0, 1.0),
        a1: g(0.3, 0.9),
    }
    .to_state(&grid, ModelParams::new(alpha, 1.0, 2.0).expect("valid params"))
    .expect("valid data")
}
