use super::march::march_unchecked;
use super::picard::{contraction_factor, run_slab, SlabOutcome, CONTRACTION_TARGET};
use super::state::{State, Trajectory};
use super::{Backend, SolverConfig};
use crate::error::{CsdError, Result};
use crate::lattice::lp_norm_slice;

/// Solves from `initial` up to `t_final` (measured from `initial.t`).
///
/// The Picard backend concatenates slabs. With `auto_slab` a slab is halved
/// until it converges with contraction factor below 1/2, and the next slab
/// may grow back up to `slab_T` by doubling.
pub fn solve_global(initial: &State, t_final: f64, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = initial.grid();
    let total = grid.steps_for(t_final)?;
    initial.check_contained(total)?;
    match cfg.backend {
        Backend::March => Ok(march_unchecked(initial, total)),
        Backend::PicardSlab => picard_global(initial, total, cfg),
    }
}

fn picard_global(initial: &State, total: usize, cfg: &SolverConfig) -> Result<Trajectory> {
    let grid = initial.grid();
    let max_slab = grid.steps_for(cfg.slab_t)?.max(1);
    let mut traj = Trajectory::new(vec![initial.clone()], Vec::new());
    let mut slab = max_slab;
    let mut done = 0;
    let mut index = 0;
    while done < total {
        let start = traj.last().clone();
        let mut len = slab.min(total - done);
        let mut rejected = Vec::new();
        let SlabOutcome {
            trajectory,
            mut record,
        } = loop {
            let contraction = match run_slab(&start, len, cfg) {
                Ok(out) if !cfg.auto_slab || out.record.contraction < CONTRACTION_TARGET => {
                    break out;
                }
                Ok(out) => out.record.contraction,
                Err(CsdError::ConvergenceFailure { history, .. }) if cfg.auto_slab => {
                    contraction_factor(&history, cfg.picard_tol)
                }
                Err(e) => return Err(e),
            };
            if len == 1 {
                return Err(CsdError::SlabUnderflow {
                    slab: index,
                    t_start: start.t,
                    contraction,
                    norms: start.norms(start.params.p),
                });
            }
            rejected.push(len);
            len /= 2;
        };
        record.rejected = rejected;
        done += len;
        index += 1;
        slab = (2 * len).min(max_slab);
        let mut piece = trajectory;
        piece.slabs_mut().push(record);
        traj.extend(piece);
    }
    Ok(traj)
}

/// Ratio of the largest solution difference over `[0, T]` to the data
/// difference, both as sums of the four `L^p` norms (`p` from the model).
pub fn lipschitz_probe(data_a: &State, data_b: &State, t: f64, cfg: &SolverConfig) -> Result<f64> {
    if data_a.grid() != data_b.grid() {
        return Err(CsdError::GridMismatch);
    }
    let p = data_a.params.p;
    let dx = data_a.grid().dx();
    let diff = |a: &State, b: &State| {
        let c = |x: &[num_complex::Complex64], y: &[num_complex::Complex64]| {
            let d: Vec<_> = x.iter().zip(y).map(|(u, v)| u - v).collect();
            lp_norm_slice(&d, dx, p)
        };
        let r = |x: &[f64], y: &[f64]| {
            let d: Vec<_> = x.iter().zip(y).map(|(u, v)| u - v).collect();
            lp_norm_slice(&d, dx, p)
        };
        c(a.psi_plus.values(), b.psi_plus.values())
            + c(a.psi_minus.values(), b.psi_minus.values())
            + r(a.a_plus.values(), b.a_plus.values())
            + r(a.a_minus.values(), b.a_minus.values())
    };
    let denom = diff(data_a, data_b);
    if denom == 0.0 {
        return Err(CsdError::invalid("lipschitz probe needs distinct data"));
    }
    let ta = solve_global(data_a, t, cfg)?;
    let tb = solve_global(data_b, t, cfg)?;
    let num = ta
        .states()
        .iter()
        .zip(tb.states())
        .map(|(a, b)| diff(a, b))
        .fold(0.0, f64::max);
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{make_grid, ComplexField, Grid};
    use crate::physics::{CouplingKind, DataSpec, InitialData, ModelParams};
    use crate::solver::picard_slab;
    use num_complex::Complex64;

    fn smooth(grid: Grid, alpha: CouplingKind, amp: f64) -> State {
        let g = |c: f64, w: f64| DataSpec::Gaussian {
            center: c,
            width: w,
            amplitude: amp,
            phase: 0.4,
        };
        InitialData {
            psi1: g(-0.5, 0.7),
            psi2: g(0.5, 0.6),
            a0: g(0.0, 1.0),
            a1: g(0.2, 0.8),
        }
        .to_state(&grid, ModelParams::new(alpha, 1.0, 1.0).unwrap())
        .unwrap()
    }

    #[test]
    fn single_slab_matches_picard_slab() {
        let g = make_grid(-8.0, 8.0, 384).unwrap();
        let s0 = smooth(g, CouplingKind::NullGamma0, 0.2);
        let cfg = SolverConfig::default();
        let (one, _) = picard_slab(&s0, &cfg).unwrap();
        let global = solve_global(&s0, cfg.slab_t, &cfg).unwrap();
        assert_eq!(global.last(), one.last());
        assert_eq!(global.slabs().len(), 1);
    }

    #[test]
    fn two_slabs_agree_with_one_long_slab() {
        let g = make_grid(-8.0, 8.0, 384).unwrap();
        for alpha in CouplingKind::ALL {
            let s0 = smooth(g, alpha, 0.2);
            let short = SolverConfig {
                slab_t: 0.25,
                auto_slab: false,
                ..SolverConfig::default()
            };
            let long = SolverConfig {
                slab_t: 0.5,
                ..short
            };
            let a = solve_global(&s0, 0.5, &short).unwrap();
            let b = solve_global(&s0, 0.5, &long).unwrap();
            assert_eq!(a.slabs().len(), 2);
            let d = a.last().sup_diff(b.last()).unwrap();
            assert!(d <= 10.0 * short.picard_tol, "{alpha:?}: {d}");
        }
    }

    #[test]
    fn auto_slab_shrinks_for_large_data() {
        let g = make_grid(-8.0, 8.0, 512).unwrap();
        let s0 = smooth(g, CouplingKind::NullGamma1, 4.0);
        let cfg = SolverConfig::default();
        let traj = solve_global(&s0, 1.0, &cfg).unwrap();
        assert_eq!(traj.steps(), g.steps_for(1.0).unwrap());
        assert!(traj.slabs().iter().any(|s| !s.rejected.is_empty()));
        assert!(traj.slabs().iter().all(|s| s.contraction < CONTRACTION_TARGET));
    }

    #[test]
    fn march_and_picard_agree_to_second_order() {
        let mut errs = Vec::new();
        for n in [256, 512, 1024] {
            let g = make_grid(-8.0, 8.0, n).unwrap();
            let s0 = smooth(g, CouplingKind::NullGamma0, 0.3);
            let a = solve_global(&s0, 0.5, &SolverConfig::default()).unwrap();
            let b = solve_global(&s0, 0.5, &SolverConfig::march()).unwrap();
            errs.push(a.last().sup_diff(b.last()).unwrap());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() <= 0.2, "{errs:?}");
        }
    }

    #[test]
    fn overflow_is_reported() {
        let g = make_grid(-2.0, 2.0, 128).unwrap();
        let s0 = smooth(g, CouplingKind::NullGamma0, 0.2);
        let err = solve_global(&s0, 1.5, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, CsdError::DomainOverflow { .. }));
    }

    #[test]
    fn lipschitz_ratio_stable_under_shrinking_perturbation() {
        let g = make_grid(-8.0, 8.0, 256).unwrap();
        let s0 = smooth(g, CouplingKind::NullGamma0, 0.3);
        let bump = |d: f64| {
            let mut s = s0.clone();
            s.psi_plus = ComplexField::new(
                g,
                s0.psi_plus
                    .values()
                    .iter()
                    .zip(g.centers())
                    .map(|(v, x)| v + Complex64::new(d * (-x * x).exp(), 0.0))
                    .collect(),
            )
            .unwrap();
            s
        };
        let cfg = SolverConfig::default();
        let r3 = lipschitz_probe(&s0, &bump(1e-3), 0.5, &cfg).unwrap();
        let r6 = lipschitz_probe(&s0, &bump(1e-6), 0.5, &cfg).unwrap();
        assert!(((r3 - r6) / r6).abs() <= 0.1, "{r3} {r6}");
        assert!(r3.is_finite() && r3 > 0.0);
        let z = State::zeros(g, s0.params);
        assert!(lipschitz_probe(&z, &z, 0.5, &cfg).is_err());
    }

    #[test]
    fn doubled_tiny_data_has_finite_gain() {
        let g = make_grid(-8.0, 8.0, 256).unwrap();
        let s0 = smooth(g, CouplingKind::NullGamma1, 1e-4);
        let r = lipschitz_probe(&s0, &s0.scaled(2.0), 0.5, &SolverConfig::default()).unwrap();
        assert!(r.is_finite() && r >= 0.5 && r < 10.0, "{r}");
    }
}
