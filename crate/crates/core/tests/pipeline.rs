use csd1d_core::diagnostics::{charge_series, intrinsic_bound_report, trajectory_bilinear_reports};
use csd1d_core::physics::{diagonalize, undiagonalize};
use csd1d_core::solver::{solve_decomposed, solve_global};
use csd1d_core::{make_grid, CouplingKind, DataSpec, InitialData, ModelParams, SolverConfig};

fn gauss(center: f64, width: f64, amplitude: f64) -> DataSpec {
    DataSpec::Gaussian {
        center,
        width,
        amplitude,
        phase: 0.3,
    }
}

fn data() -> InitialData {
    InitialData {
        psi1: gauss(-0.4, 0.7, 0.3),
        psi2: gauss(0.4, 0.6, 0.3),
        a0: gauss(0.0, 0.9, 0.2),
        a1: gauss(0.1, 0.8, 0.2),
    }
}

#[test]
fn physical_fields_survive_a_solve_round_trip() {
    let g = make_grid(-8.0, 8.0, 256).unwrap();
    let params = ModelParams::new(CouplingKind::NullGamma0, 1.0, 2.0).unwrap();
    let s0 = data().to_state(&g, params).unwrap();
    let traj = solve_global(&s0, 1.0, &SolverConfig::default()).unwrap();
    let (p1, p2, a0, a1) = undiagonalize(traj.last());
    let back = diagonalize(&p1, &p2, &a0, &a1, params).unwrap();
    let mut last = traj.last().clone();
    last.t = 0.0;
    last.step = 0;
    assert!(back.sup_diff(&last).unwrap() < 1e-14);
    assert_eq!(traj.steps(), g.steps_for(1.0).unwrap());
}

#[test]
fn reports_are_self_consistent_for_every_coupling() {
    let g = make_grid(-8.0, 8.0, 256).unwrap();
    for alpha in CouplingKind::ALL {
        let s0 = data().to_state(&g, ModelParams::new(alpha, 1.0, 2.0).unwrap()).unwrap();
        let traj = solve_global(&s0, 1.0, &SolverConfig::default()).unwrap();
        let (_, charge) = charge_series(&traj, g.dx() * g.dx());
        let intrinsic = intrinsic_bound_report(&solve_decomposed(&s0, 1.0).unwrap(), 2.0).unwrap();
        let [b1, b2] = trajectory_bilinear_reports(&traj, 2.0).unwrap();
        for r in [charge, intrinsic, b1, b2] {
            assert_eq!(r.pass, r.recomputed_pass(), "{}", r.name);
            assert!(r.pass, "{} failed for {}: {:?}", r.name, alpha.name(), r);
        }
    }
}

#[test]
fn backends_agree_to_second_order() {
    let mut diffs = Vec::new();
    for n in [256, 512] {
        let g = make_grid(-8.0, 8.0, n).unwrap();
        let s0 = data().to_state(&g, ModelParams::new(CouplingKind::NullGamma1, 1.0, 2.0).unwrap()).unwrap();
        let a = solve_global(&s0, 1.0, &SolverConfig::default()).unwrap();
        let b = solve_global(&s0, 1.0, &SolverConfig::march()).unwrap();
        diffs.push(a.last().sup_diff(b.last()).unwrap());
    }
    let order = (diffs[0] / diffs[1]).log2();
    assert!((1.7..=2.3).contains(&order), "order {order}, diffs {diffs:?}");
}
