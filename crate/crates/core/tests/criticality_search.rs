use thermx_core::criticality::exists_at;
use thermx_core::pde::newton_solve_with;
use thermx_core::{
    find_zeta0, lambda_cr_consistency, march_oracle, solve_steady, sweep_boundary, Error, Execution, ExistencePoint,
    FlowRegime, GridSpec, MarchOptions, MarchOutcome, PipeProblem, SearchOptions, SteadySolution, ZetaSearch,
};

fn bounded(lambda: f64, regime: FlowRegime, grid: &GridSpec) -> ExistencePoint {
    let p = PipeProblem::new(lambda, regime).unwrap();
    match find_zeta0(&p, grid, &SearchOptions::default()).unwrap() {
        ZetaSearch::Bounded(point) => point,
        other => panic!("lambda = {lambda}: {other:?}"),
    }
}

#[test]
fn subcritical_exists_for_every_length() {
    let grid = GridSpec::uniform(64, 64).unwrap();
    for lambda in [0.5, 1.0, 1.35] {
        let p = PipeProblem::new(lambda, FlowRegime::Laminar).unwrap();
        let out = find_zeta0(&p, &grid, &SearchOptions::default()).unwrap();
        assert!(matches!(out, ZetaSearch::Unbounded { zeta_cap } if zeta_cap == 1e3), "{out:?}");
    }
}

#[test]
fn laminar_length_at_lambda_ten() {
    // 1.77 * 10^(-11/4)
    let expected = 1.77 * 10f64.powf(-2.75);
    let p = bounded(10.0, FlowRegime::Laminar, &GridSpec::uniform(256, 256).unwrap());
    assert!((p.zeta0 / expected - 1.0).abs() < 0.15, "zeta0 = {}", p.zeta0);
}

#[test]
fn brackets_replay() {
    let opts = SearchOptions::default();
    let turbulent = FlowRegime::turbulent(1e5).unwrap();
    for (lambda, regime, grid) in [
        (3.0, FlowRegime::Laminar, GridSpec::uniform(96, 64).unwrap()),
        (20.0, FlowRegime::Laminar, GridSpec::uniform(96, 64).unwrap()),
        (2.0, turbulent, GridSpec::for_regime(&turbulent, 96, 64).unwrap()),
    ] {
        let point = bounded(lambda, regime, &grid);
        assert!(point.zeta0_lo < point.zeta0 && point.zeta0 <= point.zeta0_hi);
        assert!(point.zeta0_hi / point.zeta0_lo - 1.0 <= opts.rel_tol);
        let p = PipeProblem::new(lambda, regime).unwrap();
        let fine = grid.with_n_xi(point.n_xi_divergent);
        assert!(!newton_solve_with(&p, &fine, point.zeta0_hi, None, &opts.newton).unwrap().is_converged());
        assert!(exists_at(&p, &grid, point.zeta0_lo, &opts).unwrap());
        assert!(!exists_at(&p, &grid, point.zeta0_hi, &opts).unwrap());
    }
}

#[test]
fn grid_doubling_moves_length_below_one_percent() {
    let coarse = bounded(3.0, FlowRegime::Laminar, &GridSpec::uniform(128, 128).unwrap());
    let fine = bounded(3.0, FlowRegime::Laminar, &GridSpec::uniform(256, 256).unwrap());
    assert!((fine.zeta0 / coarse.zeta0 - 1.0).abs() < 0.01, "{} vs {}", coarse.zeta0, fine.zeta0);
}

#[test]
fn sweep_is_decreasing_and_matches_marching() {
    let grid = GridSpec::uniform(128, 128).unwrap();
    let lambdas = [1.5, 2.0, 3.0];
    let curve =
        sweep_boundary(&FlowRegime::Laminar, &lambdas, &grid, &SearchOptions::default(), Execution::Parallel).unwrap();
    assert_eq!(curve.lambdas(), lambdas);
    assert!(curve.zeta0s().windows(2).all(|w| w[1] < w[0]));
    for point in &curve.points {
        let p = PipeProblem::new(point.lambda, FlowRegime::Laminar).unwrap();
        let zb = march_oracle(&p, grid.n_rho, 10.0 * point.zeta0).unwrap().zeta_b().expect("blow-up");
        assert!((zb / point.zeta0 - 1.0).abs() < 0.02, "lambda = {}: {zb} vs {}", point.lambda, point.zeta0);
    }
}

#[test]
fn length_diverges_near_critical() {
    let grid = GridSpec::uniform(128, 128).unwrap();
    let near = bounded(1.42, FlowRegime::Laminar, &grid);
    let far = bounded(2.0, FlowRegime::Laminar, &grid);
    assert!(near.zeta0 > 10.0 * far.zeta0, "{} vs {}", near.zeta0, far.zeta0);
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let regime = FlowRegime::turbulent(1e4).unwrap();
    let grid = GridSpec::for_regime(&regime, 96, 64).unwrap();
    let lambdas = [0.6, 1.0, 2.0, 5.0, 12.0];
    let opts = SearchOptions::default();
    let seq = sweep_boundary(&regime, &lambdas, &grid, &opts, Execution::Sequential).unwrap();
    let par = sweep_boundary(&regime, &lambdas, &grid, &opts, Execution::Parallel).unwrap();
    assert_eq!(seq.points.len(), lambdas.len());
    assert_eq!(par.points.len(), lambdas.len());
    for (a, b) in seq.points.iter().zip(&par.points) {
        assert_eq!(a.lambda, b.lambda);
        assert!(a.zeta0_lo <= b.zeta0_hi && b.zeta0_lo <= a.zeta0_hi, "{a:?} / {b:?}");
    }
}

#[test]
fn empty_and_partial_sweeps() {
    let grid = GridSpec::uniform(64, 64).unwrap();
    let opts = SearchOptions::default();
    let empty = sweep_boundary(&FlowRegime::Laminar, &[], &grid, &opts, Execution::Sequential).unwrap();
    assert!(empty.points.is_empty() && empty.unbounded.is_empty() && empty.failures.is_empty());
    let mixed = sweep_boundary(&FlowRegime::Laminar, &[1.0, 2.0], &grid, &opts, Execution::Parallel).unwrap();
    assert_eq!(mixed.unbounded, vec![1.0]);
    assert_eq!(mixed.lambdas(), vec![2.0]);
    assert!(sweep_boundary(&FlowRegime::Laminar, &[2.0, 1.5], &grid, &opts, Execution::Parallel).is_err());
}

#[test]
fn far_supercritical_is_diagnosed() {
    let grid = GridSpec::uniform(64, 64).unwrap();
    let opts = SearchOptions { zeta_floor: 1e-6, ..SearchOptions::default() };
    let p = PipeProblem::new(1000.0, FlowRegime::Laminar).unwrap();
    match find_zeta0(&p, &grid, &opts) {
        Err(Error::TooSupercritical { lambda, .. }) => assert_eq!(lambda, 1000.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn laminar_critical_parameters_agree() {
    let grid = GridSpec::uniform(128, 128).unwrap();
    let c = lambda_cr_consistency(&FlowRegime::Laminar, &grid, &SearchOptions::default(), Execution::Parallel).unwrap();
    assert!(c.rel_gap >= 0.0 && c.rel_gap < 1e-2, "{c:?}");
    assert!((c.lambda_cr_pde - 2f64.sqrt()).abs() < 1.5e-2);
}

#[test]
fn turbulent_critical_parameters_agree() {
    let regime = FlowRegime::turbulent(1e4).unwrap();
    let grid = GridSpec::for_regime(&regime, 128, 128).unwrap();
    let c = lambda_cr_consistency(&regime, &grid, &SearchOptions::default(), Execution::Parallel).unwrap();
    assert!(c.rel_gap < 1e-2, "{c:?}");
}

#[test]
fn marching_saturates_below_critical() {
    let p = PipeProblem::new(1.0, FlowRegime::Laminar).unwrap();
    let out = march_oracle(&p, 128, 10.0).unwrap();
    let MarchOutcome::NoBlowUp { trajectory } = out else { panic!("{out:?}") };
    // Nondecreasing up to the local error control of the stepper.
    let dip = trajectory.windows(2).map(|w| w[0].1 - w[1].1).fold(0.0, f64::max);
    assert!(dip < MarchOptions::default().tol, "u_max drops by {dip}");
    let steady = match solve_steady(&FlowRegime::Laminar, 1.0).unwrap() {
        SteadySolution::Found(s) => s.u_axis(),
        other => panic!("{other:?}"),
    };
    let last = trajectory.last().unwrap();
    assert!((last.0 - 10.0).abs() < 1e-12);
    assert!((last.1 - steady).abs() < 1e-3, "{} vs {steady}", last.1);
}

#[test]
fn marching_matches_search_at_lambda_three() {
    let grid = GridSpec::uniform(128, 128).unwrap();
    let point = bounded(3.0, FlowRegime::Laminar, &grid);
    let p = PipeProblem::new(3.0, FlowRegime::Laminar).unwrap();
    let zb = march_oracle(&p, 128, 10.0).unwrap().zeta_b().unwrap();
    assert!((zb / point.zeta0 - 1.0).abs() < 0.02, "{zb} vs {}", point.zeta0);
}
