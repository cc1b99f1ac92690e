use magneto2d::eigen::{ground_state_bound, spectrum_scan, ScanRequest, SolverOptions};
use magneto2d::grid::{GridSpec, Problem, RhoMax};
use magneto2d::model::PresetSystem;
use magneto2d::observables::lowest_states;

fn lowest(b: f64, alpha_deg: f64, grid: GridSpec, count: usize) -> Vec<f64> {
    let cfg = PresetSystem::Hydrogen2D.config(b, alpha_deg.to_radians()).unwrap();
    let p = Problem::new(cfg, &grid).unwrap();
    let s = lowest_states(&p, count, &SolverOptions::default()).unwrap();
    assert!(s.iter().all(|s| s.converged && s.imag.abs() < 1e-10));
    s.iter().map(|s| s.energy).collect()
}

fn distinct(levels: &[f64], tol: f64) -> usize {
    let mut v = levels.to_vec();
    v.sort_by(f64::total_cmp);
    1 + v.windows(2).filter(|w| w[1] - w[0] > tol).count()
}

#[test]
fn field_splits_shells() {
    // n = 1, 2, 3 shells hold 1 + 3 + 5 states without a field
    let grid = GridSpec::new(6, 120, RhoMax::Fixed(40.0));
    let free = lowest(0.0, 0.0, grid, 9);
    assert_eq!(distinct(&free, 1e-6), 3, "{free:?}");
    for alpha in [0.0, 27.0] {
        let split = lowest(0.5, alpha, grid, 9);
        assert_eq!(distinct(&split, 1e-6), 9, "alpha {alpha}: {split:?}");
    }
}

#[test]
fn radial_refinement_converges() {
    let coarse = lowest(1.0, 45.0, GridSpec::new(10, 150, RhoMax::Fixed(24.0)), 4);
    let fine = lowest(1.0, 45.0, GridSpec::new(10, 300, RhoMax::Fixed(24.0)), 4);
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn window_scan_agrees_with_lowest_levels() {
    let cfg = PresetSystem::Hydrogen2D.config(2.0, 30f64.to_radians()).unwrap();
    let p = Problem::new(cfg, &GridSpec::new(8, 100, RhoMax::Auto)).unwrap();
    let o = SolverOptions::default();
    let lowest = lowest_states(&p, 6, &o).unwrap();
    let lo = ground_state_bound(&cfg);
    let hi = 0.5 * (lowest[5].energy + lowest_states(&p, 7, &o).unwrap()[6].energy);
    let window = spectrum_scan(&p.hamiltonian, ScanRequest::window(lo, hi), &o).unwrap();
    let e = window.energies();
    assert_eq!(e.len(), 6);
    for (a, s) in e.iter().zip(&lowest) {
        assert!((a - s.energy).abs() < 1e-9);
    }
    assert!(window.complete_window);
}

#[test]
fn stronger_field_raises_the_ground_state() {
    let grid = GridSpec::new(10, 150, RhoMax::Auto);
    let e: Vec<f64> = [0.0, 0.5, 1.0, 2.0]
        .iter()
        .map(|&b| lowest(b, 60.0, grid, 1)[0])
        .collect();
    assert!(e.windows(2).all(|w| w[1] > w[0]), "{e:?}");
}

#[test]
fn sequential_and_parallel_scans_match() {
    use magneto2d::par::Execution;
    let cfg = PresetSystem::Hydrogen2D.config(0.5, 54f64.to_radians()).unwrap();
    let p = Problem::new(cfg, &GridSpec::new(6, 80, RhoMax::Auto)).unwrap();
    let run = |execution| {
        let o = SolverOptions {
            execution,
            ..SolverOptions::default()
        };
        spectrum_scan(&p.hamiltonian, ScanRequest::window(-2.5, 0.3), &o)
            .unwrap()
            .energies()
    };
    assert_eq!(run(Execution::Parallel), run(Execution::Sequential));
}
