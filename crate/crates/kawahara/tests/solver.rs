use kawahara::solver::{petviashvili_wave, simulate, SolverConfig, Stepper};
use kawahara::spectral::{Dispersion, Grid, SpectralField};
use std::f64::consts::PI;

fn smooth_datum(grid: Grid, seed: u64, peak: f64) -> SpectralField {
    let u = SpectralField::random_real(grid, seed, |xi| (1.0 + xi * xi).powi(-4));
    let max = u.to_physical().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    u.scale(peak / max)
}

#[test]
fn conservation_over_unit_time() {
    let grid = Grid::new(256.0 * PI, 512).unwrap();
    let u0 = smooth_datum(grid, 17, 1.0);
    let cfg = SolverConfig::new(grid, Dispersion::default(), 1e-3, 1.0);
    let traj = simulate(&u0, &cfg).unwrap();
    assert!(traj.mean_drift() <= 1e-14, "mean drift {}", traj.mean_drift());
    assert!(traj.l2_drift() <= 1e-8, "l2 drift {}", traj.l2_drift());
}

#[test]
fn time_reversal_returns_reflected_datum() {
    let grid = Grid::new(32.0 * PI, 128).unwrap();
    let u0 = smooth_datum(grid, 3, 1.0);
    let disp = Dispersion::new(0.6).unwrap();
    let mut stepper = Stepper::new(grid, disp, 1e-3, 2.0 / 3.0);
    let forward = stepper.advance(&u0, 0.5).unwrap();
    let back = stepper.advance(&forward.reflect(), 0.5).unwrap();
    let target = u0.reflect();
    let err = back.sub(&target).unwrap().l2_norm() / target.l2_norm();
    assert!(err < 1e-7, "{err}");
}

#[test]
fn fourth_order_self_convergence() {
    let grid = Grid::new(16.0 * PI, 128).unwrap();
    let u0 = smooth_datum(grid, 5, 4.0);
    let disp = Dispersion::default();
    let run = |dt: f64| Stepper::new(grid, disp, dt, 2.0 / 3.0).advance(&u0, 0.25).unwrap();
    let reference = run(2.5e-4 / 8.0);
    let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&dt| run(dt).sub(&reference).unwrap().l2_norm())
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.8, "errors {errs:?}");
    }
}

#[test]
fn solitary_wave_translates() {
    let grid = Grid::new(64.0, 256).unwrap();
    let disp = Dispersion::default();
    let wave = petviashvili_wave(-2.0, &disp, &grid).unwrap();
    assert!(wave.residual < 1e-9);
    let cfg = SolverConfig::new(grid, disp, 1e-3, 1.0);
    let traj = simulate(&wave.profile, &cfg).unwrap();
    let err = traj.last_field().unwrap().sub(&wave.at(1.0)).unwrap().l2_norm();
    assert!(err < 1e-6, "{err}");
}
