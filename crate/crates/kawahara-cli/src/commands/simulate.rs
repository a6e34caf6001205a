use super::*;
use crate::report::{Gate, Table};
use kawahara::solver::{petviashvili_wave, simulate, SolverConfig};
use kawahara::spectral::Dispersion;
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "simulate",
    about: "Integrate the equation and monitor the mean and the L2 mass",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("length", Kind::Float, "256pi", "periodic box length"),
    spec("n", Kind::Int, "1024", "number of modes (power of two)"),
    spec("dt", Kind::Float, "1e-3", "time step"),
    spec("t_end", Kind::Float, "1", "final time"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("dealias_fraction", Kind::Float, "2/3", "retained fraction of the modes"),
    spec("monitor_stride", Kind::Int, "100", "steps between recorded samples"),
    spec("datum", Kind::Choice(&["random", "zero", "wave"]), "random", "initial datum"),
    spec("amplitude", Kind::Float, "1", "peak value of the random datum"),
    spec("decay", Kind::Float, "8", "random datum coefficients decay like <xi>^-decay"),
    spec("speed", Kind::Float, "-2", "travelling-wave speed"),
    spec("s", Kind::Float, "0", "Sobolev index of the reported norm"),
    spec("mean_drift_tol", Kind::Float, "1e-14", "gate: absolute drift of the mean"),
    spec("l2_drift_tol", Kind::Float, "1e-8", "gate: relative drift of the L2 mass"),
    spec("wave_residual_tol", Kind::Float, "1e-9", "gate: profile equation residual"),
    spec("wave_error_tol", Kind::Float, "1e-6", "gate: L2 distance to the translated profile"),
];

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let grid = grid(p, "length", "n")?;
    let disp = Dispersion::new(p.f64("mu"))?;
    let mut config = SolverConfig::new(grid, disp, p.f64("dt"), p.f64("t_end"));
    config.dealias_fraction = p.f64("dealias_fraction");
    config.monitor_stride = p.usize("monitor_stride");
    config.validate()?;
    let (u0, wave) = match p.choice("datum") {
        "zero" => (SpectralField::zeros(grid), None),
        "wave" => {
            let wave = petviashvili_wave(p.f64("speed"), &disp, &grid)?;
            (wave.profile.clone(), Some(wave))
        }
        _ => (smooth_random(grid, g.seed, p.f64("amplitude"), p.f64("decay")), None),
    };
    let trajectory = simulate(&u0, &config)?;
    let last = trajectory.last_field().expect("trajectory keeps its end point");
    let final_time = trajectory.samples.last().map_or(0.0, |s| s.t);
    let mut gates = vec![
        Gate::at_most("mean_drift", trajectory.mean_drift(), p.f64("mean_drift_tol")),
        Gate::at_most("l2_drift", trajectory.l2_drift(), p.f64("l2_drift_tol")),
    ];
    let wave_json = match &wave {
        Some(w) => {
            let target = w.at(final_time);
            let error = last.sub(&target)?.l2_norm();
            gates.push(Gate::below("wave_residual", w.residual, p.f64("wave_residual_tol")));
            gates.push(Gate::below("wave_shape_error", error, p.f64("wave_error_tol")));
            json!({
                "speed": w.speed,
                "residual": w.residual,
                "iterations": w.iterations,
                "profile_l2_norm": w.profile.l2_norm(),
                "shape_error": error,
            })
        }
        None => serde_json::Value::Null,
    };
    let max_abs = last.to_physical().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let result = json!({
        "samples_recorded": trajectory.samples.len(),
        "final_time": final_time,
        "mean_drift": trajectory.mean_drift(),
        "l2_drift": trajectory.l2_drift(),
        "initial_l2_mass": trajectory.samples[0].l2_mass,
        "final_l2_mass": last.l2_norm_sq(),
        "final_max_abs": max_abs,
        "wave": wave_json,
    });
    let csv = trajectory.to_csv(p.f64("s"));
    Ok(Outcome { result, gates, tables: vec![Table { name: "trajectory".into(), csv }] })
}
