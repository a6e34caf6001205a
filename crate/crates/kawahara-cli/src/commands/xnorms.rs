use super::*;
use crate::report::{num, Gate, Table};
use kawahara::analysis::{fbar_norm, psi, shell_energy_fractions, xk_norm, xsb_norm, SpaceTimeField};
use kawahara::solver::Stepper;
use kawahara::spectral::{free_evolve, Dispersion};
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "xnorms",
    about: "Space-time norms X^{s,b}, X_k and F-bar of a windowed trajectory on [-2, 2]",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("length", Kind::Float, "16pi", "periodic box length"),
    spec("n", Kind::Int, "64", "number of modes (power of two)"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("amplitude", Kind::Float, "0.1", "peak value of the random datum"),
    spec("decay", Kind::Float, "4", "datum coefficients decay like <xi>^-decay"),
    spec("time_samples", Kind::Int, "2048", "uniform time samples on [-2, 2)"),
    spec("solver_dt", Kind::Float, "1e-3", "largest solver step"),
    spec("nonlinear", Kind::Bool, "true", "evolve by the full equation instead of the free flow"),
    spec("s", Kind::Float, "-1.75", "Sobolev index of the X^{s,b} and F-bar norms"),
    spec("b", Kind::Float, "1/2", "modulation exponent of the X^{s,b} norm"),
    spec("shell", Kind::Int, "2", "frequency shell of the reported X_k norm"),
    spec("plancherel_tol", Kind::Float, "1e-10", "gate: relative Plancherel defect"),
    spec("fraction_tol", Kind::Float, "1e-12", "gate: deviation of the shell fractions' sum from 1"),
];

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let grid = grid(p, "length", "n")?;
    let disp = Dispersion::new(p.f64("mu"))?;
    let samples = p.usize("time_samples");
    if samples < 16 || samples % 2 != 0 {
        return Err(invalid("time_samples", format!("need an even count of at least 16, got {samples}")));
    }
    let dt = 4.0 / samples as f64;
    let t0 = -2.0;
    let u0 = smooth_random(grid, g.seed, p.f64("amplitude"), p.f64("decay"));

    // Forward half from t = 0; the backward half uses u(-t, x) = v(t, -x)
    // where v starts from the reflected datum.
    let half = samples / 2;
    let forward = |start: &SpectralField| -> Result<Vec<SpectralField>, CliError> {
        let mut out = vec![start.clone()];
        if p.bool("nonlinear") {
            let mut stepper = Stepper::new(grid, disp, positive(p, "solver_dt")?.min(dt), 2.0 / 3.0);
            for _ in 0..half {
                let next = stepper.advance(out.last().unwrap(), dt)?;
                out.push(next);
            }
        } else {
            for j in 1..=half {
                out.push(free_evolve(start, j as f64 * dt, &disp));
            }
        }
        Ok(out)
    };
    let ahead = forward(&u0)?;
    let behind = forward(&u0.reflect())?;
    let mut fields: Vec<SpectralField> = (1..=half).rev().map(|j| behind[j].reflect()).collect();
    fields.extend(ahead.into_iter().take(half));

    let f = SpaceTimeField::from_samples(&fields, t0, dt, psi)?;
    let direct: f64 =
        fields.iter().enumerate().map(|(j, u)| psi(t0 + j as f64 * dt).powi(2) * u.l2_norm_sq()).sum::<f64>() * dt;
    let l2 = xsb_norm(&f, 0.0, 0.0, &disp);
    let plancherel = (l2 * l2 - direct).abs() / direct;
    let (s, b, shell) = (p.f64("s"), p.f64("b"), p.u64("shell") as u32);
    let xsb = xsb_norm(&f, s, b, &disp);
    let xk = xk_norm(&f, shell, &disp);
    let fractions = shell_energy_fractions(&f, &disp);
    let fraction_sum: f64 = fractions.iter().sum();
    let fbar = fbar_norm(&fields, t0, dt, s, &disp)?;
    let gates = vec![
        Gate::at_most("plancherel_defect", plancherel, p.f64("plancherel_tol")),
        Gate::at_most("fraction_sum_defect", (fraction_sum - 1.0).abs(), p.f64("fraction_tol")),
    ];
    let result = json!({
        "time_step": dt,
        "l2_norm": l2,
        "plancherel_defect": plancherel,
        "xsb_norm": xsb,
        "xk_norm": xk,
        "fbar_norm": fbar,
        "shell_fractions": fractions,
    });
    let table = Table::new(
        "shells",
        "j,fraction",
        fractions.iter().enumerate().map(|(j, x)| format!("{j},{}", num(*x))),
    );
    Ok(Outcome { result, gates, tables: vec![table] })
}
