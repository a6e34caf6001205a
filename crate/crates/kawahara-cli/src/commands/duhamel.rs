use super::*;
use crate::report::{num, Gate, Table};
use kawahara::analysis::{duhamel_bilinear, duhamel_step_sensitivity};
use kawahara::spectral::{free_evolve, Dispersion};
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "duhamel",
    about: "Evaluate the windowed Duhamel bilinear operator on two free solutions",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("length", Kind::Float, "16pi", "periodic box length"),
    spec("n", Kind::Int, "64", "number of modes (power of two)"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("amplitude", Kind::Float, "0.1", "peak value of the random data"),
    spec("decay", Kind::Float, "4", "data coefficients decay like <xi>^-decay"),
    spec("intervals", Kind::Int, "512", "uniform time intervals on [-2, 2]"),
    spec("symmetry_tol", Kind::Float, "1e-12", "gate: relative defect of B(u, v) = B(v, u)"),
    spec("sensitivity_tol", Kind::Float, "0.05", "gate: relative change when the time step doubles"),
];

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let grid = grid(p, "length", "n")?;
    let disp = Dispersion::new(p.f64("mu"))?;
    let intervals = p.usize("intervals");
    if intervals < 8 || intervals % 4 != 0 {
        return Err(invalid("intervals", format!("need a multiple of 4, at least 8, got {intervals}")));
    }
    let times: Vec<f64> = (0..=intervals).map(|j| -2.0 + 4.0 * j as f64 / intervals as f64).collect();
    let (amp, decay) = (p.f64("amplitude"), p.f64("decay"));
    let u0 = smooth_random(grid, g.seed, amp, decay);
    let v0 = smooth_random(grid, g.seed.wrapping_add(1), amp, decay);
    let u: Vec<SpectralField> = times.iter().map(|&t| free_evolve(&u0, t, &disp)).collect();
    let v: Vec<SpectralField> = times.iter().map(|&t| free_evolve(&v0, t, &disp)).collect();
    let uv = duhamel_bilinear(&u, &v, &times, &disp)?;
    let vu = duhamel_bilinear(&v, &u, &times, &disp)?;
    let peak = uv.iter().map(|b| b.l2_norm()).fold(0.0, f64::max);
    let asym = uv.iter().zip(&vu).map(|(a, b)| a.sub(b).map(|d| d.l2_norm())).collect::<Result<Vec<_>, _>>()?;
    let symmetry = if peak == 0.0 { 0.0 } else { asym.iter().cloned().fold(0.0, f64::max) / peak };
    let sensitivity = duhamel_step_sensitivity(&u, &v, &times, &disp)?;
    let gates = vec![
        Gate::at_most("symmetry_defect", symmetry, p.f64("symmetry_tol")),
        Gate::at_most("step_sensitivity", sensitivity, p.f64("sensitivity_tol")),
    ];
    let table = Table::new(
        "norms",
        "t,l2_norm",
        times.iter().zip(&uv).map(|(t, b)| format!("{},{}", num(*t), num(b.l2_norm()))),
    );
    let result = json!({
        "max_l2_norm": peak,
        "symmetry_defect": symmetry,
        "step_sensitivity": sensitivity,
    });
    Ok(Outcome { result, gates, tables: vec![table] })
}
