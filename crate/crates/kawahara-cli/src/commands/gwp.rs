use super::*;
use crate::report::{num, Gate, Table};
use kawahara::imethod::{gwp_experiment, increment_sweep, sweep_datum, GwpConfig};
use kawahara::spectral::Dispersion;
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "gwp",
    about: "Iterate the rescaled problem over unit time steps and check the E2 bootstrap bound",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("eps0", Kind::Float, "0.1", "smallness target of the rescaled datum"),
    spec("N", Kind::Float, "64", "I-operator threshold"),
    spec("steps", Kind::Int, "20", "number of unit time steps"),
    spec("s", Kind::Float, "-1.75", "Sobolev index"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("dt", Kind::Float, "1e-3", "solver time step"),
    spec("dealias_fraction", Kind::Float, "2/3", "retained fraction of the modes"),
    spec("lambda", Kind::Float, "0", "scaling parameter in (0, 1]; 0 chooses it by bisection"),
    spec("track_e4", Kind::Bool, "false", "also record E4 (costly beyond 256 modes)"),
    spec("length", Kind::Float, "256pi", "box length of the datum"),
    spec("n", Kind::Int, "1024", "number of modes (power of two)"),
    spec("amplitude", Kind::Float, "1", "peak value of the random datum"),
    spec("decay", Kind::Float, "4", "datum coefficients decay like <xi>^-decay"),
    spec("sweep", Kind::Bool, "true", "run the unit-time E4 increment sweep"),
    spec("sweep_N", Kind::Floats, "8,16,32,64", "thresholds of the increment sweep"),
    spec("sweep_length", Kind::Float, "2pi", "box length of the sweep datum"),
    spec("sweep_n", Kind::Int, "256", "modes of the sweep grid"),
    spec("sweep_amplitude", Kind::Float, "0.5", "sweep datum amplitude"),
    spec("sweep_decay", Kind::Float, "2", "sweep datum decay exponent"),
    spec("sweep_cutoff", Kind::Float, "80", "sweep datum modes above this frequency are zero"),
    spec("sweep_slope_max", Kind::Float, "-3", "gate: largest admissible log2 slope of the increments"),
];

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let lambda = p.f64("lambda");
    let config = GwpConfig {
        eps0: p.f64("eps0"),
        threshold: p.f64("N"),
        lambda: (lambda != 0.0).then_some(lambda),
        steps: p.usize("steps"),
        s: p.f64("s"),
        mu: p.f64("mu"),
        dt: p.f64("dt"),
        dealias_fraction: p.f64("dealias_fraction"),
        track_e4: p.bool("track_e4"),
    };
    config.validate()?;
    let datum = smooth_random(grid(p, "length", "n")?, g.seed, p.f64("amplitude"), p.f64("decay"));
    let report = gwp_experiment(&config, &datum)?;
    let mut gates = vec![Gate::holds("e2_below_4eps0sq", report.all_pass)];
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut tables = vec![Table::new(
        "steps",
        "step,t,E2,E4,pass,t_original,hs_norm_original",
        report.steps.iter().map(|s| {
            format!(
                "{},{},{},{},{},{},{}",
                s.step,
                num(s.t),
                num(s.e2),
                opt(s.e4),
                s.pass,
                num(s.t_original),
                num(s.hs_norm_original)
            )
        }),
    )];

    let sweep_json = if p.bool("sweep") {
        let sgrid = grid(p, "sweep_length", "sweep_n")?;
        let datum = sweep_datum(sgrid, g.seed, p.f64("sweep_amplitude"), p.f64("sweep_decay"), p.f64("sweep_cutoff"));
        let sweep = increment_sweep(&datum, &p.floats("sweep_N"), p.f64("s"), Dispersion::new(p.f64("mu"))?)?;
        gates.push(Gate::holds("increments_monotone", sweep.monotone));
        gates.push(Gate::at_most("increment_slope", sweep.slope.unwrap_or(f64::NAN), p.f64("sweep_slope_max")));
        tables.push(Table::new(
            "sweep",
            "N,increment",
            sweep.rows.iter().map(|r| format!("{},{}", num(r.threshold), num(r.increment))),
        ));
        to_json(&sweep)
    } else {
        serde_json::Value::Null
    };
    let result = json!({ "experiment": to_json(&report), "sweep": sweep_json });
    Ok(Outcome { result, gates, tables })
}

