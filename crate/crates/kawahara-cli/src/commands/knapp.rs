use super::*;
use crate::report::{num, Gate, Table};
use kawahara::analysis::{knapp_sharpness, KnappConfig};
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "knapp",
    about: "Evaluate the Knapp example for the trilinear functional J at several shells",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("n1", Kind::Floats, "256,1024", "shells N1 of the example"),
    spec("l1", Kind::Float, "1", "smaller modulation scale"),
    spec("l2", Kind::Float, "16", "larger modulation scale"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("inner", Kind::Float, "1/4", "half-width constant of the first two boxes"),
    spec("outer", Kind::Float, "4", "half-width constant of the third box"),
    spec("samples", Kind::Int, "1000000", "initial Monte-Carlo samples"),
    spec("factor_tol", Kind::Float, "2", "gate: spread of the scaled quantities across shells"),
];

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let shells = p.floats("n1");
    if shells.is_empty() {
        return Err(invalid("n1", "need at least one shell"));
    }
    let mut reports = Vec::new();
    for &n1 in &shells {
        let config = KnappConfig {
            n1,
            l1: p.f64("l1"),
            l2: p.f64("l2"),
            mu: p.f64("mu"),
            inner: p.f64("inner"),
            outer: p.f64("outer"),
            samples: at_least_one(p, "samples")?,
            seed: g.seed,
            resolution: None,
        };
        reports.push(knapp_sharpness(&config)?);
    }
    let tol = p.f64("factor_tol");
    let j_spread = spread(&reports.iter().map(|r| r.j_scaled).collect::<Vec<_>>());
    let norm_spread = spread(&reports.iter().map(|r| r.norm_scaled).collect::<Vec<_>>());
    let mut gates = vec![
        Gate::at_most("j_scaled_spread", j_spread, tol),
        Gate::at_most("norm_scaled_spread", norm_spread, tol),
    ];
    for r in &reports {
        gates.push(Gate::holds(format!("N1={} converged", r.config.n1), r.j.converged));
    }
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let table = Table::new(
        "shells",
        "n1,width,J,J_std_error,J_closed_form,norm_product,J_scaled,norm_scaled,ratio",
        reports.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{}",
                num(r.config.n1),
                num(r.width),
                num(r.j.value),
                num(r.j.std_error),
                opt(r.j_closed_form),
                num(r.norm_product),
                num(r.j_scaled),
                num(r.norm_scaled),
                num(r.ratio)
            )
        }),
    );
    let result = json!({
        "shells": to_json(&reports),
        "j_scaled_spread": j_spread,
        "norm_scaled_spread": norm_spread,
    });
    Ok(Outcome { result, gates, tables: vec![table] })
}
