use super::*;
use crate::report::{num, Gate, Table};
use kawahara::illposed::{growth_fit, IllposedConfig};
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "illposed",
    about: "Growth of the third Picard iterate for frequency-box data and its fitted exponent",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("s", Kind::Float, "-5/2", "Sobolev index"),
    spec("N_list", Kind::Floats, "128,256,512,1024,2048", "frequencies of the datum sweep"),
    spec("t_eval", Kind::Float, "1/2", "evaluation time in (0, 1]"),
    spec("nodes", Kind::Int, "16", "Gauss-Legendre nodes per panel and dimension"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("slope_tolerance", Kind::Float, "0.3", "gate: distance of the corrected slope from -2s-9/2"),
    spec("refinement_tolerance", Kind::Float, "0.02", "largest change of the G1 norm when the nodes double"),
];

fn run(p: &Params, _: &Globals) -> Result<Outcome, CliError> {
    let config = IllposedConfig {
        s: p.f64("s"),
        n_list: p.floats("N_list"),
        t_eval: p.f64("t_eval"),
        nodes: p.usize("nodes"),
        mu: p.f64("mu"),
        slope_tolerance: p.f64("slope_tolerance"),
        refinement_tolerance: p.f64("refinement_tolerance"),
    };
    let fit = growth_fit(&config)?;
    let gap = (fit.slope_corrected - fit.expected_exponent).abs();
    let gates = vec![Gate::at_most("slope_gap", gap, config.slope_tolerance)];
    let table = Table::new(
        "growth",
        "N,halfwidth,A1_norm,A2_norm,A3_norm,A3_lower,A3_upper,G1_share,G2_share,refinement_change",
        fit.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                num(r.n),
                num(r.halfwidth),
                num(r.a1_norm),
                num(r.a2_norm),
                num(r.g1_norm),
                num(r.a3_lower),
                num(r.a3_upper),
                num(r.g1_share),
                num(r.remainder_share),
                num(r.refinement_change)
            )
        }),
    );
    Ok(Outcome { result: json!({ "fit": to_json(&fit), "slope_gap": gap }), gates, tables: vec![table] })
}
