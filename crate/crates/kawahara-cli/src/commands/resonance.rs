use super::*;
use crate::report::{num, Gate, Table};
use kawahara::analysis::{resonance_size_audit, ResonanceAuditConfig};
use kawahara::spectral::Dispersion;
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "resonance",
    about: "Bracket the resonance ratio |Omega|/(|xi|max^4 |xi|min) and its stability under a larger budget",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("mu", Kind::Floats, "-1,0,0.5,1", "dispersion coefficients to audit (|mu| <= 1)"),
    spec("samples", Kind::Int, "1000000", "accepted samples of the base budget"),
    spec("budget_factor", Kind::Int, "10", "multiplier of the enlarged budget"),
    spec("log10_min", Kind::Float, "-1", "magnitudes are log-uniform from 10^log10_min"),
    spec("log10_max", Kind::Float, "4", "magnitudes are log-uniform up to 10^log10_max"),
    spec("anchor", Kind::Float, "15/8", "value the mu = 0 bracket must contain"),
    spec("move_tol", Kind::Float, "0.1", "gate: relative move of each bracket endpoint"),
];

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let samples = at_least_one(p, "samples")?;
    let factor = at_least_one(p, "budget_factor")?;
    let range = (p.f64("log10_min"), p.f64("log10_max"));
    let anchor = p.f64("anchor");
    let tol = p.f64("move_tol");
    let mut gates = Vec::new();
    let mut brackets = Vec::new();
    let mut scales = Vec::new();
    let mut per_mu = Vec::new();
    for mu in p.floats("mu") {
        let disp = Dispersion::new(mu)?;
        let base = ResonanceAuditConfig { samples, seed: g.seed, log10_range: range };
        let small = resonance_size_audit(&disp, &base)?;
        let large = resonance_size_audit(&disp, &ResonanceAuditConfig { samples: samples * factor, ..base })?;
        let move_min = ((large.min_ratio - small.min_ratio) / small.min_ratio).abs();
        let move_max = ((large.max_ratio - small.max_ratio) / small.max_ratio).abs();
        gates.push(Gate::below(format!("mu={mu} min_move"), move_min, tol));
        gates.push(Gate::below(format!("mu={mu} max_move"), move_max, tol));
        if mu == 0.0 {
            let inside = (small.min_ratio..=small.max_ratio).contains(&anchor)
                && (large.min_ratio..=large.max_ratio).contains(&anchor);
            gates.push(Gate::holds(format!("mu=0 bracket contains {anchor}"), inside));
        }
        for r in [&small, &large] {
            brackets.push(format!("{mu},{},{},{}", r.samples_evaluated, num(r.min_ratio), num(r.max_ratio)));
            for s in &r.scales {
                scales.push(format!("{mu},{},{},{},{},{}", r.samples_evaluated, s.label, s.count, num(s.min_ratio), num(s.max_ratio)));
            }
        }
        per_mu.push(json!({
            "mu": mu,
            "base": to_json(&small),
            "enlarged": to_json(&large),
            "min_move": move_min,
            "max_move": move_max,
        }));
    }
    let tables = vec![
        Table::new("brackets", "mu,samples,min_ratio,max_ratio", brackets),
        Table::new("scales", "mu,samples,scale,count,min_ratio,max_ratio", scales),
    ];
    Ok(Outcome { result: json!({ "audits": per_mu }), gates, tables })
}
