use super::*;
use crate::report::{num, Gate, Table};
use kawahara::analysis::{linear_estimate_audit, EstimateKind, LinearAuditConfig};
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "strichartz",
    about: "Measure Strichartz, maximal-function and smoothing ratios of the free flow on dyadic shells",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("k_min", Kind::Int, "4", "smallest shell exponent"),
    spec("k_max", Kind::Int, "9", "largest shell exponent"),
    spec("q", Kind::Floats, "6,8,inf", "time exponents of the Strichartz pairs"),
    spec("r", Kind::Floats, "6,4,2", "space exponents of the Strichartz pairs"),
    spec("trials", Kind::Int, "32", "random unit data per shell"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("n", Kind::Int, "1024", "modes per shell grid"),
    spec("base_length", Kind::Float, "1024", "box length at k = 0, halved per shell"),
    spec("base_time", Kind::Float, "8", "time window at k = 0, divided by 32 per shell"),
    spec("initial_time_samples", Kind::Int, "512", "first time resolution"),
    spec("max_time_samples", Kind::Int, "65536", "finest time resolution"),
    spec("time_tolerance", Kind::Float, "0.01", "relative change accepted when time samples double"),
    spec("slope_tolerance", Kind::Float, "0.15", "gate: |log2 slope| of each gated ratio against k"),
    spec("unitarity_tol", Kind::Float, "1e-12", "gate: deviation of the (inf, 2) ratio from 1"),
];

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let (q, r) = (p.floats("q"), p.floats("r"));
    if q.len() != r.len() {
        return Err(invalid("r", format!("{} time exponents but {} space exponents", q.len(), r.len())));
    }
    let (k_min, k_max) = (p.u64("k_min"), p.u64("k_max"));
    if k_min > k_max || k_max > 30 {
        return Err(invalid("k_max", format!("need k_min <= k_max <= 30, got {k_min}..{k_max}")));
    }
    let config = LinearAuditConfig {
        ks: (k_min as u32..=k_max as u32).collect(),
        pairs: q.into_iter().zip(r).collect(),
        trials: p.usize("trials"),
        seed: g.seed,
        mu: p.f64("mu"),
        n: p.usize("n"),
        base_length: p.f64("base_length"),
        base_time: p.f64("base_time"),
        initial_time_samples: p.usize("initial_time_samples"),
        max_time_samples: p.usize("max_time_samples"),
        time_tolerance: p.f64("time_tolerance"),
        slope_tolerance: p.f64("slope_tolerance"),
    };
    let report = linear_estimate_audit(&config)?;
    let mut gates = Vec::new();
    for t in report.tables.iter().filter(|t| t.gated) {
        gates.push(Gate::at_most(format!("{} slope", t.label), t.slope.abs(), config.slope_tolerance));
    }
    let tol = p.f64("unitarity_tol");
    gates.push(Gate::at_most("unitarity_defect", report.unitarity_defect, tol));
    let energy = report
        .tables
        .iter()
        .find(|t| matches!(t.kind, EstimateKind::Strichartz { q, r } if q.is_infinite() && r == 2.0));
    if let Some(t) = energy {
        let worst = t.max_ratio.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        gates.push(Gate::at_most("L^inf_t L^2_x ratio deviation", worst, tol));
    }
    let mut ratios = Vec::new();
    for t in &report.tables {
        for (k, x) in t.ks.iter().zip(&t.max_ratio) {
            ratios.push(format!("{},{k},{}", t.label, num(*x)));
        }
    }
    let tables = vec![
        Table::new("ratios", "estimate,k,max_ratio", ratios),
        Table::new(
            "slopes",
            "estimate,slope,gated,pass",
            report.tables.iter().map(|t| format!("{},{},{},{}", t.label, num(t.slope), t.gated, t.pass)),
        ),
    ];
    Ok(Outcome { result: json!({ "audit": to_json(&report) }), gates, tables })
}
