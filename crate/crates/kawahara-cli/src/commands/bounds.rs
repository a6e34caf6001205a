use super::*;
use crate::report::{num, Gate, Table};
use kawahara::analysis::{m5_bound_audit, sigma3_bound_audit, sigma4_bound_audit, BoundAuditConfig, BoundCheckReport};
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "verify-bounds",
    about: "Sample the multiplier bounds for sigma3, sigma4 and M5 at two dyadic caps",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("N", Kind::Float, "16", "I-operator threshold"),
    spec("s", Kind::Float, "-1.75", "Sobolev index"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("cap", Kind::Int, "6", "dyadic cap exponent of the first pass; the second uses cap + 1"),
    spec("samples", Kind::Int, "100000", "accepted samples per audit and cap"),
    spec("fd_step", Kind::Float, "1e-3", "relative finite-difference step of the sigma3 derivatives"),
    spec("singular_band", Kind::Float, "1e-6", "relative distance kept from singular sets"),
    spec("drift_tol", Kind::Float, "2", "gate: ratio of the maximal ratios at the two caps"),
];

type Audit = fn(&BoundAuditConfig) -> kawahara::Result<BoundCheckReport>;

const AUDITS: [(&str, Audit); 3] =
    [("sigma3", sigma3_bound_audit), ("sigma4", sigma4_bound_audit), ("m5", m5_bound_audit)];

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let cap = p.u64("cap");
    let base = BoundAuditConfig {
        threshold: p.f64("N"),
        s: p.f64("s"),
        mu: p.f64("mu"),
        cap_exponent: u32::try_from(cap).map_err(|_| invalid("cap", format!("too large: {cap}")))?,
        samples: at_least_one(p, "samples")?,
        seed: g.seed,
        fd_step: p.f64("fd_step"),
        singular_band: p.f64("singular_band"),
    };
    let mut gates = Vec::new();
    let mut tables = Vec::new();
    let mut audits = Vec::new();
    for (name, audit) in AUDITS {
        let low = audit(&base)?;
        let high = audit(&BoundAuditConfig { cap_exponent: base.cap_exponent + 1, ..base.clone() })?;
        let drift = spread(&[low.max_ratio, high.max_ratio]);
        gates.push(Gate::below(format!("{name}_max_ratio_drift"), drift, p.f64("drift_tol")));
        let mut rows = Vec::new();
        for (c, report) in [(base.cap_exponent, &low), (base.cap_exponent + 1, &high)] {
            rows.push(format!("{c},all,{},{},{}", report.samples_evaluated, num(report.min_ratio), num(report.max_ratio)));
            for r in &report.scales {
                rows.push(format!("{c},{},{},{},{}", r.label, r.count, num(r.min_ratio), num(r.max_ratio)));
            }
        }
        tables.push(Table::new(name, "cap,scale,count,min_ratio,max_ratio", rows));
        audits.push(json!({ "name": name, "cap_low": to_json(&low), "cap_high": to_json(&high), "drift": drift }));
    }
    Ok(Outcome { result: json!({ "audits": audits }), gates, tables })
}
