use super::*;
use crate::report::{num, Gate, Table};
use kawahara::illposed::theta_identity_audit;
use kawahara::imethod::{power_sum_identity_check, HyperplaneTuple, Symbols};
use kawahara::spectral::{Dispersion, IMultiplier};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "identities",
    about: "Audit the power-sum and resonance factorisations and the cancellation built into sigma3 and sigma4",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("samples", Kind::Int, "10000", "tuples per identity"),
    spec("range", Kind::Float, "1000", "real frequencies are uniform in [-range, range]"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("N", Kind::Float, "16", "I-operator threshold of the cancellation checks"),
    spec("s", Kind::Float, "-1.75", "Sobolev index of the cancellation checks"),
    spec("lattice_length", Kind::Float, "16pi", "box length of the lattice tuples"),
    spec("lattice_modes", Kind::Int, "512", "lattice tuples use mode indices in [-modes, modes]"),
    spec("identity_tol", Kind::Float, "1e-11", "gate: relative error of the factorisations"),
    spec("cancel_tol", Kind::Float, "1e-12", "gate: relative residual of M + sigma (h - v)"),
];

/// Independent stream per identity.
fn stream(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag)
}

struct Check {
    name: &'static str,
    samples: usize,
    skipped: usize,
    worst: f64,
}

fn power_sums(k: usize, samples: usize, range: f64, seed: u64) -> Result<Check, CliError> {
    let mut rng = stream(seed, k as u64);
    let mut worst: f64 = 0.0;
    let mut x = vec![0.0; k];
    for _ in 0..samples {
        for v in x.iter_mut().take(k - 1) {
            *v = rng.gen_range(-range..=range);
        }
        x[k - 1] = -x[..k - 1].iter().sum::<f64>();
        worst = worst.max(power_sum_identity_check(&HyperplaneTuple::new(&x)?)?);
    }
    let name = if k == 3 { "power_sums_k3" } else { "power_sums_k4" };
    Ok(Check { name, samples, skipped: 0, worst })
}

/// Draws lattice tuples until `samples` of them have `M ≠ 0` and a regular
/// ratio, and records the largest `|M + σ(h − v)| / |M|`.
fn cancellation(
    name: &'static str,
    samples: usize,
    rng: &mut ChaCha8Rng,
    mut residual: impl FnMut(&mut ChaCha8Rng) -> Option<Option<f64>>,
) -> Result<Check, CliError> {
    let (mut taken, mut skipped, mut worst) = (0usize, 0usize, 0.0f64);
    while taken < samples {
        match residual(rng) {
            None => continue,
            Some(None) => skipped += 1,
            Some(Some(r)) => {
                taken += 1;
                worst = worst.max(r);
            }
        }
        if skipped > 100 * samples {
            return Err(invalid("lattice_modes", format!("{name}: too few regular tuples")));
        }
    }
    Ok(Check { name, samples: taken, skipped, worst })
}

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let samples = at_least_one(p, "samples")?;
    let range = positive(p, "range")?;
    let disp = Dispersion::new(p.f64("mu"))?;
    let symbols = Symbols::new(IMultiplier::new(p.f64("N"), p.f64("s"))?, disp)?;
    let lattice = grid_spacing(p)?;
    let modes = p.u64("lattice_modes") as i64;
    if modes < 1 {
        return Err(invalid("lattice_modes", "need at least one mode"));
    }

    let mut checks = vec![power_sums(3, samples, range, g.seed)?, power_sums(4, samples, range, g.seed)?];
    checks.push(Check {
        name: "theta_factorisation",
        samples,
        skipped: 0,
        worst: theta_identity_audit(&disp, samples, g.seed),
    });

    let draw = |rng: &mut ChaCha8Rng| rng.gen_range(-modes..=modes);
    let mut rng = stream(g.seed, 33);
    checks.push(cancellation("cancellation_k3", samples, &mut rng, |rng| {
        let (a, b) = (draw(rng), draw(rng));
        let c = -a - b;
        if c.abs() > modes {
            return None;
        }
        let x = [a as f64 * lattice, b as f64 * lattice, c as f64 * lattice];
        let m = symbols.m3(x[0], x[1], x[2]);
        if m.norm() == 0.0 {
            return None;
        }
        Some(symbols.sigma3_ratio(x[0], x[1], x[2]).ok().map(|sigma| (m + symbols.hv3(x[0], x[1], x[2]) * sigma).norm() / m.norm()))
    })?);
    let mut rng = stream(g.seed, 44);
    checks.push(cancellation("cancellation_k4", samples, &mut rng, |rng| {
        let (a, b, c) = (draw(rng), draw(rng), draw(rng));
        let d = -a - b - c;
        if d.abs() > modes {
            return None;
        }
        let x = [a as f64 * lattice, b as f64 * lattice, c as f64 * lattice, d as f64 * lattice];
        let m = symbols.m4(&x);
        if m.norm() == 0.0 {
            return None;
        }
        Some(symbols.sigma4_ratio(&x).ok().map(|sigma| (m + symbols.hv4(&x) * sigma).norm() / m.norm()))
    })?);

    let (itol, ctol) = (p.f64("identity_tol"), p.f64("cancel_tol"));
    let tolerance = |c: &Check| if c.name.starts_with("cancellation") { ctol } else { itol };
    let gates = checks.iter().map(|c| Gate::at_most(c.name, c.worst, tolerance(c))).collect();
    let table = Table::new(
        "identities",
        "identity,samples,skipped_singular,max_relative_error,tolerance",
        checks.iter().map(|c| format!("{},{},{},{},{}", c.name, c.samples, c.skipped, num(c.worst), num(tolerance(c)))),
    );
    let result = json!(checks
        .iter()
        .map(|c| json!({ "identity": c.name, "samples": c.samples, "skipped_singular": c.skipped, "max_relative_error": c.worst }))
        .collect::<Vec<_>>());
    Ok(Outcome { result: json!({ "checks": result }), gates, tables: vec![table] })
}

fn grid_spacing(p: &Params) -> Result<f64, CliError> {
    let length = positive(p, "lattice_length")?;
    Ok(2.0 * std::f64::consts::PI / length)
}
