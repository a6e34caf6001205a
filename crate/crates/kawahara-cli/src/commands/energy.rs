use super::*;
use crate::report::{num, Gate, Table};
use kawahara::imethod::{derivative_probe, energy_derivative_audit, proximity_constant, EnergyTracker};
use kawahara::solver::Stepper;
use kawahara::spectral::{Dispersion, IMultiplier};
use serde_json::json;

pub const COMMAND: Command = Command {
    name: "energy-track",
    about: "Track the modified energies, audit dE2/dt against the cubic functional and fit the E4-E2 proximity constant",
    params: PARAMS,
    run,
};

const PARAMS: &[ParamSpec] = &[
    spec("length", Kind::Float, "8pi", "periodic box length"),
    spec("n", Kind::Int, "256", "number of modes (power of two)"),
    spec("N", Kind::Float, "16", "I-operator threshold"),
    spec("s", Kind::Float, "-1.75", "Sobolev index of the I-operator"),
    spec("mu", Kind::Float, "1", "third-order dispersion coefficient"),
    spec("dt", Kind::Float, "1e-3", "solver step between audit points"),
    spec("dealias_fraction", Kind::Float, "2/3", "retained fraction of the modes"),
    spec("t_end", Kind::Float, "0.1", "time of the last audit point"),
    spec("audit_points", Kind::Int, "5", "equally spaced audit times in [0, t_end]"),
    spec("probe_step", Kind::Float, "3e-9", "step of the five-sample difference burst"),
    spec("amplitude", Kind::Float, "3", "Gaussian envelope height of the datum"),
    spec("width", Kind::Float, "6", "Gaussian envelope width of the datum"),
    spec("band", Kind::Float, "21", "datum modes with |xi| above this are zero"),
    spec("quintic", Kind::Bool, "false", "also audit dE4/dt against the quintic functional"),
    spec("proximity", Kind::Bool, "true", "fit the E4-E2 proximity constant"),
    spec("proximity_grids", Kind::Ints, "256,512", "mode counts of the proximity fit"),
    spec("proximity_fields", Kind::Int, "20", "random fields per proximity grid"),
    spec("proximity_amplitude", Kind::Float, "0.5", "Gaussian envelope height of the proximity fields"),
    spec("proximity_width", Kind::Float, "8", "Gaussian envelope width of the proximity fields"),
    spec("resid3_tol", Kind::Float, "1e-3", "gate: relative gap between dE2/dt and the cubic functional"),
    spec("proximity_drift_tol", Kind::Float, "2", "gate: spread of the proximity constant across grids"),
];

fn gaussian(amplitude: f64, width: f64, band: f64) -> impl Fn(f64) -> f64 {
    move |xi| if xi.abs() <= band { amplitude * (-(xi / width).powi(2)).exp() } else { 0.0 }
}

fn run(p: &Params, g: &Globals) -> Result<Outcome, CliError> {
    let grid = grid(p, "length", "n")?;
    let disp = Dispersion::new(p.f64("mu"))?;
    let mult = IMultiplier::new(p.f64("N"), p.f64("s"))?;
    let fraction = p.f64("dealias_fraction");
    let dt = positive(p, "dt")?;
    let probe_step = positive(p, "probe_step")?;
    let points = at_least_one(p, "audit_points")?;
    let t_end = p.f64("t_end");
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(invalid("t_end", format!("must be non-negative, got {t_end}")));
    }
    let spacing = if points > 1 { t_end / (points - 1) as f64 } else { 0.0 };
    let quintic = p.bool("quintic");

    let u0 = SpectralField::random_real(grid, g.seed, gaussian(p.f64("amplitude"), p.f64("width"), p.f64("band")));
    let tracker = EnergyTracker::new(mult, disp, grid)?;
    let mut stepper = Stepper::new(grid, disp, dt, fraction);
    let mut u = u0;
    let mut rows = Vec::new();
    let mut points_json = Vec::new();
    let mut worst3: f64 = 0.0;
    let mut worst5: Option<f64> = None;
    for k in 0..points {
        if k > 0 && spacing > 0.0 {
            u = stepper.advance(&u, spacing)?;
        }
        let t = k as f64 * spacing;
        let energies = tracker.report(t, &u)?;
        let probe = derivative_probe(&u, t, probe_step, disp, fraction)?;
        let audit = energy_derivative_audit(&probe, mult, disp, fraction, quintic)?;
        worst3 = worst3.max(audit.max_resid3);
        if let Some(r5) = audit.max_resid5_dealiased {
            worst5 = Some(worst5.map_or(r5, |w| w.max(r5)));
        }
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        for r in &audit.rows {
            rows.push(format!(
                "{},{},{},{},{},{},{},{},{},{}",
                num(r.t),
                num(energies.e2),
                num(energies.corr3),
                num(energies.corr4),
                num(energies.e4),
                num(r.de2_fd),
                num(r.lambda3),
                num(r.resid3),
                opt(r.resid5),
                opt(r.resid5_dealiased),
            ));
        }
        points_json.push(json!({ "energies": to_json(&energies), "audit": to_json(&audit) }));
    }
    let mut gates = vec![Gate::at_most("resid3", worst3, p.f64("resid3_tol"))];
    let mut tables = vec![Table::new(
        "energies",
        "t,E2,corr3,corr4,E4,dE2_dt,lambda3,resid3,resid5,resid5_dealiased",
        rows,
    )];

    let proximity_json = if p.bool("proximity") {
        let count = at_least_one(p, "proximity_fields")?;
        let envelope = gaussian(p.f64("proximity_amplitude"), p.f64("proximity_width"), f64::INFINITY);
        let mut constants = Vec::new();
        let mut per_grid = Vec::new();
        let mut prox_rows = Vec::new();
        for &n in &p.ints("proximity_grids") {
            let n = n as usize;
            if n < 8 || !n.is_power_of_two() {
                return Err(invalid("proximity_grids", format!("n must be a power of two (at least 8), got {n}")));
            }
            let pgrid = Grid::new(grid.length(), n)?;
            let fields: Vec<SpectralField> = (0..count as u64)
                .map(|k| SpectralField::random_real(pgrid, g.seed.wrapping_add(1 + k), &envelope))
                .collect();
            let report = proximity_constant(&fields, mult, disp)?;
            for (k, r) in report.ratios.iter().enumerate() {
                prox_rows.push(format!("{n},{k},{}", num(*r)));
            }
            constants.push(report.constant);
            per_grid.push(json!({ "n": n, "constant": report.constant, "ratios": report.ratios }));
        }
        let drift = spread(&constants);
        gates.push(Gate::at_most("proximity_drift", drift, p.f64("proximity_drift_tol")));
        tables.push(Table::new("proximity", "n,field,ratio", prox_rows));
        json!({ "grids": per_grid, "drift": drift })
    } else {
        serde_json::Value::Null
    };

    let result = json!({
        "max_resid3": worst3,
        "max_resid5_dealiased": worst5,
        "audit_points": points_json,
        "proximity": proximity_json,
    });
    Ok(Outcome { result, gates, tables })
}
