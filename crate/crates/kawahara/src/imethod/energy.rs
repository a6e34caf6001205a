use super::lattice::{
    lambda3_m3, lambda3_sigma3, lambda4_m4_beyond, lambda4_sigma4, lambda5_m5, Sigma3Table, Sigma4Lattice,
};
use super::symbols::Symbols;
use crate::error::{invalid, Error, Result};
use crate::solver::{dealias_cutoff, Stepper, Trajectory, TrajectorySample};
use crate::spectral::{Dispersion, Grid, IMultiplier, SpectralField};
use serde::{Deserialize, Serialize};

/// Largest grid on which `Λ₅(M₅)` is evaluated.
pub const QUINTIC_MAX_MODES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub e2: f64,
    /// `Λ₃(σ₃)`.
    pub corr3: f64,
    /// `Λ₄(σ₄)`.
    pub corr4: f64,
    pub e3: f64,
    pub e4: f64,
    /// Largest imaginary part of the two corrections; nonzero only through rounding.
    pub imag_residue: f64,
    pub de2_dt: Option<f64>,
    pub de4_dt: Option<f64>,
}

impl EnergyReport {
    pub fn csv_header() -> &'static str {
        "t,E2,corr3,corr4,E3,E4,imag_residue"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t, self.e2, self.corr3, self.corr4, self.e3, self.e4, self.imag_residue
        )
    }
}

/// Precomputed symbol tables for one grid.
#[derive(Debug, Clone)]
pub struct EnergyTracker {
    grid: Grid,
    symbols: Symbols,
    cubic: Sigma3Table,
    quartic: Sigma4Lattice,
}

impl EnergyTracker {
    pub fn new(mult: IMultiplier, disp: Dispersion, grid: Grid) -> Result<Self> {
        let symbols = Symbols::new(mult, disp)?.with_spacing(grid.spacing())?;
        let half = grid.n() as i64 / 2;
        let quartic = Sigma4Lattice::new(&symbols, &grid, half)?;
        let cubic = quartic.sigma3().clone();
        Ok(Self { grid, symbols, cubic, quartic })
    }

    pub fn symbols(&self) -> &Symbols {
        &self.symbols
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check(&self, u: &SpectralField) -> Result<()> {
        if !u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if !u.is_real() {
            return Err(invalid("u", "field must be real-valued"));
        }
        Ok(())
    }

    /// `E_I² = ‖Iu‖²`.
    pub fn e2(&self, u: &SpectralField) -> Result<f64> {
        self.check(u)?;
        let mut v = self.symbols.multiplier().apply(u);
        v.set_real(true);
        Ok(v.l2_norm_sq())
    }

    pub fn report(&self, t: f64, u: &SpectralField) -> Result<EnergyReport> {
        let e2 = self.e2(u)?;
        let c3 = lambda3_sigma3(u, &self.cubic)?;
        let c4 = lambda4_sigma4(u, &self.quartic)?;
        let e3 = e2 + c3.re;
        Ok(EnergyReport {
            t,
            e2,
            corr3: c3.re,
            corr4: c4.re,
            e3,
            e4: e3 + c4.re,
            imag_residue: c3.im.abs().max(c4.im.abs()),
            de2_dt: None,
            de4_dt: None,
        })
    }

    /// `E_I² − ‖u‖² = Σ (m² − 1)|û|² · 2π/L`, free of the cancellation in the difference.
    pub fn e2_excess(&self, u: &SpectralField) -> Result<f64> {
        self.check(u)?;
        let g = u.grid();
        let m = self.symbols.multiplier();
        let terms = u.coeffs().iter().enumerate().filter(|(j, _)| *j != g.nyquist_slot()).map(|(j, c)| {
            let w = m.eval_sq(g.freq(j)) - 1.0;
            w * c.norm_sqr()
        });
        Ok(crate::sum::sum(terms) * g.spacing())
    }

    /// `E_I⁴ − ‖u‖²`. The mass is conserved, so this has the same time
    /// derivative as `E_I⁴` with far less rounding.
    pub fn e4_excess(&self, u: &SpectralField) -> Result<f64> {
        let base = self.e2_excess(u)?;
        Ok(base + lambda3_sigma3(u, &self.cubic)?.re + lambda4_sigma4(u, &self.quartic)?.re)
    }

    /// `Λ₃(M₃)`, the exact time derivative of `E_I²`.
    pub fn lambda3(&self, u: &SpectralField) -> Result<f64> {
        self.check(u)?;
        Ok(lambda3_m3(u, &self.symbols)?.re)
    }
}

/// `E_I²`, `E_I³`, `E_I⁴` of a single field.
pub fn modified_energies(u: &SpectralField, mult: IMultiplier, disp: Dispersion) -> Result<EnergyReport> {
    EnergyTracker::new(mult, disp, *u.grid())?.report(0.0, u)
}

/// Fitted constant of `|E_I⁴ − E_I²| ≤ C(‖Iu‖³ + ‖Iu‖⁴)` over a set of fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximityReport {
    /// `|E_I⁴ − E_I²| / (‖Iu‖³ + ‖Iu‖⁴)` per field, zero for the zero field.
    pub ratios: Vec<f64>,
    pub constant: f64,
}

/// Smallest `C` that satisfies the proximity bound on every field; all
/// fields must share one grid.
pub fn proximity_constant(fields: &[SpectralField], mult: IMultiplier, disp: Dispersion) -> Result<ProximityReport> {
    let first = fields.first().ok_or_else(|| invalid("fields", "need at least one field"))?;
    let tracker = EnergyTracker::new(mult, disp, *first.grid())?;
    let ratios = fields
        .iter()
        .map(|u| {
            u.check_same_grid(first)?;
            let report = tracker.report(0.0, u)?;
            let norm = report.e2.sqrt();
            let scale = norm.powi(3) + norm.powi(4);
            Ok(if scale == 0.0 { 0.0 } else { (report.e4 - report.e2).abs() / scale })
        })
        .collect::<Result<Vec<f64>>>()?;
    let constant = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ProximityReport { ratios, constant })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeResidual {
    pub t: f64,
    pub de2_fd: f64,
    pub lambda3: f64,
    pub resid3: f64,
    pub de4_fd: Option<f64>,
    /// `Λ₅(M₅)` over the full lattice hyperplane.
    pub lambda5: Option<f64>,
    /// `|dE⁴/dt − Λ₅(M₅)|`, normalised by the larger term.
    pub resid5: Option<f64>,
    /// Change of `dE⁴/dt` caused by dealiasing: merged frequencies beyond the
    /// cutoff drop out of both the `Λ₅` and the uncancelled `Λ₄` terms.
    pub dealias_defect: Option<f64>,
    /// Residual against `Λ₅(M₅)` plus the dealiasing defect, the exact
    /// derivative for the dealiased system.
    pub resid5_dealiased: Option<f64>,
    /// `|dealias_defect|` relative to `|Λ₅(M₅)|`.
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeAudit {
    pub rows: Vec<DerivativeResidual>,
    pub max_resid3: f64,
    pub max_resid5: Option<f64>,
    pub max_resid5_dealiased: Option<f64>,
    /// Set when dealiasing changes `dE⁴/dt` by more than `1e-3` relative, so
    /// the continuum identity cannot be expected to hold on this grid.
    pub truncation_flagged: bool,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Centered differences of order 4 (interior) or 2 (next to the ends).
fn centered(values: &[f64], i: usize, h: f64) -> Option<f64> {
    if i >= 2 && i + 2 < values.len() {
        Some((8.0 * (values[i + 1] - values[i - 1]) - (values[i + 2] - values[i - 2])) / (12.0 * h))
    } else if i >= 1 && i + 1 < values.len() {
        Some((values[i + 1] - values[i - 1]) / (2.0 * h))
    } else {
        None
    }
}

/// Compares finite-difference derivatives of `E_I²` and `E_I⁴` along a
/// uniformly sampled trajectory with `Λ₃(M₃)` and `Λ₅(M₅)`.
///
/// The energies oscillate at the resonant frequencies `|Ω| ~ |ξ|⁵`, so the
/// sampling step must resolve them (see [`derivative_probe`]). `Λ₅` is
/// evaluated when `quintic` is set and the grid has at most
/// [`QUINTIC_MAX_MODES`] modes.
pub fn energy_derivative_audit(
    trajectory: &Trajectory,
    mult: IMultiplier,
    disp: Dispersion,
    dealias_fraction: f64,
    quintic: bool,
) -> Result<DerivativeAudit> {
    let samples: Vec<(f64, &SpectralField)> =
        trajectory.samples.iter().filter_map(|s| s.field.as_ref().map(|f| (s.t, f))).collect();
    if samples.len() < 3 {
        return Err(invalid("trajectory", "need at least three stored samples"));
    }
    let h = samples[1].0 - samples[0].0;
    for w in samples.windows(2) {
        if ((w[1].0 - w[0].0) - h).abs() > 1e-9 * h.abs() + 8.0 * f64::EPSILON * w[1].0.abs() {
            return Err(invalid("trajectory", "samples must be uniformly spaced"));
        }
    }
    let grid = *samples[0].1.grid();
    let tracker = EnergyTracker::new(mult, disp, grid)?;
    let quintic = quintic && grid.n() <= QUINTIC_MAX_MODES;
    let wide = if quintic { Some(Sigma4Lattice::new(tracker.symbols(), &grid, grid.n() as i64)?) } else { None };
    let e2: Vec<f64> = samples.iter().map(|(_, u)| tracker.e2_excess(u)).collect::<Result<_>>()?;
    let e4: Option<Vec<f64>> = if quintic {
        Some(samples.iter().map(|(_, u)| tracker.e4_excess(u)).collect::<Result<_>>()?)
    } else {
        None
    };
    let cut = dealias_cutoff(&grid, dealias_fraction);
    let mut rows = Vec::new();
    for (i, (t, u)) in samples.iter().enumerate() {
        let Some(de2) = centered(&e2, i, h) else { continue };
        let l3 = tracker.lambda3(u)?;
        let mut row = DerivativeResidual {
            t: *t,
            de2_fd: de2,
            lambda3: l3,
            resid3: relative_gap(de2, l3),
            de4_fd: None,
            lambda5: None,
            resid5: None,
            dealias_defect: None,
            resid5_dealiased: None,
            truncation: None,
        };
        if let (Some(e4), Some(wide)) = (&e4, &wide) {
            let de4 = centered(e4, i, h).expect("same stencil as E2");
            let full = lambda5_m5(u, wide, None)?.re;
            let inside = lambda5_m5(u, wide, Some(cut))?.re;
            let beyond = lambda4_m4_beyond(u, &tracker.cubic, cut)?.re;
            let defect = (inside - full) - beyond;
            row.de4_fd = Some(de4);
            row.lambda5 = Some(full);
            row.resid5 = Some(relative_gap(de4, full));
            row.dealias_defect = Some(defect);
            row.resid5_dealiased = Some(relative_gap(de4, full + defect));
            let scale = full.abs().max((full + defect).abs());
            row.truncation = Some(if scale == 0.0 { 0.0 } else { defect.abs() / scale });
        }
        rows.push(row);
    }
    let max_of = |f: fn(&DerivativeResidual) -> Option<f64>| {
        if quintic {
            Some(rows.iter().filter_map(f).fold(0.0, f64::max))
        } else {
            None
        }
    };
    let max_resid3 = rows.iter().map(|r| r.resid3).fold(0.0, f64::max);
    let max_resid5 = max_of(|r| r.resid5);
    let max_resid5_dealiased = max_of(|r| r.resid5_dealiased);
    let truncation_flagged = rows.iter().filter_map(|r| r.truncation).any(|x| x > 1e-3);
    Ok(DerivativeAudit { rows, max_resid3, max_resid5, max_resid5_dealiased, truncation_flagged })
}

/// Five samples `u(t₀ + kh)`, `k = 0..4`, taken with step `h`: a burst short
/// enough to resolve the fastest resonant oscillation of the energies.
pub fn derivative_probe(
    u: &SpectralField,
    t0: f64,
    h: f64,
    disp: Dispersion,
    dealias_fraction: f64,
) -> Result<Trajectory> {
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid("h", format!("probe step must be positive, got {h}")));
    }
    let mut stepper = Stepper::new(*u.grid(), disp, h, dealias_fraction);
    let mut current = u.clone();
    let mut samples = Vec::with_capacity(5);
    for k in 0..5 {
        if k > 0 {
            current = stepper.step(&current)?;
        }
        samples.push(TrajectorySample {
            t: t0 + k as f64 * h,
            mean: current.mean(),
            l2_mass: current.l2_norm_sq(),
            field: Some(current.clone()),
        });
    }
    Ok(Trajectory { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{simulate, SolverConfig};

    fn mult(n: f64) -> IMultiplier {
        IMultiplier::new(n, -1.75).unwrap()
    }

    #[test]
    fn zero_field_has_zero_energies() {
        let g = Grid::new(16.0, 32).unwrap();
        let r = modified_energies(&SpectralField::zeros(g), mult(8.0), Dispersion::default()).unwrap();
        assert_eq!((r.e2, r.e3, r.e4), (0.0, 0.0, 0.0));
    }

    #[test]
    fn low_frequency_field_is_unmodified() {
        let g = Grid::new(8.0 * std::f64::consts::PI, 64).unwrap();
        let u = SpectralField::random_real(g, 4, |xi| if xi <= 1.0 { 1.0 } else { 0.0 });
        let r = modified_energies(&u, mult(8.0), Dispersion::default()).unwrap();
        let mass = u.l2_norm_sq();
        assert!((r.e2 - mass).abs() < 1e-13 * mass);
        assert_eq!(r.e4, r.e2);
    }

    #[test]
    fn corrections_are_real() {
        let g = Grid::new(2.0 * std::f64::consts::PI, 64).unwrap();
        let u = SpectralField::random_real(g, 9, |xi| 0.3 / (1.0 + 0.02 * xi * xi));
        let r = modified_energies(&u, mult(8.0), Dispersion::new(0.5).unwrap()).unwrap();
        assert!(r.corr3 != 0.0 && r.corr4 != 0.0);
        assert!(r.imag_residue <= 1e-12 * r.e2);
    }

    #[test]
    fn zero_trajectory_has_zero_residual() {
        let g = Grid::new(2.0 * std::f64::consts::PI, 32).unwrap();
        let mut cfg = SolverConfig::new(g, Dispersion::default(), 1e-3, 0.01);
        cfg.monitor_stride = 2;
        let traj = simulate(&SpectralField::zeros(g), &cfg).unwrap();
        let audit = energy_derivative_audit(&traj, mult(8.0), Dispersion::default(), 2.0 / 3.0, true).unwrap();
        assert_eq!(audit.max_resid3, 0.0);
        assert_eq!(audit.max_resid5, Some(0.0));
    }
}
