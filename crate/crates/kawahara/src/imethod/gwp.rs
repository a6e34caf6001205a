//! Rescale-and-iterate experiment and the almost-conservation increment.

use super::energy::EnergyTracker;
use super::lattice::{Sigma4Lattice, Support};
use super::symbols::Symbols;
use crate::error::{invalid, Error, Result};
use crate::solver::Stepper;
use crate::spectral::{rescale, rescale_datum, sobolev_norm, Dispersion, Grid, IMultiplier, SpectralField};
use crate::sum::{ordered_sum_complex, ComplexNeumaier};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Exponent of the polynomial growth bound for the `H^{−7/4}` norm.
pub const GROWTH_REFERENCE: f64 = 7.0 / 15.0;
/// Envelope exponent of the unit-time increment of `E_I⁴` in `N`.
pub const INCREMENT_REFERENCE: f64 = -35.0 / 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwpConfig {
    pub eps0: f64,
    /// Threshold `N` of the I-operator.
    pub threshold: f64,
    /// Scaling parameter; chosen by bisection so that `‖Iφ_λ‖ = ε₀` when absent.
    pub lambda: Option<f64>,
    /// Number of unit-time steps.
    pub steps: usize,
    pub s: f64,
    pub mu: f64,
    pub dt: f64,
    pub dealias_fraction: f64,
    /// Also record `E_I⁴` (costly beyond 256 modes).
    pub track_e4: bool,
}

impl Default for GwpConfig {
    fn default() -> Self {
        Self {
            eps0: 0.1,
            threshold: 64.0,
            lambda: None,
            steps: 20,
            s: -1.75,
            mu: 1.0,
            dt: 1e-3,
            dealias_fraction: 2.0 / 3.0,
            track_e4: false,
        }
    }
}

impl GwpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(invalid("eps0", format!("must be positive, got {}", self.eps0)));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l <= 1.0) {
                return Err(invalid("lambda", format!("must lie in (0, 1], got {l}")));
            }
        }
        if self.steps == 0 {
            return Err(invalid("steps", "need at least one step"));
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(invalid("dt", format!("must lie in (0, 1], got {}", self.dt)));
        }
        IMultiplier::new(self.threshold, self.s)?;
        Dispersion::new(self.mu)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwpStep {
    pub step: usize,
    /// Time of the rescaled problem.
    pub t: f64,
    pub e2: f64,
    pub e4: Option<f64>,
    pub pass: bool,
    /// Corresponding time `λ⁵ t` of the original problem.
    pub t_original: f64,
    /// `‖u(t_original)‖_{H^s}` of the original solution.
    pub hs_norm_original: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwpReport {
    pub config: GwpConfig,
    pub lambda: f64,
    pub initial_modified_mass: f64,
    pub bound: f64,
    pub steps: Vec<GwpStep>,
    pub all_pass: bool,
    pub first_violation: Option<usize>,
    /// Least-squares slope of `log ‖u(T)‖_{H^s}` against `log(1 + T)`;
    /// absent when the original times span too little to fit.
    pub growth_exponent: Option<f64>,
    pub growth_reference: f64,
}

fn modified_mass(u: &SpectralField, mult: &IMultiplier) -> f64 {
    let mut v = mult.apply(u);
    v.set_real(true);
    v.l2_norm()
}

/// Largest `λ ∈ (0, 1]` with `‖I φ_λ‖ ≤ ε₀`, by bisection.
pub fn choose_lambda(datum: &SpectralField, mult: &IMultiplier, eps0: f64) -> Result<f64> {
    let size = |l: f64| rescale_datum(datum, l).map(|v| modified_mass(&v, mult));
    if size(1.0)? <= eps0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || mid == lo || mid == hi {
            break;
        }
        if size(mid)? <= eps0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= 0.0 {
        return Err(Error::Unresolvable("no positive scale reaches the smallness target".into()));
    }
    Ok(lo)
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Rescales the datum to `‖Iφ_λ‖ ≤ ε₀`, evolves it over unit time steps and
/// checks the bootstrap bound `E_I² < 4ε₀²` after every step.
pub fn gwp_experiment(config: &GwpConfig, datum: &SpectralField) -> Result<GwpReport> {
    config.validate()?;
    if !datum.is_real() {
        return Err(invalid("datum", "must be real-valued"));
    }
    let mult = IMultiplier::new(config.threshold, config.s)?;
    let disp = Dispersion::new(config.mu)?;
    let lambda = match config.lambda {
        Some(l) => l,
        None => choose_lambda(datum, &mult, config.eps0)?,
    };
    let scaled = rescale_datum(datum, lambda)?;
    let start = modified_mass(&scaled, &mult);
    if start > 2.0 * config.eps0 {
        return Err(invalid(
            "lambda",
            format!("rescaled datum has ||I phi|| = {start:e}, above 2 eps0 = {:e}", 2.0 * config.eps0),
        ));
    }
    let grid = *scaled.grid();
    let tracker = if config.track_e4 { Some(EnergyTracker::new(mult, disp, grid)?) } else { None };
    let bound = 4.0 * config.eps0 * config.eps0;
    let mut stepper = Stepper::new(grid, disp, config.dt, config.dealias_fraction);
    let mut u = scaled;
    let mut steps = Vec::with_capacity(config.steps + 1);
    let record = |k: usize, u: &SpectralField| -> Result<GwpStep> {
        let e2 = modified_mass(u, &mult).powi(2);
        let e4 = match &tracker {
            Some(tr) => Some(tr.report(k as f64, u)?.e4),
            None => None,
        };
        let original = rescale(u, 1.0 / lambda)?;
        Ok(GwpStep {
            step: k,
            t: k as f64,
            e2,
            e4,
            pass: e2 < bound,
            t_original: lambda.powi(5) * k as f64,
            hs_norm_original: sobolev_norm(&original, config.s),
        })
    };
    steps.push(record(0, &u)?);
    for k in 1..=config.steps {
        u = stepper.advance(&u, 1.0)?;
        steps.push(record(k, &u)?);
    }
    let first_violation = steps.iter().find(|s| !s.pass).map(|s| s.step);
    let fit: Vec<&GwpStep> = steps.iter().filter(|s| s.step > 0).collect();
    let xs: Vec<f64> = fit.iter().map(|s| (1.0 + s.t_original).ln()).collect();
    let ys: Vec<f64> = fit.iter().map(|s| s.hs_norm_original.ln()).collect();
    let spread = xs.last().copied().unwrap_or(0.0) - xs.first().copied().unwrap_or(0.0);
    let growth_exponent = if spread > 1e-6 { slope(&xs, &ys) } else { None };
    Ok(GwpReport {
        config: config.clone(),
        lambda,
        initial_modified_mass: start,
        bound,
        all_pass: first_violation.is_none(),
        first_violation,
        steps,
        growth_exponent,
        growth_reference: GROWTH_REFERENCE,
    })
}

/// `∫₀^T e^{iθt} dt` from the precomputed phase `e^{iθT}`.
#[inline]
fn phase_integral(theta: f64, phase: Complex64, horizon: f64) -> Complex64 {
    let x = theta * horizon;
    if x.abs() < 1e-3 {
        let ix = Complex64::new(0.0, x);
        horizon * (1.0 + ix / 2.0 + ix * ix / 6.0 + ix * ix * ix / 24.0 + ix * ix * ix * ix / 120.0)
    } else {
        (phase - 1.0) / Complex64::new(0.0, theta)
    }
}

/// Leading-order increment `∫₀^T Λ₅(M₅; W(t)φ) dt` of `E_I⁴`, integrated
/// exactly in time. It differs from the true increment by `O(‖φ‖⁶)`.
///
/// Cost `O(|support|⁴)`: keep the datum's spectrum sparse.
pub fn linear_flow_increment(datum: &SpectralField, symbols: &Symbols, horizon: f64) -> Result<f64> {
    if !datum.is_real() {
        return Err(invalid("datum", "must be real-valued"));
    }
    let grid = *datum.grid();
    let support = Support::new(datum);
    let modes = support.modes().to_vec();
    let spacing = grid.spacing();
    let disp = *symbols.dispersion();
    let lattice = Sigma4Lattice::new(symbols, &grid, grid.n() as i64)?;
    let omega: Vec<f64> = modes.iter().map(|&(m, _)| disp.omega(m as f64 * spacing)).collect();
    let phase: Vec<Complex64> = omega.iter().map(|&w| Complex64::from_polar(1.0, w * horizon)).collect();
    let half = grid.n() as i64 / 2;
    let mut slot = vec![usize::MAX; (2 * half + 1) as usize];
    for (i, &(m, _)) in modes.iter().enumerate() {
        slot[(m + half) as usize] = i;
    }
    let lookup = |m: i64| -> Option<usize> {
        if m.abs() >= half {
            None
        } else {
            let s = slot[(m + half) as usize];
            (s != usize::MAX).then_some(s)
        }
    };
    let total = ordered_sum_complex(modes.len(), |i1| {
        let (m1, c1) = modes[i1];
        let mut acc = ComplexNeumaier::new();
        for (i2, &(m2, c2)) in modes.iter().enumerate() {
            for (i3, &(m3, c3)) in modes.iter().enumerate() {
                let p = -(m1 + m2 + m3);
                if p.abs() > 2 * half {
                    continue;
                }
                let sigma = lattice.eval([m1, m2, m3, p]);
                if sigma == 0.0 {
                    continue;
                }
                let w123 = omega[i1] + omega[i2] + omega[i3];
                let e123 = phase[i1] * phase[i2] * phase[i3];
                let mut inner = ComplexNeumaier::new();
                for (i4, &(m4, c4)) in modes.iter().enumerate() {
                    let Some(i5) = lookup(p - m4) else { continue };
                    let theta = w123 + omega[i4] + omega[i5];
                    let e = e123 * phase[i4] * phase[i5];
                    inner.add(c4 * modes[i5].1 * phase_integral(theta, e, horizon));
                }
                acc.add(c1 * c2 * c3 * inner.value() * (sigma * p as f64 * spacing));
            }
        }
        acc.value()
    });
    let weight = (2.0 * PI).powf(-1.5) * spacing.powi(4);
    Ok((Complex64::new(0.0, -2.0) * total * weight).re)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementRow {
    pub threshold: f64,
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSweep {
    pub rows: Vec<IncrementRow>,
    pub monotone: bool,
    /// Least-squares slope of `log₂ |increment|` against `log₂ N`.
    pub slope: Option<f64>,
    pub reference_slope: f64,
}

/// Unit-time `E_I⁴` increments of one datum over a list of thresholds.
pub fn increment_sweep(datum: &SpectralField, thresholds: &[f64], s: f64, disp: Dispersion) -> Result<IncrementSweep> {
    let mut rows = Vec::with_capacity(thresholds.len());
    for &n in thresholds {
        let symbols = Symbols::new(IMultiplier::new(n, s)?, disp)?.with_spacing(datum.grid().spacing())?;
        let increment = linear_flow_increment(datum, &symbols, 1.0)?.abs();
        rows.push(IncrementRow { threshold: n, increment });
    }
    let monotone = rows.windows(2).all(|w| w[1].threshold > w[0].threshold && w[1].increment < w[0].increment);
    let usable: Vec<&IncrementRow> = rows.iter().filter(|r| r.increment > 0.0).collect();
    let xs: Vec<f64> = usable.iter().map(|r| r.threshold.log2()).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.increment.log2()).collect();
    Ok(IncrementSweep { rows, monotone, slope: slope(&xs, &ys), reference_slope: INCREMENT_REFERENCE })
}

/// Default sweep datum: random phases on the modes `1 ≤ |m| ≤ cutoff` of the
/// `2π`-periodic box with amplitude `amplitude·⟨ξ⟩^{−decay}`.
pub fn sweep_datum(grid: Grid, seed: u64, amplitude: f64, decay: f64, cutoff: f64) -> SpectralField {
    SpectralField::random_real(grid, seed, move |xi| {
        if xi == 0.0 || xi.abs() > cutoff {
            0.0
        } else {
            amplitude * (1.0 + xi * xi).powf(-decay / 2.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_multiplier_keeps_mass() {
        let g = Grid::new(64.0 * PI, 128).unwrap();
        let datum = SpectralField::random_real(g, 1, |xi| 0.01 * (-xi * xi).exp());
        let config = GwpConfig { threshold: 1e6, lambda: Some(1.0), steps: 3, dt: 1e-2, ..GwpConfig::default() };
        let r = gwp_experiment(&config, &datum).unwrap();
        let e0 = r.steps[0].e2;
        for s in &r.steps {
            assert!((s.e2 - e0).abs() < 1e-12 * e0);
            assert!(s.pass);
        }
    }

    #[test]
    fn bisection_hits_target() {
        let g = Grid::new(8.0 * PI, 64).unwrap();
        let datum = SpectralField::random_real(g, 2, |xi| 5.0 / (1.0 + xi * xi));
        let m = IMultiplier::new(4.0, -1.75).unwrap();
        let l = choose_lambda(&datum, &m, 0.1).unwrap();
        assert!(l < 1.0);
        let size = modified_mass(&rescale_datum(&datum, l).unwrap(), &m);
        assert!((size - 0.1).abs() < 1e-9);
    }

    #[test]
    fn rejects_invalid_config() {
        assert!(GwpConfig { lambda: Some(1.5), ..GwpConfig::default() }.validate().is_err());
        assert!(GwpConfig { steps: 0, ..GwpConfig::default() }.validate().is_err());
    }

    #[test]
    fn phase_integral_branches_agree() {
        for &theta in &[1e-4, 9.9e-4, 1.01e-3, 0.3] {
            let p = Complex64::from_polar(1.0, theta);
            let series = phase_integral(theta, p, 1.0);
            let exact = (p - 1.0) / Complex64::new(0.0, theta);
            assert!((series - exact).norm() < 1e-12, "{theta}");
        }
    }
}
