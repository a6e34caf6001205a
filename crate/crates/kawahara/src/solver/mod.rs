//! Integrating-factor RK4 time stepping with a dealiased quadratic term.

mod wave;

pub use wave::{petviashvili_from, petviashvili_wave, profile_equation_residual, PetviashviliOptions, TravelingWave};

use crate::error::{invalid, Error, Result};
use crate::spectral::{fft, sobolev_norm, Dispersion, Grid, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const DIVERGENCE_LIMIT: f64 = 1e15;
const PHASE_GUARD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: Grid,
    pub disp: Dispersion,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_fraction: f64,
    pub monitor_stride: usize,
}

impl SolverConfig {
    pub fn new(grid: Grid, disp: Dispersion, dt: f64, t_end: f64) -> Self {
        Self { grid, disp, dt, t_end, dealias_fraction: 2.0 / 3.0, monitor_stride: 100 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(invalid("t_end", format!("must be non-negative, got {}", self.t_end)));
        }
        if !(self.dealias_fraction > 0.5 && self.dealias_fraction < 1.0) {
            return Err(invalid(
                "dealias_fraction",
                format!("must lie in (1/2, 1), got {}", self.dealias_fraction),
            ));
        }
        if self.monitor_stride == 0 {
            return Err(invalid("monitor_stride", "must be at least 1"));
        }
        let wmax = self.disp.omega(self.grid.max_frequency() + self.grid.spacing()).abs();
        if self.dt * wmax > PHASE_GUARD {
            return Err(invalid(
                "dt",
                format!("dt * max|omega| = {:e} exceeds {PHASE_GUARD:e}", self.dt * wmax),
            ));
        }
        Ok(())
    }
}

/// Largest retained mode index under the dealiasing rule.
pub fn dealias_cutoff(grid: &Grid, fraction: f64) -> i64 {
    (fraction * (grid.n() / 2) as f64).floor() as i64
}

/// Evaluates `−(1/2)∂_x(u²)` pseudospectrally with a reusable buffer.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    grid: Grid,
    keep: Vec<bool>,
    scale: f64,
    derivative: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl Nonlinearity {
    pub fn new(grid: Grid, fraction: f64) -> Self {
        let cut = dealias_cutoff(&grid, fraction);
        let n = grid.n();
        let keep: Vec<bool> = (0..n).map(|j| grid.index(j).abs() <= cut).collect();
        // IFFT → samples carries (2π)^{1/2}/L, squaring doubles it, FFT → coefficients carries (2π)^{-1/2} L/n.
        let scale = (2.0 * PI).sqrt() / (grid.length() * n as f64);
        let derivative = (0..n).map(|j| Complex64::new(0.0, -0.5 * grid.freq(j))).collect();
        Self { grid, keep, scale, derivative, buf: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Coefficients of `P(u²)` with `P` the dealiasing projection, applied before and after squaring.
    pub fn square_into(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        for ((b, &c), &k) in self.buf.iter_mut().zip(u).zip(&self.keep) {
            *b = if k { c } else { Complex64::new(0.0, 0.0) };
        }
        fft::inverse(&mut self.buf);
        for b in self.buf.iter_mut() {
            *b = Complex64::new(b.re * b.re, 0.0);
        }
        fft::forward(&mut self.buf);
        for ((o, b), &k) in out.iter_mut().zip(&self.buf).zip(&self.keep) {
            *o = if k { b * self.scale } else { Complex64::new(0.0, 0.0) };
        }
        enforce_symmetry(&self.grid, out);
    }

    pub fn eval_into(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        self.square_into(u, out);
        for (o, d) in out.iter_mut().zip(&self.derivative) {
            *o *= d;
        }
        out[0] = Complex64::new(0.0, 0.0);
    }
}

/// The product of a real field's samples is real; remove the rounding-level
/// asymmetry so real fields stay exactly Hermitian.
fn enforce_symmetry(grid: &Grid, c: &mut [Complex64]) {
    let half = (grid.n() / 2) as i64;
    c[0].im = 0.0;
    for m in 1..half {
        let a = grid.slot(m).unwrap();
        let b = grid.slot(-m).unwrap();
        let avg = (c[a] + c[b].conj()) * 0.5;
        c[a] = avg;
        c[b] = avg.conj();
    }
    c[grid.nyquist_slot()] = Complex64::new(0.0, 0.0);
}

pub fn nonlinear_rhs(u: &SpectralField, dealias_fraction: f64) -> Result<SpectralField> {
    if !u.is_real() {
        return Err(invalid("u", "nonlinear term requires a real-valued field"));
    }
    let mut nl = Nonlinearity::new(*u.grid(), dealias_fraction);
    let mut out = vec![Complex64::new(0.0, 0.0); u.grid().n()];
    nl.eval_into(u.coeffs(), &mut out);
    SpectralField::from_coeffs(*u.grid(), out, true)
}

/// Lawson integrating-factor RK4 for `û_t = iω(ξ)û + N(û)`.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    disp: Dispersion,
    dt: f64,
    fraction: f64,
    half_phase: Vec<Complex64>,
    nl: Nonlinearity,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    stage: Vec<Complex64>,
}

impl Stepper {
    pub fn new(grid: Grid, disp: Dispersion, dt: f64, dealias_fraction: f64) -> Self {
        let n = grid.n();
        let half_phase = (0..n)
            .map(|j| {
                if j == grid.nyquist_slot() {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, 0.5 * dt * disp.omega(grid.freq(j)))
                }
            })
            .collect();
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            grid,
            disp,
            dt,
            fraction: dealias_fraction,
            half_phase,
            nl: Nonlinearity::new(grid, dealias_fraction),
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z,
        }
    }

    pub fn from_config(config: &SolverConfig) -> Self {
        Self::new(config.grid, config.disp, config.dt, config.dealias_fraction)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dispersion(&self) -> &Dispersion {
        &self.disp
    }

    /// Advances the coefficient vector by one step of size `dt`, in place.
    pub fn step_in_place(&mut self, u: &mut [Complex64]) {
        let h = self.dt;
        let e = &self.half_phase;
        self.nl.eval_into(u, &mut self.k1);
        for j in 0..u.len() {
            self.stage[j] = e[j] * (u[j] + 0.5 * h * self.k1[j]);
        }
        self.nl.eval_into(&self.stage, &mut self.k2);
        for j in 0..u.len() {
            self.stage[j] = e[j] * u[j] + 0.5 * h * self.k2[j];
        }
        self.nl.eval_into(&self.stage, &mut self.k3);
        for j in 0..u.len() {
            self.stage[j] = e[j] * (e[j] * u[j] + h * self.k3[j]);
        }
        self.nl.eval_into(&self.stage, &mut self.k4);
        for j in 0..u.len() {
            let e2 = e[j] * e[j];
            u[j] = e2 * u[j]
                + (h / 6.0) * (e2 * self.k1[j] + 2.0 * e[j] * (self.k2[j] + self.k3[j]) + self.k4[j]);
        }
    }

    pub fn step(&mut self, u: &SpectralField) -> Result<SpectralField> {
        if !u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if !u.is_real() {
            return Err(invalid("u", "time stepping requires a real-valued field"));
        }
        let mut c = u.coeffs().to_vec();
        self.step_in_place(&mut c);
        check_finite(&c, self.dt)?;
        SpectralField::from_coeffs(self.grid, c, true)
    }

    /// Advances by `duration` using the largest step `≤ dt` that divides it.
    pub fn advance(&mut self, u: &SpectralField, duration: f64) -> Result<SpectralField> {
        let steps = ((duration / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut local = self.with_dt(duration / steps as f64);
        let mut c = u.coeffs().to_vec();
        for k in 0..steps {
            local.step_in_place(&mut c);
            if k % 64 == 63 {
                check_finite(&c, (k + 1) as f64 * local.dt)?;
            }
        }
        check_finite(&c, duration)?;
        SpectralField::from_coeffs(self.grid, c, true)
    }

    fn with_dt(&self, dt: f64) -> Stepper {
        if dt.to_bits() == self.dt.to_bits() {
            return self.clone();
        }
        Stepper::new(self.grid, self.disp, dt, self.fraction)
    }
}

fn check_finite(c: &[Complex64], t: f64) -> Result<()> {
    if c.iter().any(|z| !(z.norm() <= DIVERGENCE_LIMIT)) {
        Err(Error::Divergence { t })
    } else {
        Ok(())
    }
}

pub fn step(u: &SpectralField, dt: f64, config: &SolverConfig) -> Result<SpectralField> {
    Stepper::new(config.grid, config.disp, dt, config.dealias_fraction).step(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    #[serde(skip)]
    pub field: Option<SpectralField>,
    pub mean: f64,
    pub l2_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last_field(&self) -> Option<&SpectralField> {
        self.samples.last().and_then(|s| s.field.as_ref())
    }

    pub fn fields(&self) -> impl Iterator<Item = &SpectralField> {
        self.samples.iter().filter_map(|s| s.field.as_ref())
    }

    pub fn mean_drift(&self) -> f64 {
        let m0 = self.samples.first().map(|s| s.mean).unwrap_or(0.0);
        self.samples.iter().map(|s| (s.mean - m0).abs()).fold(0.0, f64::max)
    }

    pub fn l2_drift(&self) -> f64 {
        let q0 = self.samples.first().map(|s| s.l2_mass).unwrap_or(0.0);
        if q0 == 0.0 {
            return self.samples.iter().map(|s| s.l2_mass).fold(0.0, f64::max);
        }
        self.samples.iter().map(|s| ((s.l2_mass - q0) / q0).abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `t, mean, l2_mass, h_s_norm`.
    pub fn to_csv(&self, s: f64) -> String {
        let mut out = String::from("t,mean,l2_mass,h_s_norm\n");
        for sample in &self.samples {
            let hs = sample.field.as_ref().map(|f| sobolev_norm(f, s)).unwrap_or(f64::NAN);
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", sample.t, sample.mean, sample.l2_mass, hs));
        }
        out
    }
}

fn sample(t: f64, c: &[Complex64], grid: Grid) -> Result<TrajectorySample> {
    let field = SpectralField::from_coeffs(grid, c.to_vec(), true)?;
    Ok(TrajectorySample { t, mean: field.mean(), l2_mass: field.l2_norm_sq(), field: Some(field) })
}

/// Integrates from `t = 0` to `t_end`, recording every `monitor_stride` steps and the end point.
pub fn simulate(u0: &SpectralField, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    if !u0.grid().same_as(&config.grid) {
        return Err(Error::GridMismatch);
    }
    if !u0.is_real() {
        return Err(invalid("u0", "datum must be real-valued"));
    }
    let steps = if config.t_end == 0.0 { 0 } else { ((config.t_end / config.dt) - 1e-9).ceil() as usize };
    let dt = if steps == 0 { config.dt } else { config.t_end / steps as f64 };
    let mut stepper = Stepper::new(config.grid, config.disp, dt, config.dealias_fraction);
    let mut c = u0.coeffs().to_vec();
    let mut samples = vec![sample(0.0, &c, config.grid)?];
    for k in 1..=steps {
        stepper.step_in_place(&mut c);
        let t = k as f64 * dt;
        if k % config.monitor_stride == 0 || k == steps {
            check_finite(&c, t)?;
            samples.push(sample(t, &c, config.grid)?);
        }
    }
    Ok(Trajectory { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::free_evolve;

    #[test]
    fn cosine_nonlinearity_closed_form() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let u = SpectralField::from_fn(g, |x| x.cos());
        let out = nonlinear_rhs(&u, 2.0 / 3.0).unwrap();
        let expected = SpectralField::from_fn(g, |x| 0.5 * (2.0 * x).sin());
        for (a, b) in out.coeffs().iter().zip(expected.coeffs()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn constant_field_has_zero_rhs_and_stays_put() {
        let g = Grid::new(10.0, 32).unwrap();
        let u = SpectralField::from_fn(g, |_| 0.7);
        assert!(nonlinear_rhs(&u, 2.0 / 3.0).unwrap().max_abs_coeff() < 1e-15);
        let cfg = SolverConfig::new(g, Dispersion::default(), 1e-3, 0.05);
        let traj = simulate(&u, &cfg).unwrap();
        let last = traj.last_field().unwrap();
        assert!(last.sub(&u).unwrap().max_abs_coeff() < 1e-15);
    }

    #[test]
    fn zero_datum_stays_zero() {
        let g = Grid::new(10.0, 32).unwrap();
        let cfg = SolverConfig::new(g, Dispersion::default(), 1e-3, 0.1);
        let traj = simulate(&SpectralField::zeros(g), &cfg).unwrap();
        assert!(traj.fields().all(|f| f.max_abs_coeff() == 0.0));
    }

    #[test]
    fn rhs_has_zero_integral() {
        let g = Grid::new(30.0, 64).unwrap();
        let u = SpectralField::random_real(g, 8, |xi| (-xi * xi).exp());
        let out = nonlinear_rhs(&u, 2.0 / 3.0).unwrap();
        let integral: f64 = out.to_physical().iter().sum::<f64>() * g.dx();
        assert!(integral.abs() < 1e-14);
        assert!(out.hermitian_defect() == 0.0);
    }

    #[test]
    fn linear_regime_matches_free_flow() {
        let g = Grid::new(16.0 * PI, 64).unwrap();
        let u0 = SpectralField::from_fn(g, |x| 1e-6 * (x / 8.0).cos());
        let cfg = SolverConfig::new(g, Dispersion::default(), 1e-3, 1.0);
        let traj = simulate(&u0, &cfg).unwrap();
        let diff = traj.last_field().unwrap().sub(&free_evolve(&u0, 1.0, &cfg.disp)).unwrap();
        assert!(diff.l2_norm() < 1e-9);
    }

    #[test]
    fn config_guards() {
        let g = Grid::new(10.0, 32).unwrap();
        let mut cfg = SolverConfig::new(g, Dispersion::default(), 1e-3, 1.0);
        assert!(cfg.validate().is_ok());
        cfg.dealias_fraction = 0.4;
        assert!(cfg.validate().is_err());
        cfg.dealias_fraction = 2.0 / 3.0;
        cfg.dt = 1e9;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let g = Grid::new(10.0, 32).unwrap();
        let u0 = SpectralField::from_fn(g, |x| 1e8 * (2.0 * PI * x / 10.0).sin());
        let cfg = SolverConfig::new(g, Dispersion::default(), 1e-2, 1.0);
        assert!(matches!(simulate(&u0, &cfg), Err(Error::Divergence { .. })));
    }
}
