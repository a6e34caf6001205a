//! Solitary-wave profiles by Petviashvili iteration.
//!
//! A wave `u = φ(x − ct)` of the dealiased system satisfies
//! `(ξ⁴ − μξ² − c) φ̂ = −½ P(φ²)^`, where `P` is the dealiasing projection.

use super::Nonlinearity;
use crate::error::{invalid, Error, Result};
use crate::spectral::{Dispersion, Grid, SpectralField};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PetviashviliOptions {
    pub dealias_fraction: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PetviashviliOptions {
    fn default() -> Self {
        Self { dealias_fraction: 2.0 / 3.0, tolerance: 1e-12, max_iterations: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TravelingWave {
    pub profile: SpectralField,
    pub speed: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl TravelingWave {
    /// The exact travelling solution at time `t`.
    pub fn at(&self, t: f64) -> SpectralField {
        self.profile.translate(self.speed * t)
    }
}

fn symbol(disp: &Dispersion, c: f64, xi: f64) -> f64 {
    let x2 = xi * xi;
    x2 * x2 - disp.mu() * x2 - c
}

/// Quadratic term `−½ P(φ²)` in coefficient space.
fn half_square(grid: &Grid, fraction: f64, phi: &[Complex64]) -> Vec<Complex64> {
    let mut nl = Nonlinearity::new(*grid, fraction);
    let mut out = vec![Complex64::new(0.0, 0.0); grid.n()];
    nl.square_into(phi, &mut out);
    for o in out.iter_mut() {
        *o *= -0.5;
    }
    out
}

fn l2(grid: &Grid, c: &[Complex64]) -> f64 {
    (crate::sum::sum(c.iter().map(|z| z.norm_sqr())) * grid.spacing()).sqrt()
}

/// Iterates from an even Gaussian guess centred at `x = 0`.
pub fn petviashvili_wave(c: f64, disp: &Dispersion, grid: &Grid) -> Result<TravelingWave> {
    let guess = SpectralField::from_coeffs(
        *grid,
        (0..grid.n())
            .map(|j| {
                let xi = grid.freq(j);
                Complex64::new(-3.0 * (-xi * xi).exp(), 0.0)
            })
            .collect(),
        true,
    )?;
    petviashvili_from(c, disp, &guess, PetviashviliOptions::default())
}

pub fn petviashvili_from(
    c: f64,
    disp: &Dispersion,
    guess: &SpectralField,
    options: PetviashviliOptions,
) -> Result<TravelingWave> {
    let grid = *guess.grid();
    let cut = super::dealias_cutoff(&grid, options.dealias_fraction);
    let symbols: Vec<f64> = (0..grid.n()).map(|j| symbol(disp, c, grid.freq(j))).collect();
    if let Some(j) = (0..grid.n()).find(|&j| symbols[j] <= 0.0) {
        return Err(invalid(
            "c",
            format!("linear operator is not positive at xi = {} (symbol {})", grid.freq(j), symbols[j]),
        ));
    }
    let keep = |j: usize| grid.index(j).abs() <= cut;
    let mut phi: Vec<Complex64> =
        guess.coeffs().iter().enumerate().map(|(j, &z)| if keep(j) { z } else { Complex64::new(0.0, 0.0) }).collect();
    let mut iterations = 0;
    loop {
        let nphi = half_square(&grid, options.dealias_fraction, &phi);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..grid.n() {
            num += (phi[j].conj() * phi[j] * symbols[j]).re;
            den += (phi[j].conj() * nphi[j]).re;
        }
        if den == 0.0 || !num.is_finite() {
            return Err(Error::NonConvergence { iterations, residual: f64::NAN });
        }
        let factor = (num / den).powi(2);
        let next: Vec<Complex64> = (0..grid.n())
            .map(|j| if keep(j) { factor * nphi[j] / symbols[j] } else { Complex64::new(0.0, 0.0) })
            .collect();
        let step: Vec<Complex64> = next.iter().zip(&phi).map(|(a, b)| a - b).collect();
        let distance = l2(&grid, &step);
        phi = next;
        iterations += 1;
        let scale = l2(&grid, &phi).max(1.0);
        if distance < options.tolerance * scale {
            break;
        }
        if iterations >= options.max_iterations {
            return Err(Error::NonConvergence { iterations, residual: residual(&grid, disp, c, &phi, options) });
        }
    }
    let res = residual(&grid, disp, c, &phi, options);
    let mut profile = SpectralField::from_coeffs(grid, phi, true)?;
    profile.enforce_hermitian();
    Ok(TravelingWave { profile, speed: c, residual: res, iterations })
}

fn residual(grid: &Grid, disp: &Dispersion, c: f64, phi: &[Complex64], options: PetviashviliOptions) -> f64 {
    let nphi = half_square(grid, options.dealias_fraction, phi);
    let r: Vec<Complex64> =
        (0..grid.n()).map(|j| symbol(disp, c, grid.freq(j)) * phi[j] - nphi[j]).collect();
    l2(grid, &r)
}

/// L² norm of `−cφ + μφ'' + φ'''' + φ²/2` evaluated with an undealiased product.
pub fn profile_equation_residual(profile: &SpectralField, disp: &Dispersion, c: f64) -> f64 {
    let grid = *profile.grid();
    let lin = profile.map_real_multiplier(|xi| -symbol(disp, c, xi));
    let phys = profile.to_physical();
    let sq: Vec<f64> = phys.iter().map(|v| 0.5 * v * v).collect();
    let quad = SpectralField::from_physical(grid, &sq).expect("grid-sized");
    let total = lin.scale(-1.0).add(&quad).expect("same grid");
    total.l2_norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Grid, Dispersion) {
        (Grid::new(64.0, 256).unwrap(), Dispersion::new(1.0).unwrap())
    }

    #[test]
    fn converges_with_small_residual() {
        let (g, d) = setup();
        let w = petviashvili_wave(-2.0, &d, &g).unwrap();
        assert!(w.residual < 1e-9, "residual {}", w.residual);
        assert!(w.profile.l2_norm() > 1e-3);
        assert!(profile_equation_residual(&w.profile, &d, -2.0) < 1e-8);
    }

    #[test]
    fn profile_is_even() {
        let (g, d) = setup();
        let w = petviashvili_wave(-2.0, &d, &g).unwrap();
        let r = w.profile.reflect();
        let odd = w.profile.sub(&r).unwrap().l2_norm();
        let even = w.profile.add(&r).unwrap().l2_norm();
        assert!(odd / even < 1e-8);
    }

    #[test]
    fn translation_equivariance() {
        let (g, d) = setup();
        let base = petviashvili_wave(-2.0, &d, &g).unwrap();
        let guess = SpectralField::from_coeffs(
            g,
            (0..g.n()).map(|j| Complex64::new(-3.0 * (-g.freq(j).powi(2)).exp(), 0.0)).collect(),
            true,
        )
        .unwrap()
        .translate(5.3);
        let shifted = petviashvili_from(-2.0, &d, &guess, PetviashviliOptions::default()).unwrap();
        let back = shifted.profile.translate(-5.3);
        assert!(back.sub(&base.profile).unwrap().l2_norm() < 1e-9);
    }

    #[test]
    fn rejects_indefinite_operator() {
        let (g, d) = setup();
        assert!(petviashvili_wave(0.1, &d, &g).is_err());
    }
}
