//! Periodic Fourier representation, the free flow, dyadic cutoffs, norms and scaling.

mod dispersion;
mod dyadic;
pub mod fft;
mod field;
mod grid;
pub mod io;
mod multiplier;

pub use dispersion::{dispersive_order_audit, free_evolve, Dispersion, DispersiveOrderReport};
pub use dyadic::{eta, eta0, eta_low, project_dyadic, project_low, DyadicShell};
pub use field::SpectralField;
pub(crate) use field::mode_key as field_seed;
pub use grid::Grid;
pub use multiplier::IMultiplier;

use crate::error::{invalid, Result};
use crate::sum::Neumaier;

/// `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
#[inline]
pub fn japanese(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// `(Σ ⟨ξ_m⟩^{2s} |û_m|² · 2π/L)^{1/2}`.
pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    let g = u.grid();
    let mut acc = Neumaier::new();
    for (j, c) in u.coeffs().iter().enumerate() {
        acc.add((1.0 + g.freq(j).powi(2)).powf(s) * c.norm_sqr());
    }
    (acc.value() * g.spacing()).sqrt()
}

/// Homogeneous seminorm with weight `|ξ|^{2s}`, zero mode excluded.
pub fn homogeneous_seminorm(u: &SpectralField, s: f64) -> f64 {
    let g = u.grid();
    let mut acc = Neumaier::new();
    for (j, c) in u.coeffs().iter().enumerate().skip(1) {
        acc.add(g.freq(j).abs().powf(2.0 * s) * c.norm_sqr());
    }
    (acc.value() * g.spacing()).sqrt()
}

/// `λ⁴ u(λx)` on the box `L/λ` with the same number of modes.
pub fn rescale(u: &SpectralField, lambda: f64) -> Result<SpectralField> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", format!("scale must be positive, got {lambda}")));
    }
    let g = Grid::new(u.grid().length() / lambda, u.grid().n())?;
    let factor = lambda.powi(3);
    let coeffs = u.coeffs().iter().map(|c| c * factor).collect();
    SpectralField::from_coeffs(g, coeffs, u.is_real())
}

/// Scaling map restricted to `λ ∈ (0, 1]`.
pub fn rescale_datum(u0: &SpectralField, lambda: f64) -> Result<SpectralField> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid("lambda", format!("must lie in (0, 1], got {lambda}")));
    }
    rescale(u0, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_norm() {
        let g = Grid::new(10.0, 16).unwrap();
        let mut u = SpectralField::zeros(g);
        u.coeffs_mut()[3] = num_complex::Complex64::new(1.0, 0.0);
        let xi = g.freq(3);
        let expected = japanese(xi).powf(-1.5) * g.spacing().sqrt();
        assert!((sobolev_norm(&u, -1.5) - expected).abs() < 1e-15);
        assert_eq!(sobolev_norm(&SpectralField::zeros(g), 0.3), 0.0);
    }

    #[test]
    fn l2_matches_spatial_quadrature() {
        let g = Grid::new(7.0, 128).unwrap();
        let u = SpectralField::random_real(g, 11, |xi| (-0.2 * xi * xi).exp());
        let spatial: f64 = u.to_physical().iter().map(|v| v * v).sum::<f64>() * g.dx();
        assert!((sobolev_norm(&u, 0.0).powi(2) - spatial).abs() < 1e-12 * spatial);
    }

    #[test]
    fn rescaling_exponents() {
        let g = Grid::new(64.0 * PI, 256).unwrap();
        let u = SpectralField::random_real(g, 4, |xi| 1.0 / (1.0 + xi.powi(4)));
        assert_eq!(rescale_datum(&u, 1.0).unwrap(), u);
        let v = rescale_datum(&u, 0.5).unwrap();
        let r = v.l2_norm() / u.l2_norm();
        assert!((r - 2f64.powf(-3.5)).abs() < 1e-10 * r);
        let r = homogeneous_seminorm(&v, -1.75) / homogeneous_seminorm(&u, -1.75);
        assert!((r - 2f64.powf(-1.75)).abs() < 1e-8 * r);
        assert!(rescale_datum(&u, 1.5).is_err());
        assert!(rescale_datum(&u, 0.0).is_err());
    }

    #[test]
    fn rescaled_field_samples_scaled_function() {
        let g = Grid::new(2.0 * PI, 64).unwrap();
        let u = SpectralField::from_fn(g, |x| x.sin() + 0.5 * (3.0 * x).cos());
        let v = rescale(&u, 0.5).unwrap();
        let expected = SpectralField::from_fn(*v.grid(), |x| {
            0.0625 * ((0.5 * x).sin() + 0.5 * (1.5 * x).cos())
        });
        assert!(v.sub(&expected).unwrap().l2_norm() < 1e-13);
    }
}
