use super::field::SpectralField;
use crate::error::{invalid, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `ω(ξ) = μξ³ − ξ⁵` with `|μ| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    mu: f64,
}

impl Dispersion {
    pub fn new(mu: f64) -> Result<Self> {
        if !mu.is_finite() || mu.abs() > 1.0 {
            return Err(invalid("mu", format!("|mu| must be at most 1, got {mu}")));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn omega(&self, xi: f64) -> f64 {
        let xi2 = xi * xi;
        xi * xi2 * (self.mu - xi2)
    }

    #[inline]
    pub fn omega_prime(&self, xi: f64) -> f64 {
        let xi2 = xi * xi;
        3.0 * self.mu * xi2 - 5.0 * xi2 * xi2
    }

    #[inline]
    pub fn omega_second(&self, xi: f64) -> f64 {
        6.0 * self.mu * xi - 20.0 * xi * xi * xi
    }

    /// `ω(a) + ω(b) − ω(a+b)` in the factored form `ab(a+b)(5(a²+ab+b²) − 3μ)`.
    #[inline]
    pub fn resonance(&self, a: f64, b: f64) -> f64 {
        a * b * (a + b) * (5.0 * (a * a + a * b + b * b) - 3.0 * self.mu)
    }

    pub fn resonance_direct(&self, a: f64, b: f64) -> f64 {
        self.omega(a) + self.omega(b) - self.omega(a + b)
    }
}

impl Default for Dispersion {
    fn default() -> Self {
        Self { mu: 1.0 }
    }
}

/// The free flow `W(t)`: multiplies each coefficient by `exp(iω(ξ)t)`.
pub fn free_evolve(u: &SpectralField, t: f64, disp: &Dispersion) -> SpectralField {
    let mut out = u.map_multiplier(|xi| Complex64::from_polar(1.0, disp.omega(xi) * t));
    out.set_real(u.is_real());
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersiveOrderReport {
    pub samples: usize,
    pub first_min: f64,
    pub first_max: f64,
    pub second_min: f64,
    pub second_max: f64,
}

/// Brackets `|ω'(ξ)|/|ξ|⁴` and `|ω''(ξ)|/|ξ|³` over the supplied frequencies.
pub fn dispersive_order_audit(disp: &Dispersion, xi: &[f64]) -> Result<DispersiveOrderReport> {
    if xi.is_empty() {
        return Err(invalid("xi", "no samples"));
    }
    if let Some(bad) = xi.iter().find(|x| !(x.abs() >= 2.0)) {
        return Err(invalid("xi", format!("samples must satisfy |xi| >= 2, got {bad}")));
    }
    let mut r = DispersiveOrderReport {
        samples: xi.len(),
        first_min: f64::INFINITY,
        first_max: 0.0,
        second_min: f64::INFINITY,
        second_max: 0.0,
    };
    for &x in xi {
        let a = x.abs();
        let first = disp.omega_prime(x).abs() / a.powi(4);
        let second = disp.omega_second(x).abs() / a.powi(3);
        r.first_min = r.first_min.min(first);
        r.first_max = r.first_max.max(first);
        r.second_min = r.second_min.min(second);
        r.second_max = r.second_max.max(second);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn omega_values() {
        let d = Dispersion::new(1.0).unwrap();
        assert_eq!(d.omega(0.0), 0.0);
        assert_eq!(d.omega(1.0), 0.0);
        assert_eq!(d.omega(2.0), -24.0);
        assert_eq!(d.omega(-2.0), 24.0);
    }

    #[test]
    fn rejects_large_mu() {
        assert!(Dispersion::new(1.5).is_err());
        assert!(Dispersion::new(0.0).is_ok());
    }

    #[test]
    fn resonance_forms_agree() {
        let d = Dispersion::new(0.0).unwrap();
        assert_eq!(d.resonance(1.0, 1.0), 30.0);
        assert_eq!(d.resonance_direct(1.0, 1.0), 30.0);
        let d = Dispersion::new(0.7).unwrap();
        for &(a, b) in &[(1.3, -0.2), (5.0, 2.5), (-3.0, 7.0)] {
            let x = d.resonance(a, b);
            let y = d.resonance_direct(a, b);
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn dispersive_order_examples() {
        let d = Dispersion::new(1.0).unwrap();
        let r = dispersive_order_audit(&d, &[4.0]).unwrap();
        assert!((r.first_min - 1232.0 / 256.0).abs() < 1e-14);
        let xs: Vec<f64> = (0..20_000).map(|i| 2.0 * (2048.0f64).powf(i as f64 / 19_999.0)).collect();
        let r = dispersive_order_audit(&d, &xs).unwrap();
        assert!(r.first_min > 1.0 && r.first_max <= 5.0);
        let d0 = Dispersion::new(0.0).unwrap();
        let r = dispersive_order_audit(&d0, &[1e6]).unwrap();
        assert!((r.first_min - 5.0).abs() < 1e-12);
        assert!(dispersive_order_audit(&d, &[1.0]).is_err());
    }

    #[test]
    fn free_flow_properties() {
        let g = Grid::new(32.0, 64).unwrap();
        let d = Dispersion::new(1.0).unwrap();
        let u = SpectralField::random_real(g, 1, |xi| 1.0 / (1.0 + xi.powi(4)));
        let w = free_evolve(&u, 0.37, &d);
        assert!((w.l2_norm() / u.l2_norm() - 1.0).abs() < 1e-13);
        assert!(w.hermitian_defect() < 1e-13);
        let identity = free_evolve(&u, 0.0, &d);
        let mut u_ny = u.clone();
        u_ny.coeffs_mut()[g.nyquist_slot()] = Complex64::new(0.0, 0.0);
        assert_eq!(identity, u_ny);
    }
}
