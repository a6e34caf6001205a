use super::field::SpectralField;
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// Smoothing multiplier: `m = 1` for `|ξ| < N`, `m = (|ξ|/N)^s` for `|ξ| > 2N`.
///
/// On `[N, 2N]`, `log m` is the quintic Hermite interpolant in `log|ξ|`
/// matching value, slope and curvature at both ends, which makes `m` C²
/// and monotone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMultiplier {
    threshold: f64,
    s: f64,
}

impl IMultiplier {
    pub fn new(threshold: f64, s: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(invalid("N", format!("threshold must be positive, got {threshold}")));
        }
        if !(-1.75..=0.0).contains(&s) {
            return Err(invalid("s", format!("s must lie in [-7/4, 0], got {s}")));
        }
        Ok(Self { threshold, s })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `(log m, d log m / d log|ξ|)` at `|ξ|`.
    #[inline]
    fn log_profile(&self, xi: f64) -> (f64, f64) {
        let a = xi.abs();
        let n = self.threshold;
        if a <= n || self.s == 0.0 {
            (0.0, 0.0)
        } else if a >= 2.0 * n {
            (self.s * (a / n).ln(), self.s)
        } else {
            let u = (a / n).ln() / LN_2;
            let u2 = u * u;
            let q = u2 * u * (6.0 - 8.0 * u + 3.0 * u2);
            let dq = u2 * (18.0 - 32.0 * u + 15.0 * u2);
            (self.s * LN_2 * q, self.s * dq)
        }
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        self.log_profile(xi).0.exp()
    }

    #[inline]
    pub fn eval_sq(&self, xi: f64) -> f64 {
        (2.0 * self.log_profile(xi).0).exp()
    }

    /// `d log m / d log|ξ|`.
    pub fn log_slope(&self, xi: f64) -> f64 {
        self.log_profile(xi).1
    }

    /// `d(m²)/dξ`.
    pub fn d_eval_sq(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            return 0.0;
        }
        let (y, dy) = self.log_profile(xi);
        (2.0 * y).exp() * 2.0 * dy / xi
    }

    /// `d(m²(ξ)ξ)/dξ`.
    pub fn d_flux(&self, xi: f64) -> f64 {
        let (y, dy) = self.log_profile(xi);
        (2.0 * y).exp() * (1.0 + 2.0 * dy)
    }

    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        let mut out = u.map_real_multiplier(|xi| self.eval(xi));
        out.set_real(u.is_real());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    #[test]
    fn piecewise_values() {
        let m = IMultiplier::new(16.0, -1.75).unwrap();
        assert_eq!(m.eval(8.0), 1.0);
        assert!((m.eval(32.0) - 2f64.powf(-1.75)).abs() < 1e-15);
        assert!((m.eval(32.0) - 0.297302).abs() < 1e-6);
        assert!((m.eval(100.0) - (100.0f64 / 16.0).powf(-1.75)).abs() < 1e-15);
        assert_eq!(m.eval(-20.0), m.eval(20.0));
    }

    #[test]
    fn continuity_at_joins() {
        let m = IMultiplier::new(16.0, -1.5).unwrap();
        for &x in &[16.0, 32.0] {
            let h = 1e-9 * x;
            assert!((m.eval(x - h) - m.eval(x + h)).abs() < 1e-8);
            let dl = (m.eval_sq(x) - m.eval_sq(x - h)) / h;
            let dr = (m.eval_sq(x + h) - m.eval_sq(x)) / h;
            assert!((dl - dr).abs() < 1e-5 * dl.abs().max(1e-3), "{dl} {dr}");
        }
    }

    #[test]
    fn monotone_with_bounded_log_derivative() {
        let m = IMultiplier::new(16.0, -1.75).unwrap();
        let mut prev = 1.0;
        for i in 0..20_000 {
            let x = 1.0 + i as f64 * 0.01;
            let v = m.eval(x);
            assert!(v <= prev + 1e-15);
            prev = v;
            let ratio = (m.d_eval_sq(x) * x / m.eval_sq(x)).abs();
            assert!(ratio <= 10.0);
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let m = IMultiplier::new(4.0, -1.2).unwrap();
        for &x in &[5.0, 6.5, 7.9, 12.0, -5.5] {
            let h = 1e-6;
            let fd = (m.eval_sq(x + h) - m.eval_sq(x - h)) / (2.0 * h);
            assert!((fd - m.d_eval_sq(x)).abs() < 1e-7);
            let g = |y: f64| m.eval_sq(y) * y;
            let fd = (g(x + h) - g(x - h)) / (2.0 * h);
            assert!((fd - m.d_flux(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn identity_below_threshold() {
        let g = Grid::new(16.0, 32).unwrap();
        let m = IMultiplier::new(1e3, -1.75).unwrap();
        let u = SpectralField::random_real(g, 1, |_| 1.0);
        let mut expected = u.clone();
        expected.coeffs_mut()[g.nyquist_slot()] = Default::default();
        assert_eq!(m.apply(&u), expected);
    }
}
