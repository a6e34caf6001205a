//! Pointwise multipliers of the modified energies.
//!
//! With `g(ξ) = m²(ξ)ξ`:
//! - `M₃ = (i/3)(g(ξ₁) + g(ξ₂) + g(ξ₃))`, `σ₃ = −M₃/(h₃ − v₃)`;
//! - `M₄ = −(i/4) Σ_pairs σ₃(ξ_a, ξ_b, ξ_c + ξ_d)(ξ_c + ξ_d)`, `σ₄ = −M₄/(h₄ − v₄)`;
//! - `M₅ = −(i/5) Σ_pairs σ₄(ξ_a, ξ_b, ξ_c, ξ_d + ξ_e)(ξ_d + ξ_e)`.
//!
//! The sums run over the 6 (resp. 10) ways of merging two arguments.

use crate::error::{invalid, Error, Result};
use crate::spectral::{Dispersion, IMultiplier};
use num_complex::Complex64;

/// Below this ratio of smallest to largest argument, `σ₃` switches to its
/// limit on the plane `ξ_i = 0`.
const EDGE_RATIO: f64 = 1e-8;
/// Relative size under which a pair sum counts as vanishing.
const PAIR_TOLERANCE: f64 = 1e-12;
/// Perturbation sizes, in lattice spacings, for the `σ₄` limit.
const RICHARDSON_EPS: f64 = 1e-3;

pub(crate) const PAIRS4: [([usize; 2], [usize; 2]); 6] = [
    ([0, 1], [2, 3]),
    ([0, 2], [1, 3]),
    ([0, 3], [1, 2]),
    ([1, 2], [0, 3]),
    ([1, 3], [0, 2]),
    ([2, 3], [0, 1]),
];

pub(crate) const PAIRS5: [([usize; 3], [usize; 2]); 10] = [
    ([2, 3, 4], [0, 1]),
    ([1, 3, 4], [0, 2]),
    ([1, 2, 4], [0, 3]),
    ([1, 2, 3], [0, 4]),
    ([0, 3, 4], [1, 2]),
    ([0, 2, 4], [1, 3]),
    ([0, 2, 3], [1, 4]),
    ([0, 1, 4], [2, 3]),
    ([0, 1, 3], [2, 4]),
    ([0, 1, 2], [3, 4]),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symbols {
    mult: IMultiplier,
    disp: Dispersion,
    spacing: f64,
}

impl Symbols {
    /// Requires `N ≥ 4`, which keeps the resonant circle `Σξ² = 6μ/5` inside
    /// the region where every multiplier vanishes.
    pub fn new(mult: IMultiplier, disp: Dispersion) -> Result<Self> {
        if mult.threshold() < 4.0 {
            return Err(invalid("N", format!("threshold must be at least 4, got {}", mult.threshold())));
        }
        Ok(Self { mult, disp, spacing: 1.0 / 128.0 })
    }

    /// Lattice spacing that sets the perturbation size of the `σ₄` limit.
    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(invalid("spacing", format!("must be positive, got {spacing}")));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn multiplier(&self) -> &IMultiplier {
        &self.mult
    }

    pub fn dispersion(&self) -> &Dispersion {
        &self.disp
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn threshold(&self) -> f64 {
        self.mult.threshold()
    }

    #[inline]
    pub fn flux(&self, xi: f64) -> f64 {
        self.mult.eval_sq(xi) * xi
    }

    #[inline]
    fn below(&self, xs: &[f64]) -> bool {
        let n = self.mult.threshold();
        xs.iter().all(|x| x.abs() <= n)
    }

    pub fn m3(&self, a: f64, b: f64, c: f64) -> Complex64 {
        if self.below(&[a, b, c]) {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, (self.flux(a) + self.flux(b) + self.flux(c)) / 3.0)
    }

    /// Imaginary part of `h₃ − v₃ = i ξ₁ξ₂ξ₃(3μ − (5/2)Σξ²)`.
    #[inline]
    fn d3(&self, a: f64, b: f64, c: f64) -> f64 {
        a * b * c * (3.0 * self.disp.mu() - 2.5 * (a * a + b * b + c * c))
    }

    pub fn hv3(&self, a: f64, b: f64, c: f64) -> Complex64 {
        Complex64::new(0.0, self.d3(a, b, c))
    }

    /// Ratio definition of `σ₃`; fails where `h₃ − v₃` is too small to divide by.
    pub fn sigma3_ratio(&self, a: f64, b: f64, c: f64) -> Result<f64> {
        if self.below(&[a, b, c]) {
            return Ok(0.0);
        }
        let big = a.abs().max(b.abs()).max(c.abs());
        let d = self.d3(a, b, c);
        if d.abs() < 1e-12 * (1.0 + big.powi(5)) {
            return Err(Error::Singular(format!("h3 - v3 vanishes at ({a}, {b}, {c})")));
        }
        Ok(-(self.flux(a) + self.flux(b) + self.flux(c)) / (3.0 * d))
    }

    /// `σ₃` extended continuously to the planes `ξ_i = 0`.
    pub fn sigma3(&self, a: f64, b: f64, c: f64) -> f64 {
        if self.below(&[a, b, c]) {
            return 0.0;
        }
        let (lo, hi) = min_max_abs(&[a, b, c]);
        if lo <= EDGE_RATIO * hi {
            return self.sigma3_edge(hi);
        }
        -(self.flux(a) + self.flux(b) + self.flux(c)) / (3.0 * self.d3(a, b, c))
    }

    /// `lim σ₃(ε, ξ, −ξ−ε)` as `ε → 0`.
    pub fn sigma3_edge(&self, xi: f64) -> f64 {
        if xi.abs() <= self.mult.threshold() {
            return 0.0;
        }
        let x2 = xi * xi;
        -(1.0 - self.mult.d_flux(xi)) / (3.0 * x2 * (5.0 * x2 - 3.0 * self.disp.mu()))
    }

    /// `Σ_pairs σ₃(ξ_a, ξ_b, ξ_c + ξ_d)(ξ_c + ξ_d)`, so that `M₄ = −(i/4)·this`.
    pub fn m4_sum(&self, x: &[f64; 4]) -> f64 {
        PAIRS4
            .iter()
            .map(|&([a, b], [c, d])| {
                let s = x[c] + x[d];
                self.sigma3(x[a], x[b], s) * s
            })
            .sum()
    }

    pub fn m4(&self, x: &[f64; 4]) -> Complex64 {
        Complex64::new(0.0, -0.25 * self.m4_sum(x))
    }

    /// `M₄` as the three grouped differences `I + II + III`.
    pub fn m4_regrouped(&self, x: &[f64; 4]) -> Complex64 {
        let [x1, x2, x3, x4] = *x;
        let s34 = x3 + x4;
        let s24 = x2 + x4;
        let s23 = x2 + x3;
        let first = (self.sigma3(x1, x2, s34) - self.sigma3(-x3, -x4, s34)) * s34;
        let second = (self.sigma3(x1, x3, s24) - self.sigma3(-x2, -x4, s24)) * s24;
        let third = (self.sigma3(x1, x4, s23) - self.sigma3(-x2, -x3, s23)) * s23;
        Complex64::new(0.0, -0.25 * (first + second + third))
    }

    /// Imaginary part of `h₄ − v₄ = i P ((5/2)Σξ² − 3μ)` with
    /// `P = (ξ₁+ξ₂)(ξ₁+ξ₃)(ξ₂+ξ₃)`.
    #[inline]
    pub(crate) fn d4(&self, x: &[f64; 4]) -> f64 {
        let q = x.iter().map(|v| v * v).sum::<f64>();
        (x[0] + x[1]) * (x[0] + x[2]) * (x[1] + x[2]) * (2.5 * q - 3.0 * self.disp.mu())
    }

    pub fn hv4(&self, x: &[f64; 4]) -> Complex64 {
        Complex64::new(0.0, self.d4(x))
    }

    fn vanishing_pairs(&self, x: &[f64; 4]) -> [bool; 3] {
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = PAIR_TOLERANCE * scale;
        [(x[0] + x[1]).abs() <= tol, (x[0] + x[2]).abs() <= tol, (x[1] + x[2]).abs() <= tol]
    }

    fn all_below4(&self, x: &[f64; 4]) -> bool {
        self.below(x) && self.below(&[x[0] + x[1], x[0] + x[2], x[1] + x[2]])
    }

    /// Ratio definition of `σ₄`; fails on the set where a pair sum vanishes.
    pub fn sigma4_ratio(&self, x: &[f64; 4]) -> Result<f64> {
        if self.all_below4(x) {
            return Ok(0.0);
        }
        let zero = self.vanishing_pairs(x);
        const NAMES: [&str; 3] = ["xi1+xi2", "xi1+xi3", "xi2+xi3"];
        if let Some(i) = zero.iter().position(|&z| z) {
            return Err(Error::Singular(format!("pair sum {} vanishes at {:?}", NAMES[i], x)));
        }
        Ok(self.m4_sum(x) / (4.0 * self.d4(x)))
    }

    /// `σ₄` extended to the pair-sum planes by a Richardson-extrapolated
    /// symmetric limit along the direction that moves only the vanishing sums.
    pub fn sigma4(&self, x: &[f64; 4]) -> f64 {
        match self.sigma4_ratio(x) {
            Ok(v) => v,
            Err(_) => self.sigma4_limit(x),
        }
    }

    pub(crate) fn sigma4_limit(&self, x: &[f64; 4]) -> f64 {
        const DIRS: [[f64; 4]; 3] =
            [[0.5, 0.5, -0.5, -0.5], [0.5, -0.5, 0.5, -0.5], [-0.5, 0.5, 0.5, -0.5]];
        let zero = self.vanishing_pairs(x);
        let mut dir = [0.0; 4];
        for (k, d) in DIRS.iter().enumerate() {
            if zero[k] {
                for i in 0..4 {
                    dir[i] += d[i];
                }
            }
        }
        let sym = |delta: f64| {
            let plus: [f64; 4] = std::array::from_fn(|i| x[i] + delta * dir[i]);
            let minus: [f64; 4] = std::array::from_fn(|i| x[i] - delta * dir[i]);
            let eval = |y: &[f64; 4]| {
                if self.all_below4(y) {
                    0.0
                } else {
                    self.m4_sum(y) / (4.0 * self.d4(y))
                }
            };
            0.5 * (eval(&plus) + eval(&minus))
        };
        let delta = RICHARDSON_EPS * self.spacing;
        (4.0 * sym(0.5 * delta) - sym(delta)) / 3.0
    }

    /// `Σ_pairs σ₄(ξ_a, ξ_b, ξ_c, ξ_d + ξ_e)(ξ_d + ξ_e)`, so that `M₅ = −(i/5)·this`.
    pub fn m5_sum(&self, x: &[f64; 5]) -> f64 {
        PAIRS5
            .iter()
            .map(|&([a, b, c], [d, e])| {
                let s = x[d] + x[e];
                self.sigma4(&[x[a], x[b], x[c], s]) * s
            })
            .sum()
    }

    pub fn m5(&self, x: &[f64; 5]) -> Complex64 {
        Complex64::new(0.0, -0.2 * self.m5_sum(x))
    }
}

fn min_max_abs(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symbols(n: f64, s: f64, mu: f64) -> Symbols {
        Symbols::new(IMultiplier::new(n, s).unwrap(), Dispersion::new(mu).unwrap()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn vanishes_below_threshold() {
        let sy = symbols(16.0, -1.75, 1.0);
        assert_eq!(sy.m3(3.0, 5.0, -8.0), Complex64::new(0.0, 0.0));
        assert_eq!(sy.sigma3(3.0, 5.0, -8.0), 0.0);
        assert_eq!(sy.m4(&[1.0, 2.0, -1.5, -1.5]), Complex64::new(0.0, 0.0));
        assert_eq!(sy.sigma4(&[1.0, -1.0, 2.0, -2.0]), 0.0);
        assert!(Symbols::new(IMultiplier::new(2.0, -1.0).unwrap(), Dispersion::default()).is_err());
    }

    #[test]
    fn sigma3_edge_is_the_limit() {
        let sy = symbols(8.0, -1.5, 0.6);
        for &xi in &[9.0, 13.0, 40.0, -25.0] {
            let eps = 1e-5;
            let near = -(sy.flux(eps) + sy.flux(xi) + sy.flux(-xi - eps)) / (3.0 * sy.d3(eps, xi, -xi - eps));
            assert!(rel(near, sy.sigma3_edge(xi)) < 1e-4, "{near} {}", sy.sigma3_edge(xi));
            assert_eq!(sy.sigma3(0.0, xi, -xi), sy.sigma3_edge(xi));
        }
        assert!(sy.sigma3_ratio(0.0, 20.0, -20.0).is_err());
    }

    #[test]
    fn sigma4_limit_is_continuous() {
        let sy = symbols(8.0, -1.75, 1.0);
        for &(a, c) in &[(20.0, 3.0), (15.0, 15.0), (30.0, 9.5), (12.0, 0.0)] {
            let on = sy.sigma4(&[a, -a, c, -c]);
            let h = 1e-3;
            let off = sy.sigma4_ratio(&[a + h, -a + 2.0 * h, c - h, -c - 2.0 * h]).unwrap();
            assert!((on - off).abs() < 1e-3 * on.abs().max(1e-12) + 1e-14, "{a} {c}: {on} {off}");
        }
    }

    #[test]
    fn singular_set_is_reported() {
        let sy = symbols(8.0, -1.75, 1.0);
        let err = sy.sigma4_ratio(&[20.0, -20.0, 3.0, -3.0]).unwrap_err();
        assert!(err.to_string().contains("xi1+xi2"));
    }

    fn arb4() -> impl Strategy<Value = [f64; 4]> {
        (-80.0f64..80.0, -80.0f64..80.0, -80.0f64..80.0).prop_map(|(a, b, c)| [a, b, c, -(a + b + c)])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn cancellation_identities(x in arb4()) {
            let sy = symbols(8.0, -1.75, 0.8);
            let (a, b) = (x[0], x[1]);
            let c = -(a + b);
            if let Ok(s3) = sy.sigma3_ratio(a, b, c) {
                let m = sy.m3(a, b, c);
                let r = m + sy.hv3(a, b, c) * s3;
                prop_assert!(r.norm() <= 1e-12 * m.norm().max(1e-300) || m.norm() == 0.0);
            }
            if let Ok(s4) = sy.sigma4_ratio(&x) {
                let m = sy.m4(&x);
                let r = m + sy.hv4(&x) * s4;
                prop_assert!(r.norm() <= 1e-12 * m.norm() || m.norm() == 0.0);
            }
        }

        #[test]
        fn permutation_and_reflection_symmetry(x in arb4(), e in -80.0f64..80.0) {
            let sy = symbols(8.0, -1.25, 0.3);
            let base3 = sy.sigma3(x[0], x[1], -(x[0] + x[1]));
            let c = -(x[0] + x[1]);
            for p in [[x[1], c, x[0]], [c, x[0], x[1]], [x[1], x[0], c]] {
                prop_assert!(rel(sy.sigma3(p[0], p[1], p[2]), base3) < 1e-12 || base3.abs() < 1e-300);
            }
            prop_assert!(rel(sy.sigma3(-x[0], -x[1], -c), base3) < 1e-12 || base3.abs() < 1e-300);
            let base4 = sy.sigma4(&x);
            let m4 = sy.m4(&x);
            let perms = [[1, 0, 2, 3], [2, 3, 0, 1], [3, 1, 2, 0], [0, 3, 1, 2]];
            for p in perms {
                let y = [x[p[0]], x[p[1]], x[p[2]], x[p[3]]];
                prop_assert!(rel(sy.sigma4(&y), base4) < 1e-9 || base4.abs() < 1e-300);
                prop_assert!((sy.m4(&y) - m4).norm() <= 1e-10 * m4.norm() + 1e-300);
            }
            let neg = [-x[0], -x[1], -x[2], -x[3]];
            prop_assert!((sy.m4(&neg) - m4.conj()).norm() <= 1e-12 * m4.norm() + 1e-300);
            let regrouped = sy.m4_regrouped(&x);
            prop_assert!((regrouped - m4).norm() <= 1e-10 * m4.norm().max(1e-300) || m4.norm() == 0.0);
            let x5 = [x[0], x[1], x[2], e, -(x[0] + x[1] + x[2] + e)];
            let m5 = sy.m5(&x5);
            let y5 = [x5[4], x5[2], x5[0], x5[3], x5[1]];
            prop_assert!((sy.m5(&y5) - m5).norm() <= 1e-8 * m5.norm() + 1e-300);
        }
    }
}
