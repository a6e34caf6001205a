//! Littlewood–Paley cutoffs.

use super::field::SpectralField;
use serde::{Deserialize, Serialize};

const PLATEAU: f64 = 1.25;
const SUPPORT: f64 = 1.6;

/// Even bump: 1 on `|x| ≤ 5/4`, 0 on `|x| ≥ 8/5`, cubic smoothstep between.
#[inline]
pub fn eta0(x: f64) -> f64 {
    let a = x.abs();
    if a <= PLATEAU {
        1.0
    } else if a >= SUPPORT {
        0.0
    } else {
        let s = (SUPPORT - a) / (SUPPORT - PLATEAU);
        s * s * (3.0 - 2.0 * s)
    }
}

/// `η_k(ξ) = η₀(ξ/2^k) − η₀(ξ/2^{k−1})` for `k ≥ 1`, `η₀` for `k = 0`.
#[inline]
pub fn eta(k: u32, xi: f64) -> f64 {
    if k == 0 {
        eta0(xi)
    } else {
        let scale = (k as f64).exp2();
        eta0(xi / scale) - eta0(2.0 * xi / scale)
    }
}

/// `η_{≤l}(ξ) = η₀(ξ/2^l)`; zero for negative `l`.
#[inline]
pub fn eta_low(l: i32, xi: f64) -> f64 {
    if l < 0 {
        0.0
    } else {
        eta0(xi / (l as f64).exp2())
    }
}

/// Dyadic frequency shell `I_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicShell {
    pub k: u32,
}

impl DyadicShell {
    pub fn new(k: u32) -> Self {
        Self { k }
    }

    /// `I_k = {2^{k−1} ≤ |ξ| ≤ 2^{k+1}}`, `I_0 = {|ξ| ≤ 2}`.
    pub fn contains(&self, xi: f64) -> bool {
        let a = xi.abs();
        if self.k == 0 {
            a <= 2.0
        } else {
            let c = (self.k as f64).exp2();
            a >= 0.5 * c && a <= 2.0 * c
        }
    }

    pub fn cutoff(&self, xi: f64) -> f64 {
        eta(self.k, xi)
    }

    /// Smallest shell index whose low-pass cutoff is 1 at `|ξ|`.
    pub fn covering(xi_max: f64) -> u32 {
        let mut k = 0u32;
        while (k as f64).exp2() * PLATEAU < xi_max.abs() {
            k += 1;
        }
        k
    }
}

pub fn project_dyadic(u: &SpectralField, k: u32) -> SpectralField {
    let mut out = u.map_real_multiplier(|xi| eta(k, xi));
    out.set_real(u.is_real());
    out
}

pub fn project_low(u: &SpectralField, l: i32) -> SpectralField {
    let mut out = u.map_real_multiplier(|xi| eta_low(l, xi));
    out.set_real(u.is_real());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    #[test]
    fn partition_of_unity_on_lattice() {
        let g = Grid::default();
        let kmax = DyadicShell::covering(g.max_frequency() + 1.0);
        for j in 0..g.n() {
            let xi = g.freq(j);
            let total: f64 = (0..=kmax).map(|k| eta(k, xi)).sum();
            assert!((total - 1.0).abs() < 1e-13, "xi = {xi}");
        }
    }

    #[test]
    fn support_and_plateau() {
        for k in 1..10 {
            let c = (k as f64).exp2();
            assert_eq!(eta(k, c), 1.0);
            assert_eq!(eta(k, 8.0 * c), 0.0);
            assert_eq!(eta(k, 0.6 * c), 0.0);
            assert_eq!(eta(k, 1.7 * c), 0.0);
        }
    }

    #[test]
    fn separated_shells_are_orthogonal() {
        for k in 0..8u32 {
            for j in (k + 2)..12 {
                for i in 0..4000 {
                    let xi = i as f64 * 0.37;
                    assert_eq!(eta(k, xi) * eta(j, xi), 0.0);
                }
            }
        }
    }

    #[test]
    fn projections_on_single_modes() {
        let g = Grid::new(2.0 * std::f64::consts::PI, 256).unwrap();
        for k in 1..4u32 {
            let m = 1i64 << k;
            let mut c = vec![Complex64::new(0.0, 0.0); g.n()];
            c[g.slot(m).unwrap()] = Complex64::new(1.0, 0.0);
            c[g.slot(-m).unwrap()] = Complex64::new(1.0, 0.0);
            let u = SpectralField::from_coeffs(g, c, true).unwrap();
            assert_eq!(project_dyadic(&u, k), u);
            let far = project_dyadic(&u, k.saturating_sub(3));
            if k >= 3 {
                assert_eq!(far.max_abs_coeff(), 0.0);
            }
        }
        let u = SpectralField::random_real(g, 2, |_| 1.0);
        assert_eq!(project_low(&u, 0), project_dyadic(&u, 0));
    }
}
