use crate::error::{invalid, Result};
use crate::spectral::{Dispersion, Grid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Frequencies `(ξ₁, …, ξ_k)` with `Σ ξ_i = 0`, `k ∈ {3, 4, 5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneTuple {
    freqs: Vec<f64>,
}

impl HyperplaneTuple {
    /// Accepts real frequencies whose sum vanishes to `1e-12` relative.
    pub fn new(freqs: &[f64]) -> Result<Self> {
        if !(3..=5).contains(&freqs.len()) {
            return Err(invalid("tuple", format!("length must be 3, 4 or 5, got {}", freqs.len())));
        }
        let total: f64 = freqs.iter().sum();
        let scale: f64 = freqs.iter().map(|x| x.abs()).sum();
        if total.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(invalid("tuple", format!("frequencies must sum to zero, sum is {total:e}")));
        }
        Ok(Self { freqs: freqs.to_vec() })
    }

    /// Lattice tuple from integer mode indices; the index sum must be exactly zero.
    pub fn from_lattice(grid: &Grid, modes: &[i64]) -> Result<Self> {
        if !(3..=5).contains(&modes.len()) {
            return Err(invalid("tuple", format!("length must be 3, 4 or 5, got {}", modes.len())));
        }
        if modes.iter().sum::<i64>() != 0 {
            return Err(invalid("tuple", "mode indices must sum to zero"));
        }
        Ok(Self { freqs: modes.iter().map(|&m| m as f64 * grid.spacing()).collect() })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// `(h_k, v_k) = (iμ Σ ξ³, i Σ ξ⁵)` from raw power sums.
pub fn h_v_eval(tuple: &HyperplaneTuple, disp: &Dispersion) -> (Complex64, Complex64) {
    let cubes: f64 = tuple.freqs.iter().map(|x| x.powi(3)).sum();
    let fifths: f64 = tuple.freqs.iter().map(|x| x.powi(5)).sum();
    (Complex64::new(0.0, disp.mu() * cubes), Complex64::new(0.0, fifths))
}

/// Factored power sums `(Σ ξ³, Σ ξ⁵)` valid on the hyperplane, for `k = 3, 4`.
pub fn factored_power_sums(freqs: &[f64]) -> Option<(f64, f64)> {
    match *freqs {
        [a, b, c] => {
            let p = a * b * c;
            Some((3.0 * p, 2.5 * p * (a * a + b * b + c * c)))
        }
        [a, b, c, d] => {
            let p = (a + b) * (a + c) * (b + c);
            Some((-3.0 * p, -2.5 * p * (a * a + b * b + c * c + d * d)))
        }
        _ => None,
    }
}

/// `h_k − v_k` from the factored forms; `None` for `k = 5`.
pub fn h_minus_v_factored(tuple: &HyperplaneTuple, disp: &Dispersion) -> Option<Complex64> {
    factored_power_sums(&tuple.freqs).map(|(c, f)| Complex64::new(0.0, disp.mu() * c - f))
}

/// Largest discrepancy between the raw and factored cubic and quintic power
/// sums, each normalised by `Σ |ξ_i|^p`.
pub fn power_sum_identity_check(tuple: &HyperplaneTuple) -> Result<f64> {
    let (cubic, quintic) = factored_power_sums(&tuple.freqs)
        .ok_or_else(|| invalid("tuple", "factorisations exist for k = 3 and k = 4 only"))?;
    let mut worst: f64 = 0.0;
    for (p, factored) in [(3, cubic), (5, quintic)] {
        let direct: f64 = tuple.freqs.iter().map(|x| x.powi(p)).sum();
        let scale: f64 = tuple.freqs.iter().map(|x| x.abs().powi(p)).sum();
        if scale > 0.0 {
            worst = worst.max((direct - factored).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_examples() {
        let d = Dispersion::new(1.0).unwrap();
        let t = HyperplaneTuple::new(&[1.0, 2.0, -3.0]).unwrap();
        let (h, v) = h_v_eval(&t, &d);
        assert_eq!(h, Complex64::new(0.0, -18.0));
        assert_eq!(v, Complex64::new(0.0, -210.0));
        assert_eq!(power_sum_identity_check(&t).unwrap(), 0.0);
        let t4 = HyperplaneTuple::new(&[1.0, 1.0, 1.0, -3.0]).unwrap();
        let (h4, v4) = h_v_eval(&t4, &d);
        assert_eq!(h4, Complex64::new(0.0, -24.0));
        assert_eq!(v4, Complex64::new(0.0, -240.0));
        assert_eq!(factored_power_sums(t4.freqs()), Some((-24.0, -240.0)));
        assert_eq!(h_minus_v_factored(&t4, &d), Some(h4 - v4));
    }

    #[test]
    fn rejects_bad_tuples() {
        assert!(HyperplaneTuple::new(&[1.0, 2.0]).is_err());
        assert!(HyperplaneTuple::new(&[1.0, 2.0, -2.5]).is_err());
        let g = Grid::new(16.0, 16).unwrap();
        assert!(HyperplaneTuple::from_lattice(&g, &[1, 2, -2]).is_err());
        assert!(HyperplaneTuple::from_lattice(&g, &[1, 2, 3, -6]).is_ok());
        let five = HyperplaneTuple::new(&[1.0, 1.0, 1.0, 1.0, -4.0]).unwrap();
        assert!(power_sum_identity_check(&five).is_err());
    }

    proptest! {
        #[test]
        fn identities_hold_on_random_tuples(
            a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3,
        ) {
            let t3 = HyperplaneTuple::new(&[a, b, -(a + b)]).unwrap();
            prop_assert!(power_sum_identity_check(&t3).unwrap() < 1e-11);
            let t4 = HyperplaneTuple::new(&[a, b, c, -(a + b + c)]).unwrap();
            prop_assert!(power_sum_identity_check(&t4).unwrap() < 1e-11);
        }
    }
}
