use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Periodic box `[0, L)` sampled at `n` points; frequencies `2πm/L`,
/// `m ∈ [-n/2, n/2)`, stored in FFT order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    length: f64,
    n: usize,
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n must be a power of two and at least 8, got {n}")));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Frequency lattice spacing `2π/L`.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Signed mode index of storage slot `j`.
    #[inline]
    pub fn index(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Storage slot of mode `m`, if it lies on the lattice.
    #[inline]
    pub fn slot(&self, m: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m >= -half && m < half {
            Some(if m >= 0 { m as usize } else { (m + self.n as i64) as usize })
        } else {
            None
        }
    }

    #[inline]
    pub fn freq(&self, j: usize) -> f64 {
        self.index(j) as f64 * self.spacing()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.freq(j)).collect()
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n / 2
    }

    /// Largest representable |ξ| (excluding the Nyquist mode).
    pub fn max_frequency(&self) -> f64 {
        (self.n / 2 - 1) as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dx()).collect()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n && self.length.to_bits() == other.length.to_bits()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self { length: 256.0 * PI, n: 1024 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(1.0, 513).is_err());
        assert!(Grid::new(1.0, 4).is_err());
        assert!(Grid::new(-1.0, 16).is_err());
        assert!(Grid::new(1.0, 16).is_ok());
    }

    #[test]
    fn slots_round_trip() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        for j in 0..16 {
            assert_eq!(g.slot(g.index(j)), Some(j));
        }
        assert_eq!(g.slot(8), None);
        assert_eq!(g.index(8), -8);
        assert_eq!(g.freq(3), 3.0);
    }
}
