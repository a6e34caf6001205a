use super::fft;
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::sum::{ComplexNeumaier, Neumaier};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Fourier coefficients of a periodic function under the unitary convention
/// `û(ξ_m) = (2π)^{-1/2} Σ_j u(x_j) e^{-i ξ_m x_j} · L/n`.
///
/// With this scaling `Σ |û_m|² · 2π/L` equals `Σ |u_j|² · L/n` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.n()], real: true }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.n(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs, real })
    }

    pub fn from_physical(grid: Grid, values: &[f64]) -> Result<Self> {
        let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut field = Self::from_physical_complex(grid, &complex)?;
        field.real = true;
        field.enforce_hermitian();
        Ok(field)
    }

    pub fn from_physical_complex(grid: Grid, values: &[Complex64]) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.n(),
                values.len()
            )));
        }
        let mut buf = values.to_vec();
        fft::forward(&mut buf);
        let scale = grid.length() / grid.n() as f64 / (2.0 * PI).sqrt();
        for c in buf.iter_mut() {
            *c *= scale;
        }
        Ok(Self { grid, coeffs: buf, real: false })
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = grid.points().into_iter().map(f).collect();
        Self::from_physical(grid, &values).expect("grid-sized sample vector")
    }

    /// Real field with coefficient magnitudes `envelope(|ξ|)` and phases
    /// drawn per mode from a generator keyed by `(seed, m)`, so refining the
    /// grid at fixed `L` leaves the shared modes unchanged.
    pub fn random_real(grid: Grid, seed: u64, envelope: impl Fn(f64) -> f64) -> Self {
        let n = grid.n();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for m in 1..(n / 2) as i64 {
            let mut rng = ChaCha8Rng::seed_from_u64(mode_key(seed, m as u64));
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            let amp = envelope(m as f64 * grid.spacing());
            let c = Complex64::new(re, im) * amp;
            coeffs[grid.slot(m).unwrap()] = c;
            coeffs[grid.slot(-m).unwrap()] = c.conj();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mode_key(seed, 0));
        coeffs[0] = Complex64::new(rng.gen_range(-1.0..1.0) * envelope(0.0), 0.0);
        Self { grid, coeffs, real: true }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    /// Coefficient of mode `m`, zero off the lattice.
    pub fn coeff(&self, m: i64) -> Complex64 {
        self.grid.slot(m).map(|j| self.coeffs[j]).unwrap_or_default()
    }

    pub fn check_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn to_physical_complex(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        fft::inverse(&mut buf);
        let scale = (2.0 * PI).sqrt() / self.grid.length();
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }

    pub fn to_physical(&self) -> Vec<f64> {
        self.to_physical_complex().into_iter().map(|c| c.re).collect()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let w = self.grid.spacing();
        let mut acc = Neumaier::new();
        for c in &self.coeffs {
            acc.add(c.norm_sqr());
        }
        acc.value() * w
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `∫ conj(u) v dx` via Plancherel.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        let mut acc = ComplexNeumaier::new();
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            acc.add(a.conj() * b);
        }
        acc.value() * self.grid.spacing()
    }

    /// Spatial mean `(1/L) ∫ u dx`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re * (2.0 * PI).sqrt() / self.grid.length()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Multiplies mode `m` by `f(ξ_m)`; the Nyquist coefficient is zeroed.
    pub fn map_multiplier(&self, f: impl Fn(f64) -> Complex64) -> SpectralField {
        let mut out = self.clone();
        for (j, c) in out.coeffs.iter_mut().enumerate() {
            *c *= f(self.grid.freq(j));
        }
        out.coeffs[self.grid.nyquist_slot()] = Complex64::new(0.0, 0.0);
        out
    }

    pub fn map_real_multiplier(&self, f: impl Fn(f64) -> f64) -> SpectralField {
        self.map_multiplier(|xi| Complex64::new(f(xi), 0.0))
    }

    pub fn scale(&self, factor: f64) -> SpectralField {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= factor;
        }
        out
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_same_grid(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(SpectralField { grid: self.grid, coeffs, real: self.real && other.real })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_same_grid(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(SpectralField { grid: self.grid, coeffs, real: self.real && other.real })
    }

    /// `u(x - a)`.
    pub fn translate(&self, shift: f64) -> SpectralField {
        let mut out = self.map_multiplier(|xi| Complex64::from_polar(1.0, -xi * shift));
        out.real = self.real;
        out
    }

    /// `u(-x)`.
    pub fn reflect(&self) -> SpectralField {
        let n = self.grid.n();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let m = self.grid.index(j);
            if let Some(k) = self.grid.slot(-m) {
                *c = self.coeffs[k];
            }
        }
        SpectralField { grid: self.grid, coeffs, real: self.real }
    }

    /// Largest violation of `û(-m) = conj(û(m))`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        let half = (self.grid.n() / 2) as i64;
        let mut worst = self.coeffs[0].im.abs();
        for m in 1..half {
            let d = (self.coeff(m) - self.coeff(-m).conj()).norm();
            worst = worst.max(d);
        }
        worst = worst.max(self.coeffs[self.grid.nyquist_slot()].im.abs());
        worst / scale
    }

    /// Projects onto the Hermitian-symmetric subspace and flags the field real.
    pub fn enforce_hermitian(&mut self) {
        let half = (self.grid.n() / 2) as i64;
        for m in 1..half {
            let a = self.grid.slot(m).unwrap();
            let b = self.grid.slot(-m).unwrap();
            let avg = (self.coeffs[a] + self.coeffs[b].conj()) * 0.5;
            self.coeffs[a] = avg;
            self.coeffs[b] = avg.conj();
        }
        self.coeffs[0].im = 0.0;
        let ny = self.grid.nyquist_slot();
        self.coeffs[ny].im = 0.0;
        self.real = true;
    }
}

pub(crate) fn mode_key(seed: u64, m: u64) -> u64 {
    let mut z = seed ^ m.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(2.0 * PI, 32).unwrap()
    }

    #[test]
    fn cosine_has_two_modes() {
        let u = SpectralField::from_fn(grid(), |x| x.cos());
        let expected = (2.0 * PI).sqrt() / 2.0;
        assert!((u.coeff(1).re - expected).abs() < 1e-13);
        assert!((u.coeff(-1).re - expected).abs() < 1e-13);
        assert!(u.coeff(2).norm() < 1e-13);
    }

    #[test]
    fn plancherel_is_exact() {
        let u = SpectralField::random_real(grid(), 3, |xi| 1.0 / (1.0 + xi * xi));
        let phys = u.to_physical();
        let spatial: f64 = phys.iter().map(|v| v * v).sum::<f64>() * grid().dx();
        assert!((spatial - u.l2_norm_sq()).abs() < 1e-12 * spatial);
    }

    #[test]
    fn physical_round_trip() {
        let u = SpectralField::random_real(grid(), 5, |xi| (-xi.abs()).exp());
        let v = SpectralField::from_physical(*u.grid(), &u.to_physical()).unwrap();
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn random_fields_are_hermitian() {
        let u = SpectralField::random_real(grid(), 9, |_| 1.0);
        assert!(u.hermitian_defect() < 1e-15);
    }

    #[test]
    fn keyed_modes_survive_refinement() {
        let coarse = SpectralField::random_real(Grid::new(8.0, 32).unwrap(), 4, |_| 1.0);
        let fine = SpectralField::random_real(Grid::new(8.0, 64).unwrap(), 4, |_| 1.0);
        for m in -15..16 {
            assert_eq!(coarse.coeff(m), fine.coeff(m));
        }
    }

    #[test]
    fn translation_and_reflection() {
        let u = SpectralField::from_fn(grid(), |x| (x.sin() + 0.3 * (2.0 * x).cos()).exp());
        let shifted = u.translate(0.5);
        let direct = SpectralField::from_fn(grid(), |x| ((x - 0.5).sin() + 0.3 * (2.0 * (x - 0.5)).cos()).exp());
        let err = shifted.sub(&direct).unwrap().l2_norm() / direct.l2_norm();
        assert!(err < 1e-10, "{err}");
        let r = u.reflect();
        let direct = SpectralField::from_fn(grid(), |x| ((-x).sin() + 0.3 * (2.0 * x).cos()).exp());
        assert!(r.sub(&direct).unwrap().l2_norm() < 1e-10);
    }
}
