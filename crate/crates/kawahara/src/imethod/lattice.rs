//! Multilinear functionals on the zero-sum lattice hyperplane,
//!
//! `Λ_k(M; u₁, …, u_k) = (2π)^{−(k−2)/2} (2π/L)^{k−1} Σ_{m₁+⋯+m_k=0} M(ξ) Π û_i(ξ_{m_i})`,
//!
//! normalised so that `Λ₂(m²; u, u) = ‖Iu‖²`. Index sums are exact integer
//! zeros; the Nyquist mode never takes part.

use super::symbols::Symbols;
use crate::error::{invalid, Error, Result};
use crate::spectral::{Grid, SpectralField};
use crate::sum::{ordered_sum_complex, ComplexNeumaier};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Coefficients below this fraction of the largest are dropped from sums.
pub const SUPPORT_CUTOFF: f64 = 1e-14;

fn weight(grid: &Grid, k: usize) -> f64 {
    (2.0 * PI).powf(-(k as f64 - 2.0) / 2.0) * grid.spacing().powi(k as i32 - 1)
}

/// Non-negligible modes of a field as `(index, coefficient)` pairs.
#[derive(Debug, Clone)]
pub(crate) struct Support {
    half: i64,
    modes: Vec<(i64, Complex64)>,
    dense: Vec<Complex64>,
}

impl Support {
    pub(crate) fn new(u: &SpectralField) -> Self {
        let g = u.grid();
        let half = g.n() as i64 / 2;
        let max = u.max_abs_coeff();
        let mut dense = vec![Complex64::new(0.0, 0.0); 2 * half as usize + 1];
        let mut modes = Vec::new();
        for m in (1 - half)..half {
            let c = u.coeff(m);
            if max > 0.0 && c.norm() > SUPPORT_CUTOFF * max {
                modes.push((m, c));
                dense[(m + half) as usize] = c;
            }
        }
        Self { half, modes, dense }
    }

    #[inline]
    pub(crate) fn get(&self, m: i64) -> Complex64 {
        if m.abs() >= self.half {
            Complex64::new(0.0, 0.0)
        } else {
            self.dense[(m + self.half) as usize]
        }
    }

    pub(crate) fn modes(&self) -> &[(i64, Complex64)] {
        &self.modes
    }

    /// `C(p) = Σ_{m₄+m₅=p} û(m₄)û(m₅)` for `|p| ≤ 2·half`, indexed by `p + 2·half`.
    pub(crate) fn self_convolution(&self) -> Vec<Complex64> {
        let reach = 2 * self.half;
        (0..=2 * reach)
            .into_par_iter()
            .map(|slot| {
                let p = slot as i64 - reach;
                let mut acc = ComplexNeumaier::new();
                for &(m, c) in &self.modes {
                    let other = self.get(p - m);
                    if other.re != 0.0 || other.im != 0.0 {
                        acc.add(c * other);
                    }
                }
                acc.value()
            })
            .collect()
    }
}

/// Brute-force `Λ_k` for an arbitrary multiplier; cost `O(|support|^{k−1})`.
pub fn lambda_k<F>(mult: F, fields: &[&SpectralField]) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let k = fields.len();
    if !(2..=5).contains(&k) {
        return Err(invalid("k", format!("Λ_k needs 2 to 5 fields, got {k}")));
    }
    let grid = *fields[0].grid();
    for f in &fields[1..] {
        if !f.grid().same_as(&grid) {
            return Err(Error::GridMismatch);
        }
    }
    let supports: Vec<Support> = fields.iter().map(|f| Support::new(f)).collect();
    let spacing = grid.spacing();
    let outer = supports[0].modes().to_vec();
    let total = ordered_sum_complex(outer.len(), |i| {
        let (m0, c0) = outer[i];
        let mut acc = ComplexNeumaier::new();
        let mut idx = vec![0i64; k];
        let mut xi = vec![0.0; k];
        idx[0] = m0;
        fn recurse<F: Fn(&[f64]) -> Complex64>(
            level: usize,
            partial: i64,
            coeff: Complex64,
            idx: &mut [i64],
            xi: &mut [f64],
            supports: &[Support],
            spacing: f64,
            mult: &F,
            acc: &mut ComplexNeumaier,
        ) {
            let k = idx.len();
            if level == k - 1 {
                let last = -partial;
                let c = supports[level].get(last);
                if c.re == 0.0 && c.im == 0.0 {
                    return;
                }
                idx[level] = last;
                for j in 0..k {
                    xi[j] = idx[j] as f64 * spacing;
                }
                acc.add(mult(xi) * coeff * c);
                return;
            }
            for &(m, c) in supports[level].modes() {
                idx[level] = m;
                recurse(level + 1, partial + m, coeff * c, idx, xi, supports, spacing, mult, acc);
            }
        }
        recurse(1, m0, c0, &mut idx, &mut xi, &supports, spacing, &mult, &mut acc);
        acc.value()
    });
    Ok(total * weight(&grid, k))
}

/// `σ₃(ξ_a, ξ_b, −ξ_a−ξ_b)` on lattice indices `a, b ∈ [−R, R]`.
#[derive(Debug, Clone)]
pub struct Sigma3Table {
    reach: i64,
    width: usize,
    values: Vec<f64>,
}

impl Sigma3Table {
    pub fn new(symbols: &Symbols, spacing: f64, reach: i64) -> Self {
        let width = (2 * reach + 1) as usize;
        let values = (0..width * width)
            .into_par_iter()
            .map(|slot| {
                let a = (slot / width) as i64 - reach;
                let b = (slot % width) as i64 - reach;
                symbols.sigma3(a as f64 * spacing, b as f64 * spacing, -((a + b) as f64) * spacing)
            })
            .collect();
        Self { reach, width, values }
    }

    #[inline]
    pub fn get(&self, a: i64, b: i64) -> f64 {
        self.values[(a + self.reach) as usize * self.width + (b + self.reach) as usize]
    }
}

/// Lattice evaluation of `σ₄` backed by a `σ₃` table for regular tuples and a
/// table of limits `S(|a|, |c|) = σ₄(a, −a, c, −c)` for the singular set.
#[derive(Debug, Clone)]
pub struct Sigma4Lattice {
    spacing: f64,
    mu: f64,
    threshold: f64,
    sigma3: Sigma3Table,
    reach: i64,
    limits: Vec<f64>,
}

impl Sigma4Lattice {
    /// Tables for arguments with indices in `[−reach, reach]`.
    pub fn new(symbols: &Symbols, grid: &Grid, reach: i64) -> Result<Self> {
        let spacing = grid.spacing();
        let symbols = symbols.with_spacing(spacing)?;
        let sigma3 = Sigma3Table::new(&symbols, spacing, reach);
        let side = (reach + 1) as usize;
        let limits = (0..side * side)
            .into_par_iter()
            .map(|slot| {
                let a = (slot / side) as f64 * spacing;
                let c = (slot % side) as f64 * spacing;
                symbols.sigma4(&[a, -a, c, -c])
            })
            .collect();
        Ok(Self {
            spacing,
            mu: symbols.dispersion().mu(),
            threshold: symbols.threshold(),
            sigma3,
            reach,
            limits,
        })
    }

    pub fn reach(&self) -> i64 {
        self.reach
    }

    pub fn sigma3(&self) -> &Sigma3Table {
        &self.sigma3
    }

    /// `σ₄` at lattice indices summing to zero, each within `[−reach, reach]`.
    #[inline]
    pub fn eval(&self, m: [i64; 4]) -> f64 {
        let [m1, m2, m3, m4] = m;
        let (s12, s13, s23) = (m1 + m2, m1 + m3, m2 + m3);
        if s12 == 0 || s13 == 0 || s23 == 0 {
            let (a, c) = if s12 == 0 {
                (m1.abs(), m3.abs())
            } else if s13 == 0 {
                (m1.abs(), m2.abs())
            } else {
                (m2.abs(), m1.abs())
            };
            return self.limits[a as usize * (self.reach + 1) as usize + c as usize];
        }
        let h = self.spacing;
        let x = [m1 as f64 * h, m2 as f64 * h, m3 as f64 * h, m4 as f64 * h];
        let biggest = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let pair_max = (s12.abs().max(s13.abs()).max(s23.abs())) as f64 * h;
        if biggest <= self.threshold && pair_max <= self.threshold {
            return 0.0;
        }
        let t = &self.sigma3;
        // Singles (a, b) carry the merged pair sum −(ξ_a + ξ_b).
        let sum = -(t.get(m1, m2) * (s12 as f64 * h)
            + t.get(m1, m3) * (s13 as f64 * h)
            + t.get(m1, m4) * ((m1 + m4) as f64 * h)
            + t.get(m2, m3) * (s23 as f64 * h)
            + t.get(m2, m4) * ((m2 + m4) as f64 * h)
            + t.get(m3, m4) * ((m3 + m4) as f64 * h));
        let q = x.iter().map(|v| v * v).sum::<f64>();
        let d4 = (s12 as f64 * h) * (s13 as f64 * h) * (s23 as f64 * h) * (2.5 * q - 3.0 * self.mu);
        sum / (4.0 * d4)
    }
}

fn check_real(u: &SpectralField) -> Result<()> {
    if u.is_real() {
        Ok(())
    } else {
        Err(invalid("u", "field must be real-valued"))
    }
}

/// `Λ₃(M₃; u, u, u) = i·w₃ Σ g(ξ₁) û(ξ₁) C(−m₁)`, `O(n²)`.
pub fn lambda3_m3(u: &SpectralField, symbols: &Symbols) -> Result<Complex64> {
    check_real(u)?;
    let grid = *u.grid();
    let support = Support::new(u);
    let half = support.half;
    let conv = support.self_convolution();
    let modes = support.modes().to_vec();
    let total = ordered_sum_complex(modes.len(), |i| {
        let (m, c) = modes[i];
        let g = symbols.flux(m as f64 * grid.spacing()) - m as f64 * grid.spacing();
        c * conv[(2 * half - m) as usize] * g
    });
    // The subtracted identity part sums to Λ₃(iΣξ) = 0 on the hyperplane.
    Ok(Complex64::new(0.0, 1.0) * total * weight(&grid, 3))
}

/// `Λ₃(σ₃; u, u, u)`, `O(n²)`.
pub fn lambda3_sigma3(u: &SpectralField, table: &Sigma3Table) -> Result<Complex64> {
    check_real(u)?;
    let grid = *u.grid();
    let support = Support::new(u);
    let modes = support.modes().to_vec();
    let total = ordered_sum_complex(modes.len(), |i| {
        let (m1, c1) = modes[i];
        let mut acc = ComplexNeumaier::new();
        for &(m2, c2) in &modes {
            let c3 = support.get(-(m1 + m2));
            if c3.re == 0.0 && c3.im == 0.0 {
                continue;
            }
            let s = table.get(m1, m2);
            if s != 0.0 {
                acc.add(c1 * c2 * c3 * s);
            }
        }
        acc.value()
    });
    Ok(total * weight(&grid, 3))
}

/// `Λ₄(σ₄; u, u, u, u)`, `O(|support|³)`.
pub fn lambda4_sigma4(u: &SpectralField, lattice: &Sigma4Lattice) -> Result<Complex64> {
    check_real(u)?;
    let grid = *u.grid();
    let support = Support::new(u);
    if lattice.reach() < support.half {
        return Err(invalid("lattice", "σ₄ tables do not cover the field's modes"));
    }
    let modes = support.modes().to_vec();
    let total = ordered_sum_complex(modes.len(), |i| {
        let (m1, c1) = modes[i];
        let mut acc = ComplexNeumaier::new();
        for &(m2, c2) in &modes {
            let c12 = c1 * c2;
            for &(m3, c3) in &modes {
                let m4 = -(m1 + m2 + m3);
                let c4 = support.get(m4);
                if c4.re == 0.0 && c4.im == 0.0 {
                    continue;
                }
                let s = lattice.eval([m1, m2, m3, m4]);
                if s != 0.0 {
                    acc.add(c12 * c3 * c4 * s);
                }
            }
        }
        acc.value()
    });
    Ok(total * weight(&grid, 4))
}

/// `Λ₅(M₅; u, …, u)` through the unsymmetrised kernel
/// `−2i σ₄(ξ₁, ξ₂, ξ₃, ξ₄+ξ₅)(ξ₄+ξ₅)` and the self-convolution of `û`,
/// `O(|support|³)`. With `pair_cut = Some(K)` only merged frequencies with
/// `|m₄+m₅| ≤ K` contribute, which is the exact derivative of `E⁴` for the
/// dealiased system.
pub fn lambda5_m5(u: &SpectralField, lattice: &Sigma4Lattice, pair_cut: Option<i64>) -> Result<Complex64> {
    check_real(u)?;
    let grid = *u.grid();
    let support = Support::new(u);
    let half = support.half;
    if lattice.reach() < 2 * half {
        return Err(invalid("lattice", "σ₄ tables must reach twice the largest mode"));
    }
    let conv = support.self_convolution();
    let cut = pair_cut.unwrap_or(2 * half);
    let h = grid.spacing();
    let modes = support.modes().to_vec();
    let total = ordered_sum_complex(modes.len(), |i| {
        let (m1, c1) = modes[i];
        let mut acc = ComplexNeumaier::new();
        for &(m2, c2) in &modes {
            let c12 = c1 * c2;
            for &(m3, c3) in &modes {
                let p = -(m1 + m2 + m3);
                if p.abs() > cut || p.abs() > 2 * half {
                    continue;
                }
                let cp = conv[(p + 2 * half) as usize];
                if cp.re == 0.0 && cp.im == 0.0 {
                    continue;
                }
                let s = lattice.eval([m1, m2, m3, p]);
                if s != 0.0 {
                    acc.add(c12 * c3 * cp * (s * p as f64 * h));
                }
            }
        }
        acc.value()
    });
    Ok(Complex64::new(0.0, -2.0) * total * weight(&grid, 5))
}

/// `Λ₄` of the unsymmetrised `M₄` kernel `−(3i/2)σ₃(ξ₁, ξ₂, ξ₃+ξ₄)(ξ₃+ξ₄)`
/// restricted to merged frequencies `|m₃+m₄| > cut`: the part of `M₄` that a
/// dealiased nonlinearity never produces. `O(|support|²)`.
pub fn lambda4_m4_beyond(u: &SpectralField, table: &Sigma3Table, cut: i64) -> Result<Complex64> {
    check_real(u)?;
    let grid = *u.grid();
    let support = Support::new(u);
    let half = support.half;
    let conv = support.self_convolution();
    let h = grid.spacing();
    let modes = support.modes().to_vec();
    let total = ordered_sum_complex(modes.len(), |i| {
        let (m1, c1) = modes[i];
        let mut acc = ComplexNeumaier::new();
        for &(m2, c2) in &modes {
            let p = -(m1 + m2);
            if p.abs() <= cut {
                continue;
            }
            let s = table.get(m1, m2);
            if s != 0.0 {
                acc.add(c1 * c2 * conv[(p + 2 * half) as usize] * (s * p as f64 * h));
            }
        }
        acc.value()
    });
    Ok(Complex64::new(0.0, -1.5) * total * weight(&grid, 4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Dispersion, IMultiplier};

    fn setup(n: usize, length: f64, threshold: f64) -> (Grid, Symbols) {
        let g = Grid::new(length, n).unwrap();
        let sy = Symbols::new(IMultiplier::new(threshold, -1.75).unwrap(), Dispersion::new(1.0).unwrap())
            .unwrap()
            .with_spacing(g.spacing())
            .unwrap();
        (g, sy)
    }

    fn field(g: Grid, seed: u64) -> SpectralField {
        SpectralField::random_real(g, seed, |xi| 1.0 / (1.0 + 0.01 * xi * xi))
    }

    #[test]
    fn lambda2_is_the_modified_mass() {
        let (g, sy) = setup(64, 2.0 * PI, 8.0);
        let u = field(g, 3);
        let m = *sy.multiplier();
        let l2 = lambda_k(|x: &[f64]| Complex64::new(m.eval_sq(x[0]), 0.0), &[&u, &u]).unwrap();
        let expected = m.apply(&u).l2_norm_sq();
        assert!((l2.re - expected).abs() < 1e-12 * expected);
        assert!(l2.im.abs() < 1e-12 * expected);
    }

    #[test]
    fn two_mode_enumeration() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let mut c = vec![Complex64::new(0.0, 0.0); 16];
        let (a, b) = (Complex64::new(0.3, 0.4), Complex64::new(-0.2, 0.7));
        c[g.slot(1).unwrap()] = a;
        c[g.slot(-1).unwrap()] = a.conj();
        c[g.slot(2).unwrap()] = b;
        c[g.slot(-2).unwrap()] = b.conj();
        let u = SpectralField::from_coeffs(g, c, true).unwrap();
        let one = lambda_k(|_: &[f64]| Complex64::new(1.0, 0.0), &[&u, &u, &u]).unwrap();
        // Triples (1,1,−2), (−1,−1,2) in 3 orderings each.
        let by_hand = (a * a * b.conj() * 3.0 + a.conj() * a.conj() * b * 3.0) * weight(&g, 3);
        assert!((one - by_hand).norm() < 1e-14);
        let zero = SpectralField::zeros(g);
        assert_eq!(lambda_k(|_: &[f64]| Complex64::new(1.0, 0.0), &[&zero, &zero, &zero]).unwrap(), 0.0.into());
    }

    #[test]
    fn fast_paths_match_brute_force() {
        let (g, sy) = setup(32, 2.0 * PI, 4.0);
        let u = field(g, 11);
        let brute3 = lambda_k(|x: &[f64]| sy.m3(x[0], x[1], x[2]), &[&u, &u, &u]).unwrap();
        let fast3 = lambda3_m3(&u, &sy).unwrap();
        assert!((brute3 - fast3).norm() < 1e-12 * brute3.norm(), "{brute3} {fast3}");
        let table = Sigma3Table::new(&sy, g.spacing(), 16);
        let brute = lambda_k(|x: &[f64]| sy.sigma3(x[0], x[1], x[2]).into(), &[&u, &u, &u]).unwrap();
        let fast = lambda3_sigma3(&u, &table).unwrap();
        assert!((brute - fast).norm() < 1e-12 * brute.norm());
        let lattice = Sigma4Lattice::new(&sy, &g, 32).unwrap();
        let brute4 = lambda_k(|x: &[f64]| sy.sigma4(&[x[0], x[1], x[2], x[3]]).into(), &[&u, &u, &u, &u]).unwrap();
        let fast4 = lambda4_sigma4(&u, &lattice).unwrap();
        assert!((brute4 - fast4).norm() < 1e-10 * brute4.norm(), "{brute4} {fast4}");
        assert!(fast4.im.abs() < 1e-12 * fast4.re.abs());
    }

    #[test]
    fn lambda5_matches_brute_force() {
        let (g, sy) = setup(16, 2.0 * PI, 4.0);
        let u = field(g, 5);
        let lattice = Sigma4Lattice::new(&sy, &g, 16).unwrap();
        let fast = lambda5_m5(&u, &lattice, None).unwrap();
        let brute =
            lambda_k(|x: &[f64]| sy.m5(&[x[0], x[1], x[2], x[3], x[4]]), &[&u, &u, &u, &u, &u]).unwrap();
        assert!((brute - fast).norm() < 1e-9 * brute.norm(), "{brute} {fast}");
        assert!(fast.im.abs() < 1e-10 * fast.norm());
    }

    #[test]
    fn sums_are_thread_independent() {
        let (g, sy) = setup(32, 2.0 * PI, 4.0);
        let u = field(g, 2);
        let lattice = Sigma4Lattice::new(&sy, &g, 16).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| lambda4_sigma4(&u, &lattice).unwrap())
        };
        assert_eq!(run(1), run(4));
    }
}
