use crate::error::{invalid, Error, Result};
use crate::spectral::{eta, eta0, fft, free_evolve, japanese, DyadicShell, Dispersion, Grid, SpectralField};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Time cutoff `ψ = η₀`: 1 on `|t| ≤ 5/4`, 0 on `|t| ≥ 8/5`.
pub fn psi(t: f64) -> f64 {
    eta0(t)
}

/// Space-time Fourier coefficients `F(ξ, τ)` of a windowed field sampled on
/// a uniform time grid, with the unitary convention in both variables.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    grid: Grid,
    t0: f64,
    dt: f64,
    samples: usize,
    /// Row `l` holds the spatial coefficients at time frequency `τ_l`.
    coeffs: Vec<Complex64>,
}

impl SpaceTimeField {
    /// Transforms `window(t_j)·u(t_j)` for `t_j = t0 + j·dt`.
    pub fn from_samples(fields: &[SpectralField], t0: f64, dt: f64, window: impl Fn(f64) -> f64) -> Result<Self> {
        if fields.len() < 4 {
            return Err(invalid("window", format!("need at least 4 time samples, got {}", fields.len())));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        let grid = *fields[0].grid();
        for f in fields {
            fields[0].check_same_grid(f)?;
        }
        let (m, n) = (fields.len(), grid.n());
        let mut coeffs = vec![Complex64::new(0.0, 0.0); m * n];
        let mut column = vec![Complex64::new(0.0, 0.0); m];
        let norm = dt / (2.0 * PI).sqrt();
        for x in 0..n {
            for (j, f) in fields.iter().enumerate() {
                column[j] = f.coeffs()[x] * window(t0 + j as f64 * dt);
            }
            fft::forward(&mut column);
            for (l, c) in column.iter().enumerate() {
                let tau = Self::tau_of(l, m, dt);
                coeffs[l * n + x] = c * Complex64::from_polar(norm, -tau * t0);
            }
        }
        Ok(Self { grid, t0, dt, samples: m, coeffs })
    }

    fn tau_of(l: usize, m: usize, dt: f64) -> f64 {
        let signed = if l < m.div_ceil(2) { l as f64 } else { l as f64 - m as f64 };
        2.0 * PI * signed / (m as f64 * dt)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn time_samples(&self) -> usize {
        self.samples
    }

    pub fn tau(&self, l: usize) -> f64 {
        Self::tau_of(l, self.samples, self.dt)
    }

    pub fn tau_spacing(&self) -> f64 {
        2.0 * PI / (self.samples as f64 * self.dt)
    }

    pub fn tau_nyquist(&self) -> f64 {
        PI / self.dt
    }

    pub fn coeff(&self, x: usize, l: usize) -> Complex64 {
        self.coeffs[l * self.grid.n() + x]
    }

    pub fn scale(&self, factor: f64) -> SpaceTimeField {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= factor;
        }
        out
    }

    /// `Σ w(ξ, τ)|F|² dξ dτ` over the lattice, Nyquist mode excluded.
    fn weighted(&self, weight: impl Fn(f64, f64) -> f64) -> f64 {
        let n = self.grid.n();
        let cell = self.grid.spacing() * self.tau_spacing();
        let mut acc = crate::sum::Neumaier::new();
        for l in 0..self.samples {
            let tau = self.tau(l);
            for x in 0..n {
                if x == self.grid.nyquist_slot() {
                    continue;
                }
                let c = self.coeffs[l * n + x];
                if c.re != 0.0 || c.im != 0.0 {
                    acc.add(weight(self.grid.freq(x), tau) * c.norm_sqr());
                }
            }
        }
        acc.value() * cell
    }
}

/// `‖⟨ξ⟩^s ⟨τ − ω(ξ)⟩^b F‖_{L²}`.
pub fn xsb_norm(f: &SpaceTimeField, s: f64, b: f64, disp: &Dispersion) -> f64 {
    f.weighted(|xi, tau| japanese(xi).powf(2.0 * s) * japanese(tau - disp.omega(xi)).powf(2.0 * b)).sqrt()
}

fn modulation_shells(f: &SpaceTimeField, disp: &Dispersion) -> u32 {
    let largest = (0..f.grid.n())
        .map(|x| disp.omega(f.grid.freq(x)).abs())
        .fold(0.0, f64::max)
        + f.tau_nyquist();
    DyadicShell::covering(largest)
}

/// `Σ_j 2^{j/2} ‖η_j(τ − ω(ξ)) η_k(ξ) F‖_{L²}` over modulation shells up to
/// the lattice's largest modulation.
pub fn xk_norm(f: &SpaceTimeField, k: u32, disp: &Dispersion) -> f64 {
    (0..=modulation_shells(f, disp))
        .map(|j| {
            let shell = f.weighted(|xi, tau| (eta(j, tau - disp.omega(xi)) * eta(k, xi)).powi(2)).sqrt();
            (j as f64 / 2.0).exp2() * shell
        })
        .sum()
}

/// Fractions of `‖F‖²` on the modulation shells `j = 0, 1, …`, using the
/// partition `Σ_j η_j = 1`.
pub fn shell_energy_fractions(f: &SpaceTimeField, disp: &Dispersion) -> Vec<f64> {
    let total = f.weighted(|_, _| 1.0);
    (0..=modulation_shells(f, disp))
        .map(|j| f.weighted(|xi, tau| eta(j, tau - disp.omega(xi))) / total)
        .collect()
}

/// `‖P_{≤0}u‖_{L²_x L^∞_t} + (Σ_{k≥1} 2^{2sk} ‖η_k F(ψu)‖²_{X_k})^{1/2}` for
/// a trajectory sampled at `t0 + j·dt`.
pub fn fbar_norm(fields: &[SpectralField], t0: f64, dt: f64, s: f64, disp: &Dispersion) -> Result<f64> {
    let f = SpaceTimeField::from_samples(fields, t0, dt, psi)?;
    let grid = *f.grid();
    let mut sup = vec![0.0f64; grid.n()];
    for u in fields {
        let low = u.map_real_multiplier(|xi| eta(0, xi));
        for (m, v) in sup.iter_mut().zip(low.to_physical_complex()) {
            *m = m.max(v.norm());
        }
    }
    let low = (sup.iter().map(|v| v * v).sum::<f64>() * grid.dx()).sqrt();
    let top = DyadicShell::covering(grid.max_frequency());
    let high: f64 = (1..=top).map(|k| (2.0 * s * k as f64).exp2() * xk_norm(&f, k, disp).powi(2)).sum();
    Ok(low + high.sqrt())
}

fn check_duhamel_grid(u: &[SpectralField], v: &[SpectralField], times: &[f64]) -> Result<(usize, f64)> {
    if u.len() != times.len() || v.len() != times.len() {
        return Err(invalid("trajectory", "u, v and times must have equal lengths"));
    }
    if times.len() < 8 {
        return Err(Error::Unresolvable("time grid too coarse: need at least 8 samples".into()));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt) {
        return Err(invalid("times", "time grid must be uniform and increasing"));
    }
    if times[0] > -2.0 + 1e-9 || *times.last().unwrap() < 2.0 - 1e-9 {
        return Err(invalid("times", "time grid must cover [-2, 2]"));
    }
    let zero = times
        .iter()
        .position(|t| t.abs() < 1e-9 * dt)
        .ok_or_else(|| invalid("times", "t = 0 must be a grid point"))?;
    for (a, b) in u.iter().zip(v) {
        u[0].check_same_grid(a)?;
        u[0].check_same_grid(b)?;
    }
    Ok((zero, dt))
}

/// `B(u, v)(t) = ψ(t/4) ∫₀ᵗ W(t−τ) ∂_x(ψ²(τ) u v)(τ) dτ` at every grid time,
/// by the composite trapezoid rule in `τ` with exact free propagation.
pub fn duhamel_bilinear(
    u: &[SpectralField],
    v: &[SpectralField],
    times: &[f64],
    disp: &Dispersion,
) -> Result<Vec<SpectralField>> {
    let (zero, dt) = check_duhamel_grid(u, v, times)?;
    let grid = *u[0].grid();
    let n = grid.n();
    let real = u.iter().chain(v).all(|f| f.is_real());
    // Interaction-picture integrand G(τ) = W(−τ) ∂_x(ψ²uv)(τ).
    let integrand: Vec<Vec<Complex64>> = times
        .iter()
        .zip(u.iter().zip(v))
        .map(|(&t, (a, b))| {
            let w = psi(t).powi(2);
            if w == 0.0 {
                return vec![Complex64::new(0.0, 0.0); n];
            }
            let pa = a.to_physical_complex();
            let pb = b.to_physical_complex();
            let prod: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| x * y * w).collect();
            let field = SpectralField::from_physical_complex(grid, &prod).expect("grid-sized samples");
            (0..n)
                .map(|j| {
                    let xi = grid.freq(j);
                    if j == grid.nyquist_slot() {
                        Complex64::new(0.0, 0.0)
                    } else {
                        field.coeffs()[j] * Complex64::new(0.0, xi) * Complex64::from_polar(1.0, -disp.omega(xi) * t)
                    }
                })
                .collect()
        })
        .collect();
    let mut cumulative = vec![vec![Complex64::new(0.0, 0.0); n]; times.len()];
    for j in zero + 1..times.len() {
        let (lo, hi) = cumulative.split_at_mut(j);
        for x in 0..n {
            hi[0][x] = lo[j - 1][x] + 0.5 * dt * (integrand[j - 1][x] + integrand[j][x]);
        }
    }
    for j in (0..zero).rev() {
        let (lo, hi) = cumulative.split_at_mut(j + 1);
        for x in 0..n {
            lo[j][x] = hi[0][x] - 0.5 * dt * (integrand[j + 1][x] + integrand[j][x]);
        }
    }
    times
        .iter()
        .zip(cumulative)
        .map(|(&t, c)| {
            let inner = SpectralField::from_coeffs(grid, c, real)?;
            Ok(free_evolve(&inner, t, disp).scale(psi(t / 4.0)))
        })
        .collect()
}

/// Relative change of `max_t ‖B(u, v)(t)‖_{L²}` when every other time sample
/// is dropped (keeping `t = 0`).
pub fn duhamel_step_sensitivity(
    u: &[SpectralField],
    v: &[SpectralField],
    times: &[f64],
    disp: &Dispersion,
) -> Result<f64> {
    let (zero, _) = check_duhamel_grid(u, v, times)?;
    let full = duhamel_bilinear(u, v, times, disp)?;
    let keep: Vec<usize> = (0..times.len()).filter(|j| (*j as i64 - zero as i64) % 2 == 0).collect();
    let pick = |xs: &[SpectralField]| keep.iter().map(|&j| xs[j].clone()).collect::<Vec<_>>();
    let coarse_times: Vec<f64> = keep.iter().map(|&j| times[j]).collect();
    let coarse = duhamel_bilinear(&pick(u), &pick(v), &coarse_times, disp)?;
    let fine_max = keep.iter().map(|&j| full[j].l2_norm()).fold(0.0, f64::max);
    let coarse_max = coarse.iter().map(|b| b.l2_norm()).fold(0.0, f64::max);
    if fine_max == 0.0 {
        return Ok(0.0);
    }
    Ok((fine_max - coarse_max).abs() / fine_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_samples(phi: &SpectralField, disp: &Dispersion, t0: f64, dt: f64, m: usize) -> Vec<SpectralField> {
        (0..m).map(|j| free_evolve(phi, t0 + j as f64 * dt, disp)).collect()
    }

    #[test]
    fn plain_norm_is_space_time_l2() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let d = Dispersion::default();
        let phi = SpectralField::random_real(g, 4, |xi| (-xi * xi / 4.0).exp());
        let (t0, dt, m) = (-4.0, 8.0 / 256.0, 256);
        let fields = free_samples(&phi, &d, t0, dt, m);
        let f = SpaceTimeField::from_samples(&fields, t0, dt, psi).unwrap();
        let direct: f64 = fields.iter().enumerate().map(|(j, u)| psi(t0 + j as f64 * dt).powi(2) * u.l2_norm_sq()).sum::<f64>() * dt;
        let x = xsb_norm(&f, 0.0, 0.0, &d);
        assert!((x * x - direct).abs() < 1e-12 * direct);
        let y = xsb_norm(&f.scale(3.0), 0.3, 0.5, &d);
        assert!((y - 3.0 * xsb_norm(&f, 0.3, 0.5, &d)).abs() < 1e-12 * y);
    }

    #[test]
    fn single_mode_sits_on_low_modulation() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let d = Dispersion::default();
        let phi = SpectralField::from_fn(g, |x| (2.0 * x).cos());
        let (t0, dt, m) = (-4.0, 8.0 / 4096.0, 4096);
        let f = SpaceTimeField::from_samples(&free_samples(&phi, &d, t0, dt, m), t0, dt, psi).unwrap();
        let fr = shell_energy_fractions(&f, &d);
        assert!(fr[0] + fr[1] + fr[2] >= 0.9, "{fr:?}");
        assert!((fr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let xk = xk_norm(&f, 1, &d);
        assert!(xk > 0.0);
        assert!(xk >= xsb_norm(&f, 0.0, 0.0, &d) * 0.5);
    }

    #[test]
    fn bilinear_of_zero_vanishes_and_is_symmetric() {
        let g = Grid::new(2.0 * PI, 16).unwrap();
        let d = Dispersion::default();
        let times: Vec<f64> = (0..=64).map(|j| -2.0 + j as f64 / 16.0).collect();
        let a = SpectralField::random_real(g, 1, |xi| (-xi * xi).exp());
        let b = SpectralField::random_real(g, 2, |xi| (-xi * xi).exp());
        let ua: Vec<_> = times.iter().map(|&t| free_evolve(&a, t, &d)).collect();
        let ub: Vec<_> = times.iter().map(|&t| free_evolve(&b, t, &d)).collect();
        let zero: Vec<_> = times.iter().map(|_| SpectralField::zeros(g)).collect();
        assert!(duhamel_bilinear(&zero, &ub, &times, &d).unwrap().iter().all(|f| f.l2_norm() == 0.0));
        let ab = duhamel_bilinear(&ua, &ub, &times, &d).unwrap();
        let ba = duhamel_bilinear(&ub, &ua, &times, &d).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            assert!(x.sub(y).unwrap().l2_norm() <= 1e-12 * x.l2_norm().max(1e-300));
        }
        assert!(duhamel_bilinear(&ua[..4], &ub[..4], &times[..4], &d).is_err());
    }
}
