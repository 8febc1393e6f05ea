//! Rayleigh fading taps with a Jakes Doppler spectrum (sum of sinusoids) and
//! the reduced 6-path COST-207 Typical Urban profile.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;

use crate::params::FS_HZ;

pub const SINUSOIDS_PER_PATH: usize = 16;

/// COST-207 reduced TU: (delay µs, relative power dB).
pub const TU6_PROFILE: [(f64, f64); 6] = [
    (0.0, -3.0),
    (0.2, 0.0),
    (0.5, -2.0),
    (1.6, -6.0),
    (2.3, -8.0),
    (5.0, -10.0),
];

/// One unit-power Rayleigh process,
/// `g(t) = (X_c(t) + j X_s(t)) / sqrt(2)` with
/// `X_c = sqrt(2/M) Σ cos(ω_d t cos α_n + φ_n)` and
/// `X_s = sqrt(2/M) Σ cos(ω_d t sin α_n + ψ_n)`.
#[derive(Debug, Clone)]
pub struct JakesProcess {
    omega_c: Vec<f64>,
    omega_s: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

impl JakesProcess {
    pub fn new<R: Rng + ?Sized>(doppler_hz: f64, rng: &mut R) -> Self {
        let m = SINUSOIDS_PER_PATH;
        let theta = rng.random_range(-PI..PI);
        let wd = TAU * doppler_hz;
        let mut omega_c = Vec::with_capacity(m);
        let mut omega_s = Vec::with_capacity(m);
        for n in 1..=m {
            let alpha = (TAU * n as f64 - PI + theta) / (4 * m) as f64;
            omega_c.push(wd * alpha.cos());
            omega_s.push(wd * alpha.sin());
        }
        let phi = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
        let psi = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
        Self {
            omega_c,
            omega_s,
            phi,
            psi,
        }
    }

    /// Gain at time `t` seconds.
    pub fn gain(&self, t: f64) -> Complex64 {
        let mut xc = 0.0;
        let mut xs = 0.0;
        for n in 0..self.omega_c.len() {
            xc += (self.omega_c[n] * t + self.phi[n]).cos();
            xs += (self.omega_s[n] * t + self.psi[n]).cos();
        }
        let scale = (1.0 / self.omega_c.len() as f64).sqrt();
        Complex64::new(xc, xs) * scale
    }
}

/// A symbol-spaced tap: the sum of all paths whose delay rounds to it.
#[derive(Debug, Clone)]
pub struct FadingTap {
    pub delay: usize,
    paths: Vec<(f64, JakesProcess)>,
}

impl FadingTap {
    pub fn power(&self) -> f64 {
        self.paths.iter().map(|(a, _)| a * a).sum()
    }

    pub fn gain(&self, t: f64) -> Complex64 {
        self.paths.iter().map(|(a, p)| p.gain(t) * *a).sum()
    }
}

/// Tapped delay line; tap powers sum to one.
#[derive(Debug, Clone)]
pub struct FadingChannel {
    pub taps: Vec<FadingTap>,
    pub doppler_hz: f64,
}

/// Gains are evaluated on this grid and interpolated in between.
const GAIN_GRID: usize = 64;

impl FadingChannel {
    pub fn typical_urban<R: Rng + ?Sized>(doppler_hz: f64, rng: &mut R) -> Self {
        let total: f64 = TU6_PROFILE
            .iter()
            .map(|&(_, db)| 10f64.powf(db / 10.0))
            .sum();
        let mut taps: Vec<FadingTap> = Vec::new();
        for &(delay_us, db) in &TU6_PROFILE {
            let delay = (delay_us * 1e-6 * FS_HZ).round() as usize;
            let amp = (10f64.powf(db / 10.0) / total).sqrt();
            let proc_ = JakesProcess::new(doppler_hz, rng);
            match taps.iter_mut().find(|t| t.delay == delay) {
                Some(t) => t.paths.push((amp, proc_)),
                None => taps.push(FadingTap {
                    delay,
                    paths: vec![(amp, proc_)],
                }),
            }
        }
        taps.sort_by_key(|t| t.delay);
        Self { taps, doppler_hz }
    }

    pub fn max_delay(&self) -> usize {
        self.taps.iter().map(|t| t.delay).max().unwrap_or(0)
    }

    /// Filters `x` whose first sample has absolute index `t0`; samples before
    /// the block are taken as zero.
    pub fn apply(&self, x: &[Complex64], t0: u64, out: &mut [Complex64]) {
        assert_eq!(x.len(), out.len());
        out.iter_mut().for_each(|y| *y = Complex64::new(0.0, 0.0));
        let n = x.len();
        let grid_pts = n / GAIN_GRID + 2;
        for tap in &self.taps {
            let grid: Vec<Complex64> = (0..grid_pts)
                .map(|m| tap.gain((t0 + (m * GAIN_GRID) as u64) as f64 / FS_HZ))
                .collect();
            for k in tap.delay..n {
                let m = k / GAIN_GRID;
                let frac = (k % GAIN_GRID) as f64 / GAIN_GRID as f64;
                let g = grid[m] * (1.0 - frac) + grid[m + 1] * frac;
                out[k] += g * x[k - tap.delay];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// J0 by trapezoidal quadrature of (1/π)∫cos(x sin θ)dθ.
    fn bessel_j0(x: f64) -> f64 {
        let n = 2000;
        let h = PI / n as f64;
        let mut acc = 0.5 * (1.0 + (x * PI.sin()).cos());
        for i in 1..n {
            acc += (x * (i as f64 * h).sin()).cos();
        }
        acc * h / PI
    }

    #[test]
    fn tu_taps_sum_to_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = FadingChannel::typical_urban(92.6, &mut rng);
        let p: f64 = ch.taps.iter().map(FadingTap::power).sum();
        assert!((p - 1.0).abs() < 1e-12);
        assert_eq!(
            ch.taps.iter().map(|t| t.delay).collect::<Vec<_>>(),
            vec![0, 1]
        );
    }

    #[test]
    fn autocorrelation_follows_bessel() {
        let fd = 100.0;
        let lags_s = [0.0, 1e-3, 2.5e-3, 5e-3];
        let realizations = 400;
        let mut acc = [0.0; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..realizations {
            let p = JakesProcess::new(fd, &mut rng);
            let t0 = rng.random_range(0.0..1.0);
            let g0 = p.gain(t0);
            for (i, &lag) in lags_s.iter().enumerate() {
                acc[i] += (p.gain(t0 + lag) * g0.conj()).re;
            }
        }
        for (i, &lag) in lags_s.iter().enumerate() {
            let est = acc[i] / realizations as f64;
            let want = bessel_j0(TAU * fd * lag);
            assert!((est - want).abs() < 0.12, "lag {lag}: {est} vs {want}");
        }
    }

    #[test]
    fn zero_doppler_is_frozen() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ch = FadingChannel::typical_urban(0.0, &mut rng);
        let a = ch.taps[0].gain(0.0);
        let b = ch.taps[0].gain(3.7);
        assert!((a - b).norm() < 1e-12);
    }
}
