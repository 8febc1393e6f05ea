//! Soft demodulation of one EC-SCH burst: training-based channel estimate
//! and a 16-state max-log MAP equalizer.
//!
//! In the derotated domain a GMSK burst is close to a linear modulation of
//! the real symbols `1 − 2b`, so the received sample `k` is modelled as
//! `Σ_l h_l·s_{k−l}` for lags `l = −1..=3`, which covers the pulse shape and
//! a short delay spread.

use std::sync::OnceLock;

use nalgebra::{Matrix5, SMatrix, Vector5};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{
    BURST_LEN, ECSCH_CODED_BITS, ECSCH_TRAINING, SYNC_DATA_HALF, TAIL_LEN, TRAINING_LEN,
    TRAINING_START,
};

pub const CHAN_TAPS: usize = 5;
/// Taps ahead of the current symbol.
pub const TAP_LEAD: usize = 1;
const TAP_LAG: usize = CHAN_TAPS - 1 - TAP_LEAD;
/// Observations whose whole tap span falls on training symbols.
const N_OBS: usize = TRAINING_LEN - CHAN_TAPS + 1;
const FIRST_OBS: usize = TRAINING_START + TAP_LAG;
const STATES: usize = 1 << (CHAN_TAPS - 1);

type Regressor = SMatrix<f64, N_OBS, CHAN_TAPS>;

struct LsTables {
    /// `(SᵀS)⁻¹Sᵀ`
    pinv: SMatrix<f64, CHAN_TAPS, N_OBS>,
    /// `(SᵀS)⁻¹`, the LS error covariance per unit noise variance.
    cov: Matrix5<f64>,
    s: Regressor,
}

fn ls_tables() -> &'static LsTables {
    static T: OnceLock<LsTables> = OnceLock::new();
    T.get_or_init(|| {
        let sym = |i: usize| 1.0 - 2.0 * f64::from(ECSCH_TRAINING[i - TRAINING_START]);
        let s = Regressor::from_fn(|row, col| {
            let k = FIRST_OBS + row;
            sym(k + TAP_LEAD - col)
        });
        let cov = (s.transpose() * s)
            .try_inverse()
            .expect("training sequence has full rank");
        LsTables {
            pinv: cov * s.transpose(),
            cov,
            s,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    /// `taps[i]` multiplies `s_{k + TAP_LEAD − i}`.
    pub taps: [Complex64; CHAN_TAPS],
    /// Per-sample complex noise variance.
    pub noise_var: f64,
}

/// Least-squares estimate from the training section of a derotated burst
/// (`burst[0]` is the first burst symbol).
pub fn ls_channel_estimate(burst: &[Complex64]) -> ChannelEstimate {
    let t = ls_tables();
    let r = SMatrix::<Complex64, N_OBS, 1>::from_fn(|i, _| burst[FIRST_OBS + i]);
    let h = t.pinv.map(|x| Complex64::new(x, 0.0)) * r;
    let fit = t.s.map(|x| Complex64::new(x, 0.0)) * h;
    let resid: f64 = (r - fit).iter().map(|e| e.norm_sqr()).sum();
    ChannelEstimate {
        taps: std::array::from_fn(|i| h[i]),
        noise_var: (resid / (N_OBS - CHAN_TAPS) as f64).max(1e-12),
    }
}

/// Long-term channel statistics collected over repetitions, used to
/// shrink single-burst LS estimates towards what the channel usually looks
/// like.
#[derive(Debug, Clone)]
pub struct ChannelStats {
    sum_hh: Matrix5<Complex64>,
    sum_noise: f64,
    n: usize,
}

impl Default for ChannelStats {
    fn default() -> Self {
        Self {
            sum_hh: Matrix5::zeros(),
            sum_noise: 0.0,
            n: 0,
        }
    }
}

impl ChannelStats {
    pub fn add(&mut self, est: &ChannelEstimate) {
        let h = Vector5::from_fn(|i, _| est.taps[i]);
        self.sum_hh += h * h.adjoint();
        self.sum_noise += est.noise_var;
        self.n += 1;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn noise_var(&self) -> f64 {
        self.sum_noise / self.n.max(1) as f64
    }

    /// MMSE refinement of `est` under the averaged tap covariance.
    pub fn refine(&self, est: &ChannelEstimate) -> ChannelEstimate {
        if self.n == 0 {
            return *est;
        }
        let sigma2 = self.noise_var();
        let c = ls_tables().cov.map(|x| Complex64::new(x * sigma2, 0.0));
        let raw = self.sum_hh / Complex64::new(self.n as f64, 0.0) - c;
        // project onto the positive semidefinite cone
        let eig = raw.symmetric_eigen();
        let vals = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0), 0.0));
        let r = eig.eigenvectors * Matrix5::from_diagonal(&vals) * eig.eigenvectors.adjoint();
        let Some(inv) = (r + c).try_inverse() else {
            return *est;
        };
        let h = Vector5::from_fn(|i, _| est.taps[i]);
        let hm = r * inv * h;
        ChannelEstimate {
            taps: std::array::from_fn(|i| hm[i]),
            noise_var: sigma2,
        }
    }
}

/// Burst positions with known content and their ±1 values, `None` for data.
fn known_symbol(k: isize) -> Option<f64> {
    if k < TAIL_LEN as isize || k >= (BURST_LEN - TAIL_LEN) as isize {
        // tails and everything outside the burst act as zero bits
        return Some(1.0);
    }
    let k = k as usize;
    if (TRAINING_START..TRAINING_START + TRAINING_LEN).contains(&k) {
        return Some(1.0 - 2.0 * f64::from(ECSCH_TRAINING[k - TRAINING_START]));
    }
    None
}

/// Index of the coded bit carried by burst position `k`, in burst order.
fn data_index(k: usize) -> Option<usize> {
    if (TAIL_LEN..TRAINING_START).contains(&k) {
        Some(k - TAIL_LEN)
    } else if (TRAINING_START + TRAINING_LEN..BURST_LEN - TAIL_LEN).contains(&k) {
        Some(k - TRAINING_START - TRAINING_LEN + SYNC_DATA_HALF)
    } else {
        None
    }
}

#[inline]
fn pm(bit: usize) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Max-log MAP equalization of a derotated burst. Returns LLRs
/// `log P(b=0)/P(b=1)` of the 78 coded bits in burst order.
pub fn equalize(burst: &[Complex64], est: &ChannelEstimate) -> [f64; ECSCH_CODED_BITS] {
    assert!(burst.len() >= BURST_LEN);
    let inv_var = 1.0 / est.noise_var;
    // expected output for (state, new bit); state bit i holds b_{k−i}
    let mut expect = [[Complex64::new(0.0, 0.0); 2]; STATES];
    for (s, e) in expect.iter_mut().enumerate() {
        for b in 0..2 {
            let mut y = est.taps[0] * pm(b);
            for i in 0..CHAN_TAPS - 1 {
                y += est.taps[i + 1] * pm(s >> i & 1);
            }
            e[b] = y;
        }
    }
    let allowed = |k: isize| -> &'static [usize] {
        match known_symbol(k) {
            Some(v) if v > 0.0 => &[0],
            Some(_) => &[1],
            None => &[0, 1],
        }
    };
    let n = BURST_LEN;
    let neg = f64::NEG_INFINITY;
    let mut gamma = vec![[[neg; 2]; STATES]; n];
    let mut alpha = vec![[neg; STATES]; n + 1];
    alpha[0][0] = 0.0;
    for k in 0..n {
        let r = burst[k];
        let bits = allowed(k as isize + TAP_LEAD as isize);
        for s in 0..STATES {
            if alpha[k][s] == neg {
                continue;
            }
            for &b in bits {
                let g = -(r - expect[s][b]).norm_sqr() * inv_var;
                gamma[k][s][b] = g;
                let ns = ((s << 1) | b) & (STATES - 1);
                let m = alpha[k][s] + g;
                if m > alpha[k + 1][ns] {
                    alpha[k + 1][ns] = m;
                }
            }
        }
    }
    let mut beta = [neg; STATES];
    beta[0] = 0.0;
    let mut llrs = [0.0; ECSCH_CODED_BITS];
    for k in (0..n).rev() {
        let mut nb = [neg; STATES];
        let mut best = [neg; 2];
        for s in 0..STATES {
            if alpha[k][s] == neg {
                continue;
            }
            for b in 0..2 {
                let g = gamma[k][s][b];
                if g == neg {
                    continue;
                }
                let ns = ((s << 1) | b) & (STATES - 1);
                let tail = g + beta[ns];
                if tail > nb[s] {
                    nb[s] = tail;
                }
                let full = alpha[k][s] + tail;
                if full > best[b] {
                    best[b] = full;
                }
            }
        }
        if let Some(j) = data_index(k + TAP_LEAD) {
            llrs[j] = best[0] - best[1];
        }
        beta = nb;
    }
    llrs
}

/// LS channel estimate plus equalization of the burst starting at
/// `region[burst_start]`.
pub fn soft_demod(region: &[Complex64], burst_start: usize) -> Result<[f64; ECSCH_CODED_BITS]> {
    if region.len() < burst_start + BURST_LEN {
        return Err(Error::RegionTooShort {
            needed: burst_start + BURST_LEN,
            got: region.len(),
        });
    }
    let burst = &region[burst_start..burst_start + BURST_LEN];
    Ok(equalize(burst, &ls_channel_estimate(burst)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::burst::{ecsch_burst_bits, gen_ecsch_burst, EcschPayload};
    use crate::signal::gmsk::derotate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noisy_burst(
        payload: &EcschPayload,
        shift: usize,
        gain: Complex64,
        sigma2: f64,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Complex64> {
        let b = gen_ecsch_burst(payload, shift, 8);
        let s = (sigma2 / 2.0).sqrt();
        let x: Vec<Complex64> = b
            .symbols
            .iter()
            .map(|v| {
                let n = Complex64::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                );
                v * gain + n * s
            })
            .collect();
        derotate(&x, 0)
    }

    fn coded_in_burst_order(p: &EcschPayload, shift: usize) -> Vec<u8> {
        let bits = ecsch_burst_bits(p, shift);
        (0..BURST_LEN)
            .filter(|&k| data_index(k).is_some())
            .map(|k| bits[k])
            .collect()
    }

    #[test]
    fn data_positions_cover_all_coded_bits() {
        let idx: Vec<usize> = (0..BURST_LEN).filter_map(data_index).collect();
        assert_eq!(idx, (0..ECSCH_CODED_BITS).collect::<Vec<_>>());
    }

    #[test]
    fn noiseless_signs_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for shift in 0..4 {
            let p = EcschPayload::new(rng.random_range(0..1 << 19), rng.random_range(0..64));
            let r = noisy_burst(&p, shift, Complex64::from_polar(1.0, 0.8), 0.0, &mut rng);
            let l = soft_demod(&r, 0).unwrap();
            let want = coded_in_burst_order(&p, shift);
            for (j, (&x, &b)) in l.iter().zip(&want).enumerate() {
                assert_eq!(x < 0.0, b == 1, "bit {j}: {x}");
            }
        }
    }

    #[test]
    fn raw_bit_error_rate_at_low_snr() {
        // −8.5 dB in 200 kHz is −9.8 dB per sample
        let sigma2 = 10f64.powf(9.83 / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut errs, mut total) = (0, 0);
        for _ in 0..400 {
            let p = EcschPayload::new(rng.random_range(0..1 << 19), 3);
            let r = noisy_burst(
                &p,
                0,
                Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
                sigma2,
                &mut rng,
            );
            let l = soft_demod(&r, 0).unwrap();
            for (&x, &b) in l.iter().zip(&coded_in_burst_order(&p, 0)) {
                errs += usize::from((x < 0.0) != (b == 1));
                total += 1;
            }
        }
        let ber = errs as f64 / total as f64;
        assert!((0.25..=0.40).contains(&ber), "{ber}");
    }

    #[test]
    fn llr_scale_follows_gain_over_noise() {
        // flat single tap: mean |LLR| grows with |g|²/σ² at high SNR
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = EcschPayload::new(77, 7);
        let mean_abs = |g: f64, rng: &mut ChaCha8Rng| -> f64 {
            let r = noisy_burst(&p, 0, Complex64::new(g, 0.0), 0.0, rng);
            let mut est = ls_channel_estimate(&r);
            est.noise_var = 0.01;
            equalize(&r, &est).iter().map(|x| x.abs()).sum::<f64>() / 78.0
        };
        let a = mean_abs(1.0, &mut rng);
        let b = mean_abs(2.0, &mut rng);
        assert!((b / a - 4.0).abs() < 0.05, "{}", b / a);
    }

    #[test]
    fn mmse_refinement_helps_at_low_snr() {
        let sigma2 = 10f64.powf(12.8 / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let clean = noisy_burst(
            &EcschPayload::new(1, 1),
            0,
            Complex64::new(1.0, 0.0),
            0.0,
            &mut rng,
        );
        let truth = ls_channel_estimate(&clean);
        let mut stats = ChannelStats::default();
        let mut ests = Vec::new();
        for _ in 0..28 {
            let g = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let r = noisy_burst(&EcschPayload::new(1, 1), 0, g, sigma2, &mut rng);
            let e = ls_channel_estimate(&r);
            stats.add(&e);
            ests.push((e, g));
        }
        let err = |e: &ChannelEstimate, g: Complex64| -> f64 {
            (0..CHAN_TAPS)
                .map(|i| (e.taps[i] - truth.taps[i] * g).norm_sqr())
                .sum()
        };
        let ls: f64 = ests.iter().map(|(e, g)| err(e, *g)).sum();
        let mmse: f64 = ests.iter().map(|(e, g)| err(&stats.refine(e), *g)).sum();
        assert!(mmse < 0.6 * ls, "ls {ls} mmse {mmse}");
    }

    #[test]
    fn short_region_rejected() {
        assert!(soft_demod(&[Complex64::new(0.0, 0.0); 100], 0).is_err());
    }
}
