//! Fine timing from EC-SCH training-sequence correlations, accumulated
//! non-coherently over repetitions, and resolution of the three MF-start
//! candidates.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{ECSCH_TRAINING, TIMING_SEARCH_HALF, TRAINING_LEN};

/// Number of lags searched, `η ∈ [−80, 80]`.
pub const N_LAGS: usize = 2 * TIMING_SEARCH_HALF + 1;
/// Repetitions per candidate required before the candidate is chosen.
pub const RESOLVE_REPS: usize = 28;

/// The EC-SCH training sequence as ±1 symbols.
pub fn training_symbols() -> [f64; TRAINING_LEN] {
    ECSCH_TRAINING.map(|b| 1.0 - 2.0 * f64::from(b))
}

/// `K[η] = Σ_k r[nominal + η + k]·t[k]` for all lags. `region` must be
/// derotated; `nominal` is the index in `region` where the training would
/// start at zero offset.
pub fn xcorr_training(
    region: &[Complex64],
    nominal: usize,
    training: &[f64],
) -> Result<Vec<Complex64>> {
    let h = TIMING_SEARCH_HALF;
    let needed = nominal + h + training.len();
    if nominal < h || region.len() < needed {
        return Err(Error::RegionTooShort {
            needed: needed.max(h + training.len()),
            got: region.len(),
        });
    }
    Ok((0..N_LAGS)
        .map(|i| {
            let start = nominal + i - h;
            region[start..start + training.len()]
                .iter()
                .zip(training)
                .map(|(r, t)| r * t)
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingState {
    pub k_acc: Vec<[f64; N_LAGS]>,
    pub reps_seen: Vec<usize>,
}

impl TimingState {
    pub fn new(n_candidates: usize) -> Self {
        Self {
            k_acc: vec![[0.0; N_LAGS]; n_candidates],
            reps_seen: vec![0; n_candidates],
        }
    }

    /// Adds `|K_p[η]|²` for candidate `c`.
    pub fn accumulate(&mut self, c: usize, k: &[Complex64]) {
        assert_eq!(k.len(), N_LAGS);
        for (a, v) in self.k_acc[c].iter_mut().zip(k) {
            *a += v.norm_sqr();
        }
        self.reps_seen[c] += 1;
    }

    /// Lag with the largest accumulated metric (lowest lag on ties), and the
    /// metric value.
    pub fn eta_hat(&self, c: usize) -> (i64, f64) {
        let acc = &self.k_acc[c];
        let mut best = 0;
        for i in 1..N_LAGS {
            if acc[i] > acc[best] {
                best = i;
            }
        }
        (best as i64 - TIMING_SEARCH_HALF as i64, acc[best])
    }

    pub fn ready(&self) -> bool {
        self.reps_seen.iter().all(|&r| r >= RESOLVE_REPS)
    }

    /// Candidate with the largest peak metric and its timing correction.
    pub fn resolve_candidate(&self) -> (usize, i64) {
        let mut best = (0, self.eta_hat(0));
        for c in 1..self.k_acc.len() {
            let e = self.eta_hat(c);
            if e.1 > best.1 .1 {
                best = (c, e);
            }
        }
        (best.0, best.1 .0)
    }
}
