//! Spectral frequency estimation: zero-padded power spectra, non-coherent
//! accumulation, three-bin peak interpolation, the CRLB and a brute-force ML
//! reference.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::params::{SystemParams, BURST_LEN, FB_TONE_HZ, FFT_LEN, FS_HZ, MFD_WINDOW_LEN};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub bins: Vec<f64>,
    /// Number of time samples behind each transform.
    pub n: usize,
}

impl PowerSpectrum {
    pub fn zeros(l: usize, n: usize) -> Self {
        Self {
            bins: vec![0.0; l],
            n,
        }
    }

    pub fn l(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_hz(&self) -> f64 {
        FS_HZ / self.l() as f64
    }
}

/// Reusable zero-padded FFT of size `l`.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SpectrumAnalyzer {
    pub fn new(l: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(l);
        let scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        Self {
            fft,
            buf: vec![Complex64::new(0.0, 0.0); l],
            scratch,
        }
    }

    pub fn l(&self) -> usize {
        self.buf.len()
    }

    /// Adds `|DFT_l(x)|²` into `acc`.
    pub fn accumulate(&mut self, x: &[Complex64], acc: &mut [f64]) {
        assert!(x.len() <= self.l() && acc.len() == self.l());
        self.buf[..x.len()].copy_from_slice(x);
        self.buf[x.len()..].fill(Complex64::new(0.0, 0.0));
        self.fft
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        for (a, v) in acc.iter_mut().zip(&self.buf) {
            *a += v.norm_sqr();
        }
    }

    pub fn spectrum(&mut self, x: &[Complex64]) -> PowerSpectrum {
        let mut s = PowerSpectrum::zeros(self.l(), x.len());
        self.accumulate(x, &mut s.bins);
        s
    }
}

/// Power spectrum of one 200-sample window, zero-padded to 256 bins.
pub fn window_spectrum(samples: &[Complex64]) -> Result<PowerSpectrum> {
    if samples.len() != MFD_WINDOW_LEN {
        return Err(Error::SizeMismatch(samples.len(), MFD_WINDOW_LEN));
    }
    Ok(SpectrumAnalyzer::new(FFT_LEN).spectrum(samples))
}

/// Element-wise sum of power spectra.
pub fn accumulate_spectra(spectra: &[PowerSpectrum]) -> Result<PowerSpectrum> {
    let first = spectra.first().ok_or(Error::EmptyInput)?;
    let mut acc = first.clone();
    for s in &spectra[1..] {
        if s.l() != acc.l() {
            return Err(Error::SizeMismatch(acc.l(), s.l()));
        }
        for (a, b) in acc.bins.iter_mut().zip(&s.bins) {
            *a += b;
        }
    }
    Ok(acc)
}

/// `D(x) = |Σ_{m<n} e^{-j2πxm/l}|²` and its first three derivatives, with
/// `x` in bins.
fn dirichlet_power_derivs(x: f64, n: usize, l: usize) -> [f64; 4] {
    let mut out = [n as f64, 0.0, 0.0, 0.0];
    for d in 1..n {
        let w = 2.0 * (n - d) as f64;
        let a = 2.0 * PI * d as f64 / l as f64;
        let (s, c) = (a * x).sin_cos();
        out[0] += w * c;
        out[1] -= w * a * s;
        out[2] -= w * a * a * c;
        out[3] += w * a * a * a * s;
    }
    out
}

/// Constants `(u, v)` of the three-bin estimator
/// `δ = (y₊ − y₋) / (u(y₊ + y₋) + v·y₀)` for a rectangular window of `n`
/// samples zero-padded to `l` bins.
///
/// They are chosen so the estimate has unit slope and no cubic error term
/// at the bin center, which keeps the bias below a few thousandths of a bin
/// over the whole ±½-bin range.
pub fn interp_constants(n: usize, l: usize) -> Result<(f64, f64)> {
    if n < 2 || n > l {
        return Err(Error::InvalidArgument(format!(
            "need 1 < n ≤ l, got n={n}, l={l}"
        )));
    }
    let d1 = dirichlet_power_derivs(1.0, n, l);
    let d0 = dirichlet_power_derivs(0.0, n, l);
    let (b0, c0, a1) = (2.0 * d1[0], d0[0], -2.0 * d1[1]);
    let (b2, c2, a3) = (d1[2], d0[2] / 2.0, -d1[3] / 3.0);
    let det = b0 * c2 - b2 * c0;
    if det.abs() < 1e-300 {
        return Err(Error::InvalidArgument(
            "degenerate interpolation system".into(),
        ));
    }
    Ok(((a1 * c2 - a3 * c0) / det, (b0 * a3 - b2 * a1) / det))
}

/// Fractional-bin correction converted to Hz.
pub fn interp3(y_m1: f64, y_0: f64, y_p1: f64, u: f64, v: f64, bin_hz: f64) -> Result<f64> {
    let den = u * (y_p1 + y_m1) + v * y_0;
    if !(den > 0.0) {
        return Err(Error::NoPeak);
    }
    Ok((y_p1 - y_m1) / den * bin_hz)
}

/// Inclusive bin range searched for the FB tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBand {
    pub lo: usize,
    pub hi: usize,
}

impl SearchBand {
    /// Bins whose centers lie in `[fs/4 − max_offset, fs/4 + max_offset]`.
    pub fn around_tone(max_offset_hz: f64, l: usize) -> Self {
        let bin_hz = FS_HZ / l as f64;
        let lo = ((FB_TONE_HZ - max_offset_hz) / bin_hz - 1e-9)
            .ceil()
            .max(1.0) as usize;
        let hi = ((((FB_TONE_HZ + max_offset_hz) / bin_hz) + 1e-9).floor() as usize).min(l - 2);
        Self { lo, hi }
    }

    pub fn for_params(params: &SystemParams, l: usize) -> Self {
        Self::around_tone(params.max_freq_offset_hz(), l)
    }

    pub fn contains(&self, bin: usize) -> bool {
        (self.lo..=self.hi).contains(&bin)
    }
}

/// Interpolated frequency of the peak at `k`, in Hz.
pub fn peak_frequency(bins: &[f64], k: usize, u: f64, v: f64) -> f64 {
    let l = bins.len();
    let bin_hz = FS_HZ / l as f64;
    let corr = interp3(
        bins[(k + l - 1) % l],
        bins[k],
        bins[(k + 1) % l],
        u,
        v,
        bin_hz,
    )
    .unwrap_or(0.0);
    k as f64 * bin_hz + corr.clamp(-bin_hz / 2.0, bin_hz / 2.0)
}

/// The two largest local maxima inside `band` (lowest index wins ties).
pub fn top_two_peaks(bins: &[f64], band: SearchBand) -> (Option<usize>, Option<usize>) {
    let mut first: Option<usize> = None;
    let mut second: Option<usize> = None;
    for k in band.lo..=band.hi {
        let y = bins[k];
        if y < bins[k - 1] || y < bins[k + 1] || y <= 0.0 {
            continue;
        }
        match first {
            Some(f) if y <= bins[f] => {
                if second.is_none_or(|s| y > bins[s]) {
                    second = Some(k);
                }
            }
            _ => {
                second = first;
                first = Some(k);
            }
        }
    }
    (first, second)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqEstimate {
    /// Absolute tone frequency, Hz.
    pub f_hat: f64,
    pub peak_bin: usize,
    pub peak_power: f64,
    pub second_f: f64,
    pub n_accumulated: usize,
}

impl FreqEstimate {
    /// Estimated carrier offset, `f_hat − fs/4`.
    pub fn offset_hz(&self) -> f64 {
        self.f_hat - FB_TONE_HZ
    }
}

/// Peak search on an accumulated spectrum of windows with `n` active tone
/// samples.
pub fn estimate_from_spectrum(
    acc: &PowerSpectrum,
    n_tone: usize,
    band: SearchBand,
    n_accumulated: usize,
) -> Result<FreqEstimate> {
    let (u, v) = interp_constants(n_tone, acc.l())?;
    let (p1, p2) = top_two_peaks(&acc.bins, band);
    let k = p1.ok_or(Error::NoPeak)?;
    let lo_hz = band.lo as f64 * acc.bin_hz() - acc.bin_hz() / 2.0;
    let hi_hz = band.hi as f64 * acc.bin_hz() + acc.bin_hz() / 2.0;
    let f_hat = peak_frequency(&acc.bins, k, u, v).clamp(lo_hz, hi_hz);
    Ok(FreqEstimate {
        f_hat,
        peak_bin: k,
        peak_power: acc.bins[k],
        second_f: p2.map_or(f_hat, |k2| peak_frequency(&acc.bins, k2, u, v)),
        n_accumulated,
    })
}

/// Fine frequency estimate from FB captures: power spectra are accumulated
/// non-coherently and the accumulated peak is interpolated.
pub fn estimate_fine_fo(fb_windows: &[Vec<Complex64>], band: SearchBand) -> Result<FreqEstimate> {
    if fb_windows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut an = SpectrumAnalyzer::new(FFT_LEN);
    let mut acc = PowerSpectrum::zeros(FFT_LEN, fb_windows[0].len());
    for w in fb_windows {
        if w.len() > FFT_LEN || w.is_empty() {
            return Err(Error::SizeMismatch(w.len(), BURST_LEN));
        }
        an.accumulate(w, &mut acc.bins);
    }
    let n_tone = fb_windows[0].len().min(BURST_LEN);
    estimate_from_spectrum(&acc, n_tone, band, fb_windows.len())
}

/// RMS frequency error bound for one tone of `n` samples at `snr_db`
/// (SNR measured in the noise bandwidth).
pub fn crlb_rms(snr_db: f64, n: usize, params: &SystemParams) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    let n = n as f64;
    (6.0 * params.fs.powi(3) / (snr * params.bw * n * (n * n - 1.0))).sqrt() / (2.0 * PI)
}

/// Frequency of the periodogram maximum over `[lo_hz, hi_hz]` on a grid no
/// coarser than `resolution_hz`.
pub fn ml_oracle(samples: &[Complex64], resolution_hz: f64, lo_hz: f64, hi_hz: f64) -> Result<f64> {
    if !(resolution_hz > 0.0) {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let l = ((FS_HZ / resolution_hz).ceil() as usize)
        .max(samples.len())
        .next_power_of_two();
    let mut an = SpectrumAnalyzer::new(l);
    let s = an.spectrum(samples);
    let bin_hz = FS_HZ / l as f64;
    let lo = (lo_hz / bin_hz).ceil() as i64;
    let hi = (hi_hz / bin_hz).floor() as i64;
    let mut best = (lo, f64::NEG_INFINITY);
    for k in lo..=hi {
        let p = s.bins[k.rem_euclid(l as i64) as usize];
        if p > best.1 {
            best = (k, p);
        }
    }
    Ok(best.0 as f64 * bin_hz)
}
