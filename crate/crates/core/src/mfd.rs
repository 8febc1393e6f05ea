//! Multiframe boundary detection from sliding-window spectra.
//!
//! Every 50 samples a 200-sample window is transformed; its strongest
//! in-band component gives an FB correlation value and the two strongest
//! components are kept as frequency candidates. Once a full multiframe of
//! windows is in, the correlations at the five FB spacings are summed and the
//! best position is validated by checking that the five FBs agree in
//! frequency.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::freq::{interp_constants, peak_frequency, top_two_peaks, SearchBand, SpectrumAnalyzer};
use crate::params::{
    BURST_LEN, FB_FRAMES, FB_TONE_HZ, FFT_LEN, MFD_FB_SPACING_WINDOWS, MFD_WINDOWS_PER_MF,
    MFD_WINDOW_HOP, MFD_WINDOW_LEN, SYMBOLS_PER_FRAME, SYMBOLS_PER_MF,
};
use crate::stream::SampleSource;

/// Largest frequency spread across the five FBs accepted as a detection.
pub const SPREAD_THRESHOLD_HZ: f64 = 1000.0;
/// Multiframes searched before giving up and using the best candidate.
pub const MAX_MFS: usize = 4;
/// Offset from a window start to the FB onset it is best aligned with.
pub const WINDOW_CENTER_OFFSET: usize = (MFD_WINDOW_LEN - BURST_LEN) / 2;
const CANDIDATE_SPACING: usize = 10 * SYMBOLS_PER_FRAME;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindowRecord {
    pub c_fb: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Spectrum-based window measurement with a reusable FFT.
pub struct WindowProcessor {
    an: SpectrumAnalyzer,
    band: SearchBand,
    u: f64,
    v: f64,
    acc: Vec<f64>,
}

impl WindowProcessor {
    pub fn new(band: SearchBand) -> Self {
        // FB tones span 148 of the 200 samples in a well-aligned window
        let (u, v) = interp_constants(BURST_LEN, FFT_LEN).expect("valid constants");
        Self {
            an: SpectrumAnalyzer::new(FFT_LEN),
            band,
            u,
            v,
            acc: vec![0.0; FFT_LEN],
        }
    }

    pub fn process(&mut self, samples: &[Complex64]) -> WindowRecord {
        debug_assert_eq!(samples.len(), MFD_WINDOW_LEN);
        self.acc.fill(0.0);
        self.an.accumulate(samples, &mut self.acc);
        match top_two_peaks(&self.acc, self.band) {
            (Some(k1), k2) => {
                let f1 = peak_frequency(&self.acc, k1, self.u, self.v);
                WindowRecord {
                    c_fb: self.acc[k1].sqrt(),
                    f1,
                    f2: k2.map_or(f1, |k| peak_frequency(&self.acc, k, self.u, self.v)),
                }
            }
            (None, _) => WindowRecord {
                c_fb: 0.0,
                f1: FB_TONE_HZ,
                f2: FB_TONE_HZ,
            },
        }
    }
}

pub fn process_window(samples: &[Complex64], band: SearchBand) -> Result<WindowRecord> {
    if samples.len() != MFD_WINDOW_LEN {
        return Err(Error::SizeMismatch(samples.len(), MFD_WINDOW_LEN));
    }
    Ok(WindowProcessor::new(band).process(samples))
}

/// `C_MF[n] = Σ_i C_FB[(n + 250·i) mod 1275]` over the five FB positions.
pub fn mf_correlate(c_fb: &[f64]) -> Result<Vec<f64>> {
    if c_fb.len() != MFD_WINDOWS_PER_MF {
        return Err(Error::IncompleteRing {
            have: c_fb.len(),
            need: MFD_WINDOWS_PER_MF,
        });
    }
    Ok((0..MFD_WINDOWS_PER_MF)
        .map(|n| {
            (0..FB_FRAMES.len())
                .map(|i| c_fb[(n + MFD_FB_SPACING_WINDOWS * i) % MFD_WINDOWS_PER_MF])
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfdResult {
    /// MF-start candidates modulo one MF: the peak, then 10 frames earlier
    /// and 10 frames later.
    pub candidates: [usize; 3],
    pub coarse_fo_hz: f64,
    pub windows_used: usize,
    pub peak_window: usize,
    pub spread_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MfdStep {
    Hit(MfdResult),
    Continue,
    Timeout(MfdResult),
}

/// Streaming detector state: the latest multiframe of window records and
/// the accumulated multiframe correlation.
#[derive(Debug, Clone)]
pub struct MfdState {
    pub records: Vec<WindowRecord>,
    pub c_mf_acc: Vec<f64>,
    pub mf_searched: usize,
    filled: usize,
    max_mfs: usize,
}

impl Default for MfdState {
    fn default() -> Self {
        Self::new(MAX_MFS)
    }
}

impl MfdState {
    pub fn new(max_mfs: usize) -> Self {
        Self {
            records: vec![WindowRecord::default(); MFD_WINDOWS_PER_MF],
            c_mf_acc: vec![0.0; MFD_WINDOWS_PER_MF],
            mf_searched: 0,
            filled: 0,
            max_mfs: max_mfs.max(1),
        }
    }

    /// Adds one window; returns a decision each time a multiframe completes.
    pub fn push_window(&mut self, rec: WindowRecord) -> Option<MfdStep> {
        self.records[self.filled] = rec;
        self.filled += 1;
        if self.filled < MFD_WINDOWS_PER_MF {
            return None;
        }
        self.filled = 0;
        Some(self.finish_mf())
    }

    /// Batch form: ingest a whole multiframe of windows.
    pub fn mfd_step(&mut self, next_mf_windows: &[WindowRecord]) -> Result<MfdStep> {
        if next_mf_windows.len() != MFD_WINDOWS_PER_MF || self.filled != 0 {
            return Err(Error::IncompleteRing {
                have: next_mf_windows.len(),
                need: MFD_WINDOWS_PER_MF,
            });
        }
        self.records.copy_from_slice(next_mf_windows);
        Ok(self.finish_mf())
    }

    fn finish_mf(&mut self) -> MfdStep {
        let c_fb: Vec<f64> = self.records.iter().map(|r| r.c_fb).collect();
        let c_mf = mf_correlate(&c_fb).expect("ring is complete");
        for (a, c) in self.c_mf_acc.iter_mut().zip(&c_mf) {
            *a += c;
        }
        self.mf_searched += 1;
        let result = self.best_candidate();
        if result.spread_hz < SPREAD_THRESHOLD_HZ {
            MfdStep::Hit(result)
        } else if self.mf_searched >= self.max_mfs {
            MfdStep::Timeout(result)
        } else {
            MfdStep::Continue
        }
    }

    /// Current most likely candidate from the accumulated correlation.
    pub fn best_candidate(&self) -> MfdResult {
        let mut peak = 0;
        for (n, &c) in self.c_mf_acc.iter().enumerate() {
            if c > self.c_mf_acc[peak] {
                peak = n;
            }
        }
        let freqs: Vec<(f64, f64)> = (0..FB_FRAMES.len())
            .map(|i| {
                let r = self.records[(peak + MFD_FB_SPACING_WINDOWS * i) % MFD_WINDOWS_PER_MF];
                (r.f1, r.f2)
            })
            .collect();
        let (spread_hz, mean) = min_spread_selection(&freqs);
        let start = (peak * MFD_WINDOW_HOP + WINDOW_CENTER_OFFSET) % SYMBOLS_PER_MF;
        MfdResult {
            candidates: [
                start,
                (start + SYMBOLS_PER_MF - CANDIDATE_SPACING) % SYMBOLS_PER_MF,
                (start + CANDIDATE_SPACING) % SYMBOLS_PER_MF,
            ],
            coarse_fo_hz: mean - FB_TONE_HZ,
            windows_used: self.mf_searched * MFD_WINDOWS_PER_MF,
            peak_window: peak,
            spread_hz,
        }
    }
}

/// Picks one of two frequencies per position so that max − min is smallest;
/// returns that spread and the mean of the selection.
pub fn min_spread_selection(freqs: &[(f64, f64)]) -> (f64, f64) {
    let n = freqs.len();
    let mut best = (f64::INFINITY, 0.0);
    for mask in 0u32..(1 << n) {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for (i, &(a, b)) in freqs.iter().enumerate() {
            let f = if mask >> i & 1 == 0 { a } else { b };
            lo = lo.min(f);
            hi = hi.max(f);
            sum += f;
        }
        if hi - lo < best.0 {
            best = (hi - lo, sum / n as f64);
        }
    }
    best
}

/// Outcome of running the detector over a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfdReport {
    pub step: MfdStep,
    /// Receiver sample index at which the decision was available.
    pub decided_at_sample: usize,
    pub mfs_used: usize,
}

impl MfdReport {
    pub fn result(&self) -> Option<&MfdResult> {
        match &self.step {
            MfdStep::Hit(r) | MfdStep::Timeout(r) => Some(r),
            MfdStep::Continue => None,
        }
    }

    pub fn is_hit(&self) -> bool {
        matches!(self.step, MfdStep::Hit(_))
    }
}

/// Streams windows from sample 0 until a hit or `state`'s MF limit.
pub fn detect<S: SampleSource + ?Sized>(
    source: &mut S,
    band: SearchBand,
    state: &mut MfdState,
) -> Result<MfdReport> {
    let mut proc_ = WindowProcessor::new(band);
    let mut buf = vec![Complex64::new(0.0, 0.0); MFD_WINDOW_LEN];
    let mut w = 0usize;
    loop {
        let start = w * MFD_WINDOW_HOP;
        if start + MFD_WINDOW_LEN > source.len() {
            return Err(Error::RegionTooShort {
                needed: start + MFD_WINDOW_LEN,
                got: source.len(),
            });
        }
        source.read(start, &mut buf);
        if let Some(step) = state.push_window(proc_.process(&buf)) {
            if !matches!(step, MfdStep::Continue) {
                return Ok(MfdReport {
                    step,
                    decided_at_sample: start + MFD_WINDOW_LEN,
                    mfs_used: state.mf_searched,
                });
            }
        }
        w += 1;
    }
}

/// Circular distance between two MF positions.
pub fn mf_distance(a: usize, b: usize) -> usize {
    let d = (a + SYMBOLS_PER_MF - b % SYMBOLS_PER_MF) % SYMBOLS_PER_MF;
    d.min(SYMBOLS_PER_MF - d)
}
