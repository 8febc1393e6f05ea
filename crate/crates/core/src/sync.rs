//! The synchronization receiver: multiframe detection, coarse frequency
//! correction, EC-SCH timing and decoding, then fine frequency estimation.
//!
//! [`run_sync`] only sees samples. [`score`] compares its report with the
//! ground truth of the generated stream.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ecsch::combine::{hypothesis_shift, new_buffers};
use crate::ecsch::demod::{equalize, ls_channel_estimate, ChannelEstimate, ChannelStats};
use crate::ecsch::{decode_pipeline, AttemptSchedule, DecodeResult, DecodeStatus};
use crate::error::Result;
use crate::freq::{estimate_fine_fo, FreqEstimate, SearchBand};
use crate::mfd::{detect, mf_distance, MfdReport, MfdState, MAX_MFS};
use crate::params::{
    Band, SystemParams, BURST_LEN, ECSCH_MFS_PER_PERIOD, ECSCH_REPS_PER_MF, FFT_LEN, FS_HZ,
    SYMBOLS_PER_MF, TIMING_SEARCH_HALF, TRAINING_START,
};
use crate::signal::burst::cyclic_shift_invert;
use crate::signal::gmsk::derotate;
use crate::signal::multiframe::MultiframeLayout;
use crate::stream::{SampleSource, StreamMeta};
use crate::timing::{training_symbols, xcorr_training, TimingState};

/// Extra samples kept on both sides of each EC-SCH search region.
const REGION_PAD: usize = 4;
const REGION_LEN: usize = BURST_LEN + 2 * (TIMING_SEARCH_HALF + REGION_PAD);
const N_CANDIDATES: usize = 3;

/// Multiframes of samples a trial needs: the decode deadline plus the fine
/// FOE tail.
pub const TRIAL_MFS: usize = 18;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncConfig {
    pub band: Band,
    pub schedule: AttemptSchedule,
    /// R1 limit: decoding must finish within this time from power-on.
    pub deadline_s: f64,
    pub fine_foe_fbs: usize,
    pub mfd_max_mfs: usize,
    /// Refine per-burst channel estimates with long-term statistics.
    pub mmse: bool,
    /// Re-estimate the frequency offset from the already received FBs once
    /// the timing is resolved, before the first decode attempt.
    pub refine_fo: bool,
}

impl SyncConfig {
    pub fn new(band: Band) -> Self {
        Self {
            band,
            schedule: AttemptSchedule::Proposed,
            deadline_s: 2.0,
            fine_foe_fbs: 40,
            mfd_max_mfs: MAX_MFS,
            mmse: true,
            refine_fo: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub candidate: usize,
    pub eta: i64,
    /// Estimated MF start, modulo one MF.
    pub mf_start: usize,
    pub at_sample: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeEvent {
    pub result: DecodeResult,
    pub at_sample: usize,
    /// Start of the last burst that went into the successful buffer.
    pub last_burst_sample: usize,
}

/// Everything the receiver determined, without any ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncReport {
    pub mfd: MfdReport,
    pub coarse_fo_hz: f64,
    /// Offset used for EC-SCH demodulation after timing resolution.
    pub refined_fo_hz: Option<f64>,
    pub resolution: Option<Resolution>,
    pub decode: Option<DecodeEvent>,
    pub attempts: usize,
    pub fine_fo: Option<FreqEstimate>,
}

impl SyncReport {
    pub fn t_mfd_s(&self) -> f64 {
        self.mfd.decided_at_sample as f64 / FS_HZ
    }

    pub fn t_sync_s(&self) -> Option<f64> {
        self.decode.map(|d| d.at_sample as f64 / FS_HZ)
    }

    /// Best available frequency offset estimate.
    pub fn fo_estimate_hz(&self) -> f64 {
        self.fine_fo.map_or(self.coarse_fo_hz, |f| f.offset_hz())
    }
}

struct Rep {
    /// MF index counted from the first collected MF of the candidate.
    mf: usize,
    /// Absolute sample index of the nominal burst start.
    burst_start: usize,
    /// Absolute sample index of `region[0]`.
    start: usize,
    region: Vec<Complex64>,
}

/// Reads `[start, start+len)`, removes the coarse offset and the GMSK
/// rotation.
fn read_corrected<S: SampleSource + ?Sized>(
    source: &mut S,
    start: usize,
    len: usize,
    fo_hz: f64,
) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    source.read(start, &mut buf);
    shift_frequency(&mut buf, start, fo_hz);
    derotate(&buf, start)
}

/// Rebuilds the hypothesis buffers from the stored repetitions at timing
/// `eta` and decodes them. Each hypothesis only combines repetitions since
/// its own latest period start.
fn attempt_decode(reps: &[Rep], eta: i64, mmse: bool) -> (DecodeResult, usize) {
    let offset = (TIMING_SEARCH_HALF + REGION_PAD) as i64 + eta;
    let bursts: Vec<&[Complex64]> = reps
        .iter()
        .map(|r| &r.region[offset as usize..offset as usize + BURST_LEN])
        .collect();
    let ests: Vec<ChannelEstimate> = bursts.iter().map(|b| ls_channel_estimate(b)).collect();
    let mut stats = ChannelStats::default();
    if mmse {
        ests.iter().for_each(|e| stats.add(e));
    }
    let llrs: Vec<_> = bursts
        .iter()
        .zip(&ests)
        .map(|(b, e)| equalize(b, &stats.refine(e)))
        .collect();
    let last_mf = reps.last().map_or(0, |r| r.mf);
    let mut buffers = new_buffers();
    for buf in buffers.iter_mut() {
        let h = buf.shift_hypothesis;
        let period_start = (0..=last_mf)
            .rev()
            .find(|&k| (h + k) % ECSCH_MFS_PER_PERIOD == 0)
            .unwrap_or(0);
        for (r, l) in reps.iter().zip(&llrs).filter(|(r, _)| r.mf >= period_start) {
            let aligned = cyclic_shift_invert(l, hypothesis_shift(h, r.mf));
            for (a, x) in buf.llrs.iter_mut().zip(&aligned) {
                *a += x;
            }
            buf.reps += 1;
        }
    }
    let result = decode_pipeline(&buffers);
    let last_burst = reps.last().map_or(0, |r| r.burst_start);
    (result, last_burst)
}

/// Runs the full receiver on `source`.
pub fn run_sync<S: SampleSource + ?Sized>(source: &mut S, cfg: &SyncConfig) -> Result<SyncReport> {
    let params = SystemParams::new(cfg.band);
    let band = SearchBand::for_params(&params, FFT_LEN);
    let mut mfd_state = MfdState::new(cfg.mfd_max_mfs);
    let mfd = detect(source, band, &mut mfd_state)?;
    let mut report = SyncReport {
        mfd,
        coarse_fo_hz: 0.0,
        refined_fo_hz: None,
        resolution: None,
        decode: None,
        attempts: 0,
        fine_fo: None,
    };
    let Some(res) = mfd.result().copied() else {
        return Ok(report);
    };
    report.coarse_fo_hz = res.coarse_fo_hz;
    let deadline = (cfg.deadline_s * FS_HZ).floor() as usize;
    let decided = mfd.decided_at_sample;

    // first MF start of each candidate whose search regions lie after the decision
    let lead = TIMING_SEARCH_HALF + REGION_PAD;
    let first_mf: Vec<usize> = res
        .candidates
        .iter()
        .map(|&c| {
            let mut m = c;
            while m + MultiframeLayout.ecsch_offsets()[0] < decided + lead {
                m += SYMBOLS_PER_MF;
            }
            m
        })
        .collect();

    // EC-SCH bursts of all candidates in order of availability
    let mut events: Vec<(usize, usize, usize)> = Vec::new(); // (region end, candidate, rep index)
    let horizon = source.len();
    for (c, &m0) in first_mf.iter().enumerate() {
        for rep in 0.. {
            let mf = rep / ECSCH_REPS_PER_MF;
            let b = m0
                + mf * SYMBOLS_PER_MF
                + MultiframeLayout.ecsch_offsets()[rep % ECSCH_REPS_PER_MF];
            let end = b - lead + REGION_LEN;
            if end > horizon || end > deadline + 3 * SYMBOLS_PER_MF {
                break;
            }
            events.push((end, c, rep));
        }
    }
    events.sort_unstable();

    let training = training_symbols();
    let mut timing = TimingState::new(N_CANDIDATES);
    let mut reps: Vec<Vec<Rep>> = (0..N_CANDIDATES).map(|_| Vec::new()).collect();
    let mut resolved: Option<(usize, i64)> = None;
    let mut fo_used = res.coarse_fo_hz;
    for &(end, c, rep) in &events {
        if end > deadline && (resolved.is_some() || report.decode.is_some()) {
            break;
        }
        let mf = rep / ECSCH_REPS_PER_MF;
        let b = first_mf[c]
            + mf * SYMBOLS_PER_MF
            + MultiframeLayout.ecsch_offsets()[rep % ECSCH_REPS_PER_MF];
        let region = read_corrected(source, b - lead, REGION_LEN, fo_used);
        let k = xcorr_training(&region, lead + TRAINING_START, &training)?;
        timing.accumulate(c, &k);
        reps[c].push(Rep {
            mf,
            burst_start: b,
            start: b - lead,
            region,
        });

        let mut attempt_on: Option<(usize, i64)> = None;
        if resolved.is_none() && timing.ready() {
            let (cand, eta) = timing.resolve_candidate();
            resolved = Some((cand, eta));
            report.resolution = Some(Resolution {
                candidate: cand,
                eta,
                mf_start: ((first_mf[cand] as i64 + eta).rem_euclid(SYMBOLS_PER_MF as i64))
                    as usize,
                at_sample: end,
            });
            if cfg.refine_fo {
                let mf_start = first_mf[cand] as i64 + eta;
                if let Some(f) = buffered_fb_estimate(source, mf_start, end, band) {
                    let delta = f - fo_used;
                    for r in reps[cand].iter_mut() {
                        shift_frequency(&mut r.region, r.start, delta);
                    }
                    fo_used = f;
                    report.refined_fo_hz = Some(f);
                }
            }
            if cfg.schedule == AttemptSchedule::Proposed
                && reps[cand].len() >= crate::ecsch::FIRST_ATTEMPT_REPS
            {
                attempt_on = Some((cand, eta));
            }
        }
        match (cfg.schedule, resolved) {
            (AttemptSchedule::Proposed, Some((cand, eta))) => {
                if c == cand && cfg.schedule.should_attempt(reps[cand].len()) {
                    attempt_on = Some((cand, eta));
                }
            }
            (AttemptSchedule::EveryRep, Some((cand, eta))) => {
                if c == cand {
                    attempt_on = Some((cand, eta));
                }
            }
            (AttemptSchedule::EveryRep, None) => {
                // before resolution every candidate is tried on its own timing
                attempt_on = Some((c, timing.eta_hat(c).0));
            }
            (AttemptSchedule::Proposed, None) => {}
        }
        if let Some((cand, eta)) = attempt_on {
            if end > deadline {
                continue;
            }
            report.attempts += 1;
            let (result, last_burst) = attempt_decode(&reps[cand], eta, cfg.mmse);
            if result.status == DecodeStatus::Success {
                report.decode = Some(DecodeEvent {
                    result,
                    at_sample: end,
                    last_burst_sample: last_burst,
                });
                if report.resolution.is_none() {
                    // early success in comparison mode fixes the timing too
                    report.resolution = Some(Resolution {
                        candidate: cand,
                        eta,
                        mf_start: ((first_mf[cand] as i64 + eta).rem_euclid(SYMBOLS_PER_MF as i64))
                            as usize,
                        at_sample: end,
                    });
                }
                break;
            }
        }
    }

    if let Some(r) = report.resolution {
        report.fine_fo = fine_foe(source, r, cfg.fine_foe_fbs, band);
    }
    Ok(report)
}

/// Multiplies `x`, whose first sample has absolute index `start`, by
/// `exp(-j2π·delta·n/fs)`.
fn shift_frequency(x: &mut [Complex64], start: usize, delta_hz: f64) {
    let w = -TAU * delta_hz / FS_HZ;
    let mut rot = Complex64::from_polar(1.0, w * start as f64);
    let step = Complex64::from_polar(1.0, w);
    for v in x.iter_mut() {
        *v *= rot;
        rot *= step;
    }
}

/// Frequency estimate over the FBs of the collected MFs that lie before
/// sample `now`, given the resolved MF start.
fn buffered_fb_estimate<S: SampleSource + ?Sized>(
    source: &mut S,
    mf_start: i64,
    now: usize,
    band: SearchBand,
) -> Option<f64> {
    let mut captures = Vec::new();
    let mut m = mf_start;
    while m < now as i64 {
        for off in MultiframeLayout.fb_offsets() {
            let onset = m + off as i64;
            if onset >= 0 && onset as usize + BURST_LEN <= now {
                let mut buf = vec![Complex64::new(0.0, 0.0); BURST_LEN];
                source.read(onset as usize, &mut buf);
                captures.push(buf);
            }
        }
        m += SYMBOLS_PER_MF as i64;
    }
    if captures.is_empty() {
        return None;
    }
    estimate_fine_fo(&captures, band)
        .ok()
        .map(|e| e.offset_hz())
}

/// Accumulates the FBs following the timing resolution.
fn fine_foe<S: SampleSource + ?Sized>(
    source: &mut S,
    r: Resolution,
    n_fbs: usize,
    band: SearchBand,
) -> Option<FreqEstimate> {
    if n_fbs == 0 {
        return None;
    }
    let mut m = r.mf_start;
    let mut captures = Vec::with_capacity(n_fbs);
    'outer: loop {
        for off in MultiframeLayout.fb_offsets() {
            let onset = m + off;
            if onset < r.at_sample {
                continue;
            }
            if onset + BURST_LEN > source.len() {
                break 'outer;
            }
            let mut buf = vec![Complex64::new(0.0, 0.0); BURST_LEN];
            source.read(onset, &mut buf);
            captures.push(buf);
            if captures.len() == n_fbs {
                break 'outer;
            }
        }
        m += SYMBOLS_PER_MF;
    }
    estimate_fine_fo(&captures, band).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncStatus {
    Synced,
    Timeout,
    FalseSync,
}

impl SyncStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SyncStatus::Synced => "synced",
            SyncStatus::Timeout => "timeout",
            SyncStatus::FalseSync => "false_sync",
        }
    }
}

impl std::str::FromStr for SyncStatus {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synced" => Ok(SyncStatus::Synced),
            "timeout" => Ok(SyncStatus::Timeout),
            "false_sync" => Ok(SyncStatus::FalseSync),
            _ => Err(crate::Error::Parse(format!("unknown status `{s}`"))),
        }
    }
}

/// Per-trial scored record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncOutcome {
    pub status: SyncStatus,
    /// NaN when nothing was decoded.
    pub t_sync_s: f64,
    pub t_mfd_s: f64,
    pub residual_fo_hz: f64,
    pub residual_fo_ppm: f64,
    /// Signed MF-start error; `None` before timing resolution.
    pub residual_to_symbols: Option<i64>,
    pub mfd_mfs_used: usize,
    pub mfd_hit: bool,
    /// Any MFD candidate within ±80 symbols of the true MF start.
    pub mfd_detected: bool,
    pub coarse_fo_err_hz: f64,
    pub attempts: usize,
}

fn signed_mf_error(est: usize, truth: usize) -> i64 {
    let d = (est + SYMBOLS_PER_MF - truth % SYMBOLS_PER_MF) % SYMBOLS_PER_MF;
    if d > SYMBOLS_PER_MF / 2 {
        d as i64 - SYMBOLS_PER_MF as i64
    } else {
        d as i64
    }
}

/// Compares a receiver report with the ground truth.
pub fn score(report: &SyncReport, meta: &StreamMeta, params: &SystemParams) -> SyncOutcome {
    let status = match report.decode {
        None => SyncStatus::Timeout,
        Some(d) => {
            let tx_mf = ((d.last_burst_sample + meta.time_offset_samples) / SYMBOLS_PER_MF) as u64;
            if d.result.payload == Some(meta.schedule.payload(tx_mf)) {
                SyncStatus::Synced
            } else {
                SyncStatus::FalseSync
            }
        }
    };
    let residual_fo_hz = report.fo_estimate_hz() - meta.freq_offset_hz;
    SyncOutcome {
        status,
        t_sync_s: report.t_sync_s().unwrap_or(f64::NAN),
        t_mfd_s: report.t_mfd_s(),
        residual_fo_hz,
        residual_fo_ppm: params.hz_to_ppm(residual_fo_hz),
        residual_to_symbols: report
            .resolution
            .map(|r| signed_mf_error(r.mf_start, meta.mf_start)),
        mfd_mfs_used: report.mfd.mfs_used,
        mfd_hit: report.mfd.is_hit(),
        mfd_detected: report.mfd.result().is_some_and(|r| {
            r.candidates
                .iter()
                .any(|&c| mf_distance(c, meta.mf_start) <= TIMING_SEARCH_HALF)
        }),
        coarse_fo_err_hz: report.coarse_fo_hz - meta.freq_offset_hz,
        attempts: report.attempts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Requirements {
    pub r1: bool,
    pub r2a: bool,
    pub r2b: bool,
}

/// R1: synced within 2 s. R2a: |TO| ≤ 1 symbol. R2b: |FO| ≤ 0.1 ppm.
pub fn check_requirements(outcome: &SyncOutcome) -> Requirements {
    Requirements {
        r1: outcome.status == SyncStatus::Synced && outcome.t_sync_s <= 2.0,
        r2a: outcome.residual_to_symbols.is_some_and(|t| t.abs() <= 1),
        r2b: outcome.residual_fo_ppm.abs() <= 0.1,
    }
}
