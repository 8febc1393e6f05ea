//! Full-sync and MFD-only campaigns.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csvio::{write_rows, CsvRow};
use super::stats::{ecdf, mean, percentile, rms, wilson_interval, Z95};
use super::{check_mode, draw_trial, Mode, Scenario};
use crate::channel::{ChannelKind, ChannelStream};
use crate::error::{Error, Result};
use crate::freq::SearchBand;
use crate::mfd::{detect, mf_distance, MfdState, MAX_MFS};
use crate::params::{Band, SystemParams, FFT_LEN, FS_HZ, SYMBOLS_PER_MF, TIMING_SEARCH_HALF};
use crate::sync::{run_sync, score, SyncConfig, SyncStatus, TRIAL_MFS};

/// One row of `trials.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub snr_db: f64,
    pub channel: ChannelKind,
    pub band: Band,
    pub status: SyncStatus,
    pub t_mfd_s: f64,
    pub t_sync_s: Option<f64>,
    pub resid_fo_hz: f64,
    pub resid_fo_ppm: f64,
    pub resid_to_sym: Option<i64>,
    pub mfd_mfs: usize,
    pub fo_true_hz: f64,
    /// Drawn power-on offset into the transmitted stream.
    pub to_true_sym: usize,
}

impl CsvRow for TrialRecord {
    const HEADER: &'static [&'static str] = &[
        "trial",
        "snr_db",
        "channel",
        "band",
        "status",
        "t_mfd_s",
        "t_sync_s",
        "resid_fo_hz",
        "resid_fo_ppm",
        "resid_to_sym",
        "mfd_mfs",
        "fo_true_hz",
        "to_true_sym",
    ];
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub channel: ChannelKind,
    pub band: Band,
    pub n: usize,
    pub miss_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub fp_rate: f64,
    /// Over successful trials only.
    pub mean_tsync: Option<f64>,
    /// Misses count as infinitely late.
    pub p90_tsync: f64,
}

impl CsvRow for SummaryRow {
    const HEADER: &'static [&'static str] = &[
        "snr_db",
        "channel",
        "band",
        "n",
        "miss_rate",
        "ci_lo",
        "ci_hi",
        "fp_rate",
        "mean_tsync",
        "p90_tsync",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignStats {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

impl CampaignStats {
    pub fn from_trials(trials: Vec<TrialRecord>) -> Self {
        let summary = summarize(&trials);
        Self { trials, summary }
    }

    fn at(&self, snr_db: f64) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(move |t| t.snr_db == snr_db)
    }

    /// Sync-time CDF; unsuccessful trials stay in the denominator.
    pub fn tsync_cdf(&self, snr_db: f64) -> Vec<(f64, f64)> {
        let all: Vec<_> = self.at(snr_db).collect();
        let t: Vec<f64> = all
            .iter()
            .filter(|r| r.status == SyncStatus::Synced)
            .filter_map(|r| r.t_sync_s)
            .collect();
        ecdf(&t, all.len())
    }

    /// Residual timing CDF over successful syncs.
    pub fn to_cdf(&self, snr_db: f64) -> Vec<(f64, f64)> {
        let v: Vec<f64> = self
            .at(snr_db)
            .filter(|r| r.status == SyncStatus::Synced)
            .filter_map(|r| r.resid_to_sym.map(|x| x as f64))
            .collect();
        ecdf(&v, v.len())
    }

    /// Residual |FO| CDF in ppm over all trials with an estimate.
    pub fn fo_cdf(&self, snr_db: f64) -> Vec<(f64, f64)> {
        let all: Vec<_> = self.at(snr_db).collect();
        let v: Vec<f64> = all.iter().map(|r| r.resid_fo_ppm.abs()).collect();
        ecdf(&v, all.len())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_rows(&dir.join("trials.csv"), &self.trials)?;
        write_rows(&dir.join("summary.csv"), &self.summary)
    }
}

/// Aggregates per-trial rows into one summary row per SNR point, in order
/// of first appearance.
pub fn summarize(trials: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, ChannelKind, Band)> = Vec::new();
    for t in trials {
        let k = (t.snr_db, t.channel, t.band);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(snr_db, channel, band)| {
            let rows: Vec<&TrialRecord> = trials
                .iter()
                .filter(|t| t.snr_db == snr_db && t.channel == channel && t.band == band)
                .collect();
            let n = rows.len();
            let misses = rows
                .iter()
                .filter(|r| r.status != SyncStatus::Synced)
                .count();
            let fps = rows
                .iter()
                .filter(|r| r.status == SyncStatus::FalseSync)
                .count();
            let times: Vec<f64> = rows
                .iter()
                .filter(|r| r.status == SyncStatus::Synced)
                .filter_map(|r| r.t_sync_s)
                .collect();
            let mut with_misses = times.clone();
            with_misses.resize(n, f64::INFINITY);
            let (ci_lo, ci_hi) = wilson_interval(misses, n, Z95);
            SummaryRow {
                snr_db,
                channel,
                band,
                n,
                miss_rate: misses as f64 / n as f64,
                ci_lo,
                ci_hi,
                fp_rate: fps as f64 / n as f64,
                mean_tsync: mean(&times),
                p90_tsync: percentile(&with_misses, 0.9).unwrap_or(f64::INFINITY),
            }
        })
        .collect()
}

/// Runs one full-sync trial.
pub fn run_trial(scenario: &Scenario, snr_db: f64, index: u64) -> Result<TrialRecord> {
    let (cfg, schedule) = draw_trial(
        scenario.seed,
        index,
        scenario.channel,
        scenario.band,
        snr_db,
    );
    let mut stream = ChannelStream::new(cfg, schedule, TRIAL_MFS * SYMBOLS_PER_MF)?;
    let sync_cfg = SyncConfig {
        schedule: scenario.schedule,
        ..SyncConfig::new(scenario.band)
    };
    let report = run_sync(&mut stream, &sync_cfg)?;
    let out = score(&report, &stream.meta(), &SystemParams::new(scenario.band));
    Ok(TrialRecord {
        trial: index,
        snr_db,
        channel: scenario.channel,
        band: scenario.band,
        status: out.status,
        t_mfd_s: out.t_mfd_s,
        t_sync_s: out.t_sync_s.is_finite().then_some(out.t_sync_s),
        resid_fo_hz: out.residual_fo_hz,
        resid_fo_ppm: out.residual_fo_ppm,
        resid_to_sym: out.residual_to_symbols,
        mfd_mfs: out.mfd_mfs_used,
        fo_true_hz: cfg.freq_offset_hz,
        to_true_sym: cfg.time_offset_samples,
    })
}

/// Full-sync campaign over the scenario's SNR grid. Trials run in parallel;
/// the output order is fixed (SNR grid order, then trial index).
pub fn run_campaign(scenario: &Scenario) -> Result<CampaignStats> {
    check_mode(scenario, Mode::FullSync)?;
    let jobs: Vec<(f64, u64)> = scenario
        .snr_db
        .iter()
        .flat_map(|&s| (0..scenario.n_trials as u64).map(move |i| (s, i)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(s, i)| run_trial(scenario, s, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignStats::from_trials(trials))
}

/// One row of `mfd.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfdRow {
    pub snr_db: f64,
    pub channel: ChannelKind,
    pub band: Band,
    pub n: usize,
    /// Any candidate within ±80 symbols of the true MF start.
    pub detect_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub hit_rate: f64,
    /// Coarse FO error over hits.
    pub coarse_rms_hz: Option<f64>,
    pub mean_mfs: f64,
    pub mean_tmfd_s: f64,
}

impl CsvRow for MfdRow {
    const HEADER: &'static [&'static str] = &[
        "snr_db",
        "channel",
        "band",
        "n",
        "detect_rate",
        "ci_lo",
        "ci_hi",
        "hit_rate",
        "coarse_rms_hz",
        "mean_mfs",
        "mean_tmfd_s",
    ];
}

struct MfdTrial {
    detected: bool,
    hit: bool,
    coarse_err_hz: f64,
    mfs: usize,
    t_mfd_s: f64,
}

fn run_mfd_trial(scenario: &Scenario, snr_db: f64, index: u64) -> Result<MfdTrial> {
    let (cfg, schedule) = draw_trial(
        scenario.seed,
        index,
        scenario.channel,
        scenario.band,
        snr_db,
    );
    let mut stream = ChannelStream::new(cfg, schedule, (MAX_MFS + 1) * SYMBOLS_PER_MF)?;
    let band = SearchBand::for_params(&SystemParams::new(scenario.band), FFT_LEN);
    let report = detect(&mut stream, band, &mut MfdState::new(MAX_MFS))?;
    let truth = stream.meta();
    let r = report.result().expect("detector ran to a decision");
    Ok(MfdTrial {
        detected: r
            .candidates
            .iter()
            .any(|&c| mf_distance(c, truth.mf_start) <= TIMING_SEARCH_HALF),
        hit: report.is_hit(),
        coarse_err_hz: r.coarse_fo_hz - truth.freq_offset_hz,
        mfs: report.mfs_used,
        t_mfd_s: report.decided_at_sample as f64 / FS_HZ,
    })
}

/// Detector-only campaign with the 4-MF budget.
pub fn run_mfd_campaign(scenario: &Scenario) -> Result<Vec<MfdRow>> {
    check_mode(scenario, Mode::MfdOnly)?;
    scenario
        .snr_db
        .iter()
        .map(|&snr_db| {
            let trials = (0..scenario.n_trials as u64)
                .into_par_iter()
                .map(|i| run_mfd_trial(scenario, snr_db, i))
                .collect::<Result<Vec<_>>>()?;
            let n = trials.len();
            let det = trials.iter().filter(|t| t.detected).count();
            let hits: Vec<f64> = trials
                .iter()
                .filter(|t| t.hit)
                .map(|t| t.coarse_err_hz)
                .collect();
            let (ci_lo, ci_hi) = wilson_interval(det, n, Z95);
            Ok(MfdRow {
                snr_db,
                channel: scenario.channel,
                band: scenario.band,
                n,
                detect_rate: det as f64 / n as f64,
                ci_lo,
                ci_hi,
                hit_rate: hits.len() as f64 / n as f64,
                coarse_rms_hz: rms(&hits),
                mean_mfs: trials.iter().map(|t| t.mfs as f64).sum::<f64>() / n as f64,
                mean_tmfd_s: trials.iter().map(|t| t.t_mfd_s).sum::<f64>() / n as f64,
            })
        })
        .collect()
}
