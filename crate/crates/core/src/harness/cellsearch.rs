//! Cell search with the multiframe detector as a carrier-presence test.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csvio::{write_rows, CsvRow};
use super::stats::{wilson_interval, Z95};
use super::{check_mode, draw_trial, Mode, Scenario};
use crate::channel::ChannelStream;
use crate::error::{Error, Result};
use crate::freq::SearchBand;
use crate::mfd::{detect, mf_distance, MfdState};
use crate::params::{SystemParams, FFT_LEN, MF_DURATION_S, SYMBOLS_PER_MF, TIMING_SEARCH_HALF};

/// Low plus high band BCCH carriers a full scan visits.
pub const SCAN_CARRIERS: usize = 298 + 673;
/// Detection rate that defines the MF budget of a scan.
pub const TARGET_DETECTION: f64 = 0.99;
/// Trial indices of empty carriers start here so they never share draws
/// with occupied ones.
const EMPTY_INDEX_BASE: u64 = 1 << 40;

/// Detection rate after searching `mfs` multiframes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSearchRow {
    pub snr_db: f64,
    pub mfs: usize,
    pub detect_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Detected and the best candidate set contains the true MF start.
    pub timing_ok_rate: f64,
}

impl CsvRow for CellSearchRow {
    const HEADER: &'static [&'static str] = &[
        "snr_db",
        "mfs",
        "detect_rate",
        "ci_lo",
        "ci_hi",
        "timing_ok_rate",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSearchSummary {
    pub snr_db: f64,
    pub n_occupied: usize,
    /// Smallest MF budget reaching 99 % detection.
    pub mfs_for_99: Option<usize>,
    /// Projected time to scan every carrier with that budget.
    pub scan_time_min: Option<f64>,
    pub n_empty: usize,
    pub false_detections: usize,
}

impl CsvRow for CellSearchSummary {
    const HEADER: &'static [&'static str] = &[
        "snr_db",
        "n_occupied",
        "mfs_for_99",
        "scan_time_min",
        "n_empty",
        "false_detections",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSearchStats {
    pub rows: Vec<CellSearchRow>,
    pub summary: Vec<CellSearchSummary>,
}

impl CellSearchStats {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_rows(&dir.join("cellsearch.csv"), &self.rows)?;
        write_rows(&dir.join("cellsearch_summary.csv"), &self.summary)
    }
}

/// Scan time in minutes for a per-carrier budget of `mfs` multiframes.
pub fn scan_time_min(mfs: usize) -> f64 {
    (SCAN_CARRIERS * mfs) as f64 * MF_DURATION_S / 60.0
}

/// `(hit, mfs used, timing correct)` for one carrier.
fn search_carrier(
    scenario: &Scenario,
    snr_db: f64,
    index: u64,
    occupied: bool,
) -> Result<(bool, usize, bool)> {
    let (cfg, schedule) = draw_trial(
        scenario.seed,
        index,
        scenario.channel,
        scenario.band,
        snr_db,
    );
    let mut stream = ChannelStream::new(cfg, schedule, (scenario.max_mfs + 1) * SYMBOLS_PER_MF)?;
    if !occupied {
        stream = stream.without_signal();
    }
    let band = SearchBand::for_params(&SystemParams::new(scenario.band), FFT_LEN);
    let report = detect(&mut stream, band, &mut MfdState::new(scenario.max_mfs))?;
    let timing_ok = report.result().is_some_and(|r| {
        r.candidates
            .iter()
            .any(|&c| mf_distance(c, stream.meta().mf_start) <= TIMING_SEARCH_HALF)
    });
    Ok((report.is_hit(), report.mfs_used, timing_ok))
}

/// Detection rate against the MF budget on occupied carriers, and false
/// detections within the full budget on empty ones.
pub fn run_cell_search(scenario: &Scenario) -> Result<CellSearchStats> {
    check_mode(scenario, Mode::CellSearch)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &snr_db in &scenario.snr_db {
        let occ = (0..scenario.n_trials as u64)
            .into_par_iter()
            .map(|i| search_carrier(scenario, snr_db, i, true))
            .collect::<Result<Vec<_>>>()?;
        let empty = (0..scenario.n_empty as u64)
            .into_par_iter()
            .map(|i| search_carrier(scenario, snr_db, EMPTY_INDEX_BASE + i, false))
            .collect::<Result<Vec<_>>>()?;
        let n = occ.len();
        let mut mfs_for_99 = None;
        for m in 1..=scenario.max_mfs {
            let det = occ
                .iter()
                .filter(|&&(hit, used, _)| hit && used <= m)
                .count();
            let ok = occ
                .iter()
                .filter(|&&(hit, used, t)| hit && used <= m && t)
                .count();
            let (ci_lo, ci_hi) = wilson_interval(det, n, Z95);
            let rate = det as f64 / n as f64;
            if mfs_for_99.is_none() && rate >= TARGET_DETECTION {
                mfs_for_99 = Some(m);
            }
            rows.push(CellSearchRow {
                snr_db,
                mfs: m,
                detect_rate: rate,
                ci_lo,
                ci_hi,
                timing_ok_rate: ok as f64 / n as f64,
            });
        }
        summary.push(CellSearchSummary {
            snr_db,
            n_occupied: n,
            mfs_for_99,
            scan_time_min: mfs_for_99.map(scan_time_min),
            n_empty: empty.len(),
            false_detections: empty.iter().filter(|e| e.0).count(),
        });
    }
    Ok(CellSearchStats { rows, summary })
}
