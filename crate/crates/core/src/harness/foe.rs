//! Frequency-estimation campaign: FFT estimator with accumulated FBs against
//! the bound and a fine-grid periodogram oracle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::csvio::CsvRow;
use super::stats::rms;
use super::{check_mode, draw_trial, Mode, Scenario};
use crate::channel::ChannelStream;
use crate::error::Result;
use crate::freq::{crlb_rms, estimate_fine_fo, ml_oracle, SearchBand};
use crate::params::{SystemParams, BURST_LEN, FB_TONE_HZ, FFT_LEN, SYMBOLS_PER_MF};
use crate::signal::multiframe::MultiframeLayout;
use crate::stream::SampleSource;

/// Grid spacing of the periodogram oracle.
pub const ORACLE_RESOLUTION_HZ: f64 = 2.0;

/// One row of `foe.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoeRow {
    pub snr_db: f64,
    pub n_fb: usize,
    pub rms_err_hz: f64,
    /// Bound for one FB with `n_fb` times the receive power.
    pub crlb_hz: f64,
    /// Single-FB oracle; only filled on `n_fb = 1` rows.
    pub ml_oracle_rms_hz: Option<f64>,
}

impl CsvRow for FoeRow {
    const HEADER: &'static [&'static str] = &[
        "snr_db",
        "n_fb",
        "rms_err_hz",
        "crlb_hz",
        "ml_oracle_rms_hz",
    ];
}

/// FB captures at the true FB positions, in time order.
fn fb_captures(stream: &mut ChannelStream, n: usize) -> Vec<Vec<num_complex::Complex64>> {
    let m0 = stream.meta().mf_start;
    let mut out = Vec::with_capacity(n);
    let mut m = m0;
    while out.len() < n {
        for off in MultiframeLayout.fb_offsets() {
            if out.len() == n {
                break;
            }
            let mut buf = vec![num_complex::Complex64::new(0.0, 0.0); BURST_LEN];
            stream.read(m + off, &mut buf);
            out.push(buf);
        }
        m += SYMBOLS_PER_MF;
    }
    out
}

struct FoeTrial {
    errs: Vec<f64>,
    oracle_err: f64,
}

pub fn run_foe_campaign(scenario: &Scenario) -> Result<Vec<FoeRow>> {
    check_mode(scenario, Mode::FoeOnly)?;
    let params = SystemParams::new(scenario.band);
    let band = SearchBand::for_params(&params, FFT_LEN);
    let max_fb = scenario.n_fb.iter().copied().max().unwrap_or(1);
    let mfs = max_fb.div_ceil(MultiframeLayout.fb_offsets().len()) + 2;
    let fo_max = params.max_freq_offset_hz();
    let mut rows = Vec::new();
    for &snr_db in &scenario.snr_db {
        let trials = (0..scenario.n_trials as u64)
            .into_par_iter()
            .map(|i| -> Result<FoeTrial> {
                let (cfg, schedule) =
                    draw_trial(scenario.seed, i, scenario.channel, scenario.band, snr_db);
                let mut stream = ChannelStream::new(cfg, schedule, mfs * SYMBOLS_PER_MF)?;
                let caps = fb_captures(&mut stream, max_fb);
                let errs = scenario
                    .n_fb
                    .iter()
                    .map(|&n| {
                        estimate_fine_fo(&caps[..n], band)
                            .map(|e| e.offset_hz() - cfg.freq_offset_hz)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let f = ml_oracle(
                    &caps[0],
                    ORACLE_RESOLUTION_HZ,
                    FB_TONE_HZ - fo_max,
                    FB_TONE_HZ + fo_max,
                )?;
                Ok(FoeTrial {
                    errs,
                    oracle_err: f - FB_TONE_HZ - cfg.freq_offset_hz,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let oracle: Vec<f64> = trials.iter().map(|t| t.oracle_err).collect();
        for (j, &n_fb) in scenario.n_fb.iter().enumerate() {
            let e: Vec<f64> = trials.iter().map(|t| t.errs[j]).collect();
            rows.push(FoeRow {
                snr_db,
                n_fb,
                rms_err_hz: rms(&e).unwrap_or(f64::NAN),
                crlb_hz: crlb_rms(snr_db + 10.0 * (n_fb as f64).log10(), BURST_LEN, &params),
                ml_oracle_rms_hz: (n_fb == 1).then(|| rms(&oracle).unwrap_or(f64::NAN)),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelKind;
    use crate::params::Band;

    #[test]
    fn high_snr_rows() {
        let mut s = Scenario::new(Mode::FoeOnly, ChannelKind::St, Band::Low, vec![20.0], 20, 3);
        s.n_fb = vec![1, 5];
        let rows = run_foe_campaign(&s).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].n_fb, 1);
        assert!(rows[0].rms_err_hz < 60.0, "{rows:?}");
        assert!(rows[1].rms_err_hz < rows[0].rms_err_hz * 1.5);
        assert!(rows[0].ml_oracle_rms_hz.unwrap() < 30.0);
        assert!(rows[1].ml_oracle_rms_hz.is_none());
        let ratio = rows[0].crlb_hz / rows[1].crlb_hz;
        assert!((ratio - 5f64.sqrt()).abs() < 1e-9);
    }
}
