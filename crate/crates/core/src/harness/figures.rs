//! Detector traces over one multiframe.

use serde::{Deserialize, Serialize};

use super::csvio::CsvRow;
use super::draw_trial;
use crate::channel::{ChannelKind, ChannelStream};
use crate::error::Result;
use crate::freq::SearchBand;
use crate::mfd::{mf_correlate, WindowProcessor};
use crate::params::{
    Band, SystemParams, FFT_LEN, MFD_WINDOWS_PER_MF, MFD_WINDOW_HOP, MFD_WINDOW_LEN, SYMBOLS_PER_MF,
};
use crate::stream::SampleSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub window: usize,
    pub c_fb: f64,
    pub c_mf: f64,
}

impl CsvRow for TraceRow {
    const HEADER: &'static [&'static str] = &["window", "c_fb", "c_mf"];
}

/// `C_FB` of every window in the first multiframe and its multiframe
/// correlation `C_MF`. Returns the rows and the true MF start.
pub fn detector_traces(
    kind: ChannelKind,
    band: Band,
    snr_db: f64,
    seed: u64,
) -> Result<(Vec<TraceRow>, usize)> {
    let (cfg, schedule) = draw_trial(seed, 0, kind, band, snr_db);
    let mut stream = ChannelStream::new(cfg, schedule, 2 * SYMBOLS_PER_MF)?;
    let mut proc_ = WindowProcessor::new(SearchBand::for_params(&SystemParams::new(band), FFT_LEN));
    let mut buf = vec![num_complex::Complex64::new(0.0, 0.0); MFD_WINDOW_LEN];
    let c_fb: Vec<f64> = (0..MFD_WINDOWS_PER_MF)
        .map(|w| {
            stream.read(w * MFD_WINDOW_HOP, &mut buf);
            proc_.process(&buf).c_fb
        })
        .collect();
    let c_mf = mf_correlate(&c_fb)?;
    let rows = c_fb
        .iter()
        .zip(&c_mf)
        .enumerate()
        .map(|(window, (&c_fb, &c_mf))| TraceRow { window, c_fb, c_mf })
        .collect();
    Ok((rows, stream.meta().mf_start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfd::mf_distance;

    #[test]
    fn c_mf_peaks_at_true_start_at_high_snr() {
        let (rows, start) = detector_traces(ChannelKind::St, Band::Low, 10.0, 4).unwrap();
        assert_eq!(rows.len(), MFD_WINDOWS_PER_MF);
        let peak = rows
            .iter()
            .max_by(|a, b| a.c_mf.total_cmp(&b.c_mf))
            .unwrap()
            .window;
        assert!(
            mf_distance(peak * MFD_WINDOW_HOP + 26, start) <= 80,
            "{peak} {start}"
        );
    }
}
