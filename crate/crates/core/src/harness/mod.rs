//! Monte-Carlo campaigns, cell search, and their CSV outputs.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, ChannelKind};
use crate::ecsch::AttemptSchedule;
use crate::error::{Error, Result};
use crate::params::{Band, SystemParams, SYMBOLS_PER_MF};
use crate::rng::{derive_rng, derive_seed, tag};
use crate::signal::multiframe::PayloadSchedule;

pub mod campaign;
pub mod cellsearch;
pub mod csvio;
pub mod figures;
pub mod foe;
pub mod stats;

pub use campaign::{
    run_campaign, run_mfd_campaign, summarize, CampaignStats, MfdRow, SummaryRow, TrialRecord,
};
pub use cellsearch::{run_cell_search, CellSearchRow, CellSearchStats};
pub use foe::{run_foe_campaign, FoeRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FoeOnly,
    MfdOnly,
    FullSync,
    CellSearch,
}

fn default_n_fb() -> Vec<usize> {
    vec![1, 40]
}

fn default_max_mfs() -> usize {
    10
}

/// One campaign description, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub mode: Mode,
    pub channel: ChannelKind,
    pub band: Band,
    pub snr_db: Vec<f64>,
    pub n_trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub schedule: AttemptSchedule,
    /// FB counts evaluated in `foe_only` mode.
    #[serde(default = "default_n_fb")]
    pub n_fb: Vec<usize>,
    /// MF budget of the detector in `cell_search` mode.
    #[serde(default = "default_max_mfs")]
    pub max_mfs: usize,
    /// Noise-only carriers simulated in `cell_search` mode.
    #[serde(default)]
    pub n_empty: usize,
}

impl Scenario {
    pub fn new(
        mode: Mode,
        channel: ChannelKind,
        band: Band,
        snr_db: Vec<f64>,
        n_trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            mode,
            channel,
            band,
            snr_db,
            n_trials,
            seed,
            schedule: AttemptSchedule::Proposed,
            n_fb: default_n_fb(),
            max_mfs: default_max_mfs(),
            n_empty: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::InvalidArgument("n_trials must be at least 1".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("SNR grid must be finite".into()));
        }
        if self.mode == Mode::FoeOnly && self.n_fb.contains(&0) {
            return Err(Error::InvalidArgument(
                "n_fb entries must be at least 1".into(),
            ));
        }
        if self.max_mfs == 0 {
            return Err(Error::InvalidArgument("max_mfs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

pub(crate) fn check_mode(scenario: &Scenario, mode: Mode) -> Result<()> {
    scenario.validate()?;
    if scenario.mode != mode {
        return Err(Error::InvalidArgument(format!(
            "scenario mode is {:?}, expected {:?}",
            scenario.mode, mode
        )));
    }
    Ok(())
}

/// Random conditions of trial `index`: frequency offset uniform within the
/// oscillator tolerance, power-on instant uniform over one MF, random frame
/// number and cell. The draw does not depend on the SNR, so SNR points of a
/// campaign share their trial conditions.
pub fn draw_trial(
    seed: u64,
    index: u64,
    kind: ChannelKind,
    band: Band,
    snr_db: f64,
) -> (ChannelConfig, PayloadSchedule) {
    let trial_seed = derive_seed(seed, tag::TRIAL, index);
    let mut rng = derive_rng(trial_seed, tag::TRIAL, 0);
    let max = SystemParams::new(band).max_freq_offset_hz();
    let fo = rng.random_range(-max..=max);
    let tau = rng.random_range(0..SYMBOLS_PER_MF);
    let schedule = PayloadSchedule::random(&mut rng);
    let cfg = ChannelConfig {
        kind,
        snr_db,
        freq_offset_hz: fo,
        time_offset_samples: tau,
        band,
        seed: trial_seed,
    };
    (cfg, schedule)
}
