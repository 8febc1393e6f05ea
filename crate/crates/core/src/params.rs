//! System constants: sample rate, multiframe layout, and the fixed code and
//! training-sequence definitions shared by transmitter and receiver.

use serde::{Deserialize, Serialize};

/// GSM symbol rate, 13 MHz / 48. The simulation runs at one sample per symbol.
pub const FS_HZ: f64 = 13.0e6 / 48.0;

/// Noise bandwidth that SNR values are referenced to.
pub const NOISE_BW_HZ: f64 = 200.0e3;

/// Frequency of the frequency-burst tone, `fs / 4`.
pub const FB_TONE_HZ: f64 = FS_HZ / 4.0;

pub const FRAMES_PER_MF: usize = 51;
pub const TS_PER_FRAME: usize = 8;
pub const SYMBOLS_PER_FRAME: usize = 1250;
pub const SYMBOLS_PER_MF: usize = FRAMES_PER_MF * SYMBOLS_PER_FRAME;

/// Active (non-guard) symbols in a burst.
pub const BURST_LEN: usize = 148;

/// Frames carrying a frequency burst on TS 0.
pub const FB_FRAMES: [usize; 5] = [0, 10, 20, 30, 40];
/// Frames carrying the legacy SCH on TS 0.
pub const SCH_FRAMES: [usize; 5] = [1, 11, 21, 31, 41];
/// Frames carrying an EC-SCH repetition on TS 1.
pub const ECSCH_FRAMES: [usize; 7] = [0, 1, 2, 3, 4, 5, 6];
pub const ECSCH_TS: usize = 1;

/// EC-SCH repetitions per multiframe and per repetition period.
pub const ECSCH_REPS_PER_MF: usize = ECSCH_FRAMES.len();
pub const ECSCH_MFS_PER_PERIOD: usize = 4;
pub const ECSCH_REPS_PER_PERIOD: usize = ECSCH_REPS_PER_MF * ECSCH_MFS_PER_PERIOD;

/// Timeslot lengths within a frame. TS 0 and TS 4 carry the extra quarter
/// symbols so that 8 slots add up to exactly 1250 symbols.
pub const TS_LENGTHS: [usize; TS_PER_FRAME] = [157, 156, 156, 156, 157, 156, 156, 156];

/// Offset of timeslot `ts` from the start of its frame.
pub const fn ts_offset(ts: usize) -> usize {
    let mut off = 0;
    let mut i = 0;
    while i < ts {
        off += TS_LENGTHS[i];
        i += 1;
    }
    off
}

/// Duration of one multiframe in seconds (≈ 235.38 ms).
pub const MF_DURATION_S: f64 = SYMBOLS_PER_MF as f64 / FS_HZ;

/// EC-SCH information bits (reduced frame number and cell identity).
pub const ECSCH_INFO_BITS: usize = 25;
pub const CRC_BITS: usize = 10;
pub const ECSCH_BLOCK_BITS: usize = ECSCH_INFO_BITS + CRC_BITS;
pub const CONV_TAIL_BITS: usize = 4;
pub const ECSCH_CODED_BITS: usize = 2 * (ECSCH_BLOCK_BITS + CONV_TAIL_BITS);

/// Rotation of the coded EC-SCH bits per multiframe index within the period.
pub const CYCLIC_SHIFT_STEP: usize = 20;

/// CRC-10 generator x^10 + x^9 + x^5 + x^4 + x + 1, without the leading term.
pub const CRC10_POLY: u16 = 0x233;

/// Rate-1/2, K = 5 feed-forward generators (bit i is the coefficient of D^i).
/// G0 = 1 + D^3 + D^4, G1 = 1 + D + D^3 + D^4.
pub const CONV_G0: u8 = 0b11001;
pub const CONV_G1: u8 = 0b11011;
pub const CONV_CONSTRAINT_LEN: usize = 5;

/// Extended training sequence of the EC-SCH burst, as bits.
pub const ECSCH_TRAINING: [u8; 64] =
    bits64(b"1101001100101111100100011001001110000001010000100001101011101110");

/// Training sequence of the legacy SCH burst.
pub const SCH_TRAINING: [u8; 64] =
    bits64(b"1011100101100010000001000000111100101101010001010111011000011011");

/// Burst bit layout: 3 tail, 39 data, 64 training, 39 data, 3 tail.
pub const TAIL_LEN: usize = 3;
pub const SYNC_DATA_HALF: usize = 39;
pub const TRAINING_START: usize = TAIL_LEN + SYNC_DATA_HALF;
pub const TRAINING_LEN: usize = 64;

/// Bins of the FFT used by every spectral estimator.
pub const FFT_LEN: usize = 256;
/// Sliding window length and hop of the multiframe detector.
pub const MFD_WINDOW_LEN: usize = 200;
pub const MFD_WINDOW_HOP: usize = 50;
pub const MFD_WINDOWS_PER_MF: usize = SYMBOLS_PER_MF / MFD_WINDOW_HOP;
/// Window spacing between consecutive frequency bursts (10 frames).
pub const MFD_FB_SPACING_WINDOWS: usize = 10 * SYMBOLS_PER_FRAME / MFD_WINDOW_HOP;

/// Timing uncertainty left by the multiframe detector, in symbols.
pub const TIMING_SEARCH_HALF: usize = 80;

const fn bits64(s: &[u8; 64]) -> [u8; 64] {
    let mut out = [0u8; 64];
    let mut i = 0;
    while i < 64 {
        out[i] = s[i] - b'0';
        i += 1;
    }
    out
}

/// Frequency band of the simulated carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Low,
    High,
}

impl Band {
    pub fn carrier_hz(self) -> f64 {
        match self {
            Band::Low => 900.0e6,
            Band::High => 2.0e9,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::High => "high",
        }
    }
}

impl std::str::FromStr for Band {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Band::Low),
            "high" => Ok(Band::High),
            _ => Err(crate::Error::Parse(format!("unknown band `{s}`"))),
        }
    }
}

/// Receiver-side system parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub fs: f64,
    pub bw: f64,
    pub nf_db: f64,
    pub fc: f64,
    pub r_ppm: f64,
}

impl SystemParams {
    pub fn new(band: Band) -> Self {
        Self {
            fs: FS_HZ,
            bw: NOISE_BW_HZ,
            nf_db: 5.0,
            fc: band.carrier_hz(),
            r_ppm: 25.0,
        }
    }

    /// Largest frequency offset the oscillator tolerance allows.
    pub fn max_freq_offset_hz(&self) -> f64 {
        self.r_ppm * 1e-6 * self.fc
    }

    pub fn hz_to_ppm(&self, hz: f64) -> f64 {
        hz / self.fc * 1e6
    }
}
