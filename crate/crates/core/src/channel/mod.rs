//! Propagation channel: timing offset, static or TU fading, carrier frequency
//! offset and AWGN calibrated in the 200 kHz noise bandwidth.

pub mod fading;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Band, SystemParams, FS_HZ, NOISE_BW_HZ, SYMBOLS_PER_FRAME, SYMBOLS_PER_MF};
use crate::rng::{derive_rng, tag, SimRng};
use crate::signal::multiframe::{build_frame, PayloadSchedule};
use crate::stream::{SampleSource, StreamMeta, SymbolStream};

pub use fading::{FadingChannel, JakesProcess};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    #[serde(rename = "st")]
    St,
    #[serde(rename = "tu1_2")]
    Tu1_2,
    #[serde(rename = "tu50")]
    Tu50,
}

impl ChannelKind {
    pub fn speed_kmh(self) -> Option<f64> {
        match self {
            ChannelKind::St => None,
            ChannelKind::Tu1_2 => Some(1.2),
            ChannelKind::Tu50 => Some(50.0),
        }
    }

    /// Maximum Doppler shift at the carrier of `band`.
    pub fn doppler_hz(self, band: Band) -> f64 {
        self.speed_kmh()
            .map_or(0.0, |v| v / 3.6 * band.carrier_hz() / SPEED_OF_LIGHT)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::St => "st",
            ChannelKind::Tu1_2 => "tu1_2",
            ChannelKind::Tu50 => "tu50",
        }
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "st" | "static" => Ok(ChannelKind::St),
            "tu1_2" | "tu1.2" => Ok(ChannelKind::Tu1_2),
            "tu50" => Ok(ChannelKind::Tu50),
            _ => Err(Error::Parse(format!("unknown channel `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// SNR in the 200 kHz noise bandwidth; `+inf` disables noise.
    pub snr_db: f64,
    pub freq_offset_hz: f64,
    /// Transmitted sample seen as receiver sample 0.
    pub time_offset_samples: usize,
    pub band: Band,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn noiseless(band: Band) -> Self {
        Self {
            kind: ChannelKind::St,
            snr_db: f64::INFINITY,
            freq_offset_hz: 0.0,
            time_offset_samples: 0,
            band,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() {
            return Err(Error::InvalidArgument("snr_db is NaN".into()));
        }
        let max = SystemParams::new(self.band).max_freq_offset_hz();
        if !(self.freq_offset_hz.abs() <= max * (1.0 + 1e-9)) {
            return Err(Error::InvalidArgument(format!(
                "frequency offset {} Hz exceeds ±{max} Hz",
                self.freq_offset_hz
            )));
        }
        Ok(())
    }
}

/// Converts an input signal level at the antenna to SNR in the noise
/// bandwidth, given thermal noise of −174 dBm/Hz and the receiver NF.
pub fn isl_to_snr(isl_dbm: f64, params: &SystemParams) -> f64 {
    isl_dbm - (-174.0 + 10.0 * params.bw.log10() + params.nf_db)
}

/// Per-sample complex noise variance for a unit-power signal. The noise is
/// white over `fs`, so only `bw/fs` of it falls in the reference band.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        (FS_HZ / NOISE_BW_HZ) / 10f64.powf(snr_db / 10.0)
    }
}

/// Random quantities fixed for a whole trial.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub phase: f64,
    pub fading: Option<FadingChannel>,
}

impl ChannelRealization {
    pub fn new(cfg: &ChannelConfig) -> Self {
        let mut rng = derive_rng(cfg.seed, tag::CHANNEL, 0);
        let phase = rng.random_range(0.0..TAU);
        let fading = match cfg.kind {
            ChannelKind::St => None,
            k => Some(FadingChannel::typical_urban(
                k.doppler_hz(cfg.band),
                &mut rng,
            )),
        };
        Self { phase, fading }
    }
}

/// Runs `x` (transmitted samples starting at TX index `tx0`) through the
/// channel. Output sample `k` lands at receiver index `tx0 + k − τ`.
fn apply_block(
    cfg: &ChannelConfig,
    real: &ChannelRealization,
    x: &[Complex64],
    tx0: u64,
    noise_rng: &mut SimRng,
    out: &mut [Complex64],
) {
    match &real.fading {
        Some(f) => f.apply(x, tx0, out),
        None => out.copy_from_slice(x),
    }
    let rx0 = tx0 as i64 - cfg.time_offset_samples as i64;
    let w = TAU * cfg.freq_offset_hz / FS_HZ;
    let sigma = (noise_variance(cfg.snr_db) / 2.0).sqrt();
    const RESYNC: usize = 1024;
    for (c, chunk) in out.chunks_mut(RESYNC).enumerate() {
        let k0 = rx0 + (c * RESYNC) as i64;
        let mut rot = Complex64::from_polar(1.0, w * k0 as f64 + real.phase);
        let step = Complex64::from_polar(1.0, w);
        for y in chunk {
            *y *= rot;
            rot *= step;
        }
    }
    if sigma > 0.0 {
        for y in out.iter_mut() {
            let re: f64 = noise_rng.sample(StandardNormal);
            let im: f64 = noise_rng.sample(StandardNormal);
            *y += Complex64::new(re, im) * sigma;
        }
    }
}

fn mf_start_for(tau: usize) -> usize {
    (SYMBOLS_PER_MF - tau % SYMBOLS_PER_MF) % SYMBOLS_PER_MF
}

fn apply_whole(stream: &SymbolStream, cfg: &ChannelConfig) -> Result<SymbolStream> {
    cfg.validate()?;
    let tau = cfg.time_offset_samples;
    if tau >= stream.samples.len() {
        return Err(Error::RegionTooShort {
            needed: tau + 1,
            got: stream.samples.len(),
        });
    }
    let real = ChannelRealization::new(cfg);
    let mut noise = derive_rng(cfg.seed, tag::NOISE_FRAME, u64::MAX);
    let mut faded = vec![Complex64::new(0.0, 0.0); stream.samples.len()];
    apply_block(cfg, &real, &stream.samples, 0, &mut noise, &mut faded);
    faded.drain(..tau);
    let base = stream.meta.time_offset_samples + tau;
    Ok(SymbolStream {
        samples: faded,
        meta: StreamMeta {
            mf_start: mf_start_for(base),
            freq_offset_hz: stream.meta.freq_offset_hz + cfg.freq_offset_hz,
            time_offset_samples: base,
            schedule: stream.meta.schedule,
        },
    })
}

/// Static channel: `y[k] = x[k+τ]·exp(j2πf·k/fs + jφ) + n[k]`.
pub fn apply_static(stream: &SymbolStream, cfg: &ChannelConfig) -> Result<SymbolStream> {
    if cfg.kind != ChannelKind::St {
        return Err(Error::InvalidArgument(
            "apply_static needs a static channel".into(),
        ));
    }
    apply_whole(stream, cfg)
}

/// Typical Urban fading followed by the static impairments.
pub fn apply_tu(stream: &SymbolStream, cfg: &ChannelConfig) -> Result<SymbolStream> {
    if cfg.kind == ChannelKind::St {
        return Err(Error::InvalidArgument("apply_tu needs a TU channel".into()));
    }
    apply_whole(stream, cfg)
}

const CACHE_FRAMES: usize = 6;

/// Received samples generated frame by frame on demand.
///
/// Every transmitted frame and its noise come from their own counter-based
/// RNG stream, so any region can be regenerated independently and results do
/// not depend on the read pattern. Frames end in zero guard samples, so the
/// delay line never needs samples from a previous frame.
pub struct ChannelStream {
    cfg: ChannelConfig,
    schedule: PayloadSchedule,
    real: ChannelRealization,
    len: usize,
    cache: Vec<(u64, Box<[Complex64]>)>,
    next_slot: usize,
    tx_buf: Vec<Complex64>,
    signal: bool,
}

impl ChannelStream {
    /// `len` is the number of receiver samples on offer.
    pub fn new(cfg: ChannelConfig, schedule: PayloadSchedule, len: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            real: ChannelRealization::new(&cfg),
            cfg,
            schedule,
            len,
            cache: Vec::with_capacity(CACHE_FRAMES),
            next_slot: 0,
            tx_buf: vec![Complex64::new(0.0, 0.0); SYMBOLS_PER_FRAME],
            signal: true,
        })
    }

    /// Same noise, no transmitter: an empty carrier.
    pub fn without_signal(mut self) -> Self {
        self.signal = false;
        self.real.fading = None;
        self.cache.clear();
        self
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    /// Ground truth; for scoring only.
    pub fn meta(&self) -> StreamMeta {
        StreamMeta {
            mf_start: mf_start_for(self.cfg.time_offset_samples),
            freq_offset_hz: self.cfg.freq_offset_hz,
            time_offset_samples: self.cfg.time_offset_samples,
            schedule: self.schedule,
        }
    }

    fn frame(&mut self, f: u64) -> &[Complex64] {
        if let Some(i) = self.cache.iter().position(|(idx, _)| *idx == f) {
            return &self.cache[i].1;
        }
        if self.signal {
            build_frame(&self.schedule, self.cfg.seed, f, &mut self.tx_buf);
        } else {
            self.tx_buf.fill(Complex64::new(0.0, 0.0));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); SYMBOLS_PER_FRAME].into_boxed_slice();
        let mut noise = derive_rng(self.cfg.seed, tag::NOISE_FRAME, f);
        apply_block(
            &self.cfg,
            &self.real,
            &self.tx_buf,
            f * SYMBOLS_PER_FRAME as u64,
            &mut noise,
            &mut out,
        );
        let slot = if self.cache.len() < CACHE_FRAMES {
            self.cache.push((f, out));
            self.cache.len() - 1
        } else {
            let s = self.next_slot;
            self.cache[s] = (f, out);
            self.next_slot = (s + 1) % CACHE_FRAMES;
            s
        };
        &self.cache[slot].1
    }

    /// Materializes the whole stream.
    pub fn to_symbol_stream(&mut self) -> SymbolStream {
        let mut samples = vec![Complex64::new(0.0, 0.0); self.len];
        self.read(0, &mut samples);
        SymbolStream {
            samples,
            meta: self.meta(),
        }
    }
}

impl SampleSource for ChannelStream {
    fn len(&self) -> usize {
        self.len
    }

    fn read(&mut self, start: usize, out: &mut [Complex64]) {
        assert!(start + out.len() <= self.len, "read past end of stream");
        let mut pos = 0;
        while pos < out.len() {
            let tx = (start + pos + self.cfg.time_offset_samples) as u64;
            let f = tx / SYMBOLS_PER_FRAME as u64;
            let off = (tx % SYMBOLS_PER_FRAME as u64) as usize;
            let n = (SYMBOLS_PER_FRAME - off).min(out.len() - pos);
            let frame = self.frame(f);
            out[pos..pos + n].copy_from_slice(&frame[off..off + n]);
            pos += n;
        }
    }
}
