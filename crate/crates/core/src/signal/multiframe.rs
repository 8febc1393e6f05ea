//! BCCH-carrier multiframe generation.

use num_complex::Complex64;
use rand::Rng;

use super::burst::{
    gen_ecsch_burst, gen_fb_burst, gen_filler_burst, gen_sch_burst, Burst, EcschPayload,
    REDUCED_FN_BITS,
};
use crate::error::{Error, Result};
use crate::params::{
    ts_offset, ECSCH_FRAMES, ECSCH_MFS_PER_PERIOD, ECSCH_TS, FB_FRAMES, FRAMES_PER_MF, SCH_FRAMES,
    SYMBOLS_PER_FRAME, SYMBOLS_PER_MF, TS_LENGTHS, TS_PER_FRAME,
};
use crate::rng::{derive_rng, tag};
use crate::stream::{StreamMeta, SymbolStream};

/// Structure of the 51-frame multiframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MultiframeLayout;

impl MultiframeLayout {
    pub const fn frames_per_mf(&self) -> usize {
        FRAMES_PER_MF
    }

    pub const fn symbols_per_mf(&self) -> usize {
        SYMBOLS_PER_MF
    }

    /// Offset of the first sample of (frame, timeslot) from the MF start.
    pub const fn slot_offset(&self, frame: usize, ts: usize) -> usize {
        frame * SYMBOLS_PER_FRAME + ts_offset(ts)
    }

    /// FB onsets relative to the MF start.
    pub fn fb_offsets(&self) -> [usize; 5] {
        FB_FRAMES.map(|f| self.slot_offset(f, 0))
    }

    /// EC-SCH burst onsets relative to the MF start.
    pub fn ecsch_offsets(&self) -> [usize; 7] {
        ECSCH_FRAMES.map(|f| self.slot_offset(f, ECSCH_TS))
    }
}

/// Which EC-SCH content each transmitted multiframe carries.
///
/// Transmitted multiframe `m` has absolute index `first_mf_index + m`. The
/// payload is constant over a 4-MF period and the cyclic shift follows the
/// position of the MF inside its period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayloadSchedule {
    pub first_mf_index: u64,
    pub cell_id: u8,
}

impl PayloadSchedule {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            first_mf_index: rng.random_range(0..(ECSCH_MFS_PER_PERIOD as u64) << REDUCED_FN_BITS),
            cell_id: rng.random_range(0..64),
        }
    }

    pub fn absolute_mf(&self, tx_mf: u64) -> u64 {
        self.first_mf_index + tx_mf
    }

    pub fn shift_index(&self, tx_mf: u64) -> usize {
        (self.absolute_mf(tx_mf) % ECSCH_MFS_PER_PERIOD as u64) as usize
    }

    pub fn payload(&self, tx_mf: u64) -> EcschPayload {
        let period = self.absolute_mf(tx_mf) / ECSCH_MFS_PER_PERIOD as u64;
        EcschPayload::new((period % (1 << REDUCED_FN_BITS)) as u32, self.cell_id)
    }
}

fn place(frame: &mut [Complex64], offset: usize, burst: &Burst, phase: f64) {
    let rot = Complex64::from_polar(1.0, phase);
    for (dst, &s) in frame[offset..offset + burst.symbols.len()]
        .iter_mut()
        .zip(&burst.symbols)
    {
        *dst = s * rot;
    }
}

/// Writes transmitted frame `tx_frame` (counted from the first transmitted
/// sample) into `out`. Each burst gets an independent uniform phase.
pub fn build_frame(schedule: &PayloadSchedule, seed: u64, tx_frame: u64, out: &mut [Complex64]) {
    assert_eq!(out.len(), SYMBOLS_PER_FRAME);
    let mut rng = derive_rng(seed, tag::TX_FRAME, tx_frame);
    let tx_mf = tx_frame / FRAMES_PER_MF as u64;
    let fn_in_mf = (tx_frame % FRAMES_PER_MF as u64) as usize;
    for ts in 0..TS_PER_FRAME {
        let guard = TS_LENGTHS[ts] - crate::params::BURST_LEN;
        let burst = match ts {
            0 if FB_FRAMES.contains(&fn_in_mf) => gen_fb_burst(guard),
            0 if SCH_FRAMES.contains(&fn_in_mf) => gen_sch_burst(&mut rng, guard),
            ECSCH_TS if ECSCH_FRAMES.contains(&fn_in_mf) => {
                gen_ecsch_burst(&schedule.payload(tx_mf), schedule.shift_index(tx_mf), guard)
            }
            _ => gen_filler_burst(&mut rng, guard),
        };
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        place(out, ts_offset(ts), &burst, phase);
    }
}

/// Noiseless transmitted stream of `n_mf` whole multiframes, starting at an
/// MF boundary.
pub fn build_multiframe_stream<R: Rng + ?Sized>(
    schedule: &PayloadSchedule,
    n_mf: usize,
    rng: &mut R,
) -> Result<SymbolStream> {
    if n_mf == 0 {
        return Err(Error::InvalidArgument("n_mf must be at least 1".into()));
    }
    let seed: u64 = rng.random();
    let mut samples = vec![Complex64::new(0.0, 0.0); n_mf * SYMBOLS_PER_MF];
    for (f, frame) in samples.chunks_exact_mut(SYMBOLS_PER_FRAME).enumerate() {
        build_frame(schedule, seed, f as u64, frame);
    }
    Ok(SymbolStream {
        samples,
        meta: StreamMeta {
            mf_start: 0,
            freq_offset_hz: 0.0,
            time_offset_samples: 0,
            schedule: *schedule,
        },
    })
}
