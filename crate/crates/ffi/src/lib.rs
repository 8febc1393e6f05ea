//! C interface to the synchronization simulator.
//!
//! Every function returns an [`EcgsmStatus`]; on failure a message is kept
//! per thread and can be read with [`ecgsm_last_error`]. Handles are opaque
//! and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;

use ecgsm_sync::channel::{isl_to_snr, ChannelKind};
use ecgsm_sync::ecsch::AttemptSchedule;
use ecgsm_sync::freq::{crlb_rms, estimate_fine_fo, SearchBand};
use ecgsm_sync::harness::{campaign::run_trial, Mode, Scenario};
use ecgsm_sync::mfd::{MfdState, MfdStep, WindowProcessor};
use ecgsm_sync::params::{Band, SystemParams, FFT_LEN, MFD_WINDOW_HOP, MFD_WINDOW_LEN};
use ecgsm_sync::sync::SyncStatus;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcgsmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Failed = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcgsmBand {
    Low = 0,
    High = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcgsmChannel {
    St = 0,
    Tu1_2 = 1,
    Tu50 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcgsmSyncOutcome {
    Synced = 0,
    Timeout = 1,
    FalseSync = 2,
}

/// Simulation settings shared by all trials of a simulator handle.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EcgsmScenario {
    pub channel: EcgsmChannel,
    pub band: EcgsmBand,
    pub snr_db: f64,
    pub seed: u64,
    /// Non-zero: attempt decoding after every repetition.
    pub every_rep: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EcgsmTrialResult {
    pub outcome: EcgsmSyncOutcome,
    /// NaN when nothing was decoded.
    pub t_sync_s: f64,
    pub t_mfd_s: f64,
    pub resid_fo_hz: f64,
    pub resid_fo_ppm: f64,
    /// Valid when `has_resid_to` is non-zero.
    pub resid_to_sym: i64,
    pub has_resid_to: u8,
    pub mfd_mfs: u32,
    pub fo_true_hz: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EcgsmMfdResult {
    /// Non-zero once the detector has decided.
    pub decided: u8,
    /// Non-zero for a hit, zero for a timeout.
    pub hit: u8,
    pub candidates: [usize; 3],
    pub coarse_fo_hz: f64,
    pub mfs_used: u32,
    pub decided_at_sample: u64,
}

pub struct EcgsmSimulator {
    scenario: Scenario,
}

pub struct EcgsmMfd {
    proc_: WindowProcessor,
    state: MfdState,
    pending: Vec<Complex64>,
    /// Absolute index of `pending[0]`.
    base: usize,
    next_window: usize,
    result: EcgsmMfdResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn guard(f: impl FnOnce() -> Result<(), (EcgsmStatus, String)>) -> EcgsmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EcgsmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EcgsmStatus::Panic
        }
    }
}

fn null(what: &str) -> (EcgsmStatus, String) {
    (EcgsmStatus::NullPointer, format!("{what} is null"))
}

fn failed(e: ecgsm_sync::Error) -> (EcgsmStatus, String) {
    let status = match e {
        ecgsm_sync::Error::InvalidArgument(_) => EcgsmStatus::InvalidArgument,
        _ => EcgsmStatus::Failed,
    };
    (status, e.to_string())
}

impl From<EcgsmBand> for Band {
    fn from(b: EcgsmBand) -> Self {
        match b {
            EcgsmBand::Low => Band::Low,
            EcgsmBand::High => Band::High,
        }
    }
}

impl From<EcgsmChannel> for ChannelKind {
    fn from(c: EcgsmChannel) -> Self {
        match c {
            EcgsmChannel::St => ChannelKind::St,
            EcgsmChannel::Tu1_2 => ChannelKind::Tu1_2,
            EcgsmChannel::Tu50 => ChannelKind::Tu50,
        }
    }
}

/// Interleaved f32 I/Q to complex samples.
///
/// # Safety
/// `iq` must point to `2 * n` readable floats.
unsafe fn complex_from_iq(iq: *const f32, n: usize) -> Vec<Complex64> {
    let raw = std::slice::from_raw_parts(iq, 2 * n);
    raw.chunks_exact(2)
        .map(|c| Complex64::new(f64::from(c[0]), f64::from(c[1])))
        .collect()
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ecgsm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Single-tone frequency RMS bound for `n` samples.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_crlb_rms_hz(
    snr_db: f64,
    n: usize,
    band: EcgsmBand,
    out: *mut f64,
) -> EcgsmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n < 2 || snr_db.is_nan() {
            return Err((
                EcgsmStatus::InvalidArgument,
                "need n >= 2 and a numeric SNR".into(),
            ));
        }
        *out = crlb_rms(snr_db, n, &SystemParams::new(band.into()));
        Ok(())
    })
}

/// SNR in the 200 kHz noise bandwidth for an input signal level in dBm.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_isl_to_snr(
    isl_dbm: f64,
    band: EcgsmBand,
    out: *mut f64,
) -> EcgsmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = isl_to_snr(isl_dbm, &SystemParams::new(band.into()));
        Ok(())
    })
}

/// Carrier offset estimated from `n_windows` FB captures of `window_len`
/// complex samples each, stored back to back as interleaved f32 I/Q.
///
/// # Safety
/// `iq` must point to `2 * n_windows * window_len` floats and `out_hz` to a
/// double.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_fine_foe(
    iq: *const f32,
    n_windows: usize,
    window_len: usize,
    band: EcgsmBand,
    out_hz: *mut f64,
) -> EcgsmStatus {
    guard(|| {
        if iq.is_null() {
            return Err(null("iq"));
        }
        if out_hz.is_null() {
            return Err(null("out_hz"));
        }
        if n_windows == 0 || window_len == 0 || window_len > FFT_LEN {
            return Err((
                EcgsmStatus::InvalidArgument,
                format!("need at least one window of 1..={FFT_LEN} samples"),
            ));
        }
        let samples = complex_from_iq(iq, n_windows * window_len);
        let windows: Vec<Vec<Complex64>> = samples
            .chunks_exact(window_len)
            .map(<[_]>::to_vec)
            .collect();
        let band = SearchBand::for_params(&SystemParams::new(band.into()), FFT_LEN);
        let est = estimate_fine_fo(&windows, band).map_err(failed)?;
        *out_hz = est.offset_hz();
        Ok(())
    })
}

/// Creates a simulator for full-sync trials.
///
/// # Safety
/// `scenario` must point to a valid struct and `out` to a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_simulator_new(
    scenario: *const EcgsmScenario,
    out: *mut *mut EcgsmSimulator,
) -> EcgsmStatus {
    guard(|| {
        if scenario.is_null() {
            return Err(null("scenario"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let c = *scenario;
        let mut s = Scenario::new(
            Mode::FullSync,
            c.channel.into(),
            c.band.into(),
            vec![c.snr_db],
            1,
            c.seed,
        );
        if c.every_rep != 0 {
            s.schedule = AttemptSchedule::EveryRep;
        }
        s.validate().map_err(failed)?;
        *out = Box::into_raw(Box::new(EcgsmSimulator { scenario: s }));
        Ok(())
    })
}

/// Runs trial `index`. The same handle and index always give the same
/// result.
///
/// # Safety
/// `sim` must come from [`ecgsm_simulator_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_simulator_run_trial(
    sim: *const EcgsmSimulator,
    index: u64,
    out: *mut EcgsmTrialResult,
) -> EcgsmStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = &sim.scenario;
        let r = run_trial(s, s.snr_db[0], index).map_err(failed)?;
        *out = EcgsmTrialResult {
            outcome: match r.status {
                SyncStatus::Synced => EcgsmSyncOutcome::Synced,
                SyncStatus::Timeout => EcgsmSyncOutcome::Timeout,
                SyncStatus::FalseSync => EcgsmSyncOutcome::FalseSync,
            },
            t_sync_s: r.t_sync_s.unwrap_or(f64::NAN),
            t_mfd_s: r.t_mfd_s,
            resid_fo_hz: r.resid_fo_hz,
            resid_fo_ppm: r.resid_fo_ppm,
            resid_to_sym: r.resid_to_sym.unwrap_or(0),
            has_resid_to: u8::from(r.resid_to_sym.is_some()),
            mfd_mfs: r.mfd_mfs as u32,
            fo_true_hz: r.fo_true_hz,
        };
        Ok(())
    })
}

/// # Safety
/// `sim` must come from [`ecgsm_simulator_new`] and not be used afterwards.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_simulator_free(sim: *mut EcgsmSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Creates a streaming multiframe detector giving up after `max_mfs`
/// multiframes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_mfd_new(
    band: EcgsmBand,
    max_mfs: u32,
    out: *mut *mut EcgsmMfd,
) -> EcgsmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if max_mfs == 0 {
            return Err((
                EcgsmStatus::InvalidArgument,
                "max_mfs must be at least 1".into(),
            ));
        }
        let band = SearchBand::for_params(&SystemParams::new(band.into()), FFT_LEN);
        *out = Box::into_raw(Box::new(EcgsmMfd {
            proc_: WindowProcessor::new(band),
            state: MfdState::new(max_mfs as usize),
            pending: Vec::new(),
            base: 0,
            next_window: 0,
            result: EcgsmMfdResult::default(),
        }));
        Ok(())
    })
}

/// Feeds `n_samples` consecutive samples (interleaved f32 I/Q). `out`
/// receives the decision state after the call; samples after a decision
/// are ignored.
///
/// # Safety
/// `mfd` must come from [`ecgsm_mfd_new`], `iq` must point to
/// `2 * n_samples` floats (may be null when `n_samples` is 0), and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_mfd_push(
    mfd: *mut EcgsmMfd,
    iq: *const f32,
    n_samples: usize,
    out: *mut EcgsmMfdResult,
) -> EcgsmStatus {
    guard(|| {
        let m = mfd.as_mut().ok_or_else(|| null("mfd"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if n_samples > 0 && iq.is_null() {
            return Err(null("iq"));
        }
        if m.result.decided == 0 && n_samples > 0 {
            m.pending.extend(complex_from_iq(iq, n_samples));
            loop {
                let start = m.next_window * MFD_WINDOW_HOP;
                let off = start - m.base;
                if off + MFD_WINDOW_LEN > m.pending.len() {
                    break;
                }
                let rec = m.proc_.process(&m.pending[off..off + MFD_WINDOW_LEN]);
                m.next_window += 1;
                if let Some(step) = m.state.push_window(rec) {
                    let (hit, r) = match step {
                        MfdStep::Hit(r) => (true, r),
                        MfdStep::Timeout(r) => (false, r),
                        MfdStep::Continue => continue,
                    };
                    m.result = EcgsmMfdResult {
                        decided: 1,
                        hit: u8::from(hit),
                        candidates: r.candidates,
                        coarse_fo_hz: r.coarse_fo_hz,
                        mfs_used: m.state.mf_searched as u32,
                        decided_at_sample: (start + MFD_WINDOW_LEN) as u64,
                    };
                    m.pending.clear();
                    break;
                }
            }
            if m.result.decided == 0 {
                let consumed = m.next_window * MFD_WINDOW_HOP - m.base;
                m.pending.drain(..consumed);
                m.base += consumed;
            }
        }
        *out = m.result;
        Ok(())
    })
}

/// # Safety
/// `mfd` must come from [`ecgsm_mfd_new`] and not be used afterwards. Null
/// is ignored.
#[no_mangle]
pub unsafe extern "C" fn ecgsm_mfd_free(mfd: *mut EcgsmMfd) {
    if !mfd.is_null() {
        drop(Box::from_raw(mfd));
    }
}
