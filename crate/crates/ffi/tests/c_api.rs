use std::ffi::CStr;
use std::path::Path;
use std::ptr;

use ecgsm_sync::channel::{ChannelConfig, ChannelKind, ChannelStream};
use ecgsm_sync::freq::SearchBand;
use ecgsm_sync::mfd::{detect, MfdState};
use ecgsm_sync::params::{Band, SystemParams, FB_TONE_HZ, FFT_LEN, FS_HZ, SYMBOLS_PER_MF};
use ecgsm_sync::signal::multiframe::PayloadSchedule;
use ecgsm_sync::stream::SampleSource;
use ecgsm_sync_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ecgsm_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn header_declares_every_export() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/ecgsm_sync.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    let mut n = 0;
    for line in src.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(
                header.contains(&format!("{name}(")),
                "{name} missing from header"
            );
            n += 1;
        }
    }
    assert!(n >= 9, "found only {n} exports");
    for ty in [
        "EcgsmSimulator",
        "EcgsmMfd",
        "ECGSM_STATUS_OK",
        "EcgsmTrialResult",
    ] {
        assert!(header.contains(ty), "{ty} missing from header");
    }
}

#[test]
fn header_is_valid_c() {
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror"])
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ecgsm_sync.h"))
        .output()
    else {
        eprintln!("no C compiler, skipping");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    assert_eq!(
        unsafe { ecgsm_isl_to_snr(-116.0, EcgsmBand::Low, &mut v) },
        EcgsmStatus::Ok
    );
    assert!(v.abs() < 0.02, "{v}");
    assert_eq!(
        unsafe { ecgsm_crlb_rms_hz(-8.5, 1, EcgsmBand::Low, &mut v) },
        EcgsmStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
}

#[test]
fn fine_foe_on_clean_tones() {
    let f = FB_TONE_HZ + 3_210.0;
    let mut iq = Vec::new();
    for w in 0..4 {
        for k in 0..148 {
            let ph = 2.0 * std::f64::consts::PI * f * (w * 1000 + k) as f64 / FS_HZ;
            iq.push(ph.cos() as f32);
            iq.push(ph.sin() as f32);
        }
    }
    let mut out = 0.0;
    let st = unsafe { ecgsm_fine_foe(iq.as_ptr(), 4, 148, EcgsmBand::Low, &mut out) };
    assert_eq!(st, EcgsmStatus::Ok);
    assert!((out - 3_210.0).abs() < 5.0, "{out}");

    let st = unsafe { ecgsm_fine_foe(iq.as_ptr(), 0, 148, EcgsmBand::Low, &mut out) };
    assert_eq!(st, EcgsmStatus::InvalidArgument);
    let st = unsafe { ecgsm_fine_foe(ptr::null(), 4, 148, EcgsmBand::Low, &mut out) };
    assert_eq!(st, EcgsmStatus::NullPointer);
    assert_eq!(last_error(), "iq is null");
}

#[test]
fn simulator_trials_are_deterministic() {
    let sc = EcgsmScenario {
        channel: EcgsmChannel::St,
        band: EcgsmBand::Low,
        snr_db: 0.0,
        seed: 11,
        every_rep: 0,
    };
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { ecgsm_simulator_new(&sc, &mut sim) },
        EcgsmStatus::Ok
    );
    let mut a: EcgsmTrialResult = unsafe { std::mem::zeroed() };
    let mut b: EcgsmTrialResult = unsafe { std::mem::zeroed() };
    unsafe {
        assert_eq!(ecgsm_simulator_run_trial(sim, 3, &mut a), EcgsmStatus::Ok);
        assert_eq!(ecgsm_simulator_run_trial(sim, 3, &mut b), EcgsmStatus::Ok);
        ecgsm_simulator_free(sim);
        ecgsm_simulator_free(ptr::null_mut());
    }
    assert_eq!(a.outcome, EcgsmSyncOutcome::Synced);
    assert_eq!(a.has_resid_to, 1);
    assert_eq!(a.resid_to_sym, 0);
    assert!(a.t_sync_s <= 2.0 && a.t_sync_s > a.t_mfd_s);
    assert_eq!(a.t_sync_s.to_bits(), b.t_sync_s.to_bits());
    assert_eq!(a.resid_fo_hz.to_bits(), b.resid_fo_hz.to_bits());

    let bad = EcgsmScenario {
        snr_db: f64::NAN,
        ..sc
    };
    let mut sim = ptr::null_mut();
    assert_ne!(
        unsafe { ecgsm_simulator_new(&bad, &mut sim) },
        EcgsmStatus::Ok
    );
    assert!(sim.is_null());
    let st = unsafe { ecgsm_simulator_run_trial(ptr::null(), 0, &mut a) };
    assert_eq!(st, EcgsmStatus::NullPointer);
}

#[test]
fn streaming_detector_matches_batch_detector() {
    let cfg = ChannelConfig {
        kind: ChannelKind::St,
        snr_db: -6.0,
        freq_offset_hz: 7_300.0,
        time_offset_samples: 41_234,
        band: Band::Low,
        seed: 21,
    };
    let sched = PayloadSchedule {
        first_mf_index: 0,
        cell_id: 3,
    };
    let len = 5 * SYMBOLS_PER_MF;
    let mut stream = ChannelStream::new(cfg, sched, len).unwrap();
    let band = SearchBand::for_params(&SystemParams::new(Band::Low), FFT_LEN);
    let batch = detect(&mut stream, band, &mut MfdState::new(4)).unwrap();

    let mut samples = vec![num_complex::Complex64::new(0.0, 0.0); len];
    stream.read(0, &mut samples);
    let iq: Vec<f32> = samples
        .iter()
        .flat_map(|c| [c.re as f32, c.im as f32])
        .collect();

    let mut mfd = ptr::null_mut();
    assert_eq!(
        unsafe { ecgsm_mfd_new(EcgsmBand::Low, 4, &mut mfd) },
        EcgsmStatus::Ok
    );
    let mut res = EcgsmMfdResult::default();
    let mut pos = 0;
    let mut chunk = 1;
    while pos < len && res.decided == 0 {
        let n = chunk.min(len - pos);
        let st = unsafe { ecgsm_mfd_push(mfd, iq[2 * pos..].as_ptr(), n, &mut res) };
        assert_eq!(st, EcgsmStatus::Ok);
        pos += n;
        chunk = chunk * 3 % 4099 + 1;
    }
    unsafe { ecgsm_mfd_free(mfd) };
    let r = batch.result().unwrap();
    assert_eq!(res.decided, 1);
    assert_eq!(res.hit == 1, batch.is_hit());
    assert_eq!(res.candidates, r.candidates);
    assert_eq!(res.mfs_used as usize, batch.mfs_used);
    assert_eq!(res.decided_at_sample as usize, batch.decided_at_sample);
    // f32 transport only perturbs the estimate slightly
    assert!((res.coarse_fo_hz - r.coarse_fo_hz).abs() < 1.0);
}

#[test]
fn mfd_rejects_zero_budget() {
    let mut mfd = ptr::null_mut();
    assert_eq!(
        unsafe { ecgsm_mfd_new(EcgsmBand::High, 0, &mut mfd) },
        EcgsmStatus::InvalidArgument
    );
    assert!(mfd.is_null());
}
