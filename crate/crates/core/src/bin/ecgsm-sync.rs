use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecgsm_sync::channel::{ChannelKind, ChannelStream};
use ecgsm_sync::ecsch::AttemptSchedule;
use ecgsm_sync::harness::csvio::write_rows;
use ecgsm_sync::harness::figures::detector_traces;
use ecgsm_sync::harness::{
    draw_trial, run_campaign, run_cell_search, run_foe_campaign, run_mfd_campaign, Mode, Scenario,
};
use ecgsm_sync::params::{Band, SYMBOLS_PER_MF};
use ecgsm_sync::stream::{write_iq_f32, SampleSource};
use ecgsm_sync::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ecgsm-sync",
    version,
    about = "EC-GSM-IoT network synchronization simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// st, tu1_2 or tu50
    #[arg(long)]
    channel: Option<ChannelKind>,
    /// low (900 MHz) or high (2 GHz)
    #[arg(long)]
    band: Option<Band>,
    /// Comma-separated SNR grid in dB
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// TOML scenario file; command-line flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Frequency estimation error against the bound
    Foe {
        #[command(flatten)]
        common: Common,
        /// Comma-separated FB counts
        #[arg(long, value_delimiter = ',')]
        n_fb: Option<Vec<usize>>,
    },
    /// Multiframe detection rate and coarse FO error
    Mfd {
        #[command(flatten)]
        common: Common,
    },
    /// Full synchronization campaign
    Sync {
        #[command(flatten)]
        common: Common,
        /// Attempt decoding after every repetition
        #[arg(long)]
        every_rep: bool,
    },
    /// Carrier detection against the MF budget
    Cellsearch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_mfs: Option<usize>,
        /// Number of noise-only carriers
        #[arg(long)]
        empty: Option<usize>,
    },
    /// Data for the whole figure set at reduced trial counts
    FiguresData {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write the received samples of one trial as interleaved f32 IQ
    ExportIq {
        #[command(flatten)]
        common: Common,
        /// Trial index to export
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 9)]
        mfs: usize,
    },
}

fn scenario(mode: Mode, c: &Common) -> Result<Scenario> {
    let mut s = match &c.config {
        Some(p) => Scenario::load(p)?,
        None => Scenario::new(mode, ChannelKind::St, Band::Low, vec![-8.5], 500, 1),
    };
    s.mode = mode;
    if let Some(v) = c.channel {
        s.channel = v;
    }
    if let Some(v) = c.band {
        s.band = v;
    }
    if let Some(v) = &c.snr_db {
        s.snr_db = v.clone();
    }
    if let Some(v) = c.trials {
        s.n_trials = v;
    }
    if let Some(v) = c.seed {
        s.seed = v;
    }
    s.validate()?;
    Ok(s)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.digits$}"))
}

fn cmd_foe(s: &Scenario, out: &Path) -> Result<()> {
    let rows = run_foe_campaign(s)?;
    create_dir(out)?;
    write_rows(&out.join("foe.csv"), &rows)?;
    println!("snr_db  n_fb  rms_hz   crlb_hz  oracle_hz");
    for r in &rows {
        println!(
            "{:6.1} {:5} {:8.1} {:8.1} {:>9}",
            r.snr_db,
            r.n_fb,
            r.rms_err_hz,
            r.crlb_hz,
            fmt_opt(r.ml_oracle_rms_hz, 1)
        );
    }
    Ok(())
}

fn cmd_mfd(s: &Scenario, out: &Path) -> Result<()> {
    let rows = run_mfd_campaign(s)?;
    create_dir(out)?;
    write_rows(&out.join("mfd.csv"), &rows)?;
    println!("snr_db  detect  hit     coarse_rms_hz  mean_mfs  t_mfd_s");
    for r in &rows {
        println!(
            "{:6.1} {:7.3} {:7.3} {:>13} {:9.2} {:8.3}",
            r.snr_db,
            r.detect_rate,
            r.hit_rate,
            fmt_opt(r.coarse_rms_hz, 1),
            r.mean_mfs,
            r.mean_tmfd_s
        );
    }
    Ok(())
}

fn cmd_sync(s: &Scenario, out: &Path) -> Result<()> {
    let stats = run_campaign(s)?;
    stats.write(out)?;
    println!("snr_db  miss    [95% CI]         fp      mean_t  p90_t");
    for r in &stats.summary {
        println!(
            "{:6.1} {:6.3}  [{:.3}, {:.3}]  {:6.3}  {:>6}  {:>6}",
            r.snr_db,
            r.miss_rate,
            r.ci_lo,
            r.ci_hi,
            r.fp_rate,
            fmt_opt(r.mean_tsync, 3),
            fmt_opt(r.p90_tsync.is_finite().then_some(r.p90_tsync), 3)
        );
    }
    Ok(())
}

fn cmd_cellsearch(s: &Scenario, out: &Path) -> Result<()> {
    let stats = run_cell_search(s)?;
    stats.write(out)?;
    for sm in &stats.summary {
        println!(
            "snr {:.1} dB, {} occupied carriers:",
            sm.snr_db, sm.n_occupied
        );
        for r in stats.rows.iter().filter(|r| r.snr_db == sm.snr_db) {
            println!("  {:2} MFs  detection {:.3}", r.mfs, r.detect_rate);
        }
        match (sm.mfs_for_99, sm.scan_time_min) {
            (Some(m), Some(t)) => {
                println!("  99% after {m} MFs; full scan of both bands {t:.1} min")
            }
            _ => println!("  99% not reached within {} MFs", s.max_mfs),
        }
        println!(
            "  false detections: {} of {} empty carriers",
            sm.false_detections, sm.n_empty
        );
    }
    Ok(())
}

fn cmd_figures(trials: usize, seed: u64, out: &Path) -> Result<()> {
    let grid = |lo: f64, hi: f64, step: f64| -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    };
    create_dir(out)?;

    let foe = Scenario::new(
        Mode::FoeOnly,
        ChannelKind::St,
        Band::Low,
        grid(-15.0, 5.0, 1.0),
        trials,
        seed,
    );
    write_rows(&out.join("foe.csv"), &run_foe_campaign(&foe)?)?;

    let (trace, start) = detector_traces(ChannelKind::St, Band::Low, -8.5, seed)?;
    write_rows(&out.join("fig3_traces.csv"), &trace)?;
    println!("detector traces: true MF start {start}");

    let mut mfd_rows = Vec::new();
    for (kind, band) in [
        (ChannelKind::St, Band::Low),
        (ChannelKind::Tu1_2, Band::Low),
        (ChannelKind::Tu50, Band::High),
    ] {
        let s = Scenario::new(
            Mode::MfdOnly,
            kind,
            band,
            grid(-16.0, -6.0, 1.0),
            trials,
            seed,
        );
        mfd_rows.extend(run_mfd_campaign(&s)?);
    }
    write_rows(&out.join("mfd.csv"), &mfd_rows)?;

    for (kind, band, lo, hi) in [
        (ChannelKind::St, Band::Low, -13.0, -6.0),
        (ChannelKind::Tu1_2, Band::Low, -9.0, -2.0),
        (ChannelKind::Tu50, Band::High, -9.0, -2.0),
    ] {
        let s = Scenario::new(Mode::FullSync, kind, band, grid(lo, hi, 0.5), trials, seed);
        let dir = out.join(format!("sync_{}_{}", kind.as_str(), band.as_str()));
        run_campaign(&s)?.write(&dir)?;
        println!("wrote {}", dir.display());
    }

    for (kind, band) in [
        (ChannelKind::Tu1_2, Band::Low),
        (ChannelKind::Tu50, Band::High),
    ] {
        let mut s = Scenario::new(Mode::CellSearch, kind, band, vec![-5.5], trials, seed);
        s.n_empty = trials;
        run_cell_search(&s)?.write(&out.join(format!(
            "cellsearch_{}_{}",
            kind.as_str(),
            band.as_str()
        )))?;
    }
    println!("figure data written to {}", out.display());
    Ok(())
}

fn cmd_export(s: &Scenario, trial: u64, mfs: usize, out: &Path) -> Result<()> {
    let snr = *s
        .snr_db
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty SNR grid".into()))?;
    let (cfg, schedule) = draw_trial(s.seed, trial, s.channel, s.band, snr);
    let mut stream = ChannelStream::new(cfg, schedule, mfs * SYMBOLS_PER_MF)?;
    let mut samples = vec![num_complex::Complex64::new(0.0, 0.0); stream.len()];
    stream.read(0, &mut samples);
    create_dir(out)?;
    let path = out.join(format!("trial{trial}.iq"));
    write_iq_f32(&path, &samples)?;
    let meta = stream.meta();
    println!(
        "wrote {} samples to {}: mf_start {}, fo {:.1} Hz, reduced FN of first MF period {}",
        samples.len(),
        path.display(),
        meta.mf_start,
        meta.freq_offset_hz,
        schedule.payload(0).reduced_fn()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Foe { common, n_fb } => {
            let mut s = scenario(Mode::FoeOnly, &common)?;
            if let Some(v) = n_fb {
                s.n_fb = v;
            }
            s.validate()?;
            cmd_foe(&s, &common.out)
        }
        Cmd::Mfd { common } => cmd_mfd(&scenario(Mode::MfdOnly, &common)?, &common.out),
        Cmd::Sync { common, every_rep } => {
            let mut s = scenario(Mode::FullSync, &common)?;
            if every_rep {
                s.schedule = AttemptSchedule::EveryRep;
            }
            cmd_sync(&s, &common.out)
        }
        Cmd::Cellsearch {
            common,
            max_mfs,
            empty,
        } => {
            let mut s = scenario(Mode::CellSearch, &common)?;
            if let Some(v) = max_mfs {
                s.max_mfs = v;
            }
            if let Some(v) = empty {
                s.n_empty = v;
            }
            s.validate()?;
            cmd_cellsearch(&s, &common.out)
        }
        Cmd::FiguresData { trials, seed, out } => cmd_figures(trials, seed, &out),
        Cmd::ExportIq { common, trial, mfs } => {
            cmd_export(&scenario(Mode::FullSync, &common)?, trial, mfs, &common.out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
