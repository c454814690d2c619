//! `stbcid` — simulate, generate, and blindly identify Alamouti vs
//! spatially multiplexed MIMO-OFDM captures.

use stbcid_cli::{capture, config};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use stbcid_core::channel::RxCapture;
use stbcid_core::identifier::{identify, threshold, IdentifierConfig};
use stbcid_core::modulation::{ModulationFormat, ModulationKind};
use stbcid_core::montecarlo::{derive_seed, sweep, synthesize_capture, ResultRecord};
use stbcid_core::stbc::Stbc;

use crate::capture::{read_capture, write_capture, IqCapture};
use crate::config::{parse_modulation, RunConfig};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "stbcid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo identification experiments over a parameter grid.
    Simulate {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (a JSON sidecar is written next to it).
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Override the configuration's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configuration's trials per class.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Identify the space-time scheme of an IQ capture file.
    /// Exit code: 0 = Alamouti, 1 = spatial multiplexing, 2 = error.
    Identify {
        /// IQ capture file.
        capture: PathBuf,
        /// Number of subcarriers, N.
        #[arg(long)]
        n: usize,
        /// Cyclic prefix length; defaults to N/4.
        #[arg(long)]
        cp: Option<usize>,
        /// Target false-alarm probability.
        #[arg(long, default_value_t = 1e-3)]
        pfa: f64,
        /// Assumed channel path count for the exclusion windows.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Generate a synthetic IQ capture file.
    Generate {
        /// Output capture path (a JSON sidecar is written next to it).
        #[arg(long)]
        out: PathBuf,
        /// True space-time scheme: al or sm.
        #[arg(long, default_value = "al")]
        scheme: String,
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Cyclic prefix length; defaults to N/4.
        #[arg(long)]
        cp: Option<usize>,
        /// OFDM blocks per antenna.
        #[arg(long, default_value_t = 100)]
        blocks: usize,
        /// Receive antennas.
        #[arg(long, default_value_t = 2)]
        rx: usize,
        #[arg(long, default_value = "qpsk")]
        modulation: String,
        /// Channel taps.
        #[arg(long, default_value_t = 4)]
        taps: usize,
        #[arg(long, default_value_t = f64::INFINITY)]
        snr_db: f64,
        /// Fractional timing offset in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Carrier frequency offset in subcarrier spacings.
        #[arg(long, default_value_t = 0.0)]
        freq_offset: f64,
        /// Normalized maximum Doppler frequency.
        #[arg(long, default_value_t = 0.0)]
        doppler: f64,
        /// Receive spatial correlation in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the decision threshold for a geometry and false-alarm target.
    Threshold {
        #[arg(long)]
        n: usize,
        /// Cyclic prefix length; defaults to N/4.
        #[arg(long)]
        cp: Option<usize>,
        /// Receive antennas (sets the pair count).
        #[arg(long, default_value_t = 2)]
        rx: usize,
        #[arg(long, default_value_t = 1e-3)]
        pfa: f64,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("STBCID_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            trials,
        } => {
            cmd_simulate(&config, &out, seed, trials)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Identify {
            capture,
            n,
            cp,
            pfa,
            paths,
        } => cmd_identify(&capture, n, cp.unwrap_or(n / 4), pfa, paths),
        Command::Generate {
            out,
            scheme,
            n,
            cp,
            blocks,
            rx,
            modulation,
            taps,
            snr_db,
            mu,
            freq_offset,
            doppler,
            rho,
            seed,
        } => {
            let scheme = match scheme.to_ascii_lowercase().as_str() {
                "al" | "alamouti" => Stbc::Alamouti,
                "sm" | "spatialmux" => Stbc::SpatialMux,
                other => bail!("unknown scheme '{other}' (expected al or sm)"),
            };
            cmd_generate(GenerateArgs {
                out,
                scheme,
                n,
                cp: cp.unwrap_or(n / 4),
                blocks,
                rx,
                modulation: parse_modulation(&modulation)?,
                taps,
                snr_db,
                mu,
                freq_offset,
                doppler,
                rho,
                seed,
            })?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Threshold { n, cp, rx, pfa } => {
            if rx < 2 {
                bail!("need at least 2 receive antennas, got {rx}");
            }
            let n_pairs = rx * (rx - 1) / 2;
            let eta = threshold(pfa, n, cp.unwrap_or(n / 4), n_pairs)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            println!("{}", format_significant(eta, 10));
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Formats `x` with `digits` significant digits, plain decimal notation.
fn format_significant(x: f64, digits: u32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn modulation_name(fmt: ModulationFormat) -> String {
    match (fmt.kind(), fmt.order()) {
        (ModulationKind::Psk, 4) => "qpsk".into(),
        (ModulationKind::Psk, m) => format!("psk{m}"),
        (ModulationKind::Qam, m) => format!("qam{m}"),
    }
}

fn cmd_simulate(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    trials: Option<usize>,
) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("cannot read configuration {}", config_path.display()))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
        cfg.validate()?;
    }
    let grid = cfg.grid()?;
    let records = sweep(&grid, cfg.trials).map_err(|e| anyhow::anyhow!("{e}"))?;
    write_csv(out, &records)?;
    let sidecar = out.with_extension("json");
    let provenance = serde_json::json!({
        "tool": "stbcid",
        "version": VERSION,
        "master_seed": cfg.seed,
        "trials_per_class": cfg.trials,
        "config": cfg,
        "records": records,
    });
    std::fs::write(&sidecar, serde_json::to_string_pretty(&provenance)?)
        .with_context(|| format!("cannot write sidecar {}", sidecar.display()))?;
    Ok(())
}

fn write_csv(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(path)
            .with_context(|| format!("cannot create results file {}", path.display()))?,
    );
    writeln!(
        f,
        "n_subcarriers,cp_len,modulation,n_blocks,n_rx,rho,timing_mu,freq_offset,doppler,\
         snr_db,p_al_given_al,p_sm_given_sm,p_c,ci_low,ci_high,trials"
    )?;
    for r in records {
        let s = &r.scenario;
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            s.ofdm.n_subcarriers,
            s.ofdm.cp_len,
            modulation_name(s.modulation),
            s.n_blocks,
            s.channel.n_rx,
            s.channel.rho,
            s.channel.timing_mu,
            s.channel.normalized_freq_offset,
            s.channel.normalized_doppler,
            s.snr_db,
            r.p_al_given_al,
            r.p_sm_given_sm,
            r.p_c,
            r.ci_low,
            r.ci_high,
            r.trials_per_class,
        )?;
    }
    f.flush()?;
    Ok(())
}

fn cmd_identify(
    capture_path: &Path,
    n: usize,
    cp: usize,
    pfa: f64,
    paths: Option<usize>,
) -> Result<ExitCode> {
    let file = read_capture(capture_path)?;
    if file.n_antennas() < 2 {
        bail!("need >=2 antennas, capture has {}", file.n_antennas());
    }
    if file.samples_per_antenna() < 2 * (n + cp) {
        bail!(
            "capture too short: {} samples per antenna, need at least {}",
            file.samples_per_antenna(),
            2 * (n + cp)
        );
    }
    let mut cfg =
        IdentifierConfig::new(n, cp, pfa, file.n_antennas()).map_err(|e| anyhow::anyhow!("{e}"))?;
    if let Some(l) = paths {
        cfg.assumed_path_count = l;
        cfg.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    let rx = RxCapture {
        streams: file.streams,
        snr_db: f64::NAN,
        scheme: None,
    };
    let report = identify(&rx, &cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
    let summary = serde_json::json!({
        "verdict": report.verdict,
        "statistic": report.statistic,
        "threshold": report.threshold,
        "tau_p": report.tau_p,
        "p_fa": report.p_fa,
        "feature": report.feature,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if report.verdict == Stbc::Alamouti {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

struct GenerateArgs {
    out: PathBuf,
    scheme: Stbc,
    n: usize,
    cp: usize,
    blocks: usize,
    rx: usize,
    modulation: ModulationFormat,
    taps: usize,
    snr_db: f64,
    mu: f64,
    freq_offset: f64,
    doppler: f64,
    rho: f64,
    seed: u64,
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let cfg = RunConfig {
        n_subcarriers: config::Axis::One(args.n),
        cp_len: Some(args.cp),
        modulation: config::Axis::One(modulation_name(args.modulation)),
        n_blocks: config::Axis::One(args.blocks),
        n_rx: config::Axis::One(args.rx),
        snr_db: config::Axis::One(args.snr_db),
        n_taps: args.taps,
        pdp_decay: 5.0,
        rho: config::Axis::One(args.rho),
        timing_mu: config::Axis::One(args.mu),
        freq_offset: config::Axis::One(args.freq_offset),
        doppler: config::Axis::One(args.doppler),
        p_fa: 1e-3,
        assumed_path_count: None,
        trials: 1,
        seed: args.seed,
        aligned_start: false,
    };
    let scenario = cfg.grid()?.remove(0);
    let class = match args.scheme {
        Stbc::Alamouti => 0,
        Stbc::SpatialMux => 1,
    };
    let trial_seed = derive_seed(args.seed, 0, class, 0);
    let rx = synthesize_capture(&scenario, args.scheme, trial_seed)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    write_capture(
        &args.out,
        &IqCapture {
            streams: rx.streams,
            sample_rate: 1.0,
        },
    )?;
    let sidecar = args.out.with_extension("json");
    let provenance = serde_json::json!({
        "tool": "stbcid",
        "version": VERSION,
        "scheme": args.scheme,
        "master_seed": args.seed,
        "trial_seed": trial_seed,
        "scenario": scenario,
    });
    std::fs::write(&sidecar, serde_json::to_string_pretty(&provenance)?)
        .with_context(|| format!("cannot write sidecar {}", sidecar.display()))?;
    Ok(())
}
