//! Command-line front end: scenario runs, parameter sweeps, the optimal
//! power table and operation counts.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use otfs_sp::analysis::RootChoice;
use otfs_sp::channel::{quantize_profile, ChannelProfile, ChannelTaps};
use otfs_sp::sim::{emit_csv, parse_range, snr_to_noise, to_csv, MetricRecord, RunConfig, Scenario, SplitMode};
use otfs_sp::{complexity_counts, optimal_pilot_power, ComplexityParams, DdGrid, LinkParams, PowerSplit, Scheme};

#[derive(Parser)]
#[command(name = "otfs-sp", version, about = "Superimposed-pilot OTFS link simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every (scheme, SNR) cell of a config file and write CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat a scenario while stepping one parameter.
    Sweep {
        /// Base config; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// `start:stop:step` or a comma list.
        #[arg(long)]
        range: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print the optimal pilot and data powers per SNR.
    PowerOpt {
        /// Comma list or `start:stop:step` of SNR values in dB.
        #[arg(long, default_value = "0:20:5")]
        snr_list: String,
        /// Path profile file (`delay_us, doppler_hz, power_db`), or `table2`.
        #[arg(long, default_value = "table2")]
        profile: String,
        /// Pre-quantized taps file (`l, k, power_db`); overrides `--profile`.
        #[arg(long)]
        taps: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Scale the tap powers to unit sum instead of keeping them as listed.
        #[arg(long)]
        normalize: bool,
    },
    /// Print per-frame operation counts for M = N over a list of sizes.
    Complexity {
        #[command(flatten)]
        params: ComplexityArgs,
    },
}

#[derive(Args)]
struct Common {
    /// Output directory; the CSV is named after the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Extra `key=value` overrides applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Comma list of M = N values.
    #[arg(long, default_value = "16,32,64")]
    sizes: String,
    #[arg(long, default_value_t = 5)]
    q: u64,
    /// Constellation size.
    #[arg(long, default_value_t = 2)]
    s: u64,
    #[arg(long, default_value_t = 20)]
    n_i: u64,
    #[arg(long, default_value_t = 2)]
    n_spi: u64,
    #[arg(long, default_value_t = 4)]
    l_max: u64,
    #[arg(long, default_value_t = 12)]
    k_max: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    Snr,
    PilotPower,
    FrameSize,
    Damping,
}

/// Failure class: bad input (exit 2) or a fault while running (exit 1).
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn load_config(path: Option<&Path>, common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match path {
        Some(p) => RunConfig::from_file(p)
            .with_context(|| format!("loading config {}", p.display()))
            .map_err(usage)?,
        None => RunConfig::default(),
    };
    let base = std::env::current_dir().unwrap_or_default();
    for kv in &common.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| usage(anyhow::anyhow!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim(), &base).map_err(usage)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn output_path(cfg: &RunConfig, config: Option<&Path>, common: &Common, suffix: &str) -> Option<PathBuf> {
    match &common.out {
        Some(dir) => {
            let stem = config
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            Some(dir.join(format!("{stem}{suffix}.csv")))
        }
        None => cfg.output.clone(),
    }
}

fn write_records(records: &[MetricRecord], path: Option<PathBuf>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            emit_csv(records, &p).map_err(runtime)?;
            eprintln!("wrote {} records to {}", records.len(), p.display());
        }
        None => print!("{}", to_csv(records)),
    }
    Ok(())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match threads {
        Some(0) => Err(usage(anyhow::anyhow!("--threads must be at least 1"))),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(runtime)?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn run_cmd(config: &Path, common: &Common) -> Result<(), Failure> {
    let cfg = load_config(Some(config), common)?;
    let scenario = Scenario::new(cfg.clone()).map_err(usage)?;
    let records = with_threads(common.threads, || scenario.run())?.map_err(runtime)?;
    write_records(&records, output_path(&cfg, Some(config), common, ""))
}

fn sweep_cmd(config: Option<&Path>, param: SweepParam, range: &str, common: &Common) -> Result<(), Failure> {
    let base = load_config(config, common)?;
    let values = parse_range(range).map_err(usage)?;
    if values.is_empty() {
        return Err(usage(anyhow::anyhow!("empty sweep range")));
    }
    let mut scenarios = Vec::new();
    match param {
        SweepParam::Snr => {
            let mut cfg = base.clone();
            cfg.snr_db = values;
            scenarios.push(Scenario::new(cfg).map_err(usage)?);
        }
        _ => {
            for v in values {
                let mut cfg = base.clone();
                match param {
                    SweepParam::PilotPower => cfg.split = SplitMode::Fixed(v),
                    SweepParam::FrameSize => {
                        if v < 1.0 || v.fract() != 0.0 {
                            return Err(usage(anyhow::anyhow!("frame size must be a positive integer, got {v}")));
                        }
                        cfg.m = v as usize;
                        cfg.n = v as usize;
                    }
                    SweepParam::Damping => cfg.mp.damping = v,
                    SweepParam::Snr => unreachable!(),
                }
                cfg.validate().map_err(usage)?;
                scenarios.push(Scenario::new(cfg).map_err(usage)?);
            }
        }
    }
    let mut records = Vec::new();
    for s in &scenarios {
        records.extend(with_threads(common.threads, || s.run())?.map_err(runtime)?);
    }
    let suffix = match param {
        SweepParam::Snr => "_snr",
        SweepParam::PilotPower => "_pilot_power",
        SweepParam::FrameSize => "_frame_size",
        SweepParam::Damping => "_damping",
    };
    write_records(&records, output_path(&base, config, common, suffix))
}

fn power_opt_cmd(
    snr_list: &str,
    profile: &str,
    taps_file: Option<&Path>,
    m: usize,
    n: usize,
    normalize: bool,
) -> Result<(), Failure> {
    let grid = DdGrid::with_defaults(m, n).map_err(usage)?;
    let snrs = parse_range(snr_list).map_err(usage)?;
    if snrs.is_empty() {
        return Err(usage(anyhow::anyhow!("empty SNR list")));
    }
    let taps: ChannelTaps = match taps_file {
        Some(p) => ChannelTaps::from_file(p, normalize).map_err(usage)?,
        None => {
            let prof = if profile.eq_ignore_ascii_case("table2") {
                ChannelProfile::table2(normalize)
            } else {
                ChannelProfile::from_file(Path::new(profile), normalize).map_err(usage)?
            };
            quantize_profile(&prof, &grid).map_err(usage)?
        }
    };
    println!(
        "# M={m} N={n} Q={} sigma2_h={:.6} ({})",
        taps.q(),
        taps.sigma2_h(),
        if normalize { "unit total power" } else { "raw powers" }
    );
    println!("{:>8}  {:>12}  {:>12}  {:>12}  {:>14}  root", "snr_db", "sigma2_p_opt", "sigma2_d_opt", "sinr_bound", "grid_maximizer");
    for snr in snrs {
        let params = LinkParams::from_taps(grid, &taps, snr_to_noise(snr), PowerSplit::from_pilot(0.5).map_err(runtime)?)
            .map_err(usage)?;
        let opt = optimal_pilot_power(&params).map_err(runtime)?;
        let root = match opt.choice {
            RootChoice::PrintedBranch => "printed-branch",
            RootChoice::OtherBranch => "other-branch",
            RootChoice::Linear => "linear",
            RootChoice::GridFallback => "grid-fallback",
        };
        println!(
            "{snr:>8.2}  {:>12.4}  {:>12.4}  {:>12.4}  {:>14.4}  {root}",
            opt.sigma2_p, opt.sigma2_d, opt.sinr, opt.grid_maximizer
        );
    }
    Ok(())
}

fn complexity_cmd(a: &ComplexityArgs) -> Result<(), Failure> {
    let sizes: Vec<u64> = a
        .sizes
        .split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .context("--sizes expects a comma list of integers")
        .map_err(usage)?;
    println!("{:>6}  {:>14}  {:>14}  {:>14}", "M=N", "EP", "SP-NI", "SP-I");
    for size in sizes {
        let p = ComplexityParams {
            m: size,
            n: size,
            q: a.q,
            s: a.s,
            n_i: a.n_i,
            n_spi: a.n_spi,
            l_max: a.l_max,
            k_max: a.k_max,
        };
        let c = |s| complexity_counts(s, &p).map_err(usage);
        println!("{size:>6}  {:>14}  {:>14}  {:>14}", c(Scheme::Ep)?, c(Scheme::SpNi)?, c(Scheme::SpI)?);
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Run { config, common } => run_cmd(&config, &common),
        Cmd::Sweep {
            config,
            param,
            range,
            common,
        } => sweep_cmd(config.as_deref(), param, &range, &common),
        Cmd::PowerOpt {
            snr_list,
            profile,
            taps,
            m,
            n,
            normalize,
        } => power_opt_cmd(&snr_list, &profile, taps.as_deref(), m, n, normalize),
        Cmd::Complexity { params } => complexity_cmd(&params),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

