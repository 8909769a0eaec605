use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Deserialize;

use fdtwrc::baselines::SchemeId;
use fdtwrc::harness::{emit, rounded, run_experiment, to_csv, ExperimentKind, ExperimentSpec, OutputFormat};
use fdtwrc::model::SystemConfig;
use fdtwrc::numerics::db_to_linear;

/// Monte Carlo driver for full-duplex two-way relay beamforming.
///
/// Log verbosity is read from the FDTWRC_LOG environment variable
/// (error, warn, info, debug, trace).
#[derive(Parser, Debug)]
#[command(name = "fdtwrc", version)]
struct Cli {
    /// TOML file overriding the experiment defaults (flags override it in turn).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Average rate-region boundary, sampled along directions in the rate plane.
    Region {
        /// Directions in degrees from the R_A axis.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        directions: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Mean sum rates at a single operating point.
    Sumrate {
        #[command(flatten)]
        common: Common,
    },
    /// Sum-rate or region sweep of one of the named experiments.
    Sweep {
        /// rate_region, sumrate_vs_source_snr, sumrate_vs_relay_snr, sumrate_vs_si,
        /// sumrate_vs_antennas, asymmetric_region, asymmetric_sumrate or local_csi_sweep.
        kind: ExperimentKind,
        /// Sweep values (dB, antenna counts or degrees, depending on the kind).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated: proposed, hd, fd2, ub, localcsi.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<SchemeId>>,
    /// Source transmit SNR in dB (both sources).
    #[arg(long, value_name = "DB", allow_hyphen_values = true)]
    snr_source: Option<f64>,
    /// Relay transmit SNR in dB.
    #[arg(long, value_name = "DB", allow_hyphen_values = true)]
    snr_relay: Option<f64>,
    /// Residual self-interference gain at the sources in dB.
    #[arg(long, value_name = "DB", allow_hyphen_values = true)]
    si: Option<f64>,
    /// Relay antennas (transmit and receive).
    #[arg(long, value_name = "M")]
    antennas: Option<usize>,
    /// Average gain of the B-relay links in dB.
    #[arg(long, value_name = "DB", allow_hyphen_values = true)]
    gain_br: Option<f64>,
    /// Boundary points per rate-region solve.
    #[arg(long, value_name = "K")]
    points: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

/// Layout of the `--config` file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    trials: Option<usize>,
    seed: Option<u64>,
    schemes: Option<Vec<String>>,
    sweep: Option<Vec<f64>>,
    points: Option<usize>,
    system: Option<SystemConfig>,
}

fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn build_spec(kind: ExperimentKind, file: &ConfigFile, common: &Common, sweep: Option<Vec<f64>>) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::preset(kind);
    if let Some(base) = &file.system {
        let gain_br = spec.base.gain_br;
        spec.base = base.clone();
        // keep the weak-link preset unless the file sets it explicitly
        if base.gain_br == SystemConfig::default().gain_br {
            spec.base.gain_br = gain_br;
        }
    }
    if let Some(t) = file.trials {
        spec.trials = t;
    }
    if let Some(s) = file.seed {
        spec.seed = s;
    }
    if let Some(names) = &file.schemes {
        spec.schemes = names.iter().map(|n| n.parse()).collect::<fdtwrc::error::Result<_>>()?;
    }
    if let Some(v) = &file.sweep {
        spec.sweep = v.clone();
    }
    if let Some(p) = file.points {
        spec.points = p;
    }

    let c = common;
    if let Some(t) = c.trials {
        spec.trials = t;
    }
    if let Some(s) = c.seed {
        spec.seed = s;
    }
    if let Some(s) = &c.schemes {
        spec.schemes = s.clone();
    }
    if let Some(db) = c.snr_source {
        spec.base.p_a = db_to_linear(db);
        spec.base.p_b = db_to_linear(db);
    }
    if let Some(db) = c.snr_relay {
        spec.base.p_r = db_to_linear(db);
    }
    if let Some(db) = c.si {
        spec.base.sigma2_a = db_to_linear(db);
        spec.base.sigma2_b = db_to_linear(db);
    }
    if let Some(m) = c.antennas {
        spec.base.m_t = m;
        spec.base.m_r = m;
    }
    if let Some(db) = c.gain_br {
        spec.base.gain_br = db_to_linear(db);
    }
    if let Some(p) = c.points {
        spec.points = p;
    }
    if let Some(v) = sweep {
        spec.sweep = v;
    }
    spec.validate()?;
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    let (spec, common) = match cli.command {
        Command::Region { directions, common } => {
            (build_spec(ExperimentKind::RateRegion, &file, &common, directions)?, common)
        }
        Command::Sumrate { common } => {
            let db = common.snr_source.unwrap_or(10.0);
            (build_spec(ExperimentKind::SumrateVsSourceSnr, &file, &common, Some(vec![db]))?, common)
        }
        Command::Sweep { kind, values, common } => (build_spec(kind, &file, &common, values)?, common),
    };
    info!("{} trials of {} with schemes {:?}", spec.trials, spec.kind, spec.schemes);
    let table = run_experiment(&spec)?;
    if table.metadata.failures > 0 {
        log::warn!("{} scheme evaluations failed and were scored as zero", table.metadata.failures);
    }
    match &common.out {
        Some(path) => {
            emit(&table, common.format, path)?;
            info!("wrote {}", path.display());
        }
        None => {
            let text = match common.format {
                OutputFormat::Csv => to_csv(&table)?,
                OutputFormat::Json => serde_json::to_string_pretty(&rounded(&table))?,
            };
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FDTWRC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
