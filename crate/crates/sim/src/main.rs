use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use squint_core::array::{bsr_closed_form, bsr_numerical, ArrayGeometry, SpatialFreq};
use squint_sim::config::{Experiment, ExperimentConfig};
use squint_sim::error::{Result, SimError};
use squint_sim::gain_map::{gain_map, write_gain_map};
use squint_sim::output::emit_csv;
use squint_sim::sweep;

/// Wideband hybrid beamforming simulator.
#[derive(Debug, Parser)]
#[command(name = "squint", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Key-value config file; flags given here override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo trials per sweep point.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Start from the full-size preset instead of the desk defaults.
    #[arg(long, global = true)]
    full_scale: bool,

    /// Extra `key=value` settings, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print closed-form and numerical beam squint ratio.
    Bsr {
        /// Array shape `<n_h>x<n_v>`; defaults to the configured receive array.
        #[arg(long)]
        shape: Option<String>,
    },
    /// Tabulate the carrier-matched beam gain at the band edges and carrier.
    GainMap {
        #[arg(long)]
        shape: Option<String>,
        /// Grid points per axis.
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        /// Matched horizontal spatial frequency.
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        rho: f64,
        /// Matched vertical spatial frequency.
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        varrho: f64,
    },
    /// Sweep the receive array aspect ratio at a fixed element count.
    SweepRsi,
    /// Sweep the SNR.
    SweepSnr,
    /// Sweep the bandwidth for every configured antenna spacing.
    SweepBandwidth,
    /// Run the configured point alone.
    Run {
        /// Write the channel of the first trial to this file.
        #[arg(long, value_name = "PATH")]
        dump_channel: Option<PathBuf>,
    },
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::SweepRsi => Experiment::Rsi,
            Command::SweepSnr => Experiment::Snr,
            Command::SweepBandwidth => Experiment::Bandwidth,
            _ => Experiment::Single,
        }
    }
}

fn load_config(common: &Common, experiment: Experiment) -> Result<ExperimentConfig> {
    let mut cfg = if common.full_scale {
        ExperimentConfig::full_scale(experiment)
    } else {
        ExperimentConfig::default()
    };
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    for kv in &common.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| SimError::config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k, v)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn geometry(cfg: &ExperimentConfig, shape: Option<&str>) -> Result<ArrayGeometry> {
    match shape {
        None => cfg.rx_geometry(cfg.rx_spacing),
        Some(s) => {
            let mut c = cfg.clone();
            c.set("rx_shape", s)?;
            c.rx_geometry(c.rx_spacing)
        }
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(std::io::stdout().lock())),
        Some(p) => {
            let file = std::fs::File::create(p).map_err(|source| SimError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
    }
}

fn io_error(path: Option<&Path>) -> impl Fn(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.map_or_else(|| "<stdout>".into(), Path::to_path_buf),
        source,
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common, cli.command.experiment())?;
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SimError::config(format!("thread pool: {e}")))?;
    }
    let out = cli.common.out.as_deref();
    match &cli.command {
        Command::Bsr { shape } => {
            let geom = geometry(&cfg, shape.as_deref())?;
            let grid = cfg.grid(cfg.bandwidth_hz)?;
            let mut w = open_out(out)?;
            writeln!(
                w,
                "array {}x{} spacing {}x{} fractional_bandwidth {}\nclosed_form {}\nnumerical {}",
                geom.n_h(),
                geom.n_v(),
                geom.spacing_h(),
                geom.spacing_v(),
                grid.fractional_bandwidth(),
                bsr_closed_form(&geom, grid.fractional_bandwidth()),
                bsr_numerical(&geom, &grid),
            )
            .and_then(|_| w.flush())
            .map_err(io_error(out))
        }
        Command::GainMap {
            shape,
            resolution,
            rho,
            varrho,
        } => {
            let geom = geometry(&cfg, shape.as_deref())?;
            let grid = cfg.grid(cfg.bandwidth_hz)?;
            let map = gain_map(&geom, &grid, SpatialFreq::new(*rho, *varrho), *resolution)?;
            let mut w = open_out(out)?;
            write_gain_map(&map, &mut w)
                .and_then(|_| w.flush())
                .map_err(io_error(out))
        }
        Command::SweepRsi => emit_csv(&sweep::run_rsi_sweep(&cfg)?, out),
        Command::SweepSnr => emit_csv(&sweep::run_snr_sweep(&cfg)?, out),
        Command::SweepBandwidth => emit_csv(&sweep::run_bandwidth_sweep(&cfg)?, out),
        Command::Run { dump_channel } => {
            if let Some(path) = dump_channel {
                let (channel, _) = sweep::single_point(&cfg)?.channel(cfg.seed, 0)?;
                let file = std::fs::File::create(path).map_err(|source| SimError::Io {
                    path: path.clone(),
                    source,
                })?;
                let mut w = std::io::BufWriter::new(file);
                channel
                    .write_dump(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(io_error(Some(path)))?;
            }
            emit_csv(&sweep::run_single(&cfg)?, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
