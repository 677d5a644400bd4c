use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use seqcast_core::lstm::{init_params, NetworkConfig};
use seqcast_core::market_data::PriceField;
use seqcast_core::pipeline::{self, RunConfig};
use seqcast_core::rng::SeededRng;
use seqcast_core::training::{finite_diff_gradcheck, EpochLog, Execution};

#[derive(Parser)]
#[command(name = "seqcast", version, about = "Stacked-LSTM price forecasting")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Fetch csv from this URL template ({symbol}, {start}, {end}).
    #[arg(long, global = true)]
    endpoint: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Write the epoch log as a JSON array to this file.
    #[arg(long, global = true)]
    log_out: Option<PathBuf>,
    /// Directory of <SYMBOL>.csv files.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Ticker(s) to process; repeatable.
    #[arg(long = "symbol", global = true)]
    symbols: Vec<String>,
    /// LSTM layer sizes, e.g. 50,60,80,120.
    #[arg(long, global = true, value_delimiter = ',')]
    units: Option<Vec<usize>>,
    /// Dropout rate per layer, e.g. 0.2,0.3,0.4,0.5.
    #[arg(long, global = true, value_delimiter = ',')]
    dropout: Option<Vec<f64>>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    clip_norm: Option<f64>,
    #[arg(long, global = true)]
    split_ratio: Option<f64>,
    #[arg(long, global = true, value_enum)]
    price_field: Option<FieldArg>,
    /// Process batch samples one after another instead of in parallel.
    #[arg(long, global = true)]
    serial: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Close,
    AdjClose,
}

#[derive(Subcommand)]
enum Command {
    /// Clean the raw series and write date,close,sma100,sma200.
    Ingest,
    /// Train and write a checkpoint; one JSON log line per epoch on stdout.
    Train,
    /// Score a checkpoint on the test split; writes metrics, predictions and a chart.
    Evaluate {
        /// Defaults to the checkpoint the current configuration would train.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train and evaluate every symbol, then print a metrics table.
    Sweep,
    /// Compare backpropagated gradients with central differences.
    Gradcheck {
        #[arg(long, default_value_t = 50)]
        probes: usize,
        #[arg(long, default_value_t = 2)]
        batch: usize,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Print the resolved configuration as JSON.
    Config,
}

const DEFAULT_DROPOUT: [f64; 4] = [0.2, 0.3, 0.4, 0.5];

fn resolve(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &g.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(endpoint) = &g.endpoint {
        cfg.endpoint = Some(endpoint.clone());
    }
    if let Some(epochs) = g.epochs {
        cfg.training.epochs = epochs;
    }
    if let Some(window) = g.window {
        cfg.window = window;
    }
    if let Some(path) = &g.log_out {
        cfg.log_out = Some(path.clone());
    }
    if let Some(dir) = &g.data {
        cfg.data_dir = Some(dir.clone());
    }
    if !g.symbols.is_empty() {
        cfg.symbols = g.symbols.clone();
    }
    if let Some(units) = &g.units {
        let rates = match &g.dropout {
            Some(r) => r.clone(),
            None => (0..units.len())
                .map(|i| DEFAULT_DROPOUT[i.min(DEFAULT_DROPOUT.len() - 1)])
                .collect(),
        };
        cfg.network = NetworkConfig {
            layer_units: units.clone(),
            dropout_rates: rates,
            ..cfg.network
        };
    } else if let Some(rates) = &g.dropout {
        cfg.network.dropout_rates = rates.clone();
    }
    if let Some(b) = g.batch_size {
        cfg.training.batch_size = b;
    }
    if let Some(lr) = g.learning_rate {
        cfg.training.learning_rate = lr;
    }
    if let Some(c) = g.clip_norm {
        cfg.training.clip_norm = Some(c);
    }
    if let Some(r) = g.split_ratio {
        cfg.split_ratio = r;
    }
    if let Some(f) = g.price_field {
        cfg.price_field = match f {
            FieldArg::Close => PriceField::Close,
            FieldArg::AdjClose => PriceField::AdjClose,
        };
    }
    if g.serial {
        cfg.training.execution = Execution::Serial;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn log_line(log: &EpochLog) -> String {
    serde_json::to_string(log).expect("log serializes")
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = resolve(&cli.global)?;
    let stdout = std::io::stdout();
    match cli.command {
        Command::Config => print!("{}", cfg.to_json()),
        Command::Ingest => {
            for symbol in &cfg.symbols {
                let s = pipeline::ingest(&cfg, symbol)?;
                println!(
                    "{}: {} rows read, {} kept, dropped {} -> {}",
                    s.symbol,
                    s.rows_in,
                    s.rows_kept,
                    s.dropped,
                    s.output.display()
                );
            }
        }
        Command::Train => {
            for symbol in &cfg.symbols {
                let report = pipeline::train_symbol(&cfg, symbol, |log| {
                    let mut out = stdout.lock();
                    let _ = writeln!(out, "{}", log_line(log));
                    let _ = out.flush();
                })?;
                eprintln!("{symbol}: checkpoint {}", report.path.display());
            }
        }
        Command::Evaluate { checkpoint } => {
            if checkpoint.is_some() && cfg.symbols.len() > 1 {
                bail!("--checkpoint evaluates a single symbol");
            }
            for symbol in &cfg.symbols {
                let path = checkpoint.clone().unwrap_or_else(|| cfg.checkpoint_path(symbol));
                let report = pipeline::evaluate_path(&cfg, &path)?;
                println!("{}", serde_json::to_string(&report.metrics)?);
                eprintln!(
                    "{}: wrote {}, {}, {}",
                    report.metrics.symbol,
                    report.metrics_path.display(),
                    report.predictions_path.display(),
                    report.chart_path.display()
                );
            }
        }
        Command::Sweep => {
            let report = pipeline::sweep(&cfg, &cfg.symbols, |symbol, log| {
                eprintln!("{symbol} {}", log_line(log));
            });
            print!("{}", report.table());
            std::fs::create_dir_all(&cfg.out_dir)
                .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
            let path = cfg.out_dir.join(format!("sweep-{}.json", cfg.config_hash()));
            std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
                .with_context(|| format!("writing {}", path.display()))?;
            if report.failures() > 0 {
                eprintln!("{} of {} symbols failed", report.failures(), report.rows.len());
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Gradcheck {
            probes,
            batch,
            steps,
            step,
            tolerance,
        } => {
            let (network, _) = cfg.seeded();
            let params = init_params(&network)?;
            let mut rng = SeededRng::derived(cfg.seed, &[0x4744]);
            let inputs: Vec<Vec<f64>> = (0..batch)
                .map(|_| (0..steps).map(|_| rng.uniform(0.0, 1.0)).collect())
                .collect();
            let targets: Vec<f64> = (0..batch).map(|_| rng.uniform(0.0, 1.0)).collect();
            let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
            let report = finite_diff_gradcheck(&params, &network, &refs, &targets, probes, step, cfg.seed)?;
            println!(
                "probes {} max_relative_error {:e} worst_index {}",
                report.probes,
                report.max_relative_error,
                report.worst_index.map_or("-".to_string(), |i| i.to_string())
            );
            if report.max_relative_error >= tolerance {
                eprintln!("gradient check failed: {:e} >= {tolerance:e}", report.max_relative_error);
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
