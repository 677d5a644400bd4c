//! End-to-end flows behind the command-line tool: load, clean, split,
//! scale, window, train, predict, evaluate and write the artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chart::render_svg;
use crate::checkpoint::{Checkpoint, CheckpointError, ModelPayload, CHECKPOINT_VERSION};
use crate::evaluate::{metrics_report, predict_series, EvaluateError, MetricsReport, SeriesPrediction};
use crate::lstm::{init_params, NetworkConfig};
use crate::market_data::{
    chronological_split, drop_missing, fetch_remote, parse_csv, sma_aligned, FetchError,
    MarketDataError, PriceField, PriceSeries,
};
use crate::preprocess::{
    bridge_test_windows, fit_scaler, make_windows, transform, PreprocessError, ScalerParams,
    WindowedDataset,
};
use crate::training::{train_with, EpochLog, TrainConfig, TrainingError};

pub const DATA_DIR_ENV: &str = "SEQCAST_DATA_DIR";
pub const DEFAULT_DATA_DIR: &str = "data/fixtures";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: MarketDataError,
    },
    #[error("fetching {symbol}: {source}")]
    Fetch { symbol: String, source: FetchError },
    #[error(transparent)]
    Data(#[from] MarketDataError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Training(#[from] TrainingError),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error("{path}: {source}")]
    Checkpoint {
        path: PathBuf,
        source: CheckpointError,
    },
    #[error("checkpoint does not match this run: {0}")]
    Mismatch(String),
    #[error("invalid run configuration: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Every knob of a run. Loaded from JSON; absent fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub symbols: Vec<String>,
    /// Directory holding `<SYMBOL>.csv`. Falls back to `$SEQCAST_DATA_DIR`,
    /// then `data/fixtures`.
    pub data_dir: Option<PathBuf>,
    /// HTTP(S) csv endpoint with `{symbol}`, `{start}`, `{end}` placeholders.
    /// Takes precedence over `data_dir` when set.
    pub endpoint: Option<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub split_ratio: f64,
    pub window: usize,
    pub price_field: PriceField,
    pub network: NetworkConfig,
    pub training: TrainConfig,
    pub out_dir: PathBuf,
    /// Seeds weight initialization, shuffling and dropout. Overrides the
    /// seeds inside `network` and `training`.
    pub seed: u64,
    /// Also write the epoch log as a JSON array here.
    pub log_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            symbols: vec!["VNQ".into()],
            data_dir: None,
            endpoint: None,
            start: NaiveDate::from_ymd_opt(2012, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2022, 12, 21).expect("valid date"),
            split_ratio: 0.8,
            window: 100,
            price_field: PriceField::Close,
            network: NetworkConfig::default(),
            training: TrainConfig::default(),
            out_dir: PathBuf::from("out"),
            seed: 42,
            log_out: None,
        }
    }
}

/// The settings that determine a model; hashed into artifact names.
#[derive(Serialize)]
struct ModelSettings<'a> {
    start: NaiveDate,
    end: NaiveDate,
    split_ratio: f64,
    window: usize,
    price_field: PriceField,
    network: &'a NetworkConfig,
    training: &'a TrainConfig,
    seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        fs::write(path, self.to_json()).map_err(io_err(path))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(PipelineError::Config(format!("split_ratio {} is outside (0, 1)", self.split_ratio)));
        }
        if self.window < 1 {
            return Err(PipelineError::Config("window must be at least 1".into()));
        }
        if self.start > self.end {
            return Err(PipelineError::Config("start date is after end date".into()));
        }
        if self.network.input_features != 1 {
            return Err(PipelineError::Config("the pipeline feeds a single price channel".into()));
        }
        self.network.validate().map_err(TrainingError::from)?;
        self.training.validate()?;
        Ok(())
    }

    /// Network and training settings with the run seed applied.
    pub fn seeded(&self) -> (NetworkConfig, TrainConfig) {
        let network = NetworkConfig {
            seed: self.seed,
            ..self.network.clone()
        };
        let training = TrainConfig {
            shuffle_seed: self.seed,
            ..self.training.clone()
        };
        (network, training)
    }

    /// First 12 hex digits of the SHA-256 of the model-defining settings.
    pub fn config_hash(&self) -> String {
        let (network, training) = self.seeded();
        let settings = ModelSettings {
            start: self.start,
            end: self.end,
            split_ratio: self.split_ratio,
            window: self.window,
            price_field: self.price_field,
            network: &network,
            training: &training,
            seed: self.seed,
        };
        let json = serde_json::to_string(&settings).expect("settings serialize");
        let digest = format!("{:x}", Sha256::digest(json.as_bytes()));
        digest[..12].to_string()
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
    }

    pub fn artifact_path(&self, symbol: &str, hash: &str, suffix: &str) -> PathBuf {
        self.out_dir.join(format!("{symbol}-{hash}.{suffix}"))
    }

    pub fn checkpoint_path(&self, symbol: &str) -> PathBuf {
        self.artifact_path(symbol, &self.config_hash(), "checkpoint.json")
    }
}

/// Raw bars for `symbol` within the configured date range.
pub fn load_series(cfg: &RunConfig, symbol: &str) -> Result<PriceSeries, PipelineError> {
    let (text, origin) = match &cfg.endpoint {
        Some(template) => {
            let text = fetch_remote(template, symbol, cfg.start, cfg.end).map_err(|source| {
                PipelineError::Fetch {
                    symbol: symbol.to_string(),
                    source,
                }
            })?;
            (text, template.clone())
        }
        None => {
            let path = cfg.data_dir().join(format!("{symbol}.csv"));
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            (text, path.display().to_string())
        }
    };
    let series = parse_csv(&text, symbol).map_err(|source| PipelineError::Parse { path: origin, source })?;
    Ok(series.between(cfg.start, cfg.end))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub symbol: String,
    pub rows_in: usize,
    pub rows_kept: usize,
    pub dropped: usize,
    pub output: PathBuf,
}

/// `date,close,sma100,sma200`, with empty cells where an average is not yet
/// defined. `close` is whichever price channel the run uses.
pub fn cleaned_csv(series: &PriceSeries, field: PriceField) -> Result<String, PipelineError> {
    let values = series.values(field);
    let mut out = String::from("date,close,sma100,sma200\n");
    let fill = |n| -> Result<Vec<Option<f64>>, MarketDataError> {
        match sma_aligned(&values, n) {
            Err(MarketDataError::InsufficientData { .. }) => Ok(vec![None; values.len()]),
            other => other,
        }
    };
    let (s100, s200) = (fill(100)?, fill(200)?);
    for (i, date) in series.dates().iter().enumerate() {
        let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{date},{},{},{}", values[i], cell(s100[i]), cell(s200[i]));
    }
    Ok(out)
}

pub fn ingest(cfg: &RunConfig, symbol: &str) -> Result<IngestSummary, PipelineError> {
    let raw = load_series(cfg, symbol)?;
    let (clean, dropped) = drop_missing(&raw);
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let output = cfg.out_dir.join(format!("{symbol}-clean.csv"));
    fs::write(&output, cleaned_csv(&clean, cfg.price_field)?).map_err(io_err(&output))?;
    Ok(IngestSummary {
        symbol: symbol.to_string(),
        rows_in: raw.len(),
        rows_kept: clean.len(),
        dropped,
        output,
    })
}

/// Everything downstream of cleaning for one series.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub scaler: ScalerParams,
    pub train: WindowedDataset,
    /// One sample per test day, dated.
    pub test: WindowedDataset,
    pub dropped: usize,
    pub train_days: usize,
    pub test_days: usize,
}

pub fn prepare(
    series: &PriceSeries,
    split_ratio: f64,
    window: usize,
    field: PriceField,
) -> Result<Prepared, PipelineError> {
    let (clean, dropped) = drop_missing(series);
    let split = chronological_split(&clean, split_ratio)?;
    let train_values = split.train.values(field);
    let test_values = split.test.values(field);
    let scaler = fit_scaler(&train_values)?;
    let scaled_train = transform(&scaler, &train_values)?;
    let scaled_test = transform(&scaler, &test_values)?;
    let train = make_windows(&scaled_train, window)?;
    let test = bridge_test_windows(&scaled_train, &scaled_test, window)?.with_target_dates(split.test.dates())?;
    Ok(Prepared {
        scaler,
        train,
        test,
        dropped,
        train_days: train_values.len(),
        test_days: test_values.len(),
    })
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub checkpoint: Checkpoint,
    pub path: PathBuf,
    pub logs: Vec<EpochLog>,
}

pub fn train_symbol(
    cfg: &RunConfig,
    symbol: &str,
    on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainReport, PipelineError> {
    cfg.validate()?;
    let series = load_series(cfg, symbol)?;
    let prepared = prepare(&series, cfg.split_ratio, cfg.window, cfg.price_field)?;
    let (network, training) = cfg.seeded();
    let params = init_params(&network).map_err(TrainingError::from)?;
    let outcome = train_with(params, &network, &prepared.train, &training, on_epoch)?;
    let checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION,
        symbol: symbol.to_string(),
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        window: cfg.window,
        split_ratio: cfg.split_ratio,
        price_field: cfg.price_field,
        scaler: prepared.scaler,
        training,
        final_loss: outcome.logs.last().map(|l| l.loss),
        model: ModelPayload::lstm(&network, &outcome.params),
    };
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let path = cfg.checkpoint_path(symbol);
    checkpoint.save(&path).map_err(|source| PipelineError::Checkpoint {
        path: path.clone(),
        source,
    })?;
    if let Some(log_path) = &cfg.log_out {
        let json = serde_json::to_string_pretty(&outcome.logs).expect("logs serialize");
        fs::write(log_path, json + "\n").map_err(io_err(log_path))?;
    }
    Ok(TrainReport {
        checkpoint,
        path,
        logs: outcome.logs,
    })
}

/// A checkpoint whose model repeats the last observed price, with the scaler
/// the run would fit. Useful as a baseline and for testing evaluation.
pub fn persistence_checkpoint(cfg: &RunConfig, symbol: &str) -> Result<Checkpoint, PipelineError> {
    let series = load_series(cfg, symbol)?;
    let prepared = prepare(&series, cfg.split_ratio, cfg.window, cfg.price_field)?;
    let (_, training) = cfg.seeded();
    Ok(Checkpoint {
        version: CHECKPOINT_VERSION,
        symbol: symbol.to_string(),
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        window: cfg.window,
        split_ratio: cfg.split_ratio,
        price_field: cfg.price_field,
        scaler: prepared.scaler,
        training,
        final_loss: None,
        model: ModelPayload::Persistence,
    })
}

/// Contents of the metrics JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub symbol: String,
    pub window: usize,
    pub config_hash: String,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub metrics: MetricsFile,
    pub prediction: SeriesPrediction,
    pub metrics_path: PathBuf,
    pub predictions_path: PathBuf,
    pub chart_path: PathBuf,
}

pub fn predictions_csv(prediction: &SeriesPrediction) -> String {
    let mut out = String::from("date,actual,predicted\n");
    let (actual, predicted) = (prediction.set.actual(), prediction.set.predicted());
    for i in 0..actual.len() {
        let date = prediction.dates.get(i).map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{date},{},{}", actual[i], predicted[i]);
    }
    out
}

/// Evaluates `checkpoint` on the test split of the symbol's data. The
/// window, split ratio and price channel come from the checkpoint; the
/// scaler refit on the training split must reproduce the stored one.
pub fn evaluate_checkpoint(cfg: &RunConfig, checkpoint: &Checkpoint) -> Result<EvalReport, PipelineError> {
    if cfg.window != checkpoint.window {
        return Err(PipelineError::Mismatch(format!(
            "window {} requested, checkpoint was trained with {}",
            cfg.window, checkpoint.window
        )));
    }
    let symbol = checkpoint.symbol.as_str();
    let series = load_series(cfg, symbol)?;
    let prepared = prepare(&series, checkpoint.split_ratio, checkpoint.window, checkpoint.price_field)?;
    if prepared.scaler != checkpoint.scaler {
        return Err(EvaluateError::ScalerMismatch(format!(
            "data gives [{}, {}], checkpoint stores [{}, {}]",
            prepared.scaler.min_value,
            prepared.scaler.max_value,
            checkpoint.scaler.min_value,
            checkpoint.scaler.max_value
        ))
        .into());
    }
    let model = checkpoint.predictor().map_err(|source| PipelineError::Checkpoint {
        path: PathBuf::from(symbol),
        source,
    })?;
    let prediction = predict_series(model.as_ref(), &checkpoint.scaler, &prepared.test)?;
    let metrics = MetricsFile {
        symbol: symbol.to_string(),
        window: checkpoint.window,
        config_hash: checkpoint.config_hash.clone(),
        metrics: metrics_report(&prediction.set)?,
    };

    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let hash = &checkpoint.config_hash;
    let metrics_path = cfg.artifact_path(symbol, hash, "metrics.json");
    let predictions_path = cfg.artifact_path(symbol, hash, "predictions.csv");
    let chart_path = cfg.artifact_path(symbol, hash, "chart.svg");
    let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n";
    fs::write(&metrics_path, json).map_err(io_err(&metrics_path))?;
    fs::write(&predictions_path, predictions_csv(&prediction)).map_err(io_err(&predictions_path))?;
    let title = format!("{symbol}: actual vs predicted");
    let svg = render_svg(&title, &prediction.dates, prediction.set.actual(), prediction.set.predicted());
    fs::write(&chart_path, svg).map_err(io_err(&chart_path))?;
    Ok(EvalReport {
        metrics,
        prediction,
        metrics_path,
        predictions_path,
        chart_path,
    })
}

pub fn evaluate_path(cfg: &RunConfig, path: &Path) -> Result<EvalReport, PipelineError> {
    let checkpoint = Checkpoint::load(path).map_err(|source| PipelineError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })?;
    evaluate_checkpoint(cfg, &checkpoint)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub symbol: String,
    #[serde(flatten)]
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Mean R² over the symbols that succeeded.
    pub mean_r_squared: Option<f64>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// Fixed-width text table with a trailing mean row.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<8} {:>10} {:>10} {:>8} {:>8} {:>8}\n",
            "symbol", "rmse", "mae", "r2", "mape", "evs"
        );
        for row in &self.rows {
            match (&row.metrics, &row.error) {
                (Some(m), _) => {
                    let _ = writeln!(
                        out,
                        "{:<8} {:>10.4} {:>10.4} {:>8.4} {:>8.4} {:>8.4}",
                        row.symbol, m.rmse, m.mae, m.r_squared, m.mape, m.explained_variance
                    );
                }
                (None, err) => {
                    let _ = writeln!(out, "{:<8} FAILED: {}", row.symbol, err.as_deref().unwrap_or("unknown"));
                }
            }
        }
        match self.mean_r_squared {
            Some(mean) => {
                let _ = writeln!(out, "{:<8} {:>10} {:>10} {:>8.4}", "mean", "", "", mean);
            }
            None => out.push_str("mean     n/a\n"),
        }
        out
    }
}

/// Trains and evaluates every symbol independently; one failure does not
/// stop the others.
pub fn sweep(
    cfg: &RunConfig,
    symbols: &[String],
    mut on_epoch: impl FnMut(&str, &EpochLog),
) -> SweepReport {
    let mut rows = Vec::with_capacity(symbols.len());
    for symbol in symbols {
        let result = train_symbol(cfg, symbol, |log| on_epoch(symbol, log))
            .and_then(|report| evaluate_checkpoint(cfg, &report.checkpoint));
        rows.push(match result {
            Ok(eval) => SweepRow {
                symbol: symbol.clone(),
                metrics: Some(eval.metrics.metrics),
                error: None,
            },
            Err(e) => SweepRow {
                symbol: symbol.clone(),
                metrics: None,
                error: Some(e.to_string()),
            },
        });
    }
    let r2: Vec<f64> = rows.iter().filter_map(|r| r.metrics.as_ref().map(|m| m.r_squared)).collect();
    let mean_r_squared = (!r2.is_empty()).then(|| r2.iter().sum::<f64>() / r2.len() as f64);
    SweepReport { rows, mean_r_squared }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{serialize_csv, ColumnSet, OhlcvBar};

    fn series(closes: &[Option<f64>]) -> PriceSeries {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let bars = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut bar = OhlcvBar::new(start + chrono::Days::new(i as u64));
                bar.close = c;
                bar
            })
            .collect();
        let cols = ColumnSet {
            open: false,
            high: false,
            low: false,
            adj_close: false,
            volume: false,
        };
        PriceSeries::new("TST", bars, cols).unwrap()
    }

    #[test]
    fn config_json_roundtrip() {
        let mut cfg = RunConfig::default();
        cfg.symbols = vec!["VGT".into(), "VPU".into()];
        cfg.endpoint = Some("http://x/{symbol}?a={start}&b={end}".into());
        cfg.training.clip_norm = Some(1.5);
        let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"window": 20}"#).unwrap();
        assert_eq!(partial.window, 20);
        assert_eq!(partial.split_ratio, 0.8);
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.start.to_string(), "2012-01-01");
        assert_eq!(cfg.end.to_string(), "2022-12-21");
        assert_eq!(cfg.window, 100);
        assert_eq!(cfg.training.epochs, 50);
        assert_eq!(cfg.training.batch_size, 32);
        assert_eq!(cfg.network.layer_units, vec![50, 60, 80, 120]);
        cfg.validate().unwrap();
    }

    #[test]
    fn hash_tracks_model_settings_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("elsewhere");
        b.symbols = vec!["VDE".into()];
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 12);
        b.training.epochs = 10;
        assert_ne!(a.config_hash(), b.config_hash());
        let mut c = a.clone();
        c.seed = 7;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn prepare_bridges_test_days() {
        let closes: Vec<Option<f64>> = (0..50)
            .map(|i| if i == 10 { None } else { Some(10.0 + i as f64) })
            .collect();
        let p = prepare(&series(&closes), 0.8, 5, PriceField::Close).unwrap();
        assert_eq!(p.dropped, 1);
        // 49 clean rows: 39 train, 10 test.
        assert_eq!((p.train_days, p.test_days), (39, 10));
        assert_eq!(p.train.len(), 34);
        assert_eq!(p.test.len(), 10);
        assert_eq!(p.test.target_dates().len(), 10);
        assert_eq!(p.test.target_dates()[0].to_string(), "2020-02-10");
        // Scaler sees training rows only.
        assert_eq!(p.scaler.max_value, 49.0);
        assert!(p.test.targets().iter().all(|&t| t > 1.0));
    }

    #[test]
    fn cleaned_csv_leaves_undefined_sma_empty() {
        let closes: Vec<Option<f64>> = (0..210).map(|i| Some(i as f64)).collect();
        let text = cleaned_csv(&series(&closes), PriceField::Close).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "date,close,sma100,sma200");
        assert_eq!(lines.len(), 211);
        assert!(lines[1].ends_with(",0,,"));
        assert!(lines[100].ends_with(",99,49.5,"));
        assert!(lines[200].ends_with(",199,149.5,99.5"));
        let short = cleaned_csv(&series(&[Some(1.0), Some(2.0)]), PriceField::Close).unwrap();
        assert_eq!(short.lines().nth(2), Some("2020-01-02,2,,"));
    }

    #[test]
    fn persistence_evaluation_end_to_end() {
        let dir = std::env::temp_dir().join(format!("seqcast-pipeline-{}", std::process::id()));
        let data = dir.join("data");
        fs::create_dir_all(&data).unwrap();
        let closes: Vec<Option<f64>> = (0..120).map(|i| Some(50.0 + (i as f64 * 0.3).sin() * 4.0)).collect();
        fs::write(data.join("TST.csv"), serialize_csv(&series(&closes))).unwrap();
        let cfg = RunConfig {
            data_dir: Some(data),
            out_dir: dir.join("out"),
            start: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
            window: 10,
            ..RunConfig::default()
        };
        let ck = persistence_checkpoint(&cfg, "TST").unwrap();
        let report = evaluate_checkpoint(&cfg, &ck).unwrap();
        assert_eq!(report.prediction.set.len(), 24);
        let csv = fs::read_to_string(&report.predictions_path).unwrap();
        assert_eq!(csv.lines().next(), Some("date,actual,predicted"));
        let svg = fs::read_to_string(&report.chart_path).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);

        let mut bad = ck.clone();
        bad.scaler.max_value += 1.0;
        assert!(matches!(
            evaluate_checkpoint(&cfg, &bad),
            Err(PipelineError::Evaluate(EvaluateError::ScalerMismatch(_)))
        ));
        let other = RunConfig { window: 11, ..cfg.clone() };
        assert!(matches!(evaluate_checkpoint(&other, &ck), Err(PipelineError::Mismatch(_))));
        fs::remove_dir_all(&dir).ok();
    }
}
