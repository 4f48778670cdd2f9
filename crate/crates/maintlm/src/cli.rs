//! Command front end: wires ingest -> dataset -> trainer -> stats -> report
//! into reproducible runs and owns all file I/O.
//!
//! Every `train` run writes a `manifest.txt` of `key=value` lines (sorted by
//! key, seeds always included) that is sufficient to reproduce every output
//! file byte-for-byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::{fit_normalization, split_indices, DataSplit, DatasetError, NormParams};
use crate::ingest::{
    build_samples, parse_change_log, records_to_csv, IngestError, InputVariant,
    MaintenanceRecord, SamplePair,
};
use crate::mlp::{init_model, read_model, write_model, MlpError};
use crate::report::{
    export_summary, histogram_plot, performance_plot, regression_plot, ReportError,
};
use crate::stats::{error_histogram, ols_fit, StatsError};
use crate::synth::{generate, SynthError, SynthSpec};
use crate::trainer::{train, traces_to_csv, SplitSamples, TrainConfig, TrainError, TrainResult};

/// Errors surfaced to the user, each naming the module it came from.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("mlp: {0}")]
    Mlp(#[from] MlpError),
    #[error("trainer: {0}")]
    Trainer(#[from] TrainError),
    #[error("stats: {0}")]
    Stats(#[from] StatsError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
    #[error("synth: {0}")]
    Synth(#[from] SynthError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("cli: {0}")]
    Usage(String),
}

/// Full configuration of one `train` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub out_dir: PathBuf,
    pub variant: InputVariant,
    pub hidden: usize,
    pub split_seed: u64,
    pub init_seed: u64,
    pub bins: usize,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn new(input_path: PathBuf, out_dir: PathBuf) -> Self {
        Self {
            input_path,
            out_dir,
            variant: InputVariant::Sum,
            hidden: 10,
            split_seed: 0,
            init_seed: 0,
            bins: 20,
            train: TrainConfig::default(),
        }
    }

    /// Manifest serialization: `key=value` lines sorted by key.
    pub fn to_manifest(&self) -> String {
        let t = &self.train;
        let entries: BTreeMap<&str, String> = BTreeMap::from([
            ("bins", self.bins.to_string()),
            ("hidden", self.hidden.to_string()),
            ("init_seed", self.init_seed.to_string()),
            ("input", self.input_path.display().to_string()),
            ("max_epochs", t.max_epochs.to_string()),
            ("max_fail", t.max_fail.to_string()),
            ("min_grad", t.min_grad.to_string()),
            ("mu0", t.mu0.to_string()),
            ("mu_dec", t.mu_dec.to_string()),
            ("mu_inc", t.mu_inc.to_string()),
            ("mu_max", t.mu_max.to_string()),
            ("out", self.out_dir.display().to_string()),
            ("split_seed", self.split_seed.to_string()),
            ("variant", self.variant.to_string()),
        ]);
        let mut out = String::new();
        for (k, v) in entries {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn from_manifest(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("manifest line {}: missing `=`", i + 1)))?;
            map.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| {
            map.get(k)
                .ok_or_else(|| CliError::Usage(format!("manifest missing key `{k}`")))
        };
        let parse_num = |k: &str, v: &str| CliError::Usage(format!("manifest key `{k}`: bad value `{v}`"));
        macro_rules! num {
            ($k:literal) => {{
                let v = get($k)?;
                v.parse().map_err(|_| parse_num($k, v))?
            }};
        }
        let variant_str = get("variant")?;
        let variant = InputVariant::parse(variant_str)
            .ok_or_else(|| parse_num("variant", variant_str))?;
        Ok(Self {
            input_path: PathBuf::from(get("input")?),
            out_dir: PathBuf::from(get("out")?),
            variant,
            hidden: num!("hidden"),
            split_seed: num!("split_seed"),
            init_seed: num!("init_seed"),
            bins: num!("bins"),
            train: TrainConfig {
                mu0: num!("mu0"),
                mu_inc: num!("mu_inc"),
                mu_dec: num!("mu_dec"),
                mu_max: num!("mu_max"),
                max_epochs: num!("max_epochs"),
                max_fail: num!("max_fail"),
                min_grad: num!("min_grad"),
            },
        })
    }
}

/// In-memory result of the training pipeline, before any file is written.
#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub samples: Vec<SamplePair>,
    pub split: DataSplit,
    pub norm: NormParams,
    pub result: TrainResult,
}

impl TrainedRun {
    /// Raw-unit (target, output) series for the given sample indices under
    /// the best-validation model.
    pub fn prediction_series(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let model = &self.result.best_model;
        let mut targets = Vec::with_capacity(idx.len());
        let mut outputs = Vec::with_capacity(idx.len());
        for &i in idx {
            let s = self.samples[i];
            targets.push(s.y);
            outputs.push(self.norm.denormalize_y(model.eval(self.norm.normalize_x(s.x))));
        }
        (targets, outputs)
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.samples.len()).collect()
    }
}

/// Train on parsed records: variant samples, seeded split, normalization
/// fitted on the training partition only, LM training.
pub fn train_pipeline(
    records: &[MaintenanceRecord],
    config: &RunConfig,
) -> Result<TrainedRun, CliError> {
    let samples = build_samples(records, config.variant)?;
    let split = split_indices(samples.len(), config.split_seed)?;
    let pick = |idx: &[usize]| -> Vec<SamplePair> { idx.iter().map(|&i| samples[i]).collect() };
    let train_raw = pick(&split.train_idx);
    let norm = fit_normalization(&train_raw)?;
    let data = SplitSamples {
        train: norm.normalize_samples(&train_raw),
        val: norm.normalize_samples(&pick(&split.val_idx)),
        test: norm.normalize_samples(&pick(&split.test_idx)),
    };
    let model = init_model(config.hidden, config.init_seed)?;
    let result = train(&model, &data, &norm, &config.train)?;
    Ok(TrainedRun { samples, split, norm, result })
}

/// Tracks files written by a command so partial output can be removed on
/// failure.
struct OutputTracker {
    written: Vec<PathBuf>,
}

impl OutputTracker {
    fn new() -> Self {
        Self { written: Vec::new() }
    }

    fn write(&mut self, path: PathBuf, contents: &str) -> Result<(), CliError> {
        fs::write(&path, contents)?;
        self.written.push(path);
        Ok(())
    }

    fn remove_all(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn with_cleanup<F>(tracker: &mut OutputTracker, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut OutputTracker) -> Result<(), CliError>,
{
    match f(tracker) {
        Ok(()) => Ok(()),
        Err(e) => {
            tracker.remove_all();
            Err(e)
        }
    }
}

/// `train` command: full pipeline plus all output artifacts.
pub fn cmd_train(config: &RunConfig) -> Result<TrainedRun, CliError> {
    let text = fs::read_to_string(&config.input_path)?;
    let records = parse_change_log(&text)?;
    let run = train_pipeline(&records, config)?;

    fs::create_dir_all(&config.out_dir)?;
    let out = |name: &str| config.out_dir.join(name);
    let mut tracker = OutputTracker::new();
    with_cleanup(&mut tracker, |t| {
        t.write(out("manifest.txt"), &config.to_manifest())?;
        t.write(
            out("model.txt"),
            &write_model(&run.result.best_model, &run.norm),
        )?;
        t.write(out("traces.csv"), &traces_to_csv(&run.result.traces))?;
        t.write(
            out("performance.svg"),
            &performance_plot(&run.result.traces, run.result.best_epoch)?.to_svg(),
        )?;

        let splits: [(&str, Vec<usize>); 4] = [
            ("train", run.split.train_idx.clone()),
            ("val", run.split.val_idx.clone()),
            ("test", run.split.test_idx.clone()),
            ("all", run.all_indices()),
        ];
        for (label, idx) in &splits {
            let (targets, outputs) = run.prediction_series(idx);
            t.write(
                out(&format!("regression_{label}.svg")),
                &regression_plot(&targets, &outputs, label)?.to_svg(),
            )?;
        }

        let (targets, outputs) = run.prediction_series(&run.all_indices());
        let residuals: Vec<f64> = targets.iter().zip(&outputs).map(|(t, o)| t - o).collect();
        let hist = error_histogram(&residuals, config.bins)?;
        t.write(out("errhist.svg"), &histogram_plot(&hist)?.to_svg())?;
        Ok(())
    })?;
    Ok(run)
}

/// `regress` command: OLS of raw days on raw counts, summary.csv plus a
/// histogram of the OLS residuals.
pub fn cmd_regress(
    input_path: &Path,
    variant: InputVariant,
    out_dir: &Path,
    bins: usize,
) -> Result<(), CliError> {
    let text = fs::read_to_string(input_path)?;
    let records = parse_change_log(&text)?;
    let samples = build_samples(&records, variant)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.x).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.y).collect();
    let summary = ols_fit(&xs, &ys)?;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| y - (summary.intercept + summary.slope * x))
        .collect();
    let hist = error_histogram(&residuals, bins)?;

    fs::create_dir_all(out_dir)?;
    let mut tracker = OutputTracker::new();
    with_cleanup(&mut tracker, |t| {
        t.write(out_dir.join("summary.csv"), &export_summary(&summary))?;
        t.write(out_dir.join("errhist.svg"), &histogram_plot(&hist)?.to_svg())?;
        Ok(())
    })
}

/// `predict` command: denormalized model output for a raw input count.
pub fn cmd_predict(model_path: &Path, x: f64) -> Result<f64, CliError> {
    if !x.is_finite() {
        return Err(CliError::Mlp(MlpError::NonFiniteInput(x)));
    }
    let saved = read_model(&fs::read_to_string(model_path)?)?;
    let out = saved.model.forward(saved.norm.normalize_x(x))?;
    Ok(saved.norm.denormalize_y(out))
}

/// `synth` command: synthetic change log in the ingest CSV format.
pub fn cmd_synth(spec: &SynthSpec, out_path: Option<&Path>) -> Result<String, CliError> {
    let csv = records_to_csv(&generate(spec)?);
    if let Some(path) = out_path {
        fs::write(path, &csv)?;
    }
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::CSV_HEADER;
    use crate::mlp::MlpModel;
    use tempfile::tempdir;

    fn four_period_csv() -> String {
        format!(
            "{CSV_HEADER}\n2007-04,5,5,17,8\n2007-05,11,9,23,20\n2007-06,5,8,24,13\n2007-07,4,5,10,16\n"
        )
    }

    #[test]
    fn manifest_round_trips() {
        let config = RunConfig {
            variant: InputVariant::CorrectionsOnly,
            hidden: 4,
            split_seed: 11,
            init_seed: 12,
            ..RunConfig::new(PathBuf::from("data.csv"), PathBuf::from("out"))
        };
        let text = config.to_manifest();
        // Sorted keys, one per line.
        let keys: Vec<&str> = text.lines().map(|l| l.split('=').next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        assert_eq!(keys, sorted);
        assert_eq!(RunConfig::from_manifest(&text).unwrap(), config);
    }

    #[test]
    fn manifest_rejects_garbage() {
        assert!(matches!(
            RunConfig::from_manifest("not a manifest"),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            RunConfig::from_manifest("hidden=10\n"),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn regress_on_four_period_sample_matches_ols_oracle() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("data.csv");
        fs::write(&input, four_period_csv()).unwrap();
        let out = dir.path().join("out");
        cmd_regress(&input, InputVariant::Sum, &out, 10).unwrap();

        let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
        let mut lines = summary.lines();
        assert_eq!(lines.next(), Some("r,r2,adj_r2,se_estimate,n"));
        let vals: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert!((vals[0] - 0.9377).abs() < 1e-4);
        assert!((vals[1] - 0.8793).abs() < 1e-4);
        assert!((vals[2] - 0.8189).abs() < 1e-4);
        assert!((vals[3] - 3.716).abs() < 1e-3);
        assert_eq!(vals[4], 4.0);
        assert!(out.join("errhist.svg").exists());
    }

    #[test]
    fn regress_rejects_constant_predictor() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("data.csv");
        fs::write(&input, format!("{CSV_HEADER}\na,5,5,1,2\nb,5,5,3,4\nc,5,5,5,6\n")).unwrap();
        let err = cmd_regress(&input, InputVariant::Sum, &dir.path().join("o"), 10).unwrap_err();
        assert!(err.to_string().contains("constant predictor"));
    }

    #[test]
    fn predict_zero_model_returns_midrange() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let model = MlpModel::zeros(3);
        let norm = NormParams::new(0.0, 10.0, 0.0, 10.0).unwrap();
        fs::write(&path, write_model(&model, &norm)).unwrap();
        assert_eq!(cmd_predict(&path, 7.0).unwrap(), 5.0);
        assert_eq!(cmd_predict(&path, -100.0).unwrap(), 5.0);
    }

    #[test]
    fn train_errors_propagate_with_module_name_and_no_partial_output() {
        let dir = tempdir().unwrap();
        let input = dir.path().join("tiny.csv");
        fs::write(&input, format!("{CSV_HEADER}\na,1,1,2,2\nb,2,2,4,4\n")).unwrap();
        let out = dir.path().join("out");
        let config = RunConfig::new(input, out.clone());
        let err = cmd_train(&config).unwrap_err();
        assert!(err.to_string().starts_with("dataset:"), "got: {err}");
        // Pipeline failed before any artifact was written.
        assert!(!out.join("manifest.txt").exists());
    }

    #[test]
    fn synth_emits_parseable_csv() {
        let spec = SynthSpec { n: 10, ..SynthSpec::default() };
        let csv = cmd_synth(&spec, None).unwrap();
        let records = parse_change_log(&csv).unwrap();
        assert_eq!(records.len(), 10);
    }
}
