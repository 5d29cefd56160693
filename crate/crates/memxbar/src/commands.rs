//! Implementations behind the CLI subcommands.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use memxbar_core::crossbar::RepresentationScheme;
use memxbar_core::device::{Memristor, VoltageSignal};
use memxbar_core::network::{patch_model, train_tiny, tune_all, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bench::par_quantize;
use crate::config::{ExperimentConfig, NetworkSpec};
use crate::error::{HarnessError, Result};
use crate::formats;
use crate::metrics::compute_metrics;
use crate::sweep::{self, derive_seed, SweepResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    Sinusoid { amplitude: f64, frequency: f64, duration: f64 },
    Samples { values: Vec<f64>, dt: f64 },
}

impl From<&SignalSpec> for VoltageSignal {
    fn from(s: &SignalSpec) -> Self {
        match s {
            SignalSpec::Sinusoid { amplitude, frequency, duration } => {
                VoltageSignal::Sinusoid { amplitude: *amplitude, frequency: *frequency, duration: *duration }
            }
            SignalSpec::Samples { values, dt } => VoltageSignal::Samples { values: values.clone(), dt: *dt },
        }
    }
}

fn lid_device() -> Value {
    json!({ "preset": "linear_ion_drift", "initial": { "resistance": 1500.0 } })
}

fn lid_signal() -> SignalSpec {
    SignalSpec::Sinusoid { amplitude: 1.0, frequency: 0.5, duration: 4.0 }
}

/// Input of `device-sim`. Defaults to a 1 V, 0.5 Hz sinusoid on the linear
/// ion drift preset for two periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSimConfig {
    #[serde(default = "lid_device")]
    pub device: Value,
    #[serde(default = "lid_signal")]
    pub signal: SignalSpec,
}

impl Default for DeviceSimConfig {
    fn default() -> Self {
        DeviceSimConfig { device: lid_device(), signal: lid_signal() }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
}

fn create(out_dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(out_dir)?;
    Ok(BufWriter::new(File::create(out_dir.join(name))?))
}

/// Simulates one device and writes `trace.csv` (`t,v,i,w`). Stochastic
/// parameters are drawn with `seed`.
pub fn device_sim(config: Option<&Path>, seed: u64, out_dir: &Path) -> Result<PathBuf> {
    let cfg: DeviceSimConfig = match config {
        Some(p) => read_json(p)?,
        None => DeviceSimConfig::default(),
    };
    let template = formats::device_template_from_json(&cfg.device)?;
    let signal = VoltageSignal::from(&cfg.signal);
    signal.validate().map_err(|e| HarnessError::config(e.to_string()))?;
    let mut device: Memristor = template.instantiate(&mut ChaCha8Rng::seed_from_u64(seed))?;
    let trace = device.simulate(&signal)?;
    let path = out_dir.join("trace.csv");
    formats::write_trace_csv(&trace, create(out_dir, "trace.csv")?)?;
    Ok(path)
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Trains the configured MLP for repeat 0 on fold 0 and writes `weights.json` and
/// `history.csv` (epoch, loss, test accuracy).
pub fn train_demo(config: &Path, seed: Option<u64>, out_dir: &Path) -> Result<f64> {
    let cfg = load_config(config, seed)?;
    let NetworkSpec::Train(spec) = &cfg.network else {
        return Err(HarnessError::config("train-demo needs a `network.train` section"));
    };
    let (data, folds) = sweep::prepare_data(&cfg)?;
    let (train, test) = (data.subset(&folds[0].train), data.subset(&folds[0].test));
    let tseed = sweep::train_seed(cfg.seed, 0, 0);
    let mut widths = vec![data.n_features()];
    widths.extend(&spec.hidden);
    widths.push(data.n_classes().max(2));
    let mut net = Network::mlp(&widths, &mut ChaCha8Rng::seed_from_u64(tseed))?;
    let hist = train_tiny(&mut net, &train.x, &train.labels, &spec.train_config(tseed), Some((&test.x, &test.labels)))?;
    formats::write_weights(&net, create(out_dir, "weights.json")?)?;
    let mut w = csv::Writer::from_writer(create(out_dir, "history.csv")?);
    w.write_record(["epoch", "loss", "accuracy"])?;
    for (e, (l, a)) in hist.loss.iter().zip(&hist.accuracy).enumerate() {
        w.write_record(&[e.to_string(), l.to_string(), a.to_string()])?;
    }
    w.flush()?;
    Ok(hist.accuracy.last().copied().unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvertSummary {
    pub legacy_metric: f64,
    pub crossbar_metric: f64,
    pub layers: Vec<Value>,
}

/// Patches and tunes the configured network (fold 0, no sweep axes) and
/// exports every layer's crossbars as JSON and conductance CSV.
pub fn convert(config: &Path, seed: Option<u64>, out_dir: &Path) -> Result<ConvertSummary> {
    let cfg = load_config(config, seed)?;
    if !cfg.axes.is_empty() {
        return Err(HarnessError::config("convert takes a single configuration; remove `axes`"));
    }
    let (data, folds) = sweep::prepare_data(&cfg)?;
    let test = data.subset(&folds[0].test);
    let base = sweep::build_base(&cfg, &data.subset(&folds[0].train), 0, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[b"convert"]));
    let (mut net, report) = patch_model(&base, &cfg.patch_config()?, &mut rng)?;
    let fits = tune_all(&mut net, &cfg.tune_config()?, &mut rng)?;

    fs::create_dir_all(out_dir)?;
    let mut layers = Vec::new();
    for (k, m) in net.memristive_layers().enumerate() {
        serde_json::to_writer(create(out_dir, &format!("layer{k}.json"))?, &formats::scheme_to_json(m.scheme()))?;
        let parts: Vec<(&str, _)> = match m.scheme() {
            RepresentationScheme::DoubleColumn { pos, neg } => vec![("pos", pos), ("neg", neg)],
            RepresentationScheme::SingleColumn { xbar, .. } => vec![("xbar", xbar)],
        };
        for (name, x) in parts {
            formats::write_conductance_csv(x, create(out_dir, &format!("layer{k}_{name}.csv"))?)?;
        }
        let f = &fits[k];
        layers.push(json!({
            "layer": k,
            "rows": m.scheme().rows(),
            "cols": m.scheme().cols(),
            "slope": f.transform.slope,
            "intercept": f.transform.intercept,
            "r_squared": f.r_squared,
        }));
    }
    let score = |n: &Network| -> Result<f64> {
        compute_metrics(&n.forward(&test.x)?.argmax_rows(), &test.labels)?.get(cfg.metric)
    };
    let summary = ConvertSummary { legacy_metric: score(&base)?, crossbar_metric: score(&net)?, layers };
    let doc = json!({
        "legacy_metric": summary.legacy_metric,
        "crossbar_metric": summary.crossbar_metric,
        "clamped_targets": report.programming.clamped,
        "layers": summary.layers,
    });
    serde_json::to_writer_pretty(create(out_dir, "summary.json")?, &doc)?;
    Ok(summary)
}

/// Runs the sweep and writes `sweep.csv`.
pub fn sweep(config: &Path, seed: Option<u64>, out_dir: &Path, threads: usize) -> Result<SweepResult> {
    let cfg = load_config(config, seed)?;
    let result = sweep::run_sweep(&cfg, threads)?;
    result.write_csv(create(out_dir, "sweep.csv")?)?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchReport {
    pub n: usize,
    pub threads: usize,
    pub seconds: f64,
}

/// Times parallel quantization of `n` uniform values onto `n_states` levels.
pub fn quantize_bench(n: usize, n_states: usize, seed: u64, threads: usize) -> Result<BenchReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    pool.install(|| par_quantize(&mut values, n_states, 0.0, 1.0))?;
    Ok(BenchReport { n, threads: pool.current_num_threads(), seconds: start.elapsed().as_secs_f64() })
}
