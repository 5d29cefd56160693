//! Seeded grid sweeps over an [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use memxbar_core::network::{patch_model, train_tiny, tune_all, Network};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{set_path, ExperimentConfig, NetworkSpec};
use crate::dataset::Dataset;
use crate::error::{HarnessError, Result};
use crate::formats;
use crate::kfold::kfold_split;
use crate::metrics::{compute_metrics, Metric};

/// Hashes `(master seed, labelled parts)` to a 64-bit seed.
pub fn derive_seed(master: u64, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update(b"memxbar\0");
    h.update(master.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Sub-seed of one sweep point. Depends on the axis *values* rather than
/// their positions, so adding a value to an axis leaves every other point's
/// seed unchanged.
pub fn point_seed(master: u64, coords: &[(String, Value)], repeat: usize, fold: usize) -> u64 {
    let mut parts: Vec<Vec<u8>> = vec![b"point".to_vec()];
    for (path, v) in coords {
        parts.push(format!("{path}={v}").into_bytes());
    }
    parts.push(repeat.to_le_bytes().to_vec());
    parts.push(fold.to_le_bytes().to_vec());
    let refs: Vec<&[u8]> = parts.iter().map(Vec::as_slice).collect();
    derive_seed(master, &refs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    /// Axis values in axis order.
    pub coords: Vec<Value>,
    pub repeat: usize,
    pub fold: usize,
    pub metric: Metric,
    /// NaN when the point failed.
    pub value: f64,
    pub runtime_s: Option<f64>,
    pub seed: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis_names: Vec<String>,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.axis_names.clone();
        header.extend(["repeat", "fold", "metric", "value", "runtime_s", "seed", "error"].map(String::from));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = r.coords.iter().map(axis_cell).collect();
            row.push(r.repeat.to_string());
            row.push(r.fold.to_string());
            row.push(r.metric.name().into());
            row.push(if r.value.is_nan() { "NaN".into() } else { r.value.to_string() });
            row.push(r.runtime_s.map_or_else(String::new, |t| format!("{t:.6}")));
            row.push(r.seed.to_string());
            row.push(r.error.clone().unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn axis_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Every combination of axis values, first axis slowest.
pub fn grid(cfg: &ExperimentConfig) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for axis in &cfg.axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// The configuration at one grid point.
pub fn point_config(cfg: &ExperimentConfig, coords: &[Value]) -> Result<ExperimentConfig> {
    let mut v = cfg.to_value();
    for (axis, value) in cfg.axes.iter().zip(coords) {
        set_path(&mut v, &axis.path, value.clone())?;
    }
    if let Value::Object(m) = &mut v {
        m.insert("axes".into(), Value::Array(Vec::new()));
    }
    ExperimentConfig::from_value(v, cfg.base_dir.clone())
}

/// Seed of the network trained for `(repeat, fold)`.
pub fn train_seed(master: u64, repeat: usize, fold: usize) -> u64 {
    derive_seed(master, &[b"train", &repeat.to_le_bytes(), &fold.to_le_bytes()])
}

/// Trained (or loaded) network for one repeat and fold. Each repeat trains
/// its own network, so repeats average over training seeds as well as
/// device sampling.
pub fn build_base(cfg: &ExperimentConfig, train: &Dataset, repeat: usize, fold: usize) -> Result<Network> {
    match &cfg.network {
        NetworkSpec::Weights(p) => {
            let path = cfg.resolve(p);
            let f = std::fs::File::open(&path)
                .map_err(|e| HarnessError::input(format!("cannot open {}: {e}", path.display())))?;
            let net = formats::read_weights(f)?;
            if net.in_features() != Some(train.n_features()) {
                return Err(HarnessError::input(format!(
                    "network expects {:?} inputs but the dataset has {} features",
                    net.in_features(),
                    train.n_features()
                )));
            }
            Ok(net)
        }
        NetworkSpec::Train(spec) => {
            let seed = train_seed(cfg.seed, repeat, fold);
            let mut widths = vec![train.n_features()];
            widths.extend(&spec.hidden);
            widths.push(train.n_classes().max(2));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = Network::mlp(&widths, &mut rng)?;
            train_tiny(&mut net, &train.x, &train.labels, &spec.train_config(seed), None)?;
            Ok(net)
        }
    }
}

/// Patches, tunes and scores `base` on `test` with the given sub-seed.
pub fn evaluate_point(cfg: &ExperimentConfig, base: &Network, test: &Dataset, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut net, _) = patch_model(base, &cfg.patch_config()?, &mut rng)?;
    tune_all(&mut net, &cfg.tune_config()?, &mut rng)?;
    let pred = net.forward(&test.x)?.argmax_rows();
    compute_metrics(&pred, &test.labels)?.get(cfg.metric)
}

/// Metric of the unpatched network on `test`.
pub fn evaluate_legacy(cfg: &ExperimentConfig, base: &Network, test: &Dataset) -> Result<f64> {
    let pred = base.forward(&test.x)?.argmax_rows();
    compute_metrics(&pred, &test.labels)?.get(cfg.metric)
}

/// Dataset and folds for a configuration.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<(Dataset, Vec<crate::kfold::Fold>)> {
    let data = cfg.load_dataset(derive_seed(cfg.seed, &[b"dataset"]))?;
    let folds = kfold_split(data.len(), cfg.k_folds, derive_seed(cfg.seed, &[b"folds"]))?;
    Ok((data, folds))
}

struct Job {
    coords: Vec<Value>,
    repeat: usize,
    fold: usize,
    seed: u64,
    base_key: String,
}

/// Runs every `(point, repeat, fold)` of the grid on up to `threads` workers.
///
/// Failures are recorded per point and never abort the sweep. Output order
/// is grid order regardless of scheduling.
pub fn run_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep_inner(cfg))
}

fn run_sweep_inner(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let points: Vec<(Vec<Value>, Result<ExperimentConfig>)> =
        grid(cfg).into_iter().map(|c| { let p = point_config(cfg, &c); (c, p) }).collect();

    // Points that share dataset and network settings share trained bases.
    let key_of = |p: &ExperimentConfig| -> String {
        serde_json::to_string(&(&p.dataset, &p.network)).expect("serializable")
    };
    let mut base_cfgs: BTreeMap<String, ExperimentConfig> = BTreeMap::new();
    for (_, p) in &points {
        if let Ok(p) = p {
            base_cfgs.entry(key_of(p)).or_insert_with(|| p.clone());
        }
    }
    // Networks are indexed by `repeat * k_folds + fold`.
    type Bases = std::result::Result<(Vec<crate::kfold::Fold>, Dataset, Vec<std::result::Result<Network, String>>), String>;
    let bases: BTreeMap<String, Bases> = base_cfgs
        .into_par_iter()
        .map(|(key, p)| {
            let built = prepare_data(&p).map_err(|e| e.to_string()).map(|(data, folds)| {
                let k = folds.len();
                let nets = (0..cfg.repeats * k)
                    .into_par_iter()
                    .map(|i| {
                        let train = data.subset(&folds[i % k].train);
                        build_base(&p, &train, i / k, i % k).map_err(|e| e.to_string())
                    })
                    .collect();
                (folds, data, nets)
            });
            (key, built)
        })
        .collect();

    let names: Vec<String> = cfg.axes.iter().map(|a| a.path.clone()).collect();
    let mut jobs = Vec::new();
    for (coords, p) in &points {
        let labelled: Vec<(String, Value)> = names.iter().cloned().zip(coords.iter().cloned()).collect();
        for repeat in 0..cfg.repeats {
            for fold in 0..cfg.k_folds {
                jobs.push(Job {
                    coords: coords.clone(),
                    repeat,
                    fold,
                    seed: point_seed(cfg.seed, &labelled, repeat, fold),
                    base_key: p.as_ref().map(|p| key_of(p)).unwrap_or_default(),
                });
            }
        }
    }
    let point_cfgs: BTreeMap<String, &Result<ExperimentConfig>> =
        points.iter().map(|(c, p)| (serde_json::to_string(c).expect("serializable"), p)).collect();

    let records = jobs
        .par_iter()
        .map(|job| {
            let start = Instant::now();
            let outcome = (|| -> std::result::Result<f64, String> {
                let p = point_cfgs[&serde_json::to_string(&job.coords).expect("serializable")]
                    .as_ref()
                    .map_err(|e| e.to_string())?;
                let (folds, data, nets) = bases[&job.base_key].as_ref().map_err(Clone::clone)?;
                let base = nets[job.repeat * folds.len() + job.fold].as_ref().map_err(Clone::clone)?;
                let test = data.subset(&folds[job.fold].test);
                evaluate_point(p, base, &test, job.seed).map_err(|e| e.to_string())
            })();
            let runtime = start.elapsed().as_secs_f64();
            let (value, error) = match outcome {
                Ok(v) if v.is_finite() => (v, None),
                Ok(v) => (f64::NAN, Some(format!("non-finite metric {v}"))),
                Err(e) => (f64::NAN, Some(e)),
            };
            SweepRecord {
                coords: job.coords.clone(),
                repeat: job.repeat,
                fold: job.fold,
                metric: cfg.metric,
                value,
                runtime_s: cfg.record_runtime.then_some(runtime),
                seed: job.seed,
                error,
            }
        })
        .collect();
    Ok(SweepResult { axis_names: names, records })
}
