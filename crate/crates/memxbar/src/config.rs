//! Experiment configuration (JSON, unknown keys rejected).

use std::path::{Path, PathBuf};

use memxbar_core::crossbar::PulseConfig;
use memxbar_core::device::{DeviceTemplate, VoltageSignal};
use memxbar_core::mapping::{MappingConfig, MappingDomain, SchemeKind, TuningConfig};
use memxbar_core::network::{InputScaling, PatchConfig, TrainConfig, TuneAllConfig, TuningFeed};
use memxbar_core::nonideality::{FaultSpec, NonIdeality, NonLinearMethod};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::{self, Dataset};
use crate::error::{HarnessError, Result};
use crate::formats;
use crate::metrics::Metric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingSpec {
    #[serde(default)]
    pub p_l: f64,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub domain: DomainSpec,
}

impl Default for MappingSpec {
    fn default() -> Self {
        MappingSpec { p_l: 0.0, scheme: SchemeSpec::DoubleColumn, domain: DomainSpec::Conductance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeSpec {
    #[default]
    DoubleColumn,
    SingleColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    #[default]
    Conductance,
    Resistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingSpec {
    #[default]
    None,
    PerBatchMinMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedSpec {
    Random,
    #[default]
    LegacyPath,
    CrossbarPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    #[serde(default = "default_sample_rows")]
    pub sample_rows: usize,
    #[serde(default)]
    pub per_column: bool,
    #[serde(default)]
    pub feed: FeedSpec,
}

fn default_sample_rows() -> usize {
    TuningConfig::default().sample_rows
}

impl Default for TuningSpec {
    fn default() -> Self {
        TuningSpec { sample_rows: default_sample_rows(), per_column: false, feed: FeedSpec::LegacyPath }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    pub tolerance: f64,
    pub max_pulses: usize,
    pub amplitude: f64,
    pub duration: f64,
}

impl Default for PulseSpec {
    fn default() -> Self {
        let p = PulseConfig::default();
        PulseSpec { tolerance: p.tolerance, max_pulses: p.max_pulses, amplitude: p.amplitude, duration: p.duration }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonLinearKind {
    SingleTimestep,
    Lut,
}

/// One entry of the non-ideality stack, applied in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonIdealitySpec {
    FiniteStates {
        n: usize,
    },
    DeviceFaults {
        #[serde(default)]
        stuck_on: f64,
        #[serde(default)]
        stuck_off: f64,
    },
    DeviceVariability {
        sigma: f64,
    },
    CycleVariability {
        sigma: f64,
    },
    /// `single_timestep` needs `dt`; `lut` needs a reset sweep given as a
    /// sinusoid (`amplitude`, `frequency`, `duration`).
    NonLinear {
        method: NonLinearKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frequency: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration: Option<f64>,
    },
}

impl NonIdealitySpec {
    pub fn to_core(&self) -> Result<NonIdeality> {
        let entry = match *self {
            NonIdealitySpec::FiniteStates { n } => NonIdeality::FiniteStates { n },
            NonIdealitySpec::DeviceFaults { stuck_on, stuck_off } => {
                NonIdeality::DeviceFaults(FaultSpec { stuck_on, stuck_off })
            }
            NonIdealitySpec::DeviceVariability { sigma } => NonIdeality::DeviceVariability { sigma },
            NonIdealitySpec::CycleVariability { sigma } => NonIdeality::CycleVariability { sigma },
            NonIdealitySpec::NonLinear { method: NonLinearKind::SingleTimestep, dt, amplitude, frequency, duration } => {
                if amplitude.is_some() || frequency.is_some() || duration.is_some() {
                    return Err(HarnessError::config("single_timestep takes only `dt`"));
                }
                let dt = dt.ok_or_else(|| HarnessError::config("single_timestep needs `dt`"))?;
                NonIdeality::NonLinear(NonLinearMethod::SingleTimestep { dt })
            }
            NonIdealitySpec::NonLinear { method: NonLinearKind::Lut, dt, amplitude, frequency, duration } => {
                if dt.is_some() {
                    return Err(HarnessError::config("lut sweeps are sampled at the device dt; remove `dt`"));
                }
                let need = |v: Option<f64>, k: &str| v.ok_or_else(|| HarnessError::config(format!("lut needs `{k}`")));
                let sweep = VoltageSignal::Sinusoid {
                    amplitude: need(amplitude, "amplitude")?,
                    frequency: need(frequency, "frequency")?,
                    duration: need(duration, "duration")?,
                };
                NonIdeality::NonLinear(NonLinearMethod::Lut { sweep })
            }
        };
        entry.validate()?;
        Ok(entry)
    }
}

/// One sweep dimension: a dotted path into this config and the values it takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    /// Hidden layer widths; input and output widths come from the dataset.
    pub hidden: Vec<usize>,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_decay")]
    pub decay_factor: f64,
    #[serde(default = "d_decay_every")]
    pub decay_every: usize,
}

fn d_lr() -> f64 {
    TrainConfig::default().learning_rate
}
fn d_batch() -> usize {
    TrainConfig::default().batch_size
}
fn d_epochs() -> usize {
    TrainConfig::default().epochs
}
fn d_decay() -> f64 {
    TrainConfig::default().decay_factor
}
fn d_decay_every() -> usize {
    TrainConfig::default().decay_every
}

impl TrainSpec {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            decay_factor: self.decay_factor,
            decay_every: self.decay_every,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSpec {
    /// Path to a weights JSON file, relative to the config file.
    Weights(PathBuf),
    Train(TrainSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub class_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Synthetic(SyntheticSpec),
    /// Path to a dataset CSV, relative to the config file.
    Csv(PathBuf),
}

fn default_device() -> Value {
    Value::String("team".into())
}

fn one() -> usize {
    1
}

fn default_arrangement() -> String {
    "1t1r".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Preset name or device object (see [`formats::device_template_from_json`]).
    #[serde(default = "default_device")]
    pub device: Value,
    #[serde(default = "default_arrangement")]
    pub arrangement: String,
    #[serde(default)]
    pub mapping: MappingSpec,
    #[serde(default)]
    pub pulse: PulseSpec,
    #[serde(default)]
    pub scaling: ScalingSpec,
    #[serde(default)]
    pub tuning: TuningSpec,
    #[serde(default)]
    pub nonidealities: Vec<NonIdealitySpec>,
    #[serde(default)]
    pub axes: Vec<Axis>,
    pub network: NetworkSpec,
    pub dataset: DatasetSpec,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default)]
    pub metric: Metric,
    #[serde(default = "one")]
    pub k_folds: usize,
    /// Fill the `runtime_s` column. Off by default so that reruns are byte-identical.
    #[serde(default)]
    pub record_runtime: bool,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Top-level keys an axis may not vary.
const FIXED_KEYS: [&str; 6] = ["axes", "repeats", "k_folds", "seed", "record_runtime", "metric"];

impl ExperimentConfig {
    pub fn from_value(v: Value, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_value(v).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_str(s: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| HarnessError::config(e.to_string()))?;
        Self::from_value(v, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Checks everything that does not need a dataset or weights on disk.
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(HarnessError::config("repeats must be at least 1"));
        }
        if self.k_folds == 0 {
            return Err(HarnessError::config("k_folds must be at least 1"));
        }
        let base = self.to_value();
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(HarnessError::config(format!("axis `{}` has no values", axis.path)));
            }
            let root = axis.path.split('.').next().unwrap_or("");
            if FIXED_KEYS.contains(&root) {
                return Err(HarnessError::config(format!("`{root}` cannot be swept")));
            }
            if lookup(&base, &axis.path).is_none() {
                return Err(HarnessError::config(format!("axis path `{}` does not exist in the config", axis.path)));
            }
        }
        let mut paths: Vec<&str> = self.axes.iter().map(|a| a.path.as_str()).collect();
        paths.sort_unstable();
        if paths.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::config("duplicate axis path"));
        }
        self.patch_config()?;
        self.tune_config()?;
        if let NetworkSpec::Train(t) = &self.network {
            t.train_config(0).validate()?;
        }
        if let DatasetSpec::Synthetic(s) = &self.dataset {
            if s.n_samples < 2 || s.n_features == 0 {
                return Err(HarnessError::config("synthetic dataset needs n_samples >= 2 and n_features >= 1"));
            }
        }
        Ok(())
    }

    pub fn device_template(&self) -> Result<DeviceTemplate> {
        formats::device_template_from_json(&self.device)
    }

    pub fn patch_config(&self) -> Result<PatchConfig> {
        let template = self.device_template()?;
        let mut cfg = PatchConfig::new(template);
        cfg.mapping = MappingConfig {
            p_l: self.mapping.p_l,
            scheme: match self.mapping.scheme {
                SchemeSpec::DoubleColumn => SchemeKind::DoubleColumn,
                SchemeSpec::SingleColumn => SchemeKind::SingleColumn,
            },
            domain: match self.mapping.domain {
                DomainSpec::Conductance => MappingDomain::Conductance,
                DomainSpec::Resistance => MappingDomain::Resistance,
            },
            ..cfg.mapping
        };
        cfg.mapping.validate()?;
        cfg.arrangement = formats::parse_arrangement(&self.arrangement)?;
        let p = self.pulse;
        cfg.pulse = PulseConfig { tolerance: p.tolerance, max_pulses: p.max_pulses, amplitude: p.amplitude, duration: p.duration };
        cfg.nonidealities = self.nonidealities.iter().map(NonIdealitySpec::to_core).collect::<Result<_>>()?;
        cfg.scaling = match self.scaling {
            ScalingSpec::None => InputScaling::None,
            ScalingSpec::PerBatchMinMax => InputScaling::PerBatchMinMax,
        };
        Ok(cfg)
    }

    pub fn tune_config(&self) -> Result<TuneAllConfig> {
        if self.tuning.sample_rows < 2 {
            return Err(HarnessError::config("tuning.sample_rows must be at least 2"));
        }
        Ok(TuneAllConfig {
            tuning: TuningConfig { sample_rows: self.tuning.sample_rows, per_column: self.tuning.per_column },
            feed: match self.tuning.feed {
                FeedSpec::Random => TuningFeed::Random,
                FeedSpec::LegacyPath => TuningFeed::LegacyPath,
                FeedSpec::CrossbarPath => TuningFeed::CrossbarPath,
            },
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads or generates the dataset. `seed` only matters for synthetic data.
    pub fn load_dataset(&self, seed: u64) -> Result<Dataset> {
        match &self.dataset {
            DatasetSpec::Synthetic(s) => dataset::gen_synthetic(s.n_samples, s.n_features, s.class_separation, seed),
            DatasetSpec::Csv(p) => {
                let path = self.resolve(p);
                let f = std::fs::File::open(&path)
                    .map_err(|e| HarnessError::input(format!("cannot open {}: {e}", path.display())))?;
                dataset::read_csv(f)
            }
        }
    }
}

/// Follows a dotted path (`"nonidealities.0.n"`) through objects and arrays.
pub fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |cur, seg| match cur {
        Value::Object(m) => m.get(seg),
        Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get(i)),
        _ => None,
    })
}

/// Replaces the value at an existing dotted path.
pub fn set_path(v: &mut Value, path: &str, new: Value) -> Result<()> {
    let mut cur = v;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(m) => m.get_mut(seg),
            Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| HarnessError::config(format!("axis path `{path}` does not exist")))?;
    }
    *cur = new;
    Ok(())
}
