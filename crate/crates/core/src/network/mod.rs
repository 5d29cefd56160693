//! Small feed-forward networks, crossbar patching and tuning.

pub mod conv;
pub mod layers;
pub mod memristive;
pub mod train;

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

pub use conv::{unroll_conv2d, unroll_layer, ConvGeometry};
pub use layers::{relu, BatchNorm1d, Conv2d, Dense};
pub use memristive::{InputScaling, Legacy, MemristiveLayer};
pub use train::{
    accuracy, cross_entropy, loss_and_gradients, train_tiny, LayerGrad, TrainConfig, TrainHistory,
};

use crate::crossbar::{Arrangement, ProgramReport, PulseConfig};
use crate::device::DeviceTemplate;
use crate::linalg::Matrix;
use crate::mapping::{self, LinearFit, MappingConfig, TuningConfig};
use crate::nonideality::{self, Applied, FaultReport, NonIdeality};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    BatchNorm1d(BatchNorm1d),
    Relu,
    Memristive(MemristiveLayer),
}

impl Layer {
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::Dense(d) => d.forward(x),
            Layer::Conv2d(c) => c.forward(x),
            Layer::BatchNorm1d(bn) => bn.forward(x),
            Layer::Relu => Ok(relu(x)),
            Layer::Memristive(m) => m.forward(x),
        }
    }

    pub fn forward_legacy(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Layer::Memristive(m) => m.forward_legacy(x),
            other => other.forward(x),
        }
    }

    fn in_features(&self) -> Option<usize> {
        match self {
            Layer::Dense(d) => Some(d.in_features()),
            Layer::Conv2d(c) => Some(c.in_features()),
            Layer::BatchNorm1d(bn) => Some(bn.features()),
            Layer::Relu => None,
            Layer::Memristive(m) => Some(m.legacy().in_features()),
        }
    }

    fn out_features(&self) -> Option<usize> {
        match self {
            Layer::Dense(d) => Some(d.out_features()),
            Layer::Conv2d(c) => Some(c.out_features()),
            Layer::BatchNorm1d(bn) => Some(bn.features()),
            Layer::Relu => None,
            Layer::Memristive(m) => Some(m.legacy().out_features()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let net = Network { layers };
        net.validate()?;
        Ok(net)
    }

    /// Dense layers of the given widths with ReLU between them.
    pub fn mlp<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config("an MLP needs at least input and output widths".into()));
        }
        let mut layers = Vec::new();
        for (k, pair) in widths.windows(2).enumerate() {
            if k > 0 {
                layers.push(Layer::Relu);
            }
            layers.push(Layer::Dense(Dense::random(pair[0], pair[1], rng)));
        }
        Network::new(layers)
    }

    /// Checks that adjacent layer widths agree.
    pub fn validate(&self) -> Result<()> {
        let mut width: Option<usize> = None;
        for (k, layer) in self.layers.iter().enumerate() {
            if let Layer::BatchNorm1d(bn) = layer {
                bn.validate()?;
            }
            if let (Some(w), Some(i)) = (width, layer.in_features()) {
                if w != i {
                    return Err(Error::Shape(format!(
                        "layer {k} expects {i} inputs but receives {w}"
                    )));
                }
            }
            if let Some(o) = layer.out_features() {
                width = Some(o);
            }
        }
        Ok(())
    }

    pub fn in_features(&self) -> Option<usize> {
        self.layers.iter().find_map(Layer::in_features)
    }

    pub fn is_patched(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, Layer::Memristive(_)))
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut a = x.clone();
        for layer in &self.layers {
            a = layer.forward(&a)?;
        }
        Ok(a)
    }

    /// Forward pass with every memristive layer replaced by its retained weights.
    pub fn forward_legacy(&self, x: &Matrix) -> Result<Matrix> {
        let mut a = x.clone();
        for layer in &self.layers {
            a = layer.forward_legacy(&a)?;
        }
        Ok(a)
    }

    pub fn memristive_layers(&self) -> impl Iterator<Item = &MemristiveLayer> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Memristive(m) => Some(m),
            _ => None,
        })
    }

    /// Trainable parameters in layer order: dense weights then biases,
    /// batch-norm gamma then beta.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Dense(d) => {
                    out.extend_from_slice(d.weights.as_slice());
                    out.extend_from_slice(&d.bias);
                }
                Layer::BatchNorm1d(bn) => {
                    out.extend_from_slice(&bn.gamma);
                    out.extend_from_slice(&bn.beta);
                }
                _ => {}
            }
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameters().len() {
            return Err(Error::Shape(format!(
                "{} parameters given, network has {}",
                params.len(),
                self.parameters().len()
            )));
        }
        let mut it = params.iter().copied();
        let mut fill = |dst: &mut [f64]| dst.iter_mut().for_each(|p| *p = it.next().expect("length checked"));
        for layer in &mut self.layers {
            match layer {
                Layer::Dense(d) => {
                    fill(d.weights.as_mut_slice());
                    fill(&mut d.bias);
                }
                Layer::BatchNorm1d(bn) => {
                    fill(&mut bn.gamma);
                    fill(&mut bn.beta);
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Flattens gradients in the order of [`Network::parameters`].
pub fn flatten_gradients(grads: &[LayerGrad]) -> Vec<f64> {
    let mut out = Vec::new();
    for g in grads {
        match g {
            LayerGrad::None => {}
            LayerGrad::Dense { weights, bias } => {
                out.extend_from_slice(weights.as_slice());
                out.extend_from_slice(bias);
            }
            LayerGrad::BatchNorm { gamma, beta } => {
                out.extend_from_slice(gamma);
                out.extend_from_slice(beta);
            }
        }
    }
    out
}

/// Everything needed to turn dense/conv layers into memristive ones.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchConfig {
    pub template: DeviceTemplate,
    pub mapping: MappingConfig,
    pub arrangement: Arrangement,
    /// Used when the arrangement forces pulsed programming.
    pub pulse: PulseConfig,
    /// Applied to every crossbar in declaration order.
    pub nonidealities: Vec<NonIdeality>,
    pub scaling: InputScaling,
}

impl PatchConfig {
    /// Mapping endpoints taken from the template's nominal resistances.
    pub fn new(template: DeviceTemplate) -> Self {
        let mapping = MappingConfig::new(template.base.r_on(), template.base.r_off());
        PatchConfig {
            template,
            mapping,
            arrangement: Arrangement::OneT1R,
            pulse: PulseConfig::default(),
            nonidealities: Vec::new(),
            scaling: InputScaling::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatchReport {
    pub programming: ProgramReport,
    pub faults: Vec<FaultReport>,
}

/// Replaces every dense and conv layer of `net` with a memristive layer.
///
/// Weights are mapped and programmed, then the non-ideality stack is applied.
/// The returned network is untuned.
pub fn patch_model<R: Rng + ?Sized>(
    net: &Network,
    cfg: &PatchConfig,
    rng: &mut R,
) -> Result<(Network, PatchReport)> {
    if net.is_patched() {
        return Err(Error::State("network is already patched"));
    }
    net.validate()?;
    let mut template = cfg.template.clone();
    for entry in &cfg.nonidealities {
        entry.validate()?;
        if let NonIdeality::DeviceVariability { sigma } = entry {
            template = template.with_resistance_spread(*sigma)?;
        }
    }
    let mut report = PatchReport::default();
    let mut layers = Vec::with_capacity(net.layers.len());
    for layer in &net.layers {
        let legacy = match layer {
            Layer::Dense(d) => Legacy::Dense(d.clone()),
            Layer::Conv2d(c) => Legacy::Conv2d(c.clone()),
            other => {
                layers.push(other.clone());
                continue;
            }
        };
        let mapped = mapping::naive_map(&legacy.crossbar_weights(), &cfg.mapping)?;
        let (mut scheme, programming) =
            mapping::program_scheme(&mapped, &template, cfg.arrangement, &cfg.pulse, rng)?;
        report.programming.merge(programming);
        for xbar in scheme.crossbars_mut() {
            for entry in &cfg.nonidealities {
                if let Applied::Faults(f) = nonideality::apply(xbar, entry, rng)? {
                    report.faults.push(f);
                }
            }
        }
        layers.push(Layer::Memristive(MemristiveLayer::new(scheme, legacy, cfg.scaling)?));
    }
    Ok((Network { layers }, report))
}

/// Where tuning inputs for each memristive layer come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TuningFeed {
    /// Each layer gets its own uniform `[0, 1]` block.
    Random,
    /// A uniform `[0, 1]` network input is propagated through the legacy
    /// path of the preceding layers.
    #[default]
    LegacyPath,
    /// As `LegacyPath`, but propagated through the already tuned crossbars.
    CrossbarPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TuneAllConfig {
    pub tuning: TuningConfig,
    pub feed: TuningFeed,
}

/// Tunes every memristive layer in order. Returns one fit per layer.
pub fn tune_all<R: Rng + ?Sized>(net: &mut Network, cfg: &TuneAllConfig, rng: &mut R) -> Result<Vec<LinearFit>> {
    if !net.is_patched() {
        return Err(Error::State("network has no memristive layers to tune"));
    }
    if cfg.tuning.sample_rows < 2 {
        return Err(Error::Config("tuning needs at least 2 sample rows".into()));
    }
    let mut fits = Vec::new();
    if cfg.feed == TuningFeed::Random {
        for layer in &mut net.layers {
            if let Layer::Memristive(m) = layer {
                fits.push(mapping::tune_layer(m, &cfg.tuning, rng)?);
            }
        }
        return Ok(fits);
    }
    let width = net.in_features().ok_or(Error::State("network input width is unknown"))?;
    let mut a = Matrix::from_fn(cfg.tuning.sample_rows, width, |_, _| rng.random::<f64>());
    for layer in &mut net.layers {
        if let Layer::Memristive(m) = layer {
            let x = m.crossbar_inputs(&a)?;
            fits.push(mapping::tune_layer_on(m, &x, &cfg.tuning)?);
        }
        a = match cfg.feed {
            TuningFeed::CrossbarPath => layer.forward(&a)?,
            _ => layer.forward_legacy(&a)?,
        };
    }
    Ok(fits)
}
