use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::conv::unroll_conv2d;
use super::layers::{Conv2d, Dense};
use crate::crossbar::{vmm_raw, RepresentationScheme, TuningTransform};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// How layer inputs are turned into word-line voltages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputScaling {
    /// Inputs are applied as voltages unchanged.
    #[default]
    None,
    /// Each batch is mapped affinely onto `[0, 1]` V using its global min and
    /// max; the offset is undone with one extra read of an all-ones row.
    PerBatchMinMax,
}

/// The layer a memristive layer replaced, kept for the legacy path.
#[derive(Debug, Clone, PartialEq)]
pub enum Legacy {
    Dense(Dense),
    Conv2d(Conv2d),
}

impl Legacy {
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Legacy::Dense(d) => d.forward(x),
            Legacy::Conv2d(c) => c.forward(x),
        }
    }

    pub fn crossbar_weights(&self) -> Matrix {
        match self {
            Legacy::Dense(d) => d.crossbar_weights(),
            Legacy::Conv2d(c) => c.crossbar_weights(),
        }
    }

    pub fn in_features(&self) -> usize {
        match self {
            Legacy::Dense(d) => d.in_features(),
            Legacy::Conv2d(c) => c.in_features(),
        }
    }

    pub fn out_features(&self) -> usize {
        match self {
            Legacy::Dense(d) => d.out_features(),
            Legacy::Conv2d(c) => c.out_features(),
        }
    }
}

/// A dense or convolutional layer whose matrix product runs on crossbars.
///
/// Biases stay digital and are added after the tuning transform.
#[derive(Debug, Clone, PartialEq)]
pub struct MemristiveLayer {
    scheme: RepresentationScheme,
    transforms: Vec<TuningTransform>,
    legacy: Legacy,
    legacy_weights: Matrix,
    pub scaling: InputScaling,
}

impl MemristiveLayer {
    pub fn new(scheme: RepresentationScheme, legacy: Legacy, scaling: InputScaling) -> Result<Self> {
        let legacy_weights = legacy.crossbar_weights();
        if (scheme.rows(), scheme.cols()) != legacy_weights.shape() {
            return Err(Error::Shape(format!(
                "{}x{} crossbars for {}x{} weights",
                scheme.rows(),
                scheme.cols(),
                legacy_weights.rows(),
                legacy_weights.cols()
            )));
        }
        Ok(MemristiveLayer {
            scheme,
            transforms: vec![TuningTransform::IDENTITY],
            legacy,
            legacy_weights,
            scaling,
        })
    }

    pub fn scheme(&self) -> &RepresentationScheme {
        &self.scheme
    }

    pub fn scheme_mut(&mut self) -> &mut RepresentationScheme {
        &mut self.scheme
    }

    pub fn legacy(&self) -> &Legacy {
        &self.legacy
    }

    pub fn transforms(&self) -> &[TuningTransform] {
        &self.transforms
    }

    /// One transform for the whole layer, or one per output column.
    pub fn set_transforms(&mut self, transforms: Vec<TuningTransform>) -> Result<()> {
        if transforms.len() != 1 && transforms.len() != self.scheme.cols() {
            return Err(Error::Shape(format!(
                "{} transforms for {} columns",
                transforms.len(),
                self.scheme.cols()
            )));
        }
        self.transforms = transforms;
        Ok(())
    }

    pub fn crossbar_rows(&self) -> usize {
        self.scheme.rows()
    }

    /// Untransformed crossbar output for crossbar-level inputs
    /// (for convolutions, unrolled patches), with input scaling undone.
    pub fn crossbar_raw(&self, x: &Matrix) -> Result<Matrix> {
        match self.scaling {
            InputScaling::None => vmm_raw(&self.scheme, x),
            InputScaling::PerBatchMinMax => {
                let Some((lo, hi)) = x.min_max() else {
                    return vmm_raw(&self.scheme, x);
                };
                let range = if hi > lo { hi - lo } else { 1.0 };
                let scaled = x.map(|v| (v - lo) / range);
                let mut raw = vmm_raw(&self.scheme, &scaled)?;
                if lo != 0.0 {
                    let ones = self.scheme.raw_row(&vec![1.0; x.cols()])?;
                    for r in 0..raw.rows() {
                        for (o, base) in raw.row_mut(r).iter_mut().zip(&ones) {
                            *o = range * *o + lo * base;
                        }
                    }
                } else {
                    raw.as_mut_slice().iter_mut().for_each(|o| *o *= range);
                }
                Ok(raw)
            }
        }
    }

    /// Exact product of crossbar-level inputs with the retained weights.
    pub fn legacy_matmul(&self, x: &Matrix) -> Result<Matrix> {
        x.matmul(&self.legacy_weights)
    }

    fn transform(&self, mut raw: Matrix) -> Matrix {
        let cols = raw.cols();
        if let [t] = self.transforms[..] {
            raw.as_mut_slice().iter_mut().for_each(|v| *v = t.apply(*v));
        } else {
            for r in 0..raw.rows() {
                for (j, v) in raw.row_mut(r).iter_mut().enumerate() {
                    *v = self.transforms[j % cols].apply(*v);
                }
            }
        }
        raw
    }

    /// Crossbar forward pass.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        match &self.legacy {
            Legacy::Dense(d) => {
                let mut y = self.transform(self.crossbar_raw(x)?);
                y.add_row_vector(&d.bias)?;
                Ok(y)
            }
            Legacy::Conv2d(c) => {
                let patches = unroll_conv2d(x, &c.geometry)?;
                let y = self.transform(self.crossbar_raw(&patches)?);
                c.fold_output(&y, x.rows())
            }
        }
    }

    /// Crossbar-level inputs this layer sees for network-level `x`.
    pub fn crossbar_inputs(&self, x: &Matrix) -> Result<Matrix> {
        match &self.legacy {
            Legacy::Dense(_) => Ok(x.clone()),
            Legacy::Conv2d(c) => unroll_conv2d(x, &c.geometry),
        }
    }

    /// Forward pass through the retained digital weights.
    pub fn forward_legacy(&self, x: &Matrix) -> Result<Matrix> {
        self.legacy.forward(x)
    }
}
