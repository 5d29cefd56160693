use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::conv::{direct_output_shape, unroll_conv2d, ConvGeometry};
use crate::linalg::Matrix;
use crate::math::sqrt;
use crate::{Error, Result};

/// Fully connected layer, `y = x·Wᵀ + b` with `W` of shape `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::Shape(format!(
                "bias of length {} for {} outputs",
                bias.len(),
                weights.rows()
            )));
        }
        if weights.as_slice().iter().chain(&bias).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("dense parameter"));
        }
        Ok(Dense { weights, bias })
    }

    /// Uniform initialization on `±1/√in`.
    pub fn random<R: Rng + ?Sized>(in_features: usize, out_features: usize, rng: &mut R) -> Self {
        let bound = 1.0 / sqrt(in_features as f64);
        let mut draw = || rng.random_range(-bound..=bound);
        let weights = Matrix::from_fn(out_features, in_features, |_, _| draw());
        let bias = (0..out_features).map(|_| draw()).collect();
        Dense { weights, bias }
    }

    pub fn in_features(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_features(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = x.matmul_transposed(&self.weights)?;
        y.add_row_vector(&self.bias)?;
        Ok(y)
    }

    /// Weights in crossbar orientation (`in × out`).
    pub fn crossbar_weights(&self) -> Matrix {
        self.weights.transpose()
    }
}

/// 2-D convolution over NCHW inputs flattened to `C·H·W` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    /// `out_ch × in_ch × kh × kw`, row-major.
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
    pub geometry: ConvGeometry,
    pub out_channels: usize,
}

impl Conv2d {
    pub fn new(kernels: Vec<f64>, bias: Vec<f64>, out_channels: usize, geometry: ConvGeometry) -> Result<Self> {
        geometry.validate()?;
        let per = geometry.in_channels * geometry.kernel.0 * geometry.kernel.1;
        if kernels.len() != out_channels * per || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "conv expects {} kernel values and {out_channels} biases, got {} and {}",
                out_channels * per,
                kernels.len(),
                bias.len()
            )));
        }
        if kernels.iter().chain(&bias).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("conv parameter"));
        }
        Ok(Conv2d { kernels, bias, geometry, out_channels })
    }

    pub fn in_features(&self) -> usize {
        let g = &self.geometry;
        g.in_channels * g.input.0 * g.input.1
    }

    pub fn out_features(&self) -> usize {
        let (oh, ow) = self.geometry.output_hw();
        self.out_channels * oh * ow
    }

    /// Flattened kernels as a `(in_ch·kh·kw) × out_ch` matrix.
    pub fn crossbar_weights(&self) -> Matrix {
        let per = self.kernels.len() / self.out_channels;
        Matrix::from_fn(per, self.out_channels, |r, o| self.kernels[o * per + r])
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let patches = unroll_conv2d(x, &self.geometry)?;
        let y = patches.matmul(&self.crossbar_weights())?;
        self.fold_output(&y, x.rows())
    }

    /// Turns `(batch·P) × out_ch` patch outputs into `batch × out_ch·P`
    /// (NCHW) rows and adds the per-channel bias.
    pub fn fold_output(&self, y: &Matrix, batch: usize) -> Result<Matrix> {
        let p = direct_output_shape(&self.geometry);
        if y.rows() != batch * p || y.cols() != self.out_channels {
            return Err(Error::Shape("patch output does not match the conv geometry".into()));
        }
        Ok(Matrix::from_fn(batch, self.out_channels * p, |b, col| {
            let (o, k) = (col / p, col % p);
            y.get(b * p + k, o) + self.bias[o]
        }))
    }
}

/// Batch normalization over features (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm1d {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    pub momentum: f64,
}

impl BatchNorm1d {
    pub fn new(features: usize) -> Self {
        BatchNorm1d {
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            eps: 1e-5,
            momentum: 0.1,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.gamma.len();
        if self.beta.len() != n || self.running_mean.len() != n || self.running_var.len() != n {
            return Err(Error::Shape("batch-norm vectors differ in length".into()));
        }
        if self.running_var.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Config("batch-norm running variance must be non-negative".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("batch-norm eps must be positive".into()));
        }
        Ok(())
    }

    /// Inference-mode normalization with the running statistics.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.features() {
            return Err(Error::Shape(format!(
                "batch-norm over {} features got {} columns",
                self.features(),
                x.cols()
            )));
        }
        let scale: Vec<f64> = self
            .running_var
            .iter()
            .zip(&self.gamma)
            .map(|(v, g)| g / sqrt(v + self.eps))
            .collect();
        Ok(Matrix::from_fn(x.rows(), x.cols(), |r, c| {
            (x.get(r, c) - self.running_mean[c]) * scale[c] + self.beta[c]
        }))
    }
}

pub fn relu(x: &Matrix) -> Matrix {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}
