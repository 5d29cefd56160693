//! Convolution by unrolling input patches into matrix rows.

use alloc::format;

use super::layers::Conv2d;
use crate::linalg::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub in_channels: usize,
    /// Input height and width.
    pub input: (usize, usize),
    /// Kernel height and width.
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: usize,
}

impl ConvGeometry {
    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.input;
        let (kh, kw) = self.kernel;
        if self.in_channels == 0 || h == 0 || w == 0 || kh == 0 || kw == 0 {
            return Err(Error::Config("conv dimensions must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("conv stride must be at least 1".into()));
        }
        if kh > h + 2 * self.padding || kw > w + 2 * self.padding {
            return Err(Error::Config(format!(
                "{kh}x{kw} kernel does not fit a padded {}x{} input",
                h + 2 * self.padding,
                w + 2 * self.padding
            )));
        }
        Ok(())
    }

    pub fn output_hw(&self) -> (usize, usize) {
        let (h, w) = self.input;
        let (kh, kw) = self.kernel;
        let p2 = 2 * self.padding;
        ((h + p2 - kh) / self.stride + 1, (w + p2 - kw) / self.stride + 1)
    }

    /// Values per unrolled patch, `C·kh·kw`.
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel.0 * self.kernel.1
    }
}

/// Output positions per sample.
pub(crate) fn direct_output_shape(g: &ConvGeometry) -> usize {
    let (oh, ow) = g.output_hw();
    oh * ow
}

/// Extracts every receptive field of `x` (`batch × C·H·W`, NCHW) into a row.
///
/// Rows are ordered by sample, then output row, then output column; the
/// columns follow `(c, ki, kj)` so that they line up with flattened kernels.
/// Zero padding contributes zeros.
pub fn unroll_conv2d(x: &Matrix, g: &ConvGeometry) -> Result<Matrix> {
    g.validate()?;
    let (h, w) = g.input;
    if x.cols() != g.in_channels * h * w {
        return Err(Error::Shape(format!(
            "conv input has {} columns, expected {}x{h}x{w}",
            x.cols(),
            g.in_channels
        )));
    }
    let (kh, kw) = g.kernel;
    let (oh, ow) = g.output_hw();
    let p = oh * ow;
    let mut out = Matrix::zeros(x.rows() * p, g.patch_len());
    let pad = g.padding as isize;
    for b in 0..x.rows() {
        let sample = x.row(b);
        for oy in 0..oh {
            for ox in 0..ow {
                let row = out.row_mut(b * p + oy * ow + ox);
                for c in 0..g.in_channels {
                    for ki in 0..kh {
                        let y = (oy * g.stride + ki) as isize - pad;
                        if y < 0 || y >= h as isize {
                            continue;
                        }
                        for kj in 0..kw {
                            let xx = (ox * g.stride + kj) as isize - pad;
                            if xx < 0 || xx >= w as isize {
                                continue;
                            }
                            row[(c * kh + ki) * kw + kj] =
                                sample[(c * h + y as usize) * w + xx as usize];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Patch matrix and flattened kernel matrix of `layer` applied to `x`.
/// Their product is the convolution before bias, one row per output pixel.
pub fn unroll_layer(x: &Matrix, layer: &Conv2d) -> Result<(Matrix, Matrix)> {
    Ok((unroll_conv2d(x, &layer.geometry)?, layer.crossbar_weights()))
}
