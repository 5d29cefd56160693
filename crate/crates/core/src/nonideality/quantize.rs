use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Lower and upper end of the state grid, shared or per element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bounds<'a> {
    Scalar { min: f64, max: f64 },
    PerElement { min: &'a [f64], max: &'a [f64] },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationSpec<'a> {
    pub n_states: usize,
    pub bounds: Bounds<'a>,
}

impl<'a> QuantizationSpec<'a> {
    pub fn scalar(n_states: usize, min: f64, max: f64) -> Self {
        QuantizationSpec { n_states, bounds: Bounds::Scalar { min, max } }
    }

    pub fn per_element(n_states: usize, min: &'a [f64], max: &'a [f64]) -> Self {
        QuantizationSpec { n_states, bounds: Bounds::PerElement { min, max } }
    }

    /// Checks the spec against an array of `len` values.
    pub fn validate(&self, len: usize) -> Result<()> {
        if self.n_states < 2 {
            return Err(Error::Config(format!("n_states must be at least 2, got {}", self.n_states)));
        }
        match self.bounds {
            Bounds::Scalar { min, max } => check_range(min, max),
            Bounds::PerElement { min, max } => {
                if min.len() != len || max.len() != len {
                    return Err(Error::Shape(format!(
                        "per-element bounds of length {}/{} for {len} values",
                        min.len(),
                        max.len()
                    )));
                }
                min.iter().zip(max).try_for_each(|(&a, &b)| check_range(a, b))
            }
        }
    }

    #[inline]
    fn range(&self, idx: usize) -> (f64, f64) {
        match self.bounds {
            Bounds::Scalar { min, max } => (min, max),
            Bounds::PerElement { min, max } => (min[idx], max[idx]),
        }
    }
}

fn check_range(min: f64, max: f64) -> Result<()> {
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::NonFinite("quantization bound"));
    }
    if !(min < max) {
        return Err(Error::Config(format!("quantization needs min < max, got [{min}, {max}]")));
    }
    Ok(())
}

/// State `k` of the inclusive `n`-point grid on `[min, max]`.
#[inline]
pub fn state_value(min: f64, max: f64, n: usize, k: usize) -> f64 {
    if k + 1 >= n {
        max
    } else {
        (min + (max - min) * (k as f64 / (n - 1) as f64)).min(max)
    }
}

/// Index of the grid state nearest to `x`; exact midpoints go to the lower state.
#[inline]
pub fn nearest_state_index(x: f64, min: f64, max: f64, n: usize) -> usize {
    if !(x > min) {
        return 0;
    }
    if x >= max {
        return n - 1;
    }
    // Largest k with state(k) <= x.
    let (mut lo, mut hi) = (0usize, n - 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if state_value(min, max, n, mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let below = x - state_value(min, max, n, lo);
    let above = state_value(min, max, n, hi) - x;
    if below <= above {
        lo
    } else {
        hi
    }
}

#[inline]
pub fn nearest_state(x: f64, min: f64, max: f64, n: usize) -> f64 {
    state_value(min, max, n, nearest_state_index(x, min, max, n))
}

/// Replaces every value with its nearest grid state.
pub fn quantize(values: &[f64], spec: &QuantizationSpec<'_>) -> Result<Vec<f64>> {
    let mut out = values.to_vec();
    quantize_in_place(&mut out, spec)?;
    Ok(out)
}

pub fn quantize_in_place(values: &mut [f64], spec: &QuantizationSpec<'_>) -> Result<()> {
    spec.validate(values.len())?;
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("value to quantize"));
    }
    for (i, v) in values.iter_mut().enumerate() {
        let (min, max) = spec.range(i);
        *v = nearest_state(*v, min, max, spec.n_states);
    }
    Ok(())
}
