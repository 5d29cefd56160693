//! Chunked parallel quantization.

use memxbar_core::nonideality::{quantize_in_place, QuantizationSpec};
use rayon::prelude::*;

use crate::error::Result;

const CHUNK: usize = 1 << 14;

/// Quantizes `values` onto `n_states` levels in `[min, max]` using the
/// current rayon pool. Identical output to the sequential kernel.
pub fn par_quantize(values: &mut [f64], n_states: usize, min: f64, max: f64) -> Result<()> {
    let spec = QuantizationSpec::scalar(n_states, min, max);
    spec.validate(values.len())?;
    values
        .par_chunks_mut(CHUNK)
        .try_for_each(|chunk| quantize_in_place(chunk, &QuantizationSpec::scalar(n_states, min, max)))?;
    Ok(())
}

/// As [`par_quantize`] with per-element bounds.
pub fn par_quantize_per_element(values: &mut [f64], n_states: usize, min: &[f64], max: &[f64]) -> Result<()> {
    QuantizationSpec::per_element(n_states, min, max).validate(values.len())?;
    values
        .par_chunks_mut(CHUNK)
        .zip(min.par_chunks(CHUNK).zip(max.par_chunks(CHUNK)))
        .try_for_each(|(chunk, (lo, hi))| quantize_in_place(chunk, &QuantizationSpec::per_element(n_states, lo, hi)))?;
    Ok(())
}
