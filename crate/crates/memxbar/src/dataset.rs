//! Labeled datasets: synthetic generation, standardization and CSV IO.

use std::io::{Read, Write};

use memxbar_core::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(x: Matrix, labels: Vec<usize>) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(HarnessError::input(format!(
                "{} samples but {} labels",
                x.rows(),
                labels.len()
            )));
        }
        Ok(Dataset { x, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset { x: self.x.select_rows(idx), labels: idx.iter().map(|&i| self.labels[i]).collect() }
    }
}

/// Two unit-variance Gaussian clusters at `±separation/2` along a random unit
/// direction, standardized per feature. Classes alternate so they stay
/// balanced.
pub fn gen_synthetic(n_samples: usize, n_features: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n_samples < 2 {
        return Err(HarnessError::input("synthetic dataset needs at least 2 samples"));
    }
    if n_features == 0 {
        return Err(HarnessError::input("synthetic dataset needs at least 1 feature"));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(HarnessError::input(format!("class separation must be finite and >= 0, got {separation}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dir: Vec<f64> = (0..n_features).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    dir.iter_mut().for_each(|d| *d /= norm);

    let labels: Vec<usize> = (0..n_samples).map(|i| i % 2).collect();
    let x = Matrix::from_fn(n_samples, n_features, |r, c| {
        let z: f64 = StandardNormal.sample(&mut rng);
        let side = if labels[r] == 1 { 0.5 } else { -0.5 };
        z + side * separation * dir[c]
    });
    let mut ds = Dataset { x, labels };
    standardize(&mut ds.x);
    Ok(ds)
}

/// Zero mean, unit (population) standard deviation per column. Constant
/// columns are only centered.
pub fn standardize(x: &mut Matrix) {
    let (n, f) = x.shape();
    if n == 0 {
        return;
    }
    for c in 0..f {
        let mean = (0..n).map(|r| x.get(r, c)).sum::<f64>() / n as f64;
        let var = (0..n).map(|r| (x.get(r, c) - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for r in 0..n {
            let v = x.get(r, c) - mean;
            x.set(r, c, if sd > 0.0 { v / sd } else { v });
        }
    }
    // A second centering pass removes the rounding left by the first.
    for c in 0..f {
        let mean = (0..n).map(|r| x.get(r, c)).sum::<f64>() / n as f64;
        for r in 0..n {
            x.set(r, c, x.get(r, c) - mean);
        }
    }
}

/// Reads a CSV with a header row: feature columns then an integer label.
pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let width = rdr.headers()?.len();
    if width < 2 {
        return Err(HarnessError::input("dataset CSV needs at least one feature column and a label column"));
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for field in rec.iter().take(width - 1) {
            let v: f64 = field.trim().parse().map_err(|_| {
                HarnessError::input(format!("row {}: `{field}` is not a number", line + 1))
            })?;
            data.push(v);
        }
        let label = rec.get(width - 1).unwrap_or("").trim();
        labels.push(label.parse().map_err(|_| {
            HarnessError::input(format!("row {}: label `{label}` is not a non-negative integer", line + 1))
        })?);
    }
    if labels.is_empty() {
        return Err(HarnessError::input("dataset CSV has no rows"));
    }
    Dataset::new(Matrix::from_vec(labels.len(), width - 1, data)?, labels)
}

pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..ds.n_features()).map(|k| format!("x{k}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for r in 0..ds.len() {
        let mut row: Vec<String> = ds.x.row(r).iter().map(|v| v.to_string()).collect();
        row.push(ds.labels[r].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
