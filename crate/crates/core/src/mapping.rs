//! Weight-to-conductance mapping and linear-regression tuning.
//!
//! Weight matrices handed to this module are in crossbar orientation:
//! `rows = in_features` (word lines), `cols = out_features` (bit lines).

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::crossbar::{
    Arrangement, Crossbar, ProgramReport, PulseConfig, RepresentationScheme,
    TuningTransform,
};
use crate::device::DeviceTemplate;
use crate::linalg::Matrix;
use crate::math::floor;
use crate::network::MemristiveLayer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemeKind {
    #[default]
    DoubleColumn,
    SingleColumn,
}

/// Whether the affine weight map is linear in conductance or in resistance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MappingDomain {
    /// `g = g_off + (g_on − g_off)·(σ − w_min)/(w_max − w_min)`.
    ///
    /// With `w_min = w_max · r_on / r_off` this is `g = σ · g_on / w_max`,
    /// so crossbar currents stay proportional to the weights.
    #[default]
    Conductance,
    /// `R = r_off + (r_on − r_off)·(σ − w_min)/(w_max − w_min)`, then `g = 1/R`.
    Resistance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingConfig {
    /// Proportion of largest-magnitude weights that saturate at `w_max`.
    pub p_l: f64,
    pub scheme: SchemeKind,
    pub r_on: f64,
    pub r_off: f64,
    pub domain: MappingDomain,
}

impl MappingConfig {
    pub fn new(r_on: f64, r_off: f64) -> Self {
        MappingConfig {
            p_l: 0.0,
            scheme: SchemeKind::DoubleColumn,
            r_on,
            r_off,
            domain: MappingDomain::Conductance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p_l) {
            return Err(Error::OutOfRange { what: "p_l", value: self.p_l, min: 0.0, max: 1.0 });
        }
        if !(self.r_on > 0.0 && self.r_off > self.r_on && self.r_off.is_finite()) {
            return Err(Error::Config(format!(
                "mapping needs r_off > r_on > 0, got r_on = {}, r_off = {}",
                self.r_on, self.r_off
            )));
        }
        Ok(())
    }

    pub fn ratio(&self) -> f64 {
        self.r_off / self.r_on
    }

    /// Reference conductance of the single-column scheme.
    pub fn g_m(&self) -> f64 {
        2.0 / (self.r_on + self.r_off)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clipped {
    /// `|w|` clipped into `[w_min, w_max]`, same order as the input.
    pub magnitudes: Vec<f64>,
    pub w_min: f64,
    pub w_max: f64,
}

/// Clips weight magnitudes so that the largest `p_l` share saturates.
///
/// `w_max` is the magnitude at index `floor(p_l · n)` of the descending sort
/// (clamped to `n − 1`) and `w_min = w_max / ratio`.
pub fn clip_weights(w: &[f64], p_l: f64, ratio: f64) -> Result<Clipped> {
    if w.is_empty() {
        return Err(Error::Degenerate("empty weight array"));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("weight"));
    }
    if !(0.0..1.0).contains(&p_l) {
        return Err(Error::OutOfRange { what: "p_l", value: p_l, min: 0.0, max: 1.0 });
    }
    if !(ratio >= 1.0) {
        return Err(Error::Config(format!("resistance ratio must be at least 1, got {ratio}")));
    }
    let mut sorted: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let index = (floor(p_l * w.len() as f64) as usize).min(w.len() - 1);
    let w_max = sorted[index];
    if w_max == 0.0 {
        return Err(Error::Degenerate("all weights are zero"));
    }
    let w_min = w_max / ratio;
    let magnitudes = w.iter().map(|x| x.abs().clamp(w_min, w_max)).collect();
    Ok(Clipped { magnitudes, w_min, w_max })
}

/// Maps magnitudes `σ` to conductances over `[w_min, w_max]`.
///
/// Exact zeros (the unused side of a double-column pair) map to `1/r_off`.
pub fn map_magnitudes(
    sigma: &[f64],
    w_min: f64,
    w_max: f64,
    r_on: f64,
    r_off: f64,
    domain: MappingDomain,
) -> Result<Vec<f64>> {
    if !(w_max > w_min) {
        return Err(Error::Degenerate("w_max equals w_min"));
    }
    let span = w_max - w_min;
    Ok(sigma
        .iter()
        .map(|&s| {
            if s == 0.0 {
                return 1.0 / r_off;
            }
            let t = (s - w_min) / span;
            match domain {
                MappingDomain::Conductance => 1.0 / r_off + (1.0 / r_on - 1.0 / r_off) * t,
                MappingDomain::Resistance => 1.0 / (r_off + (r_on - r_off) * t),
            }
        })
        .collect())
}

/// Target conductances for a weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum MappedConductances {
    Double { pos: Matrix, neg: Matrix, w_min: f64, w_max: f64 },
    Single { g: Matrix, g_m: f64, w_max: f64 },
}

/// Maps a crossbar-oriented weight matrix to conductance targets.
///
/// Double column: positive weights go to `pos`, magnitudes of negative weights
/// to `neg`, and the idle side of each pair sits at `1/r_off`. Zero weights
/// leave both sides at `1/r_off`.
///
/// Single column: `g = g_m + c·w` with `c` chosen so `±w_max` reaches the
/// nearer of `1/r_on`, `1/r_off`. Weights clip at `±w_max`.
pub fn naive_map(w: &Matrix, cfg: &MappingConfig) -> Result<MappedConductances> {
    cfg.validate()?;
    let clipped = clip_weights(w.as_slice(), cfg.p_l, cfg.ratio())?;
    let (rows, cols) = w.shape();
    match cfg.scheme {
        SchemeKind::DoubleColumn => {
            let mut pos_sigma = Vec::with_capacity(w.as_slice().len());
            let mut neg_sigma = Vec::with_capacity(w.as_slice().len());
            for (&x, &m) in w.as_slice().iter().zip(&clipped.magnitudes) {
                let (p, n) = if x > 0.0 {
                    (m, 0.0)
                } else if x < 0.0 {
                    (0.0, m)
                } else {
                    (0.0, 0.0)
                };
                pos_sigma.push(p);
                neg_sigma.push(n);
            }
            let map = |s: &[f64]| {
                map_magnitudes(s, clipped.w_min, clipped.w_max, cfg.r_on, cfg.r_off, cfg.domain)
                    .and_then(|g| Matrix::from_vec(rows, cols, g))
            };
            Ok(MappedConductances::Double {
                pos: map(&pos_sigma)?,
                neg: map(&neg_sigma)?,
                w_min: clipped.w_min,
                w_max: clipped.w_max,
            })
        }
        SchemeKind::SingleColumn => {
            let g_m = cfg.g_m();
            let c = (g_m - 1.0 / cfg.r_off).min(1.0 / cfg.r_on - g_m) / clipped.w_max;
            let g = w.map(|x| g_m + c * x.clamp(-clipped.w_max, clipped.w_max));
            Ok(MappedConductances::Single { g, g_m, w_max: clipped.w_max })
        }
    }
}

/// Builds crossbars for `mapped` from `template` and programs them: directly
/// for 1T1R, with pulses for 1R.
pub fn program_scheme<R: Rng + ?Sized>(
    mapped: &MappedConductances,
    template: &DeviceTemplate,
    arrangement: Arrangement,
    pulse: &PulseConfig,
    rng: &mut R,
) -> Result<(RepresentationScheme, ProgramReport)> {
    let mut report = ProgramReport::default();
    let mut build = |targets: &Matrix, rng: &mut R| -> Result<Crossbar> {
        let mut xbar = Crossbar::build(targets.rows(), targets.cols(), template, arrangement, rng)?;
        let r = match arrangement {
            Arrangement::OneT1R => xbar.program_naive(targets)?,
            Arrangement::OneR => xbar.program_pulsed(targets, pulse)?,
        };
        report.merge(r);
        Ok(xbar)
    };
    let scheme = match mapped {
        MappedConductances::Double { pos, neg, .. } => {
            let p = build(pos, rng)?;
            let n = build(neg, rng)?;
            RepresentationScheme::double_column(p, n)?
        }
        MappedConductances::Single { g, g_m, .. } => {
            RepresentationScheme::SingleColumn { xbar: build(g, rng)?, g_m: *g_m }
        }
    };
    Ok((scheme, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub transform: TuningTransform,
    pub r_squared: f64,
}

/// Ordinary least squares of `target ≈ slope · raw + intercept`.
pub fn fit_linear_transform(raw: &[f64], target: &[f64]) -> Result<LinearFit> {
    if raw.len() != target.len() {
        return Err(Error::Shape(format!("{} raw vs {} target samples", raw.len(), target.len())));
    }
    if raw.len() < 2 {
        return Err(Error::Config("a linear fit needs at least two samples".into()));
    }
    let n = raw.len() as f64;
    let mx = raw.iter().sum::<f64>() / n;
    let my = target.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in raw.iter().zip(target) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(Error::SingularFit);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !(slope.is_finite() && intercept.is_finite()) {
        return Err(Error::SingularFit);
    }
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let sse: f64 = raw
            .iter()
            .zip(target)
            .map(|(&x, &y)| {
                let e = y - (slope * x + intercept);
                e * e
            })
            .sum();
        1.0 - sse / syy
    };
    Ok(LinearFit { transform: TuningTransform { slope, intercept }, r_squared })
}

/// One fit per output column.
pub fn fit_per_column(raw: &Matrix, target: &Matrix) -> Result<Vec<LinearFit>> {
    if raw.shape() != target.shape() {
        return Err(Error::Shape("raw and target blocks differ in shape".into()));
    }
    let (rt, tt) = (raw.transpose(), target.transpose());
    (0..raw.cols()).map(|j| fit_linear_transform(rt.row(j), tt.row(j))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningConfig {
    /// Rows of the random tuning block.
    pub sample_rows: usize,
    /// Fit one transform per output column instead of one per layer.
    pub per_column: bool,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig { sample_rows: 8, per_column: false }
    }
}

/// Tunes `layer` on a `sample_rows × in` block drawn uniformly from `[0, 1]`.
pub fn tune_layer<R: Rng + ?Sized>(
    layer: &mut MemristiveLayer,
    cfg: &TuningConfig,
    rng: &mut R,
) -> Result<LinearFit> {
    let x = Matrix::from_fn(cfg.sample_rows, layer.crossbar_rows(), |_, _| rng.random::<f64>());
    tune_layer_on(layer, &x, cfg)
}

/// Tunes `layer` on crossbar-level inputs `x` (for convolutions, unrolled patches).
///
/// Returns the fit over all columns; with `per_column` set, each column gets
/// its own transform while the returned `r_squared` is the smallest of them.
pub fn tune_layer_on(layer: &mut MemristiveLayer, x: &Matrix, cfg: &TuningConfig) -> Result<LinearFit> {
    let raw = layer.crossbar_raw(x)?;
    let target = layer.legacy_matmul(x)?;
    if cfg.per_column {
        let fits = fit_per_column(&raw, &target)?;
        let worst = fits.iter().map(|f| f.r_squared).fold(f64::INFINITY, f64::min);
        let transforms: Vec<_> = fits.iter().map(|f| f.transform).collect();
        layer.set_transforms(transforms)?;
        let overall = fit_linear_transform(raw.as_slice(), target.as_slice())?;
        Ok(LinearFit { transform: overall.transform, r_squared: worst })
    } else {
        let fit = fit_linear_transform(raw.as_slice(), target.as_slice())?;
        layer.set_transforms(alloc::vec![fit.transform])?;
        Ok(fit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn clip_hand_trace() {
        let c = clip_weights(&[0.1, -0.5, 0.9, 0.3], 0.25, 2.0).unwrap();
        assert_eq!(c.w_max, 0.5);
        assert_eq!(c.w_min, 0.25);
        assert_eq!(c.magnitudes, vec![0.25, 0.5, 0.5, 0.3]);
    }

    #[test]
    fn clip_p_zero_and_constant() {
        let c = clip_weights(&[0.2, -1.5, 0.7], 0.0, 10.0).unwrap();
        assert_eq!(c.w_max, 1.5);
        let c = clip_weights(&[0.4; 5], 0.6, 3.0).unwrap();
        assert_eq!(c.w_max, 0.4);
        assert!(c.magnitudes.iter().all(|&m| m == 0.4));
        assert!(matches!(clip_weights(&[0.0, 0.0], 0.0, 2.0), Err(Error::Degenerate(_))));
        // p_l close to 1 clamps the index to the last element.
        let c = clip_weights(&[3.0, 1.0], 0.99, 2.0).unwrap();
        assert_eq!(c.w_max, 1.0);
    }

    #[test]
    fn resistance_domain_endpoints_and_midpoint() {
        let g = map_magnitudes(&[1e-300, 0.5, 1.0], 0.0, 1.0, 1000.0, 2000.0, MappingDomain::Resistance)
            .unwrap();
        assert!((1.0 / g[0] - 2000.0).abs() < 1e-9);
        assert!((1.0 / g[1] - 1500.0).abs() < 1e-9);
        assert!((1.0 / g[2] - 1000.0).abs() < 1e-9);
        // Exact zeros always map to r_off.
        let g = map_magnitudes(&[0.0], 0.0, 1.0, 1000.0, 2000.0, MappingDomain::Resistance).unwrap();
        assert_eq!(g[0], 1.0 / 2000.0);
    }

    #[test]
    fn conductance_domain_is_proportional() {
        let cfg = MappingConfig::new(100.0, 1e4);
        let w = Matrix::from_vec(1, 3, vec![0.5, 1.0, -0.25]).unwrap();
        let MappedConductances::Double { pos, neg, w_max, .. } = naive_map(&w, &cfg).unwrap() else {
            panic!()
        };
        assert_eq!(w_max, 1.0);
        // Active side is proportional to |w|; the idle side sits at g_off.
        let k = 0.01 / w_max;
        for (j, &x) in w.as_slice().iter().enumerate() {
            let diff = pos.get(0, j) - neg.get(0, j);
            let expect = k * x - x.signum() * 1e-4;
            assert!((diff - expect).abs() < 1e-15, "{j}: {diff}");
        }
    }

    #[test]
    fn zero_weights_map_off() {
        let cfg = MappingConfig::new(100.0, 1000.0);
        let w = Matrix::from_vec(2, 2, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let MappedConductances::Double { pos, neg, .. } = naive_map(&w, &cfg).unwrap() else {
            panic!()
        };
        assert_eq!(neg.as_slice(), &[1e-3; 4]);
        assert_eq!(&pos.as_slice()[..3], &[1e-3; 3]);
        assert!((pos.get(1, 1) - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn single_column_stays_in_range() {
        let cfg = MappingConfig { scheme: SchemeKind::SingleColumn, ..MappingConfig::new(100.0, 1000.0) };
        let w = Matrix::from_vec(1, 3, vec![-2.0, 0.0, 2.0]).unwrap();
        let MappedConductances::Single { g, g_m, .. } = naive_map(&w, &cfg).unwrap() else { panic!() };
        assert_eq!(g.get(0, 1), g_m);
        assert!((g.get(0, 0) - 1e-3).abs() < 1e-15);
        assert!(g.get(0, 2) < 1e-2);
        assert!((g.get(0, 2) - g_m - (g_m - g.get(0, 0))).abs() < 1e-15);
    }

    #[test]
    fn fit_exact_lines() {
        let raw = [1.0, 2.0, 3.0, 4.0];
        let f = fit_linear_transform(&raw, &raw.map(|x| 3.0 * x)).unwrap();
        assert!((f.transform.slope - 3.0).abs() < 1e-12);
        assert!(f.transform.intercept.abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let f = fit_linear_transform(&raw, &raw.map(|x| 2.0 * x + 1.0)).unwrap();
        assert!((f.transform.slope - 2.0).abs() < 1e-12);
        assert!((f.transform.intercept - 1.0).abs() < 1e-12);
        assert!(matches!(fit_linear_transform(&[1.0, 1.0], &[0.0, 1.0]), Err(Error::SingularFit)));
    }
}
