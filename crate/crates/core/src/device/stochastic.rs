use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Redraws before a truncated-normal sample is clamped into its bounds.
pub const MAX_REDRAWS: usize = 100;

/// A device parameter that is either fixed or drawn per device instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StochasticParameter {
    Constant(f64),
    TruncatedNormal { mean: f64, std_dev: f64, min: f64, max: f64 },
}

impl StochasticParameter {
    pub fn truncated_normal(mean: f64, std_dev: f64, min: f64, max: f64) -> Result<Self> {
        let p = StochasticParameter::TruncatedNormal { mean, std_dev, min, max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StochasticParameter::Constant(v) => {
                if v.is_nan() {
                    return Err(Error::NonFinite("constant parameter"));
                }
                Ok(())
            }
            StochasticParameter::TruncatedNormal { mean, std_dev, min, max } => {
                if !mean.is_finite() || !std_dev.is_finite() || min.is_nan() || max.is_nan() {
                    return Err(Error::NonFinite("truncated normal parameter"));
                }
                if std_dev < 0.0 {
                    return Err(Error::Config("standard deviation must be non-negative".into()));
                }
                if !(min <= mean && mean <= max) {
                    return Err(Error::Config("truncated normal needs min <= mean <= max".into()));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            StochasticParameter::Constant(v) => v,
            StochasticParameter::TruncatedNormal { mean, .. } => mean,
        }
    }

    /// Draws one value. Truncated normals redraw up to [`MAX_REDRAWS`] times
    /// and then clamp.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            StochasticParameter::Constant(v) => v,
            StochasticParameter::TruncatedNormal { mean, std_dev, min, max } => {
                if std_dev == 0.0 {
                    return mean;
                }
                let normal = Normal::new(mean, std_dev).expect("validated std_dev");
                let mut x = normal.sample(rng);
                for _ in 0..MAX_REDRAWS {
                    if x >= min && x <= max {
                        return x;
                    }
                    x = normal.sample(rng);
                }
                x.clamp(min, max)
            }
        }
    }
}

impl From<f64> for StochasticParameter {
    fn from(v: f64) -> Self {
        StochasticParameter::Constant(v)
    }
}
