use crate::math::{powf, powi};
use crate::{Error, Result};

/// Multiplicative factor that damps state motion near the ends of the
/// physical state interval.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum WindowFunction {
    #[default]
    None,
    /// `1 − (2x − 1)^(2p)`
    Joglekar { p: u32 },
    /// `1 − (x − step(−i))^(2p)`, zero only at the boundary the current drives toward.
    Biolek { p: u32 },
    /// `j · (1 − ((x − 0.5)² + 0.75)^p)`
    Prodromakis { p: f64, j: f64 },
}

impl WindowFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WindowFunction::None => Ok(()),
            WindowFunction::Joglekar { p } | WindowFunction::Biolek { p } => {
                if p == 0 {
                    return Err(Error::Config("window exponent p must be a positive integer".into()));
                }
                Ok(())
            }
            WindowFunction::Prodromakis { p, j } => {
                if !(p > 0.0 && p.is_finite()) {
                    return Err(Error::Config("Prodromakis p must be positive".into()));
                }
                if !(j > 0.0 && j.is_finite()) {
                    return Err(Error::Config("Prodromakis j must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Evaluates the window at normalized state `x ∈ [0, 1]`.
    ///
    /// `current_sign` only matters for Biolek; positive current pushes the
    /// state toward `x = 1`.
    pub fn eval(&self, x: f64, current_sign: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { what: "window state", value: x });
        }
        Ok(match *self {
            WindowFunction::None => 1.0,
            WindowFunction::Joglekar { p } => 1.0 - powi(2.0 * x - 1.0, 2 * p as i32),
            WindowFunction::Biolek { p } => {
                let step = if -current_sign >= 0.0 { 1.0 } else { 0.0 };
                1.0 - powi(x - step, 2 * p as i32)
            }
            WindowFunction::Prodromakis { p, j } => {
                let d = x - 0.5;
                j * (1.0 - powf(d * d + 0.75, p))
            }
        })
    }
}
