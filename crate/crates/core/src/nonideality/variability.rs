use rand::Rng;

use crate::crossbar::Crossbar;
use crate::device::{StochasticParameter, MIN_RESISTANCE};
use crate::{Error, Result};

/// Resamples `r_on ~ N(r̄_on, σ)` and `r_off ~ N(r̄_off, 2σ)` for every
/// working device, around the resistances it was instantiated with.
///
/// Device states are kept, so conductances move with the new endpoints.
pub fn apply_cycle_variability<R: Rng + ?Sized>(
    xbar: &mut Crossbar,
    sigma: f64,
    rng: &mut R,
) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Config("cycle-to-cycle sigma must be non-negative".into()));
    }
    resample_cycle(xbar, sigma, rng);
    Ok(())
}

pub(crate) fn resample_cycle<R: Rng + ?Sized>(xbar: &mut Crossbar, sigma: f64, rng: &mut R) {
    for idx in 0..xbar.len() {
        if xbar.stuck()[idx].is_some() {
            continue;
        }
        let (r_on, r_off) = xbar.devices()[idx].nominal_resistances();
        let on = truncated(r_on, sigma).sample(rng);
        let off = truncated(r_off, 2.0 * sigma).sample(rng);
        xbar.with_device(idx, |d| d.set_resistance_bounds(on, off));
    }
}

fn truncated(mean: f64, std_dev: f64) -> StochasticParameter {
    StochasticParameter::TruncatedNormal {
        mean,
        std_dev,
        min: MIN_RESISTANCE.min(mean),
        max: f64::INFINITY,
    }
}
