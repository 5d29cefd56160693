use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::crossbar::{Crossbar, StuckAt};
use crate::math::round;
use crate::{Error, Result};

/// Proportions of devices pinned at `r_on` and at `r_off`.
///
/// Devices that never electroform and devices stuck in the high resistance
/// state behave the same, so both are counted in `stuck_off`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaultSpec {
    pub stuck_on: f64,
    pub stuck_off: f64,
}

impl FaultSpec {
    pub fn validate(&self) -> Result<()> {
        for (p, what) in [(self.stuck_on, "stuck_on"), (self.stuck_off, "stuck_off")] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange { what, value: p, min: 0.0, max: 1.0 });
            }
        }
        if self.stuck_on + self.stuck_off > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "fault proportions sum to {} > 1",
                self.stuck_on + self.stuck_off
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaultReport {
    pub stuck_on: Vec<(usize, usize)>,
    pub stuck_off: Vec<(usize, usize)>,
}

/// Pins `round(p · devices)` distinct devices per fault kind, chosen
/// uniformly without replacement.
pub fn apply_device_faults<R: Rng + ?Sized>(
    xbar: &mut Crossbar,
    spec: &FaultSpec,
    rng: &mut R,
) -> Result<FaultReport> {
    spec.validate()?;
    let total = xbar.len();
    let n_on = round(spec.stuck_on * total as f64) as usize;
    let n_off = (round(spec.stuck_off * total as f64) as usize).min(total - n_on);
    let mut report = FaultReport::default();
    if n_on + n_off == 0 {
        return Ok(report);
    }
    let chosen = index::sample(rng, total, n_on + n_off);
    let cols = xbar.cols();
    for (k, idx) in chosen.into_iter().enumerate() {
        let at = if k < n_on { StuckAt::On } else { StuckAt::Off };
        xbar.pin(idx, at);
        let coord = (idx / cols, idx % cols);
        match at {
            StuckAt::On => report.stuck_on.push(coord),
            StuckAt::Off => report.stuck_off.push(coord),
        }
    }
    Ok(report)
}
