//! Injectable device non-idealities.

pub mod faults;
pub mod nonlinear;
pub mod quantize;
pub mod variability;

use alloc::vec::Vec;

use rand::Rng;

pub use faults::{apply_device_faults, FaultReport, FaultSpec};
pub use nonlinear::{apply_non_linear, build_iv_lut, IvCurve, IvLut, NonLinearMethod, Readout};
pub use quantize::{quantize, quantize_in_place, Bounds, QuantizationSpec};
pub use variability::apply_cycle_variability;

use crate::crossbar::Crossbar;
use crate::{Error, Result};

/// One entry of a non-ideality stack.
#[derive(Debug, Clone, PartialEq)]
pub enum NonIdeality {
    /// Snap each device to the nearest of `n` evenly spaced conductances
    /// between its own `1/r_off` and `1/r_on`.
    FiniteStates { n: usize },
    DeviceFaults(FaultSpec),
    /// Device-to-device spread of `r_on` (σ) and `r_off` (2σ), applied
    /// when devices are instantiated.
    DeviceVariability { sigma: f64 },
    /// Cycle-to-cycle spread, resampled after every programming cycle.
    CycleVariability { sigma: f64 },
    NonLinear(NonLinearMethod),
}

impl NonIdeality {
    pub fn validate(&self) -> Result<()> {
        match self {
            NonIdeality::FiniteStates { n } if *n < 2 => {
                Err(Error::Config("finite_states needs n >= 2".into()))
            }
            NonIdeality::DeviceFaults(spec) => spec.validate(),
            NonIdeality::DeviceVariability { sigma } | NonIdeality::CycleVariability { sigma }
                if !(*sigma >= 0.0 && sigma.is_finite()) =>
            {
                Err(Error::Config("variability sigma must be non-negative".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Quantizes every working device to its own `n`-state grid.
pub fn apply_finite_states(xbar: &mut Crossbar, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Config("finite_states needs n >= 2".into()));
    }
    let mut lo = Vec::with_capacity(xbar.len());
    let mut hi = Vec::with_capacity(xbar.len());
    for d in xbar.devices() {
        let (a, b) = d.conductance_range();
        // Devices whose sampled r_on equals r_off have a single state.
        lo.push(a);
        hi.push(if b > a { b } else { a * (1.0 + 1e-12) });
    }
    let q = quantize(xbar.conductances(), &QuantizationSpec::per_element(n, &lo, &hi))?;
    for (idx, g) in q.into_iter().enumerate() {
        if xbar.stuck()[idx].is_some() {
            continue;
        }
        let g = g.min(xbar.devices()[idx].conductance_range().1);
        xbar.with_device(idx, |d| d.set_to_conductance(g))?;
    }
    xbar.set_finite_states(Some(n));
    Ok(())
}

/// What applying a stack entry did, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub enum Applied {
    Nothing,
    Faults(FaultReport),
}

/// Applies one stack entry to an already programmed crossbar.
///
/// `CycleVariability` resamples once immediately (the crossbar has been
/// programmed) and after every later programming. `DeviceVariability` has to
/// be folded into the device template before the crossbar is built, so it is
/// a no-op here.
pub fn apply<R: Rng + ?Sized>(xbar: &mut Crossbar, entry: &NonIdeality, rng: &mut R) -> Result<Applied> {
    entry.validate()?;
    match entry {
        NonIdeality::FiniteStates { n } => apply_finite_states(xbar, *n)?,
        NonIdeality::DeviceFaults(spec) => return Ok(Applied::Faults(apply_device_faults(xbar, spec, rng)?)),
        NonIdeality::DeviceVariability { .. } => {}
        NonIdeality::CycleVariability { sigma } => {
            apply_cycle_variability(xbar, *sigma, rng)?;
            xbar.enable_cycle_variability(*sigma, rng.random());
        }
        NonIdeality::NonLinear(method) => apply_non_linear(xbar, method)?,
    }
    Ok(Applied::Nothing)
}
