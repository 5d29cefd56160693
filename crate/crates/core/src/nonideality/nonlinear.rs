//! Non-linear I/V readout.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::crossbar::Crossbar;
use crate::device::{Memristor, VoltageSignal};
use crate::nonideality::quantize::{nearest_state_index, state_value};
use crate::{Error, Result};

/// Fewest samples a characterization sweep may have.
pub const MIN_SWEEP_SAMPLES: usize = 8;

/// How a crossbar turns word-line voltages into device currents.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Readout {
    /// `i = v · g` from the conductance cache.
    #[default]
    Ideal,
    /// Each device is stepped once for `dt` at its read voltage and the
    /// current is taken at the resulting state. The step is not persisted.
    SingleTimestep { dt: f64 },
    /// Per-device I/V lookup tables, aligned with the device grid.
    Lut(Vec<IvLut>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum NonLinearMethod {
    SingleTimestep { dt: f64 },
    Lut { sweep: VoltageSignal },
}

/// Sampled I/V curve; voltages strictly increasing, includes `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IvCurve {
    voltage: Vec<f64>,
    current: Vec<f64>,
}

impl IvCurve {
    pub fn new(voltage: Vec<f64>, current: Vec<f64>) -> Result<Self> {
        if voltage.len() != current.len() || voltage.len() < 2 {
            return Err(Error::Shape(format!(
                "I/V curve needs matching voltage/current arrays of length >= 2, got {}/{}",
                voltage.len(),
                current.len()
            )));
        }
        if voltage.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("I/V curve voltages must be strictly increasing".into()));
        }
        if voltage.iter().chain(&current).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("I/V curve sample"));
        }
        match voltage.iter().position(|&v| v == 0.0) {
            Some(k) if current[k] == 0.0 => {}
            _ => return Err(Error::Config("I/V curve must pass through (0, 0)".into())),
        }
        Ok(IvCurve { voltage, current })
    }

    pub fn voltage(&self) -> &[f64] {
        &self.voltage
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    /// Piecewise-linear interpolation; outside the grid the end segments
    /// are extended.
    pub fn interpolate(&self, v: f64) -> f64 {
        let n = self.voltage.len();
        let k = match self.voltage.partition_point(|&x| x <= v) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (v0, v1) = (self.voltage[k], self.voltage[k + 1]);
        let (i0, i1) = (self.current[k], self.current[k + 1]);
        i0 + (i1 - i0) * (v - v0) / (v1 - v0)
    }
}

/// Curves of one device: a single curve for continuous conductance, or one
/// per finite state, ordered from the lowest to the highest conductance.
#[derive(Debug, Clone, PartialEq)]
pub struct IvLut {
    pub curves: Vec<IvCurve>,
    /// Conductance the device had when each curve was recorded.
    pub conductances: Vec<f64>,
    /// First swept voltage at which each curve's conductance moved by more
    /// than half a state gap (infinite if it never did).
    pub reset_amplitudes: Vec<f64>,
}

impl IvLut {
    fn curve_for(&self, g: f64, n_states: Option<usize>) -> &IvCurve {
        match n_states {
            Some(n) if self.curves.len() == n => {
                let lo = self.conductances[0];
                let hi = self.conductances[n - 1];
                &self.curves[nearest_state_index(g, lo, hi, n)]
            }
            _ => &self.curves[0],
        }
    }
}

/// Rising part of `sweep`, simulated on a copy of `device`.
fn record_curve(device: &Memristor, sweep: &VoltageSignal, gap: f64) -> Result<(IvCurve, f64)> {
    let mut d = device.clone();
    let trace = d.simulate(sweep)?;
    let g0 = device.conductance();
    let mut voltage = Vec::new();
    let mut current = Vec::new();
    let mut reset = f64::INFINITY;
    for k in 0..trace.len() {
        let v = trace.voltage[k];
        if voltage.last().is_some_and(|&last| v <= last) {
            break;
        }
        let g = d.model().conductance(trace.state[k]);
        if reset.is_infinite() && (g - g0).abs() > 0.5 * gap {
            reset = v.abs();
        }
        voltage.push(v);
        current.push(trace.current[k]);
    }
    if voltage.first().is_some_and(|&v0| v0 > 0.0) {
        voltage.insert(0, 0.0);
        current.insert(0, 0.0);
    }
    if voltage.first().is_some_and(|&v0| v0 < 0.0) && !voltage.contains(&0.0) {
        return Err(Error::Config("sweep must start at or cross 0 V on a sampled point".into()));
    }
    Ok((IvCurve::new(voltage, current)?, reset))
}

/// Characterizes `device` with `sweep`. With `n_states`, one curve is
/// recorded per state of the device's own conductance grid.
pub fn build_iv_lut(device: &Memristor, sweep: &VoltageSignal, n_states: Option<usize>) -> Result<IvLut> {
    let samples = sweep.sample(device.model().dt()).len();
    if samples < MIN_SWEEP_SAMPLES {
        return Err(Error::Config(format!(
            "sweep has {samples} samples, at least {MIN_SWEEP_SAMPLES} are needed"
        )));
    }
    let (lo, hi) = device.conductance_range();
    match n_states {
        None => {
            let (curve, reset) = record_curve(device, sweep, hi - lo)?;
            Ok(IvLut {
                curves: vec![curve],
                conductances: vec![device.conductance()],
                reset_amplitudes: vec![reset],
            })
        }
        Some(n) => {
            if n < 2 {
                return Err(Error::Config("finite-state LUT needs at least 2 states".into()));
            }
            let gap = (hi - lo) / (n - 1) as f64;
            let mut lut = IvLut { curves: Vec::new(), conductances: Vec::new(), reset_amplitudes: Vec::new() };
            for k in 0..n {
                let g = state_value(lo, hi, n, k);
                let mut d = device.clone();
                d.set_to_conductance(g)?;
                let (curve, reset) = record_curve(&d, sweep, gap)?;
                lut.curves.push(curve);
                lut.conductances.push(g);
                lut.reset_amplitudes.push(reset);
            }
            Ok(lut)
        }
    }
}

/// Switches `xbar` to non-linear readout.
pub fn apply_non_linear(xbar: &mut Crossbar, method: &NonLinearMethod) -> Result<()> {
    let readout = match method {
        NonLinearMethod::SingleTimestep { dt } => {
            if !(*dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config("single-timestep dt must be positive".into()));
            }
            Readout::SingleTimestep { dt: *dt }
        }
        NonLinearMethod::Lut { sweep } => {
            sweep.validate()?;
            let n = xbar.finite_states();
            let luts = xbar
                .devices()
                .iter()
                .map(|d| build_iv_lut(d, sweep, n))
                .collect::<Result<Vec<_>>>()?;
            Readout::Lut(luts)
        }
    };
    xbar.set_readout(readout);
    Ok(())
}

pub(crate) fn read_currents(xbar: &Crossbar, readout: &Readout, v: &[f64]) -> Result<Vec<f64>> {
    let cols = xbar.cols();
    let mut out = vec![0.0; cols];
    match readout {
        Readout::Ideal => return xbar.read_currents(v),
        Readout::SingleTimestep { dt } => {
            for (i, &vi) in v.iter().enumerate() {
                if vi == 0.0 {
                    continue;
                }
                for (j, o) in out.iter_mut().enumerate() {
                    let d = &xbar.devices()[i * cols + j];
                    let (w, _) = d.model().step(d.state(), vi, *dt)?;
                    *o += vi / d.model().resistance(w);
                }
            }
        }
        Readout::Lut(luts) => {
            if luts.len() != xbar.len() {
                return Err(Error::State("crossbar has no LUT for every device"));
            }
            let n = xbar.finite_states();
            for (i, &vi) in v.iter().enumerate() {
                if vi == 0.0 {
                    continue;
                }
                for (j, o) in out.iter_mut().enumerate() {
                    let idx = i * cols + j;
                    *o += luts[idx].curve_for(xbar.conductances()[idx], n).interpolate(vi);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_validation() {
        assert!(IvCurve::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_ok());
        assert!(IvCurve::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(IvCurve::new(vec![0.5, 1.0], vec![0.1, 1.0]).is_err());
        assert!(IvCurve::new(vec![0.0, 1.0], vec![0.1, 1.0]).is_err());
    }

    #[test]
    fn interpolation_and_extrapolation() {
        let c = IvCurve::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(c.interpolate(0.0), 0.0);
        assert_eq!(c.interpolate(0.5), 0.5);
        assert_eq!(c.interpolate(1.5), 2.5);
        assert_eq!(c.interpolate(3.0), 7.0);
        assert_eq!(c.interpolate(-1.0), -1.0);
    }
}
