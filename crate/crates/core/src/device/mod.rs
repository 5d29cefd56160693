//! Behavioral memristor models and finite-difference simulation.

mod model;
mod stochastic;
mod window;

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

pub use model::{Dependence, DeviceModel, DeviceParam, LinearIonDrift, Vteam};
pub use stochastic::{StochasticParameter, MAX_REDRAWS};
pub use window::WindowFunction;

use crate::math::{round, sin};
use crate::{Error, Result};

/// Where a freshly instantiated device starts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialState {
    /// The state that shows `r_off`.
    #[default]
    Off,
    On,
    Resistance(f64),
}

/// A single device instance: parameters (possibly sampled) plus state.
#[derive(Debug, Clone, PartialEq)]
pub struct Memristor {
    model: DeviceModel,
    w: f64,
    nominal_r_on: f64,
    nominal_r_off: f64,
}

impl Memristor {
    pub fn new(model: DeviceModel) -> Result<Self> {
        Self::with_initial_state(model, InitialState::Off)
    }

    pub fn with_initial_state(model: DeviceModel, init: InitialState) -> Result<Self> {
        model.validate_instance()?;
        let w = match init {
            InitialState::Off => model.off_state(),
            InitialState::On => model.on_state(),
            InitialState::Resistance(r) => model.state_for_resistance(r)?,
        };
        Ok(Memristor { nominal_r_on: model.r_on(), nominal_r_off: model.r_off(), model, w })
    }

    pub fn model(&self) -> &DeviceModel {
        &self.model
    }

    pub fn state(&self) -> f64 {
        self.w
    }

    /// Sets the state, clamped into the legal interval.
    pub fn set_state(&mut self, w: f64) {
        self.w = self.model.clamp_state(w);
    }

    pub fn resistance(&self) -> f64 {
        self.model.resistance(self.w)
    }

    pub fn conductance(&self) -> f64 {
        1.0 / self.resistance()
    }

    /// Conductance interval reachable by this instance, `(low, high)`.
    pub fn conductance_range(&self) -> (f64, f64) {
        let a = 1.0 / self.model.r_on();
        let b = 1.0 / self.model.r_off();
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// `r_on` / `r_off` as drawn when the device was instantiated.
    pub fn nominal_resistances(&self) -> (f64, f64) {
        (self.nominal_r_on, self.nominal_r_off)
    }

    /// Replaces the resistance endpoints, keeping the state variable.
    pub fn set_resistance_bounds(&mut self, r_on: f64, r_off: f64) {
        self.model.set_r_on(r_on);
        self.model.set_r_off(r_off);
    }

    pub fn set_to_resistance(&mut self, r: f64) -> Result<()> {
        self.w = self.model.state_for_resistance(r)?;
        Ok(())
    }

    pub fn set_to_conductance(&mut self, g: f64) -> Result<()> {
        self.set_to_resistance(1.0 / g)
    }

    /// One Euler step at the model's own `dt`. Returns the current.
    pub fn step(&mut self, v: f64) -> Result<f64> {
        self.step_dt(v, self.model.dt())
    }

    pub fn step_dt(&mut self, v: f64, dt: f64) -> Result<f64> {
        let (w, i) = self.model.step(self.w, v, dt)?;
        self.w = w;
        Ok(i)
    }

    /// Rolls the device through `signal` with explicit forward Euler.
    pub fn simulate(&mut self, signal: &VoltageSignal) -> Result<SimulationTrace> {
        signal.validate()?;
        let dt = match signal {
            VoltageSignal::Sinusoid { .. } => self.model.dt(),
            VoltageSignal::Samples { dt, .. } => {
                let own = self.model.dt();
                if (dt - own).abs() > 1e-12 * own.abs() {
                    return Err(Error::Config(format!(
                        "signal dt {dt} does not match device dt {own}"
                    )));
                }
                *dt
            }
        };
        let voltages = signal.sample(dt);
        let mut trace = SimulationTrace::with_capacity(voltages.len());
        for (k, &v) in voltages.iter().enumerate() {
            let w = self.w;
            let i = self.step_dt(v, dt)?;
            trace.push(k as f64 * dt, v, i, w);
        }
        Ok(trace)
    }
}

/// Applied voltage waveform.
#[derive(Debug, Clone, PartialEq)]
pub enum VoltageSignal {
    /// `amplitude · sin(2π · frequency · t)` for `t ∈ [0, duration]`.
    Sinusoid { amplitude: f64, frequency: f64, duration: f64 },
    /// Explicit samples spaced `dt` apart.
    Samples { values: Vec<f64>, dt: f64 },
}

impl VoltageSignal {
    pub fn validate(&self) -> Result<()> {
        match self {
            VoltageSignal::Sinusoid { amplitude, frequency, duration } => {
                if !amplitude.is_finite() || !frequency.is_finite() || !duration.is_finite() {
                    return Err(Error::NonFinite("sinusoid parameter"));
                }
                if !(*duration > 0.0) {
                    return Err(Error::Config("signal duration must be positive".into()));
                }
                Ok(())
            }
            VoltageSignal::Samples { values, dt } => {
                if values.is_empty() {
                    return Err(Error::Config("sampled signal needs at least one sample".into()));
                }
                if !(*dt > 0.0) {
                    return Err(Error::Config("sample spacing must be positive".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("signal sample"));
                }
                Ok(())
            }
        }
    }

    /// Voltages on the grid `t_k = k · dt`, covering the full duration.
    pub fn sample(&self, dt: f64) -> Vec<f64> {
        match self {
            VoltageSignal::Sinusoid { amplitude, frequency, duration } => {
                let n = round(duration / dt) as usize;
                let omega = 2.0 * core::f64::consts::PI * frequency;
                (0..=n).map(|k| amplitude * sin(omega * k as f64 * dt)).collect()
            }
            VoltageSignal::Samples { values, .. } => values.clone(),
        }
    }
}

/// Time series recorded by [`Memristor::simulate`]. `current[k]` and
/// `state[k]` are the values at `time[k]`, before the step driven by
/// `voltage[k]` is applied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationTrace {
    pub time: Vec<f64>,
    pub voltage: Vec<f64>,
    pub current: Vec<f64>,
    pub state: Vec<f64>,
}

impl SimulationTrace {
    fn with_capacity(n: usize) -> Self {
        SimulationTrace {
            time: Vec::with_capacity(n),
            voltage: Vec::with_capacity(n),
            current: Vec::with_capacity(n),
            state: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, v: f64, i: f64, w: f64) {
        self.time.push(t);
        self.voltage.push(v);
        self.current.push(i);
        self.state.push(w);
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Nominal device parameters with optional per-instance distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceTemplate {
    pub base: DeviceModel,
    /// Parameters resampled for every instance, in sampling order.
    pub stochastic: Vec<(DeviceParam, StochasticParameter)>,
    pub initial: InitialState,
}

impl DeviceTemplate {
    pub fn new(base: DeviceModel) -> Self {
        DeviceTemplate { base, stochastic: Vec::new(), initial: InitialState::Off }
    }

    pub fn with_param(mut self, param: DeviceParam, dist: StochasticParameter) -> Self {
        self.stochastic.retain(|(p, _)| *p != param);
        self.stochastic.push((param, dist));
        self
    }

    /// Device-to-device spread: `r_on ~ N(r̄_on, σ)`, `r_off ~ N(r̄_off, 2σ)`,
    /// both truncated to `[MIN_RESISTANCE, ∞)`.
    pub fn with_resistance_spread(self, sigma: f64) -> Result<Self> {
        let r_on = self.base.r_on();
        let r_off = self.base.r_off();
        let lo = MIN_RESISTANCE.min(r_on);
        Ok(self
            .with_param(
                DeviceParam::ROn,
                StochasticParameter::truncated_normal(r_on, sigma, lo, f64::INFINITY)?,
            )
            .with_param(
                DeviceParam::ROff,
                StochasticParameter::truncated_normal(r_off, 2.0 * sigma, lo, f64::INFINITY)?,
            ))
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for (param, dist) in &self.stochastic {
            dist.validate()?;
            if self.base.get(*param).is_none() {
                return Err(Error::Config(format!(
                    "stochastic parameter `{}` does not exist on this model",
                    param.name()
                )));
            }
        }
        Ok(())
    }

    /// Draws one device instance.
    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Memristor> {
        let mut model = self.base.clone();
        for (param, dist) in &self.stochastic {
            model.set(*param, dist.sample(rng))?;
        }
        let init = match self.initial {
            // A nominal target can fall outside a sampled device's range.
            InitialState::Resistance(r) => {
                let (a, b) = (model.r_on(), model.r_off());
                InitialState::Resistance(r.clamp(a.min(b), a.max(b)))
            }
            other => other,
        };
        Memristor::with_initial_state(model, init)
    }
}

/// Lower truncation bound for sampled resistances, in ohms.
pub const MIN_RESISTANCE: f64 = 1.0;

/// Named parameter sets.
pub mod presets {
    use super::*;

    /// Linear ion drift with `R_ON = 1 kΩ`, `R_OFF = 2 kΩ`, `D = 10 nm`,
    /// Joglekar `p = 2` and `dt = 1 ms`.
    pub fn linear_ion_drift() -> DeviceModel {
        DeviceModel::LinearIonDrift(LinearIonDrift::default())
    }

    pub fn team() -> DeviceModel {
        DeviceModel::Vteam(Vteam::team())
    }

    pub fn pt_hf_ti() -> DeviceModel {
        DeviceModel::Vteam(Vteam::pt_hf_ti())
    }

    /// A device whose OFF conductance is negligible (`r_off / r_on = 10⁶`),
    /// so that conductance is effectively proportional to the mapped weight.
    pub fn ideal() -> DeviceModel {
        DeviceModel::Vteam(Vteam { r_on: 100.0, r_off: 1e8, ..Vteam::team() })
    }

    pub fn by_name(name: &str) -> Option<DeviceModel> {
        match name {
            "linear_ion_drift" => Some(linear_ion_drift()),
            "team" | "vteam" => Some(team()),
            "pt_hf_ti" => Some(pt_hf_ti()),
            "ideal" => Some(ideal()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_signal_leaves_state() {
        let mut m =
            Memristor::with_initial_state(presets::linear_ion_drift(), InitialState::Resistance(1500.0))
                .unwrap();
        let w0 = m.state();
        let trace = m.simulate(&VoltageSignal::Samples { values: vec![0.0; 50], dt: 1e-3 }).unwrap();
        assert!(trace.current.iter().all(|&i| i == 0.0));
        assert!(trace.state.iter().all(|&w| w == w0));
        assert_eq!(m.state(), w0);
    }

    #[test]
    fn dt_mismatch_rejected() {
        let mut m = Memristor::new(presets::team()).unwrap();
        let sig = VoltageSignal::Samples { values: vec![0.0; 4], dt: 1e-3 };
        assert!(matches!(m.simulate(&sig), Err(Error::Config(_))));
    }

    #[test]
    fn sinusoid_grid_covers_duration() {
        let sig = VoltageSignal::Sinusoid { amplitude: 1.0, frequency: 0.5, duration: 2.0 };
        let v = sig.sample(1e-3);
        assert_eq!(v.len(), 2001);
        assert!(v[500] > 0.99999);
        let mut m = Memristor::new(presets::linear_ion_drift()).unwrap();
        let trace = m.simulate(&sig).unwrap();
        assert!((trace.time.last().unwrap() - 2.0).abs() < 1e-12);
        assert!(trace.time.windows(2).all(|t| t[1] > t[0]));
    }

    #[test]
    fn template_sampling_is_seeded() {
        let t = DeviceTemplate::new(presets::team()).with_resistance_spread(10.0).unwrap();
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..10).map(|_| t.instantiate(&mut rng).unwrap()).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            (0..10).map(|_| t.instantiate(&mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
        assert!(a.windows(2).any(|p| p[0].model().r_on() != p[1].model().r_on()));
    }

    #[test]
    fn template_rejects_foreign_param() {
        let t = DeviceTemplate::new(presets::team())
            .with_param(DeviceParam::MuV, StochasticParameter::Constant(1.0));
        assert!(t.validate().is_err());
    }

    #[test]
    fn initial_state_defaults_to_off() {
        let m = Memristor::new(presets::pt_hf_ti()).unwrap();
        assert_eq!(m.resistance(), 2500.0);
    }
}
