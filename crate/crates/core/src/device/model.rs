use alloc::format;

use super::window::WindowFunction;
use crate::math::{exp, ln, powf};
use crate::{Error, Result};

/// Ideal linear ion drift memristor.
///
/// The doped region of width `w ∈ [0, d]` grows with the charge that flows
/// through the device; resistance mixes `r_on` and `r_off` linearly in `w / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearIonDrift {
    pub r_on: f64,
    pub r_off: f64,
    /// Device width in meters.
    pub d: f64,
    /// Ion mobility in m²·s⁻¹·V⁻¹.
    pub mu_v: f64,
    pub window: WindowFunction,
    pub dt: f64,
}

impl Default for LinearIonDrift {
    fn default() -> Self {
        LinearIonDrift {
            r_on: 1000.0,
            r_off: 2000.0,
            d: 10e-9,
            mu_v: 1e-16,
            window: WindowFunction::Joglekar { p: 2 },
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dependence {
    /// Resistance linear in `w`.
    #[default]
    Linear,
    /// `R = r_on · exp(λ (w − w_on)/(w_off − w_on))` with `e^λ = r_off / r_on`.
    Exponential,
}

/// Voltage-controlled threshold memristor (VTEAM).
#[derive(Debug, Clone, PartialEq)]
pub struct Vteam {
    /// Negative rate constant (m/s) of the ON branch.
    pub k_on: f64,
    /// Positive rate constant (m/s) of the OFF branch.
    pub k_off: f64,
    pub alpha_on: f64,
    pub alpha_off: f64,
    /// Negative threshold voltage.
    pub v_on: f64,
    /// Positive threshold voltage.
    pub v_off: f64,
    pub w_on: f64,
    pub w_off: f64,
    pub r_on: f64,
    pub r_off: f64,
    pub dependence: Dependence,
    pub window_on: WindowFunction,
    pub window_off: WindowFunction,
    pub dt: f64,
}

impl Vteam {
    /// Kinetics of the TEAM fit with `r_on = 50 Ω`, `r_off = 1 kΩ`.
    pub fn team() -> Self {
        Vteam {
            k_on: -10.0,
            k_off: 5e-4,
            alpha_on: 3.0,
            alpha_off: 1.0,
            v_on: -0.2,
            v_off: 0.02,
            w_on: 0.0,
            w_off: 3e-9,
            r_on: 50.0,
            r_off: 1000.0,
            dependence: Dependence::Linear,
            window_on: WindowFunction::None,
            window_off: WindowFunction::None,
            dt: 1e-10,
        }
    }

    /// Pt/Hf/Ti ReRAM resistances (100 Ω / 2.5 kΩ) on TEAM kinetics.
    pub fn pt_hf_ti() -> Self {
        Vteam { r_on: 100.0, r_off: 2500.0, ..Vteam::team() }
    }

    /// `λ = ln(r_off / r_on)`.
    pub fn lambda(&self) -> f64 {
        ln(self.r_off / self.r_on)
    }
}

/// Behavioral device model and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceModel {
    LinearIonDrift(LinearIonDrift),
    Vteam(Vteam),
}

/// Names of the numeric fields of a [`DeviceModel`], used to attach
/// stochastic distributions to individual parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceParam {
    ROn,
    ROff,
    D,
    MuV,
    KOn,
    KOff,
    AlphaOn,
    AlphaOff,
    VOn,
    VOff,
    WOn,
    WOff,
    Dt,
}

impl DeviceParam {
    pub const ALL: [DeviceParam; 13] = [
        DeviceParam::ROn,
        DeviceParam::ROff,
        DeviceParam::D,
        DeviceParam::MuV,
        DeviceParam::KOn,
        DeviceParam::KOff,
        DeviceParam::AlphaOn,
        DeviceParam::AlphaOff,
        DeviceParam::VOn,
        DeviceParam::VOff,
        DeviceParam::WOn,
        DeviceParam::WOff,
        DeviceParam::Dt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DeviceParam::ROn => "r_on",
            DeviceParam::ROff => "r_off",
            DeviceParam::D => "d",
            DeviceParam::MuV => "mu_v",
            DeviceParam::KOn => "k_on",
            DeviceParam::KOff => "k_off",
            DeviceParam::AlphaOn => "alpha_on",
            DeviceParam::AlphaOff => "alpha_off",
            DeviceParam::VOn => "v_on",
            DeviceParam::VOff => "v_off",
            DeviceParam::WOn => "w_on",
            DeviceParam::WOff => "w_off",
            DeviceParam::Dt => "dt",
        }
    }

    pub fn from_name(name: &str) -> Option<DeviceParam> {
        DeviceParam::ALL.into_iter().find(|p| p.name() == name)
    }
}

fn check_finite(v: f64, what: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl DeviceModel {
    /// Strict validation of a nominal parameter set.
    pub fn validate(&self) -> Result<()> {
        self.validate_instance()?;
        if !(self.r_off() > self.r_on()) {
            return Err(Error::Config(format!(
                "r_off ({}) must exceed r_on ({})",
                self.r_off(),
                self.r_on()
            )));
        }
        if let DeviceModel::Vteam(p) = self {
            if !(p.v_on < 0.0 && p.v_off > 0.0) {
                return Err(Error::Config("VTEAM thresholds need v_on < 0 < v_off".into()));
            }
            if !(p.k_on < 0.0 && p.k_off > 0.0) {
                return Err(Error::Config("VTEAM rates need k_on < 0 < k_off".into()));
            }
        }
        Ok(())
    }

    /// Validation of a sampled device instance.
    ///
    /// Unlike [`DeviceModel::validate`] this accepts `r_on ≥ r_off`, which
    /// happens routinely when device-to-device spreads overlap.
    pub fn validate_instance(&self) -> Result<()> {
        check_finite(self.r_on(), "r_on")?;
        check_finite(self.r_off(), "r_off")?;
        check_finite(self.dt(), "dt")?;
        if !(self.r_on() > 0.0 && self.r_off() > 0.0) {
            return Err(Error::Config("resistances must be positive".into()));
        }
        if !(self.dt() > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        match self {
            DeviceModel::LinearIonDrift(p) => {
                check_finite(p.d, "d")?;
                check_finite(p.mu_v, "mu_v")?;
                if !(p.d > 0.0) {
                    return Err(Error::Config("device width d must be positive".into()));
                }
                p.window.validate()
            }
            DeviceModel::Vteam(p) => {
                for (v, what) in [
                    (p.k_on, "k_on"),
                    (p.k_off, "k_off"),
                    (p.alpha_on, "alpha_on"),
                    (p.alpha_off, "alpha_off"),
                    (p.v_on, "v_on"),
                    (p.v_off, "v_off"),
                    (p.w_on, "w_on"),
                    (p.w_off, "w_off"),
                ] {
                    check_finite(v, what)?;
                }
                if !(p.w_on < p.w_off) {
                    return Err(Error::Config("VTEAM needs w_on < w_off".into()));
                }
                p.window_on.validate()?;
                p.window_off.validate()
            }
        }
    }

    pub fn r_on(&self) -> f64 {
        match self {
            DeviceModel::LinearIonDrift(p) => p.r_on,
            DeviceModel::Vteam(p) => p.r_on,
        }
    }

    pub fn r_off(&self) -> f64 {
        match self {
            DeviceModel::LinearIonDrift(p) => p.r_off,
            DeviceModel::Vteam(p) => p.r_off,
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            DeviceModel::LinearIonDrift(p) => p.dt,
            DeviceModel::Vteam(p) => p.dt,
        }
    }

    pub fn get(&self, param: DeviceParam) -> Option<f64> {
        use DeviceParam::*;
        match (self, param) {
            (_, ROn) => Some(self.r_on()),
            (_, ROff) => Some(self.r_off()),
            (_, Dt) => Some(self.dt()),
            (DeviceModel::LinearIonDrift(p), D) => Some(p.d),
            (DeviceModel::LinearIonDrift(p), MuV) => Some(p.mu_v),
            (DeviceModel::Vteam(p), KOn) => Some(p.k_on),
            (DeviceModel::Vteam(p), KOff) => Some(p.k_off),
            (DeviceModel::Vteam(p), AlphaOn) => Some(p.alpha_on),
            (DeviceModel::Vteam(p), AlphaOff) => Some(p.alpha_off),
            (DeviceModel::Vteam(p), VOn) => Some(p.v_on),
            (DeviceModel::Vteam(p), VOff) => Some(p.v_off),
            (DeviceModel::Vteam(p), WOn) => Some(p.w_on),
            (DeviceModel::Vteam(p), WOff) => Some(p.w_off),
            _ => None,
        }
    }

    /// Sets a numeric field; errors when the model has no such parameter.
    pub fn set(&mut self, param: DeviceParam, value: f64) -> Result<()> {
        use DeviceParam::*;
        let slot = match (self, param) {
            (DeviceModel::LinearIonDrift(p), ROn) => &mut p.r_on,
            (DeviceModel::LinearIonDrift(p), ROff) => &mut p.r_off,
            (DeviceModel::LinearIonDrift(p), Dt) => &mut p.dt,
            (DeviceModel::LinearIonDrift(p), D) => &mut p.d,
            (DeviceModel::LinearIonDrift(p), MuV) => &mut p.mu_v,
            (DeviceModel::Vteam(p), ROn) => &mut p.r_on,
            (DeviceModel::Vteam(p), ROff) => &mut p.r_off,
            (DeviceModel::Vteam(p), Dt) => &mut p.dt,
            (DeviceModel::Vteam(p), KOn) => &mut p.k_on,
            (DeviceModel::Vteam(p), KOff) => &mut p.k_off,
            (DeviceModel::Vteam(p), AlphaOn) => &mut p.alpha_on,
            (DeviceModel::Vteam(p), AlphaOff) => &mut p.alpha_off,
            (DeviceModel::Vteam(p), VOn) => &mut p.v_on,
            (DeviceModel::Vteam(p), VOff) => &mut p.v_off,
            (DeviceModel::Vteam(p), WOn) => &mut p.w_on,
            (DeviceModel::Vteam(p), WOff) => &mut p.w_off,
            (_, param) => {
                return Err(Error::Config(format!(
                    "parameter `{}` does not exist on this device model",
                    param.name()
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    pub fn set_r_on(&mut self, r: f64) {
        match self {
            DeviceModel::LinearIonDrift(p) => p.r_on = r,
            DeviceModel::Vteam(p) => p.r_on = r,
        }
    }

    pub fn set_r_off(&mut self, r: f64) {
        match self {
            DeviceModel::LinearIonDrift(p) => p.r_off = r,
            DeviceModel::Vteam(p) => p.r_off = r,
        }
    }

    /// Legal interval of the state variable.
    pub fn state_bounds(&self) -> (f64, f64) {
        match self {
            DeviceModel::LinearIonDrift(p) => (0.0, p.d),
            DeviceModel::Vteam(p) => (p.w_on, p.w_off),
        }
    }

    /// State at which the device shows `r_on`.
    pub fn on_state(&self) -> f64 {
        match self {
            DeviceModel::LinearIonDrift(p) => p.d,
            DeviceModel::Vteam(p) => p.w_on,
        }
    }

    /// State at which the device shows `r_off`.
    pub fn off_state(&self) -> f64 {
        match self {
            DeviceModel::LinearIonDrift(_) => 0.0,
            DeviceModel::Vteam(p) => p.w_off,
        }
    }

    /// Sign of the voltage that lowers the resistance (moves toward `r_on`).
    pub fn set_polarity(&self) -> f64 {
        match self {
            DeviceModel::LinearIonDrift(_) => 1.0,
            DeviceModel::Vteam(_) => -1.0,
        }
    }

    /// Magnitude below which a voltage of the given sign leaves the state untouched.
    pub fn threshold(&self, voltage_sign: f64) -> f64 {
        match self {
            DeviceModel::LinearIonDrift(_) => 0.0,
            DeviceModel::Vteam(p) => {
                if voltage_sign >= 0.0 {
                    p.v_off
                } else {
                    -p.v_on
                }
            }
        }
    }

    pub fn clamp_state(&self, w: f64) -> f64 {
        let (lo, hi) = self.state_bounds();
        w.clamp(lo, hi)
    }

    fn normalized(&self, w: f64) -> f64 {
        let (lo, hi) = self.state_bounds();
        ((w - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// Resistance at state `w`.
    pub fn resistance(&self, w: f64) -> f64 {
        match self {
            DeviceModel::LinearIonDrift(p) => {
                let x = w / p.d;
                p.r_on * x + p.r_off * (1.0 - x)
            }
            DeviceModel::Vteam(p) => {
                let x = (w - p.w_on) / (p.w_off - p.w_on);
                match p.dependence {
                    Dependence::Linear => p.r_on + (p.r_off - p.r_on) * x,
                    Dependence::Exponential => p.r_on * exp(p.lambda() * x),
                }
            }
        }
    }

    pub fn conductance(&self, w: f64) -> f64 {
        1.0 / self.resistance(w)
    }

    /// Inverse of [`DeviceModel::resistance`].
    ///
    /// The target must lie between `r_on` and `r_off` (in either order, since
    /// sampled devices may have them swapped).
    pub fn state_for_resistance(&self, r: f64) -> Result<f64> {
        let (r_on, r_off) = (self.r_on(), self.r_off());
        let (lo, hi) = if r_on <= r_off { (r_on, r_off) } else { (r_off, r_on) };
        // Reciprocal round trips (1/(1/r)) may land an ulp outside the range.
        let slack = 1e-12;
        if !(r >= lo * (1.0 - slack) && r <= hi * (1.0 + slack)) {
            return Err(Error::OutOfRange { what: "target resistance", value: r, min: lo, max: hi });
        }
        if (r - r_on).abs() <= slack * r_on {
            return Ok(self.on_state());
        }
        if (r - r_off).abs() <= slack * r_off {
            return Ok(self.off_state());
        }
        let r = r.clamp(lo, hi);
        if r_on == r_off {
            return Ok(self.off_state());
        }
        let w = match self {
            DeviceModel::LinearIonDrift(p) => p.d * (p.r_off - r) / (p.r_off - p.r_on),
            DeviceModel::Vteam(p) => {
                let x = match p.dependence {
                    Dependence::Linear => (r - p.r_on) / (p.r_off - p.r_on),
                    Dependence::Exponential => ln(r / p.r_on) / p.lambda(),
                };
                p.w_on + x * (p.w_off - p.w_on)
            }
        };
        Ok(self.clamp_state(w))
    }

    /// Time derivative of the state for voltage `v` and current `i`.
    pub fn state_derivative(&self, w: f64, v: f64, i: f64) -> Result<f64> {
        let x = self.normalized(w);
        match self {
            DeviceModel::LinearIonDrift(p) => {
                let sign = if i > 0.0 {
                    1.0
                } else if i < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                Ok(p.mu_v * p.r_on / p.d * i * p.window.eval(x, sign)?)
            }
            DeviceModel::Vteam(p) => {
                if v > p.v_off {
                    let drive = powf(v / p.v_off - 1.0, p.alpha_off);
                    Ok(p.k_off * drive * p.window_off.eval(x, 1.0)?)
                } else if v < p.v_on {
                    let drive = powf(v / p.v_on - 1.0, p.alpha_on);
                    Ok(p.k_on * drive * p.window_on.eval(x, -1.0)?)
                } else {
                    Ok(0.0)
                }
            }
        }
    }

    /// One explicit Euler step. Returns the clamped new state and the current
    /// flowing at the start of the step.
    pub fn step(&self, w: f64, v: f64, dt: f64) -> Result<(f64, f64)> {
        if !v.is_finite() {
            return Err(Error::NonFinite("voltage"));
        }
        let i = v / self.resistance(w);
        let dw = self.state_derivative(w, v, i)?;
        if dw == 0.0 {
            return Ok((w, i));
        }
        Ok((self.clamp_state(w + dt * dw), i))
    }
}
