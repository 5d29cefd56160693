//! Crossbar arrays: device grids, programming, and current readout.
//!
//! A crossbar has `rows` word lines (inputs) and `cols` bit lines (outputs).
//! Device `(i, j)` sits at row-major index `i * cols + j`. Every mutation
//! goes through methods that refresh the conductance cache of the touched
//! devices, so readout never sees stale values.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::device::{DeviceTemplate, Memristor};
use crate::linalg::Matrix;
use crate::math::ceil;
use crate::nonideality::nonlinear::{self, Readout};
use crate::nonideality::variability;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arrangement {
    /// Bare resistor at each crosspoint.
    OneR,
    /// One access transistor per device, allowing individual selection.
    #[default]
    OneT1R,
}

/// Permanent fault of a device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StuckAt {
    On,
    Off,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProgramReport {
    /// Targets outside the device's reachable range, clamped to the nearest bound.
    pub clamped: usize,
    /// Stuck devices that ignored their target.
    pub skipped_stuck: usize,
    /// Total programming pulses applied.
    pub pulses: usize,
    /// `(row, col)` of devices that missed the tolerance.
    pub unconverged: Vec<(usize, usize)>,
}

impl ProgramReport {
    pub fn merge(&mut self, other: ProgramReport) {
        self.clamped += other.clamped;
        self.skipped_stuck += other.skipped_stuck;
        self.pulses += other.pulses;
        self.unconverged.extend(other.unconverged);
    }
}

/// Parameters of closed-loop pulse programming.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseConfig {
    /// Relative conductance tolerance.
    pub tolerance: f64,
    pub max_pulses: usize,
    /// Peak pulse amplitude in volts.
    pub amplitude: f64,
    /// Pulse width in seconds.
    pub duration: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        PulseConfig { tolerance: 0.01, max_pulses: 1000, amplitude: 1.0, duration: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CycleVariability {
    pub sigma: f64,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossbar {
    rows: usize,
    cols: usize,
    arrangement: Arrangement,
    devices: Vec<Memristor>,
    stuck: Vec<Option<StuckAt>>,
    conductance: Vec<f64>,
    cycle: Option<CycleVariability>,
    finite_states: Option<usize>,
    readout: Readout,
}

impl Crossbar {
    /// Instantiates `rows × cols` devices from `template`, each with its own
    /// draw of the template's stochastic parameters (row-major order).
    pub fn build<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        template: &DeviceTemplate,
        arrangement: Arrangement,
        rng: &mut R,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config("crossbar dimensions must be at least 1x1".into()));
        }
        template.validate()?;
        let devices =
            (0..rows * cols).map(|_| template.instantiate(rng)).collect::<Result<Vec<_>>>()?;
        Self::from_devices(rows, cols, devices, arrangement)
    }

    pub fn from_devices(
        rows: usize,
        cols: usize,
        devices: Vec<Memristor>,
        arrangement: Arrangement,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Config("crossbar dimensions must be at least 1x1".into()));
        }
        if devices.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} devices for a {rows}x{cols} crossbar",
                devices.len()
            )));
        }
        let conductance = devices.iter().map(Memristor::conductance).collect();
        Ok(Crossbar {
            rows,
            cols,
            arrangement,
            stuck: vec![None; devices.len()],
            devices,
            conductance,
            cycle: None,
            finite_states: None,
            readout: Readout::Ideal,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn arrangement(&self) -> Arrangement {
        self.arrangement
    }

    pub fn devices(&self) -> &[Memristor] {
        &self.devices
    }

    pub fn device(&self, row: usize, col: usize) -> &Memristor {
        &self.devices[row * self.cols + col]
    }

    /// Cached conductances, row-major.
    pub fn conductances(&self) -> &[f64] {
        &self.conductance
    }

    pub fn conductance_matrix(&self) -> Matrix {
        Matrix::from_vec(self.rows, self.cols, self.conductance.clone()).expect("cache shape")
    }

    pub fn stuck(&self) -> &[Option<StuckAt>] {
        &self.stuck
    }

    pub fn finite_states(&self) -> Option<usize> {
        self.finite_states
    }

    pub(crate) fn set_finite_states(&mut self, n: Option<usize>) {
        self.finite_states = n;
    }

    pub fn readout(&self) -> &Readout {
        &self.readout
    }

    pub fn set_readout(&mut self, readout: Readout) {
        self.readout = readout;
    }

    pub fn cycle_sigma(&self) -> Option<f64> {
        self.cycle.as_ref().map(|c| c.sigma)
    }

    /// Resample `r_on`/`r_off` after every programming cycle from now on.
    pub fn enable_cycle_variability(&mut self, sigma: f64, seed: u64) {
        self.cycle = Some(CycleVariability { sigma, rng: ChaCha8Rng::seed_from_u64(seed) });
    }

    pub fn disable_cycle_variability(&mut self) {
        self.cycle = None;
    }

    /// Mutates device `idx` and refreshes its cache entry.
    pub(crate) fn with_device<T>(&mut self, idx: usize, f: impl FnOnce(&mut Memristor) -> T) -> T {
        let out = f(&mut self.devices[idx]);
        self.conductance[idx] = self.devices[idx].conductance();
        out
    }

    pub(crate) fn pin(&mut self, idx: usize, at: StuckAt) {
        self.with_device(idx, |d| {
            let w = match at {
                StuckAt::On => d.model().on_state(),
                StuckAt::Off => d.model().off_state(),
            };
            d.set_state(w);
        });
        self.stuck[idx] = Some(at);
    }

    /// Restores stuck flags and per-device state, e.g. when importing a saved crossbar.
    pub fn set_stuck(&mut self, idx: usize, at: Option<StuckAt>) {
        match at {
            Some(at) => self.pin(idx, at),
            None => self.stuck[idx] = None,
        }
    }

    fn check_targets(&self, targets: &Matrix) -> Result<()> {
        if targets.shape() != (self.rows, self.cols) {
            return Err(Error::Shape(format!(
                "target {}x{} for a {}x{} crossbar",
                targets.rows(),
                targets.cols(),
                self.rows,
                self.cols
            )));
        }
        if targets.as_slice().iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Config("target conductances must be positive and finite".into()));
        }
        Ok(())
    }

    /// Sets each device directly to its target conductance.
    ///
    /// Only valid for 1T1R arrays, where devices can be selected
    /// individually. Targets outside a device's range are clamped and counted.
    pub fn program_naive(&mut self, targets: &Matrix) -> Result<ProgramReport> {
        if self.arrangement == Arrangement::OneR {
            return Err(Error::Config(
                "naive programming needs a 1T1R arrangement; use pulsed programming for 1R".into(),
            ));
        }
        self.check_targets(targets)?;
        let mut report = ProgramReport::default();
        for idx in 0..self.devices.len() {
            if self.stuck[idx].is_some() {
                report.skipped_stuck += 1;
                continue;
            }
            let (lo, hi) = self.devices[idx].conductance_range();
            let t = targets.as_slice()[idx];
            let g = t.clamp(lo, hi);
            if g != t {
                report.clamped += 1;
            }
            self.with_device(idx, |d| d.set_to_conductance(g))?;
        }
        self.end_programming_cycle();
        Ok(report)
    }

    /// Closed-loop programming with voltage pulses simulated on each device.
    ///
    /// Each pulse moves the device toward its target; the overdrive above the
    /// switching threshold is halved whenever a pulse overshoots. Half-select
    /// disturbance of neighbouring devices in 1R arrays is not modeled.
    pub fn program_pulsed(&mut self, targets: &Matrix, cfg: &PulseConfig) -> Result<ProgramReport> {
        if cfg.max_pulses == 0 {
            return Err(Error::Config("max_pulses must be at least 1".into()));
        }
        if !(cfg.tolerance > 0.0 && cfg.amplitude > 0.0 && cfg.duration > 0.0) {
            return Err(Error::Config("pulse tolerance, amplitude and duration must be positive".into()));
        }
        self.check_targets(targets)?;
        let mut report = ProgramReport::default();
        for idx in 0..self.devices.len() {
            if self.stuck[idx].is_some() {
                report.skipped_stuck += 1;
                continue;
            }
            let (lo, hi) = self.devices[idx].conductance_range();
            let t = targets.as_slice()[idx];
            let g = t.clamp(lo, hi);
            if g != t {
                report.clamped += 1;
            }
            let (pulses, ok) = self.with_device(idx, |d| pulse_device(d, g, cfg))?;
            report.pulses += pulses;
            if !ok {
                report.unconverged.push((idx / self.cols, idx % self.cols));
            }
        }
        self.end_programming_cycle();
        Ok(report)
    }

    fn end_programming_cycle(&mut self) {
        if let Some(mut cycle) = self.cycle.take() {
            variability::resample_cycle(self, cycle.sigma, &mut cycle.rng);
            self.cycle = Some(cycle);
        }
    }

    /// Ideal Ohmic readout from the conductance cache:
    /// `I_j = Σ_i v_i · g_ij`.
    pub fn read_currents(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_voltages(v)?;
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let row = &self.conductance[i * self.cols..(i + 1) * self.cols];
            for (o, g) in out.iter_mut().zip(row) {
                *o += vi * g;
            }
        }
        Ok(out)
    }

    /// Column currents under the configured readout model.
    pub fn read(&self, v: &[f64]) -> Result<Vec<f64>> {
        match &self.readout {
            Readout::Ideal => self.read_currents(v),
            other => {
                self.check_voltages(v)?;
                nonlinear::read_currents(self, other, v)
            }
        }
    }

    fn check_voltages(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.rows {
            return Err(Error::Shape(format!(
                "{} input voltages for {} word lines",
                v.len(),
                self.rows
            )));
        }
        Ok(())
    }
}

/// Returns `(pulses applied, converged)`.
fn pulse_device(d: &mut Memristor, target: f64, cfg: &PulseConfig) -> Result<(usize, bool)> {
    let dt = d.model().dt();
    let steps = (ceil(cfg.duration / dt) as usize).max(1);
    let mut overdrive = 1.0;
    let mut last_dir = 0.0;
    for pulse in 0..cfg.max_pulses {
        let g = d.conductance();
        if ((g - target) / target).abs() <= cfg.tolerance {
            return Ok((pulse, true));
        }
        let dir = if g < target { 1.0 } else { -1.0 };
        if last_dir != 0.0 && dir != last_dir {
            overdrive *= 0.5;
        }
        last_dir = dir;
        let polarity = d.model().set_polarity() * dir;
        let threshold = d.model().threshold(polarity);
        if cfg.amplitude <= threshold || overdrive < 1e-12 {
            return Ok((pulse, false));
        }
        let v = polarity * (threshold + (cfg.amplitude - threshold) * overdrive);
        for _ in 0..steps {
            d.step_dt(v, dt)?;
        }
    }
    let g = d.conductance();
    Ok((cfg.max_pulses, ((g - target) / target).abs() <= cfg.tolerance))
}

/// Affine correction `slope · raw + intercept` fitted per layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningTransform {
    pub slope: f64,
    pub intercept: f64,
}

impl TuningTransform {
    pub const IDENTITY: TuningTransform = TuningTransform { slope: 1.0, intercept: 0.0 };

    #[inline]
    pub fn apply(&self, raw: f64) -> f64 {
        self.slope * raw + self.intercept
    }
}

impl Default for TuningTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// How signed weights are laid out on non-negative conductances.
#[derive(Debug, Clone, PartialEq)]
pub enum RepresentationScheme {
    /// Positive and negative parts on two crossbars; output is their difference.
    DoubleColumn { pos: Crossbar, neg: Crossbar },
    /// One crossbar; a reference conductance `g_m` per row is subtracted.
    SingleColumn { xbar: Crossbar, g_m: f64 },
}

impl RepresentationScheme {
    pub fn double_column(pos: Crossbar, neg: Crossbar) -> Result<Self> {
        if (pos.rows(), pos.cols()) != (neg.rows(), neg.cols()) {
            return Err(Error::Config(format!(
                "paired crossbars differ: {}x{} vs {}x{}",
                pos.rows(),
                pos.cols(),
                neg.rows(),
                neg.cols()
            )));
        }
        Ok(RepresentationScheme::DoubleColumn { pos, neg })
    }

    pub fn rows(&self) -> usize {
        match self {
            RepresentationScheme::DoubleColumn { pos, .. } => pos.rows(),
            RepresentationScheme::SingleColumn { xbar, .. } => xbar.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            RepresentationScheme::DoubleColumn { pos, .. } => pos.cols(),
            RepresentationScheme::SingleColumn { xbar, .. } => xbar.cols(),
        }
    }

    pub fn crossbars(&self) -> Vec<&Crossbar> {
        match self {
            RepresentationScheme::DoubleColumn { pos, neg } => vec![pos, neg],
            RepresentationScheme::SingleColumn { xbar, .. } => vec![xbar],
        }
    }

    pub fn crossbars_mut(&mut self) -> Vec<&mut Crossbar> {
        match self {
            RepresentationScheme::DoubleColumn { pos, neg } => vec![pos, neg],
            RepresentationScheme::SingleColumn { xbar, .. } => vec![xbar],
        }
    }

    /// Untransformed output for one input row.
    pub fn raw_row(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            RepresentationScheme::DoubleColumn { pos, neg } => {
                let mut out = pos.read(v)?;
                for (o, n) in out.iter_mut().zip(neg.read(v)?) {
                    *o -= n;
                }
                Ok(out)
            }
            RepresentationScheme::SingleColumn { xbar, g_m } => {
                let reference = g_m * v.iter().sum::<f64>();
                let mut out = xbar.read(v)?;
                for o in &mut out {
                    *o -= reference;
                }
                Ok(out)
            }
        }
    }
}

/// Untransformed crossbar outputs for a `batch × rows` voltage block,
/// presenting one row at a time.
pub fn vmm_raw(scheme: &RepresentationScheme, a: &Matrix) -> Result<Matrix> {
    if a.cols() != scheme.rows() {
        return Err(Error::Shape(format!(
            "input has {} columns, crossbar has {} rows",
            a.cols(),
            scheme.rows()
        )));
    }
    let mut out = Matrix::zeros(a.rows(), scheme.cols());
    for r in 0..a.rows() {
        let row = scheme.raw_row(a.row(r))?;
        out.row_mut(r).copy_from_slice(&row);
    }
    Ok(out)
}

/// Crossbar vector-matrix product followed by the tuning transform.
pub fn vmm(scheme: &RepresentationScheme, a: &Matrix, transform: &TuningTransform) -> Result<Matrix> {
    let raw = vmm_raw(scheme, a)?;
    Ok(raw.map(|x| transform.apply(x)))
}
