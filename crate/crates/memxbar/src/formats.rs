//! JSON and CSV interchange formats.

use std::io::{Read, Write};

use memxbar_core::crossbar::{Arrangement, Crossbar, RepresentationScheme, StuckAt};
use memxbar_core::device::{
    presets, Dependence, DeviceModel, DeviceParam, DeviceTemplate, InitialState, Memristor,
    SimulationTrace, StochasticParameter, WindowFunction,
};
use memxbar_core::network::{BatchNorm1d, Conv2d, ConvGeometry, Dense, Layer, Network};
use memxbar_core::Matrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{HarnessError, Result};

// ---------------------------------------------------------------------------
// Devices

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum WindowJson {
    None,
    Joglekar { p: u32 },
    Biolek { p: u32 },
    Prodromakis { p: f64, j: f64 },
}

impl From<WindowJson> for WindowFunction {
    fn from(w: WindowJson) -> Self {
        match w {
            WindowJson::None => WindowFunction::None,
            WindowJson::Joglekar { p } => WindowFunction::Joglekar { p },
            WindowJson::Biolek { p } => WindowFunction::Biolek { p },
            WindowJson::Prodromakis { p, j } => WindowFunction::Prodromakis { p, j },
        }
    }
}

impl From<WindowFunction> for WindowJson {
    fn from(w: WindowFunction) -> Self {
        match w {
            WindowFunction::None => WindowJson::None,
            WindowFunction::Joglekar { p } => WindowJson::Joglekar { p },
            WindowFunction::Biolek { p } => WindowJson::Biolek { p },
            WindowFunction::Prodromakis { p, j } => WindowJson::Prodromakis { p, j },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncatedNormalJson {
    dist: String,
    mean: f64,
    std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
}

fn parse_stochastic(v: &Value, key: &str) -> Result<StochasticParameter> {
    if let Some(x) = v.as_f64() {
        return Ok(StochasticParameter::Constant(x));
    }
    let tn: TruncatedNormalJson = serde_json::from_value(v.clone())
        .map_err(|e| HarnessError::config(format!("device parameter `{key}`: {e}")))?;
    if tn.dist != "truncated_normal" {
        return Err(HarnessError::config(format!(
            "device parameter `{key}`: unknown distribution `{}`",
            tn.dist
        )));
    }
    let p = StochasticParameter::truncated_normal(
        tn.mean,
        tn.std,
        tn.min.unwrap_or(f64::NEG_INFINITY),
        tn.max.unwrap_or(f64::INFINITY),
    )
    .map_err(|e| HarnessError::config(format!("device parameter `{key}`: {e}")))?;
    Ok(p)
}

fn stochastic_to_json(p: &StochasticParameter) -> Value {
    match *p {
        StochasticParameter::Constant(v) => json!(v),
        StochasticParameter::TruncatedNormal { mean, std_dev, min, max } => {
            let mut m = json!({ "dist": "truncated_normal", "mean": mean, "std": std_dev });
            if min.is_finite() {
                m["min"] = json!(min);
            }
            if max.is_finite() {
                m["max"] = json!(max);
            }
            m
        }
    }
}

fn model_name(m: &DeviceModel) -> &'static str {
    match m {
        DeviceModel::LinearIonDrift(_) => "linear_ion_drift",
        DeviceModel::Vteam(_) => "vteam",
    }
}

fn window_from(v: &Value, key: &str) -> Result<WindowFunction> {
    let w: WindowJson = serde_json::from_value(v.clone())
        .map_err(|e| HarnessError::config(format!("`{key}`: {e}")))?;
    Ok(w.into())
}

/// Parses a device description.
///
/// Accepts a preset name (`"team"`, `"pt_hf_ti"`, `"linear_ion_drift"`,
/// `"ideal"`) or an object with `"model"` and/or `"preset"` plus parameter
/// overrides. Parameters may be numbers or truncated-normal distributions.
pub fn device_template_from_json(v: &Value) -> Result<DeviceTemplate> {
    if let Some(name) = v.as_str() {
        let model = presets::by_name(name)
            .ok_or_else(|| HarnessError::config(format!("unknown device preset `{name}`")))?;
        return Ok(DeviceTemplate::new(model));
    }
    let obj = v
        .as_object()
        .ok_or_else(|| HarnessError::config("device must be a preset name or an object"))?;
    let preset = match obj.get("preset") {
        Some(p) => {
            let name = p.as_str().ok_or_else(|| HarnessError::config("`preset` must be a string"))?;
            Some(
                presets::by_name(name)
                    .ok_or_else(|| HarnessError::config(format!("unknown device preset `{name}`")))?,
            )
        }
        None => None,
    };
    let mut model = match (obj.get("model").map(|m| m.as_str()), preset) {
        (Some(Some(kind)), preset) => {
            let base = match kind {
                "linear_ion_drift" => presets::linear_ion_drift(),
                "vteam" => presets::team(),
                other => return Err(HarnessError::config(format!("unknown device model `{other}`"))),
            };
            match preset {
                Some(p) if model_name(&p) != kind => {
                    return Err(HarnessError::config(format!(
                        "preset is a {} device but model says {kind}",
                        model_name(&p)
                    )))
                }
                Some(p) => p,
                None => base,
            }
        }
        (Some(None), _) => return Err(HarnessError::config("`model` must be a string")),
        (None, Some(p)) => p,
        (None, None) => return Err(HarnessError::config("device object needs `model` or `preset`")),
    };

    let mut stochastic = Vec::new();
    let mut initial = InitialState::Off;
    for (key, val) in obj {
        match key.as_str() {
            "model" | "preset" => {}
            "dependence" => {
                let DeviceModel::Vteam(p) = &mut model else {
                    return Err(HarnessError::config("`dependence` only applies to vteam devices"));
                };
                p.dependence = match val.as_str() {
                    Some("linear") => Dependence::Linear,
                    Some("exponential") => Dependence::Exponential,
                    _ => return Err(HarnessError::config("`dependence` must be \"linear\" or \"exponential\"")),
                };
            }
            "window" => {
                let w = window_from(val, key)?;
                match &mut model {
                    DeviceModel::LinearIonDrift(p) => p.window = w,
                    DeviceModel::Vteam(p) => {
                        p.window_on = w;
                        p.window_off = w;
                    }
                }
            }
            "window_on" | "window_off" => {
                let w = window_from(val, key)?;
                let DeviceModel::Vteam(p) = &mut model else {
                    return Err(HarnessError::config(format!("`{key}` only applies to vteam devices")));
                };
                if key == "window_on" {
                    p.window_on = w;
                } else {
                    p.window_off = w;
                }
            }
            "initial" => {
                initial = match val {
                    Value::String(s) if s == "off" => InitialState::Off,
                    Value::String(s) if s == "on" => InitialState::On,
                    Value::Object(m) if m.len() == 1 && m.get("resistance").is_some_and(Value::is_number) => {
                        InitialState::Resistance(m["resistance"].as_f64().unwrap_or(f64::NAN))
                    }
                    _ => {
                        return Err(HarnessError::config(
                            "`initial` must be \"off\", \"on\" or {\"resistance\": ohms}",
                        ))
                    }
                };
            }
            name => {
                let param = DeviceParam::from_name(name)
                    .filter(|p| model.get(*p).is_some())
                    .ok_or_else(|| {
                        HarnessError::config(format!("unknown {} parameter `{name}`", model_name(&model)))
                    })?;
                match parse_stochastic(val, name)? {
                    StochasticParameter::Constant(x) => model.set(param, x)?,
                    dist => {
                        model.set(param, dist.mean())?;
                        stochastic.push((param, dist));
                    }
                }
            }
        }
    }
    let mut t = DeviceTemplate::new(model);
    for (p, d) in stochastic {
        t = t.with_param(p, d);
    }
    t.initial = initial;
    t.validate()?;
    Ok(t)
}

pub fn device_template_to_json(t: &DeviceTemplate) -> Value {
    let mut m = Map::new();
    m.insert("model".into(), json!(model_name(&t.base)));
    for p in DeviceParam::ALL {
        if let Some(v) = t.base.get(p) {
            let val = t
                .stochastic
                .iter()
                .find(|(q, _)| *q == p)
                .map_or_else(|| json!(v), |(_, d)| stochastic_to_json(d));
            m.insert(p.name().into(), val);
        }
    }
    match &t.base {
        DeviceModel::LinearIonDrift(p) => {
            m.insert("window".into(), json!(WindowJson::from(p.window)));
        }
        DeviceModel::Vteam(p) => {
            let dep = match p.dependence {
                Dependence::Linear => "linear",
                Dependence::Exponential => "exponential",
            };
            m.insert("dependence".into(), json!(dep));
            m.insert("window_on".into(), json!(WindowJson::from(p.window_on)));
            m.insert("window_off".into(), json!(WindowJson::from(p.window_off)));
        }
    }
    let init = match t.initial {
        InitialState::Off => json!("off"),
        InitialState::On => json!("on"),
        InitialState::Resistance(r) => json!({ "resistance": r }),
    };
    m.insert("initial".into(), init);
    Value::Object(m)
}

pub fn write_trace_csv<W: Write>(trace: &SimulationTrace, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "v", "i", "w"])?;
    for k in 0..trace.len() {
        w.write_record(&[
            trace.time[k].to_string(),
            trace.voltage[k].to_string(),
            trace.current[k].to_string(),
            trace.state[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<SimulationTrace> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["t", "v", "i", "w"] {
        return Err(HarnessError::input("trace CSV header must be t,v,i,w"));
    }
    let mut trace = SimulationTrace::default();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| HarnessError::input("malformed trace row"))
        };
        trace.time.push(num(0)?);
        trace.voltage.push(num(1)?);
        trace.current.push(num(2)?);
        trace.state.push(num(3)?);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Crossbars

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StuckJson {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceStateJson {
    pub r_on: f64,
    pub r_off: f64,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stuck: Option<StuckJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossbarJson {
    pub rows: usize,
    pub cols: usize,
    pub arrangement: String,
    /// Shared model parameters; `r_on`, `r_off` and the state are per device.
    pub device: Value,
    pub devices: Vec<DeviceStateJson>,
}

fn arrangement_name(a: Arrangement) -> &'static str {
    match a {
        Arrangement::OneR => "1r",
        Arrangement::OneT1R => "1t1r",
    }
}

pub fn parse_arrangement(s: &str) -> Result<Arrangement> {
    match s {
        "1r" => Ok(Arrangement::OneR),
        "1t1r" => Ok(Arrangement::OneT1R),
        other => Err(HarnessError::config(format!("unknown arrangement `{other}` (expected 1r or 1t1r)"))),
    }
}

pub fn crossbar_to_json(x: &Crossbar) -> CrossbarJson {
    let base = x.device(0, 0).model().clone();
    let devices = x
        .devices()
        .iter()
        .zip(x.stuck())
        .map(|(d, s)| DeviceStateJson {
            r_on: d.model().r_on(),
            r_off: d.model().r_off(),
            w: d.state(),
            stuck: s.map(|s| match s {
                StuckAt::On => StuckJson::On,
                StuckAt::Off => StuckJson::Off,
            }),
        })
        .collect();
    CrossbarJson {
        rows: x.rows(),
        cols: x.cols(),
        arrangement: arrangement_name(x.arrangement()).into(),
        device: device_template_to_json(&DeviceTemplate::new(base)),
        devices,
    }
}

pub fn crossbar_from_json(j: &CrossbarJson) -> Result<Crossbar> {
    let base = device_template_from_json(&j.device)?.base;
    let devices = j
        .devices
        .iter()
        .map(|d| {
            let mut model = base.clone();
            model.set(DeviceParam::ROn, d.r_on)?;
            model.set(DeviceParam::ROff, d.r_off)?;
            model.validate_instance()?;
            let mut m = Memristor::new(model)?;
            let (lo, hi) = m.model().state_bounds();
            if !(lo..=hi).contains(&d.w) {
                return Err(HarnessError::input(format!("device state {} outside [{lo}, {hi}]", d.w)));
            }
            m.set_state(d.w);
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = Crossbar::from_devices(j.rows, j.cols, devices, parse_arrangement(&j.arrangement)?)?;
    for (k, d) in j.devices.iter().enumerate() {
        if let Some(s) = d.stuck {
            x.set_stuck(k, Some(if s == StuckJson::On { StuckAt::On } else { StuckAt::Off }));
        }
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeJson {
    DoubleColumn { positive: CrossbarJson, negative: CrossbarJson },
    SingleColumn { g_m: f64, crossbar: CrossbarJson },
}

pub fn scheme_to_json(s: &RepresentationScheme) -> SchemeJson {
    match s {
        RepresentationScheme::DoubleColumn { pos, neg } => {
            SchemeJson::DoubleColumn { positive: crossbar_to_json(pos), negative: crossbar_to_json(neg) }
        }
        RepresentationScheme::SingleColumn { xbar, g_m } => {
            SchemeJson::SingleColumn { g_m: *g_m, crossbar: crossbar_to_json(xbar) }
        }
    }
}

pub fn scheme_from_json(j: &SchemeJson) -> Result<RepresentationScheme> {
    Ok(match j {
        SchemeJson::DoubleColumn { positive, negative } => {
            RepresentationScheme::double_column(crossbar_from_json(positive)?, crossbar_from_json(negative)?)?
        }
        SchemeJson::SingleColumn { g_m, crossbar } => {
            RepresentationScheme::SingleColumn { xbar: crossbar_from_json(crossbar)?, g_m: *g_m }
        }
    })
}

/// Row-major conductance matrix in siemens, no header.
pub fn write_conductance_csv<W: Write>(x: &Crossbar, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for r in 0..x.rows() {
        w.write_record(x.conductances()[r * x.cols()..(r + 1) * x.cols()].iter().map(|g| g.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_conductance_csv<R: Read>(reader: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(HarnessError::input("ragged conductance CSV"));
        }
        for f in rec.iter() {
            data.push(f.trim().parse::<f64>().map_err(|_| HarnessError::input(format!("`{f}` is not a number")))?);
        }
        rows += 1;
    }
    Ok(Matrix::from_vec(rows, cols.unwrap_or(0), data)?)
}

// ---------------------------------------------------------------------------
// Network weights

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerJson {
    Dense {
        #[serde(rename = "in")]
        in_features: usize,
        #[serde(rename = "out")]
        out_features: usize,
        /// Row-major `out × in`.
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Conv2d {
        in_channels: usize,
        input: [usize; 2],
        kernel: [usize; 2],
        stride: usize,
        padding: usize,
        out_channels: usize,
        /// `[out][in][kh][kw]`, row-major.
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    BatchNorm {
        features: usize,
        gamma: Vec<f64>,
        beta: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
        eps: f64,
    },
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsJson {
    pub layers: Vec<LayerJson>,
}

pub fn network_to_json(net: &Network) -> Result<WeightsJson> {
    let layers = net
        .layers
        .iter()
        .map(|l| {
            Ok(match l {
                Layer::Dense(d) => LayerJson::Dense {
                    in_features: d.in_features(),
                    out_features: d.out_features(),
                    weights: d.weights.as_slice().to_vec(),
                    bias: d.bias.clone(),
                },
                Layer::Conv2d(c) => LayerJson::Conv2d {
                    in_channels: c.geometry.in_channels,
                    input: [c.geometry.input.0, c.geometry.input.1],
                    kernel: [c.geometry.kernel.0, c.geometry.kernel.1],
                    stride: c.geometry.stride,
                    padding: c.geometry.padding,
                    out_channels: c.out_channels,
                    weights: c.kernels.clone(),
                    bias: c.bias.clone(),
                },
                Layer::BatchNorm1d(b) => LayerJson::BatchNorm {
                    features: b.features(),
                    gamma: b.gamma.clone(),
                    beta: b.beta.clone(),
                    running_mean: b.running_mean.clone(),
                    running_var: b.running_var.clone(),
                    eps: b.eps,
                },
                Layer::Relu => LayerJson::Relu,
                Layer::Memristive(_) => {
                    return Err(HarnessError::input("patched networks cannot be saved as weights"))
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightsJson { layers })
}

pub fn network_from_json(j: &WeightsJson) -> Result<Network> {
    let layers = j
        .layers
        .iter()
        .map(|l| {
            Ok(match l {
                LayerJson::Dense { in_features, out_features, weights, bias } => {
                    let w = Matrix::from_vec(*out_features, *in_features, weights.clone())?;
                    Layer::Dense(Dense::new(w, bias.clone())?)
                }
                LayerJson::Conv2d { in_channels, input, kernel, stride, padding, out_channels, weights, bias } => {
                    let g = ConvGeometry {
                        in_channels: *in_channels,
                        input: (input[0], input[1]),
                        kernel: (kernel[0], kernel[1]),
                        stride: *stride,
                        padding: *padding,
                    };
                    Layer::Conv2d(Conv2d::new(weights.clone(), bias.clone(), *out_channels, g)?)
                }
                LayerJson::BatchNorm { features, gamma, beta, running_mean, running_var, eps } => {
                    let mut b = BatchNorm1d::new(*features);
                    b.gamma = gamma.clone();
                    b.beta = beta.clone();
                    b.running_mean = running_mean.clone();
                    b.running_var = running_var.clone();
                    b.eps = *eps;
                    b.validate()?;
                    Layer::BatchNorm1d(b)
                }
                LayerJson::Relu => Layer::Relu,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Network::new(layers)?)
}

pub fn read_weights<R: Read>(reader: R) -> Result<Network> {
    let j: WeightsJson = serde_json::from_reader(reader)?;
    network_from_json(&j)
}

pub fn write_weights<W: Write>(net: &Network, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &network_to_json(net)?)?;
    Ok(())
}
