use memxbar::formats::*;
use memxbar_core::crossbar::{Arrangement, Crossbar, RepresentationScheme, StuckAt};
use memxbar_core::device::{presets, DeviceParam, DeviceTemplate, StochasticParameter, VoltageSignal};
use memxbar_core::network::{BatchNorm1d, Conv2d, ConvGeometry, Dense, Layer, Network};
use memxbar_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn programmed(rows: usize, cols: usize, seed: u64) -> Crossbar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = DeviceTemplate::new(presets::team());
    t.stochastic.push((DeviceParam::ROn, StochasticParameter::truncated_normal(50.0, 5.0, 1.0, f64::INFINITY).unwrap()));
    let mut x = Crossbar::build(rows, cols, &t, Arrangement::OneT1R, &mut rng).unwrap();
    let targets = Matrix::from_fn(rows, cols, |_, _| 1.0 / rng.random_range(200.0..900.0));
    x.program_naive(&targets).unwrap();
    if x.len() > 2 {
        x.set_stuck(1, Some(StuckAt::On));
        x.set_stuck(2, Some(StuckAt::Off));
    }
    x
}

fn same_conductances(a: &Crossbar, b: &Crossbar) {
    assert_eq!(a.rows(), b.rows());
    assert_eq!(a.cols(), b.cols());
    for (x, y) in a.conductances().iter().zip(b.conductances()) {
        assert!((x - y).abs() <= 1e-12 * x.abs(), "{x} vs {y}");
    }
}

#[test]
fn crossbar_json_round_trip() {
    let x = programmed(3, 4, 1);
    let j = crossbar_to_json(&x);
    assert_eq!(j.arrangement, "1t1r");
    assert_eq!(j.devices.len(), 12);
    let text = serde_json::to_string(&j).unwrap();
    let back = crossbar_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    same_conductances(&x, &back);
    assert_eq!(back.stuck(), x.stuck());
    assert_eq!(back.arrangement(), Arrangement::OneT1R);
    assert_eq!(crossbar_to_json(&back), j);
}

#[test]
fn crossbar_json_rejects_bad_input() {
    let mut j = crossbar_to_json(&programmed(2, 2, 2));
    j.arrangement = "2t2r".into();
    assert!(crossbar_from_json(&j).is_err());
    let mut j = crossbar_to_json(&programmed(2, 2, 2));
    j.devices.pop();
    assert!(crossbar_from_json(&j).is_err());
    let mut j = crossbar_to_json(&programmed(2, 2, 2));
    j.devices[0].w = -1.0;
    assert!(crossbar_from_json(&j).is_err());
}

#[test]
fn scheme_json_round_trip() {
    let dc = RepresentationScheme::double_column(programmed(2, 3, 3), programmed(2, 3, 4)).unwrap();
    let sc = RepresentationScheme::SingleColumn { xbar: programmed(2, 3, 5), g_m: 1e-3 };
    for s in [dc, sc] {
        let text = serde_json::to_string(&scheme_to_json(&s)).unwrap();
        let back = scheme_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.rows(), s.rows());
        for (a, b) in s.crossbars().into_iter().zip(back.crossbars()) {
            same_conductances(a, b);
        }
        let v = [0.1, 0.4];
        assert_eq!(s.raw_row(&v).unwrap().len(), back.raw_row(&v).unwrap().len());
    }
    let v: serde_json::Value = serde_json::to_value(scheme_to_json(&RepresentationScheme::SingleColumn {
        xbar: programmed(1, 1, 6),
        g_m: 2e-3,
    }))
    .unwrap();
    assert_eq!(v["scheme"], json!("single_column"));
}

#[test]
fn conductance_csv_round_trip() {
    let x = programmed(4, 5, 7);
    let mut buf = Vec::new();
    write_conductance_csv(&x, &mut buf).unwrap();
    let m = read_conductance_csv(buf.as_slice()).unwrap();
    assert_eq!(m, x.conductance_matrix());
    assert!(read_conductance_csv("1,2\n3\n".as_bytes()).is_err());
    assert!(read_conductance_csv("1,x\n".as_bytes()).is_err());
}

#[test]
fn weights_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let geometry = ConvGeometry { in_channels: 2, input: (5, 4), kernel: (3, 2), stride: 1, padding: 1 };
    let kernels: Vec<f64> = (0..3 * 2 * 3 * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
    let conv = Conv2d::new(kernels, vec![0.1, -0.2, 0.3], 3, geometry).unwrap();
    let flat = conv.out_features();
    let mut bn = BatchNorm1d::new(flat);
    bn.running_mean.iter_mut().for_each(|m| *m = rng.random_range(-0.5..0.5));
    bn.running_var.iter_mut().for_each(|v| *v = rng.random_range(0.5..2.0));
    let net = Network::new(vec![
        Layer::Conv2d(conv),
        Layer::BatchNorm1d(bn),
        Layer::Relu,
        Layer::Dense(Dense::random(flat, 2, &mut rng)),
    ])
    .unwrap();
    let mut buf = Vec::new();
    write_weights(&net, &mut buf).unwrap();
    let back = read_weights(buf.as_slice()).unwrap();
    assert_eq!(back, net);
    let x = Matrix::from_fn(3, 40, |r, c| (r as f64 - c as f64 * 0.1).sin());
    assert_eq!(back.forward(&x).unwrap(), net.forward(&x).unwrap());
}

#[test]
fn weights_shape_mismatch_is_an_error() {
    let bad = r#"{"layers":[{"kind":"dense","in":2,"out":2,"weights":[1.0,2.0,3.0],"bias":[0.0,0.0]}]}"#;
    assert!(read_weights(bad.as_bytes()).is_err());
    let chain = r#"{"layers":[
        {"kind":"dense","in":2,"out":3,"weights":[1,2,3,4,5,6],"bias":[0,0,0]},
        {"kind":"dense","in":2,"out":1,"weights":[1,2],"bias":[0]}]}"#;
    assert!(read_weights(chain.as_bytes()).is_err());
}

#[test]
fn trace_csv_round_trip() {
    let mut t = DeviceTemplate::new(presets::linear_ion_drift());
    t.initial = memxbar_core::device::InitialState::Resistance(1500.0);
    let mut d = t.instantiate(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let trace = d
        .simulate(&VoltageSignal::Sinusoid { amplitude: 1.0, frequency: 0.5, duration: 0.5 })
        .unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("t,v,i,w\n"));
    let back = read_trace_csv(buf.as_slice()).unwrap();
    assert_eq!(back, trace);
}

#[test]
fn device_json_round_trip_for_presets() {
    for name in ["team", "pt_hf_ti", "linear_ion_drift", "ideal"] {
        let t = device_template_from_json(&json!(name)).unwrap();
        assert_eq!(device_template_from_json(&device_template_to_json(&t)).unwrap(), t);
    }
    let t = device_template_from_json(&json!({"preset": "team", "initial": "on"})).unwrap();
    let d = t.instantiate(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!((d.resistance() - t.base.r_on()).abs() < 1e-9 * t.base.r_on());
}
