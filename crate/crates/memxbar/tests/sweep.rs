use std::path::Path;
use std::process::Command;

use memxbar::sweep::{build_base, evaluate_legacy, evaluate_point, prepare_data, run_sweep};
use memxbar::ExperimentConfig;
use serde_json::{json, Value};

fn small(extra: Value) -> ExperimentConfig {
    let mut base = json!({
        "seed": 7,
        "device": "team",
        "network": {"train": {"hidden": [8], "epochs": 5, "learning_rate": 0.05}},
        "dataset": {"synthetic": {"n_samples": 200, "n_features": 8, "class_separation": 4.0}},
        "nonidealities": [
            {"kind": "finite_states", "n": 8},
            {"kind": "device_variability", "sigma": 0.0}
        ]
    });
    for (k, v) in extra.as_object().unwrap() {
        base[k] = v.clone();
    }
    ExperimentConfig::from_value(base, ".").unwrap()
}

fn csv_bytes(cfg: &ExperimentConfig) -> Vec<u8> {
    let mut out = Vec::new();
    run_sweep(cfg, 2).unwrap().write_csv(&mut out).unwrap();
    out
}

fn two_axes() -> ExperimentConfig {
    small(json!({
        "repeats": 2,
        "axes": [
            {"path": "nonidealities.0.n", "values": [2, 4, 16]},
            {"path": "nonidealities.1.sigma", "values": [0.0, 10.0, 40.0]}
        ]
    }))
}

#[test]
fn three_by_three_grid_two_repeats_gives_18_rows() {
    let bytes = csv_bytes(&two_axes());
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(
        headers,
        ["nonidealities.0.n", "nonidealities.1.sigma", "repeat", "fold", "metric", "value", "runtime_s", "seed", "error"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 18);
    // First axis slowest, then second axis, then repeat.
    assert_eq!((&rows[0][0], &rows[0][1], &rows[0][2]), ("2", "0.0", "0"));
    assert_eq!((&rows[1][0], &rows[1][1], &rows[1][2]), ("2", "0.0", "1"));
    assert_eq!((&rows[2][0], &rows[2][1]), ("2", "10.0"));
    assert_eq!((&rows[17][0], &rows[17][1], &rows[17][2]), ("16", "40.0", "1"));
    for r in &rows {
        let v: f64 = r[5].parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert_eq!(&r[4], "accuracy");
        assert_eq!(&r[6], "");
        assert_eq!(&r[8], "");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = two_axes();
    assert_eq!(csv_bytes(&cfg), csv_bytes(&cfg));
    // Thread count does not change the output.
    let mut one = Vec::new();
    run_sweep(&cfg, 1).unwrap().write_csv(&mut one).unwrap();
    assert_eq!(one, csv_bytes(&cfg));
}

#[test]
fn adding_an_axis_value_keeps_other_points() {
    let axes = |vals: Value| {
        small(json!({
            "repeats": 2,
            "axes": [{"path": "nonidealities.1.sigma", "values": vals}]
        }))
    };
    let a = run_sweep(&axes(json!([0.0, 40.0])), 2).unwrap();
    let b = run_sweep(&axes(json!([0.0, 20.0, 40.0])), 2).unwrap();
    assert_eq!(b.records.len(), 6);
    for ra in &a.records {
        let rb = b
            .records
            .iter()
            .find(|r| r.coords == ra.coords && r.repeat == ra.repeat && r.fold == ra.fold)
            .unwrap();
        assert_eq!(ra.seed, rb.seed);
        assert_eq!(ra.value.to_bits(), rb.value.to_bits());
    }
}

#[test]
fn ideal_point_tracks_legacy() {
    let cfg = small(json!({"device": "ideal", "nonidealities": []}));
    let (data, folds) = prepare_data(&cfg).unwrap();
    let base = build_base(&cfg, &data.subset(&folds[0].train), 0, 0).unwrap();
    let test = data.subset(&folds[0].test);
    let legacy = evaluate_legacy(&cfg, &base, &test).unwrap();
    let xbar = evaluate_point(&cfg, &base, &test, 11).unwrap();
    assert!((legacy - xbar).abs() <= 0.005, "legacy {legacy} crossbar {xbar}");
}

#[test]
fn failing_point_is_isolated() {
    let cfg = small(json!({
        "axes": [{"path": "nonidealities.0.n", "values": [4, 1, 8]}]
    }));
    let r = run_sweep(&cfg, 2).unwrap();
    assert_eq!(r.failures(), 1);
    assert!(r.records[1].value.is_nan());
    assert!(r.records[1].error.as_deref().unwrap().contains('2'));
    for k in [0, 2] {
        assert!(r.records[k].value.is_finite());
        assert!(r.records[k].error.is_none());
    }
    let mut out = Vec::new();
    r.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().nth(2).unwrap().split(',').nth(4), Some("NaN"));
}

#[test]
fn k_folds_and_runtime_column() {
    let cfg = small(json!({"k_folds": 3, "record_runtime": true}));
    let r = run_sweep(&cfg, 2).unwrap();
    assert_eq!(r.records.len(), 3);
    assert_eq!(r.records.iter().map(|x| x.fold).collect::<Vec<_>>(), [0, 1, 2]);
    assert!(r.records.iter().all(|x| x.runtime_s.is_some_and(|t| t >= 0.0)));
}

#[test]
fn invalid_axes_are_rejected() {
    let bad = |axes: Value| {
        let mut v = small(json!({})).to_value();
        v["axes"] = axes;
        ExperimentConfig::from_value(v, ".").is_err()
    };
    assert!(bad(json!([{"path": "nonidealities.5.n", "values": [2]}])));
    assert!(bad(json!([{"path": "seed", "values": [1, 2]}])));
    assert!(bad(json!([{"path": "nonidealities.0.n", "values": []}])));
    assert!(bad(json!([
        {"path": "nonidealities.0.n", "values": [2]},
        {"path": "nonidealities.0.n", "values": [3]}
    ])));
}

fn write_config(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = small(json!({"axes": [{"path": "nonidealities.0.n", "values": [4, 8]}]})).to_value();
    let mut failing = ok.clone();
    failing["axes"][0]["values"] = json!([4, 1]);
    let run = |cfg: &Path, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_memxbar"))
            .args(["sweep", "--threads", "1", "--config"])
            .arg(cfg)
            .arg("--out-dir")
            .arg(dir.path().join(out))
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run(&write_config(dir.path(), "ok.json", &ok), "a"), Some(0));
    assert!(dir.path().join("a/sweep.csv").exists());
    assert_eq!(run(&write_config(dir.path(), "fail.json", &failing), "b"), Some(2));
    assert!(dir.path().join("b/sweep.csv").exists());
    assert_eq!(run(&dir.path().join("missing.json"), "c"), Some(1));
    let mut unknown = ok.clone();
    unknown["colour"] = json!(1);
    assert_eq!(run(&write_config(dir.path(), "unknown.json", &unknown), "d"), Some(1));
}

#[test]
fn cli_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_memxbar");
    let out = dir.path().join("sim");
    let st = Command::new(bin).args(["device-sim", "--out-dir"]).arg(&out).status().unwrap();
    assert!(st.success());
    let trace = memxbar::formats::read_trace_csv(std::fs::File::open(out.join("trace.csv")).unwrap()).unwrap();
    assert!(trace.time.len() > 100);

    let cfg = write_config(dir.path(), "c.json", &small(json!({})).to_value());
    let conv = dir.path().join("conv");
    let st = Command::new(bin).args(["convert", "--config"]).arg(&cfg).arg("--out-dir").arg(&conv).status().unwrap();
    assert!(st.success());
    for f in ["summary.json", "layer0.json", "layer0_pos.csv", "layer1_neg.csv"] {
        assert!(conv.join(f).exists(), "{f}");
    }
    let train = dir.path().join("train");
    let st = Command::new(bin).args(["train-demo", "--config"]).arg(&cfg).arg("--out-dir").arg(&train).status().unwrap();
    assert!(st.success());
    let net = memxbar::formats::read_weights(std::fs::File::open(train.join("weights.json")).unwrap()).unwrap();
    assert_eq!(net.in_features(), Some(8));

    let st = Command::new(bin).args(["quantize-bench", "--n", "1000", "--threads", "2"]).status().unwrap();
    assert!(st.success());
}
