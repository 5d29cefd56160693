use memxbar_core::crossbar::{
    vmm, vmm_raw, Arrangement, Crossbar, RepresentationScheme, TuningTransform,
};
use memxbar_core::device::{presets, DeviceTemplate};
use memxbar_core::{Error, Matrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn programmed(rows: usize, cols: usize, seed: u64) -> Crossbar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = DeviceTemplate::new(presets::team()).with_resistance_spread(5.0).unwrap();
    let mut x = Crossbar::build(rows, cols, &template, Arrangement::OneT1R, &mut rng).unwrap();
    let targets = Matrix::from_fn(rows, cols, |_, _| rng.random_range(1.0 / 900.0..1.0 / 60.0));
    x.program_naive(&targets).unwrap();
    x
}

fn brute_force_currents(x: &Crossbar, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.cols()];
    for j in 0..x.cols() {
        for (i, vi) in v.iter().enumerate() {
            out[j] += vi * (1.0 / x.device(i, j).resistance());
        }
    }
    out
}

#[test]
fn cache_matches_devices() {
    let x = programmed(4, 5, 1);
    for (k, d) in x.devices().iter().enumerate() {
        let g = 1.0 / d.resistance();
        assert!((x.conductances()[k] - g).abs() / g < 1e-9);
    }
}

#[test]
fn program_to_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let template = DeviceTemplate::new(presets::team()).with_resistance_spread(5.0).unwrap();
    let mut x = Crossbar::build(3, 3, &template, Arrangement::OneT1R, &mut rng).unwrap();
    let on = Matrix::from_fn(3, 3, |i, j| 1.0 / x.device(i, j).model().r_on());
    x.program_naive(&on).unwrap();
    assert!(x.devices().iter().all(|d| d.state() == d.model().on_state()));
    let off = Matrix::from_fn(3, 3, |i, j| 1.0 / x.device(i, j).model().r_off());
    x.program_naive(&off).unwrap();
    assert!(x.devices().iter().all(|d| d.state() == d.model().off_state()));
}

#[test]
fn two_by_two_readout_matches_double_loop() {
    let x = programmed(2, 2, 3);
    let v = [0.3, 0.9];
    let fast = x.read_currents(&v).unwrap();
    let slow = brute_force_currents(&x, &v);
    for (a, b) in fast.iter().zip(&slow) {
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }
}

#[test]
fn double_column_matches_eq_form() {
    let pos = programmed(3, 2, 4);
    let neg = programmed(3, 2, 5);
    let a = Matrix::from_vec(2, 3, vec![0.1, 0.5, 0.9, 1.0, 0.0, 0.25]).unwrap();
    let k = TuningTransform { slope: 2.5, intercept: 0.0 };
    let scheme = RepresentationScheme::double_column(pos.clone(), neg.clone()).unwrap();
    let out = vmm(&scheme, &a, &k).unwrap();
    for r in 0..2 {
        for j in 0..2 {
            let mut expect = 0.0;
            for i in 0..3 {
                expect += a.get(r, i) * (pos.conductances()[i * 2 + j] - neg.conductances()[i * 2 + j]);
            }
            expect *= 2.5;
            assert!((out.get(r, j) - expect).abs() <= 1e-15, "{} vs {expect}", out.get(r, j));
        }
    }
}

#[test]
fn symmetric_pairs_cancel() {
    let pos = programmed(3, 3, 6);
    let scheme = RepresentationScheme::double_column(pos.clone(), pos).unwrap();
    let a = Matrix::filled(4, 3, 0.7);
    assert!(vmm_raw(&scheme, &a).unwrap().as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn single_column_at_reference_cancels() {
    let mut x = programmed(3, 3, 7);
    let g_m = 2.0 / (50.0 + 1000.0);
    x.program_naive(&Matrix::filled(3, 3, g_m)).unwrap();
    let scheme = RepresentationScheme::SingleColumn { xbar: x, g_m };
    let raw = vmm_raw(&scheme, &Matrix::filled(2, 3, 0.4)).unwrap();
    assert!(raw.as_slice().iter().all(|v| v.abs() < 1e-15), "{raw:?}");
}

#[test]
fn dimension_errors() {
    let x = programmed(3, 2, 8);
    assert!(matches!(x.read_currents(&[1.0; 2]), Err(Error::Shape(_))));
    let scheme = RepresentationScheme::double_column(x.clone(), x).unwrap();
    assert!(matches!(vmm_raw(&scheme, &Matrix::zeros(1, 2)), Err(Error::Shape(_))));
}

#[test]
fn seeded_builds_are_bit_identical() {
    assert_eq!(programmed(5, 4, 42), programmed(5, 4, 42));
    assert_ne!(programmed(5, 4, 42), programmed(5, 4, 43));
}

proptest! {
    #[test]
    fn readout_matches_brute_force(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let x = programmed(rows, cols, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let v: Vec<f64> = (0..rows).map(|_| rng.random_range(0.0..1.0)).collect();
        let fast = x.read_currents(&v).unwrap();
        for (a, b) in fast.iter().zip(brute_force_currents(&x, &v)) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn vmm_is_affine(alpha in -2.0..2.0f64, beta in -2.0..2.0f64, slope in 0.5..5.0f64, intercept in -1.0..1.0f64, seed in any::<u64>()) {
        let scheme = RepresentationScheme::double_column(programmed(3, 2, seed), programmed(3, 2, seed ^ 9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = Matrix::from_fn(2, 3, |_, _| rng.random_range(0.0..1.0));
        let a2 = Matrix::from_fn(2, 3, |_, _| rng.random_range(0.0..1.0));
        let t = TuningTransform { slope, intercept };
        let mix = Matrix::from_fn(2, 3, |r, c| alpha * a1.get(r, c) + beta * a2.get(r, c));
        let lhs = vmm(&scheme, &mix, &t).unwrap();
        let y1 = vmm(&scheme, &a1, &t).unwrap();
        let y2 = vmm(&scheme, &a2, &t).unwrap();
        for k in 0..lhs.as_slice().len() {
            let rhs = alpha * y1.as_slice()[k] + beta * y2.as_slice()[k] - (alpha + beta - 1.0) * intercept;
            prop_assert!((lhs.as_slice()[k] - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn rows_are_independent(batch in 1usize..6, seed in any::<u64>()) {
        let scheme = RepresentationScheme::double_column(programmed(4, 3, seed), programmed(4, 3, seed ^ 5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(batch, 4, |_, _| rng.random_range(0.0..1.0));
        let all = vmm_raw(&scheme, &a).unwrap();
        for r in 0..batch {
            let one = vmm_raw(&scheme, &a.select_rows(&[r])).unwrap();
            prop_assert_eq!(one.row(0), all.row(r));
        }
    }

    #[test]
    fn program_round_trip(seed in any::<u64>(), rows in 1usize..5, cols in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let template = DeviceTemplate::new(presets::pt_hf_ti()).with_resistance_spread(10.0).unwrap();
        let mut x = Crossbar::build(rows, cols, &template, Arrangement::OneT1R, &mut rng).unwrap();
        let targets = Matrix::from_fn(rows, cols, |i, j| {
            let (lo, hi) = x.device(i, j).conductance_range();
            lo + rng.random_range(0.0..=1.0) * (hi - lo)
        });
        let report = x.program_naive(&targets).unwrap();
        prop_assert_eq!(report.clamped, 0);
        for (g, t) in x.conductances().iter().zip(targets.as_slice()) {
            prop_assert!((g - t).abs() / t < 1e-9);
        }
    }
}
