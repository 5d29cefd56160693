use memxbar_core::crossbar::{vmm_raw, Arrangement, PulseConfig};
use memxbar_core::device::{presets, DeviceTemplate};
use memxbar_core::mapping::{
    clip_weights, map_magnitudes, naive_map, program_scheme, MappedConductances, MappingConfig,
    MappingDomain, SchemeKind,
};
use memxbar_core::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn clip_hand_trace() {
    // Magnitudes 0.1..1.0; the top 10% saturate.
    let w: Vec<f64> = (1..=10).map(|k| k as f64 * 0.1 * if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let c = clip_weights(&w, 0.1, 10.0).unwrap();
    assert!((c.w_max - 0.9).abs() < 1e-12);
    assert!((c.w_min - 0.09).abs() < 1e-12);
    assert_eq!(c.magnitudes[9], c.w_max);
    assert!(c.magnitudes.iter().all(|&m| m <= c.w_max && m >= c.w_min));
}

#[test]
fn magnitude_endpoints_and_monotonicity() {
    for domain in [MappingDomain::Conductance, MappingDomain::Resistance] {
        let g = map_magnitudes(&[0.1, 0.5, 1.0], 0.1, 1.0, 100.0, 1e4, domain).unwrap();
        assert!((g[0] - 1e-4).abs() < 1e-15, "{domain:?}");
        assert!((g[2] - 1e-2).abs() < 1e-15);
        assert!(g[0] < g[1] && g[1] < g[2]);
    }
}

proptest! {
    #[test]
    fn clip_is_idempotent(w in prop::collection::vec(-5.0..5.0f64, 2..60), p_l in 0.0..0.2f64) {
        let c = clip_weights(&w, p_l, 1e9);
        prop_assume!(c.is_ok());
        let c = c.unwrap();
        let again = clip_weights(&c.magnitudes, 0.0, 1e9).unwrap();
        for (a, b) in c.magnitudes.iter().zip(&again.magnitudes) {
            prop_assert!((a - b).abs() <= 1e-12 * c.w_max);
        }
    }

    #[test]
    fn magnitudes_are_monotone(mut s in prop::collection::vec(0.0..1.0f64, 2..30)) {
        s.sort_by(f64::total_cmp);
        let g = map_magnitudes(&s, 0.0, 1.0, 50.0, 1000.0, MappingDomain::Conductance).unwrap();
        prop_assert!(g.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(g.iter().all(|&x| (1e-3 - 1e-15..=2e-2 + 1e-15).contains(&x)));
    }
}

#[test]
fn ideal_four_by_four_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = Matrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
    let ideal = presets::ideal();
    let cfg = MappingConfig { p_l: 0.0, scheme: SchemeKind::DoubleColumn, ..MappingConfig::new(ideal.r_on(), ideal.r_off()) };
    let mapped = naive_map(&w, &cfg).unwrap();
    let template = DeviceTemplate::new(ideal);
    let (scheme, report) =
        program_scheme(&mapped, &template, Arrangement::OneT1R, &PulseConfig::default(), &mut rng).unwrap();
    assert_eq!(report.clamped, 0);
    let x = Matrix::from_fn(8, 4, |_, _| rng.random_range(0.0..1.0));
    let raw = vmm_raw(&scheme, &x).unwrap();
    let reference = x.matmul(&w).unwrap();
    let fit = memxbar_core::mapping::fit_linear_transform(raw.as_slice(), reference.as_slice()).unwrap();
    let tuned: Vec<f64> = raw.as_slice().iter().map(|&v| fit.transform.apply(v)).collect();
    let err = memxbar_core::linalg::relative_rms_error(&tuned, reference.as_slice());
    assert!(err <= 1e-4, "{err}");
}

#[test]
fn positive_weights_give_positive_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = Matrix::from_fn(5, 3, |_, _| rng.random_range(0.1..1.0));
    let team = presets::team();
    let cfg = MappingConfig { p_l: 0.0, scheme: SchemeKind::DoubleColumn, ..MappingConfig::new(team.r_on(), team.r_off()) };
    let mapped = naive_map(&w, &cfg).unwrap();
    if let MappedConductances::Double { neg, .. } = &mapped {
        assert!(neg.as_slice().iter().all(|&g| (g - 1e-3).abs() < 1e-15));
    }
    let (scheme, _) = program_scheme(&mapped, &DeviceTemplate::new(team), Arrangement::OneT1R, &PulseConfig::default(), &mut rng).unwrap();
    let x = Matrix::from_fn(16, 5, |_, _| rng.random_range(0.0..1.0));
    let raw = vmm_raw(&scheme, &x).unwrap();
    let fit = memxbar_core::mapping::fit_linear_transform(raw.as_slice(), x.matmul(&w).unwrap().as_slice()).unwrap();
    assert!(fit.transform.slope > 0.0);
}

#[test]
fn single_column_stays_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w = Matrix::from_fn(6, 4, |_, _| rng.random_range(-2.0..2.0));
    let team = presets::team();
    let cfg = MappingConfig { p_l: 0.0, scheme: SchemeKind::SingleColumn, ..MappingConfig::new(team.r_on(), team.r_off()) };
    let MappedConductances::Single { g, g_m, .. } = naive_map(&w, &cfg).unwrap() else { panic!() };
    assert!((g_m - 2.0 / 1050.0).abs() < 1e-15);
    assert!(g.as_slice().iter().all(|&x| (1e-3 - 1e-15..=2e-2 + 1e-15).contains(&x)));
}

#[test]
fn mapping_is_deterministic() {
    let w = Matrix::from_fn(7, 3, |r, c| ((r * 3 + c) as f64).sin());
    let cfg = MappingConfig { p_l: 0.05, scheme: SchemeKind::DoubleColumn, ..MappingConfig::new(100.0, 2500.0) };
    assert_eq!(naive_map(&w, &cfg).unwrap(), naive_map(&w, &cfg).unwrap());
}
