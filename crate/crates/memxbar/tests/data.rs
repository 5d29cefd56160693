use memxbar::dataset::{gen_synthetic, read_csv, write_csv};
use memxbar::kfold::kfold_split;
use memxbar::metrics::compute_metrics;
use memxbar::plot::{aggregate, plot_csv, render_svg};
use memxbar_core::network::{train_tiny, Network, TrainConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn trained_accuracy(separation: f64, seed: u64) -> f64 {
    let data = gen_synthetic(2000, 16, separation, seed).unwrap();
    let idx: Vec<usize> = (0..2000).collect();
    let (train, test) = (data.subset(&idx[..1000]), data.subset(&idx[1000..]));
    let mut net = Network::mlp(&[16, 16, 2], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let cfg = TrainConfig { learning_rate: 0.05, epochs: 30, seed, ..TrainConfig::default() };
    let h = train_tiny(&mut net, &train.x, &train.labels, &cfg, Some((&test.x, &test.labels))).unwrap();
    *h.accuracy.last().unwrap()
}

#[test]
fn zero_separation_is_chance() {
    let acc = trained_accuracy(0.0, 3);
    assert!((acc - 0.5).abs() <= 0.05, "{acc}");
}

#[test]
fn wide_separation_is_separable() {
    let acc = trained_accuracy(6.0, 3);
    assert!(acc >= 0.99, "{acc}");
}

#[test]
fn synthetic_is_standardized_and_balanced() {
    let d = gen_synthetic(1001, 5, 2.0, 9).unwrap();
    for c in 0..5 {
        let col: Vec<f64> = (0..d.len()).map(|r| d.x.get(r, c)).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-9);
    }
    assert_eq!(d.labels.iter().filter(|&&l| l == 1).count(), 500);
    assert_eq!(d, gen_synthetic(1001, 5, 2.0, 9).unwrap());
    assert!(gen_synthetic(1, 5, 2.0, 9).is_err());
    assert!(gen_synthetic(10, 5, -1.0, 9).is_err());
}

#[test]
fn dataset_csv_round_trip() {
    let d = gen_synthetic(20, 3, 1.0, 1).unwrap();
    let mut buf = Vec::new();
    write_csv(&d, &mut buf).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("x0,x1,x2,label\n"));
    assert_eq!(read_csv(buf.as_slice()).unwrap(), d);
    assert!(read_csv("x0,label\n1.0,a\n".as_bytes()).is_err());
}

proptest! {
    #[test]
    fn kfold_partitions(n in 1usize..200, k in 1usize..12, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold_split(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        if k == 1 {
            prop_assert_eq!(&folds[0].train, &folds[0].test);
            prop_assert_eq!(folds[0].test.len(), n);
        } else {
            let mut count = vec![0usize; n];
            for f in &folds {
                prop_assert!(f.test.len() == n / k || f.test.len() == n / k + 1);
                prop_assert_eq!(f.train.len() + f.test.len(), n);
                for &i in &f.test {
                    count[i] += 1;
                    prop_assert!(f.train.binary_search(&i).is_err());
                }
            }
            prop_assert!(count.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn metrics_are_bounded(pairs in prop::collection::vec((0usize..2, 0usize..2), 1..100)) {
        let (p, l): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let m = compute_metrics(&p, &l).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.accuracy));
        let f1 = m.f1.unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        let perfect = compute_metrics(&l, &l).unwrap();
        prop_assert_eq!(perfect.accuracy, 1.0);
        if l.contains(&1) {
            prop_assert_eq!(perfect.f1, Some(1.0));
        }
    }
}

#[test]
fn f1_hand_count() {
    // tp 2, fp 1, fn 1.
    let m = compute_metrics(&[1, 1, 1, 0, 0], &[1, 1, 0, 1, 0]).unwrap();
    assert!((m.accuracy - 0.6).abs() < 1e-15);
    assert!((m.f1.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(compute_metrics(&[2, 0], &[1, 0]).unwrap().f1, None);
    assert!(compute_metrics(&[], &[]).is_err());
}

const SWEEP: &str = "\
nonidealities.0.n,repeat,fold,metric,value,runtime_s,seed,error
32,0,0,accuracy,0.91,,1,
32,1,0,accuracy,0.89,,2,
8,0,0,accuracy,0.85,,3,
8,1,0,accuracy,NaN,,4,boom
2,0,0,accuracy,0.60,,5,
2,1,0,accuracy,0.56,,6,
";

#[test]
fn plot_sweep_csv() {
    let data = aggregate(SWEEP.as_bytes(), "nonidealities.0.n", None).unwrap();
    let pts = &data[""];
    assert_eq!(pts.iter().map(|p| p.x).collect::<Vec<_>>(), [2.0, 8.0, 32.0]);
    assert_eq!(pts[1].mean, 0.85);
    assert!((pts[2].mean - 0.90).abs() < 1e-12);
    // Means rise with the state count, so the polyline climbs left to right
    // (SVG y decreases).
    let svg = render_svg(&data, "nonidealities.0.n", None).unwrap();
    let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
    let pts_attr = line.split('"').nth(1).unwrap();
    let ys: Vec<f64> = pts_attr.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(ys.windows(2).all(|w| w[1] < w[0]), "{ys:?}");

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    std::fs::write(&csv, SWEEP).unwrap();
    let out = dir.path().join("p.svg");
    plot_csv(&csv, "nonidealities.0.n", Some("metric"), &out).unwrap();
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("<?xml"));
    assert!(text.contains("metric = accuracy"));
    assert!(plot_csv(&csv, "sigma", None, &dir.path().join("q.svg")).is_err());
}
