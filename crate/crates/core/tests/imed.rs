use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scatterforge::dataset::DegradationSpec;
mod common;
use common::double_sum;
use scatterforge::imed::{build_report, imed, normalized_imed, ImedConfig, Normalization, SpecEvaluation};

fn binary(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect()
}

#[test]
fn convolution_matches_double_sum_up_to_8x8() {
    let cfg = ImedConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let h = rng.random_range(1..=8);
        let w = rng.random_range(1..=8);
        let a = binary(&mut rng, h * w);
        let b = binary(&mut rng, h * w);
        let fast = imed(&a, &b, h, w, &cfg).unwrap();
        let slow = double_sum(&a, &b, h, w, 1.0);
        worst = worst.max((fast - slow).abs());
    }
    assert!(worst < 1e-10, "worst difference {worst:e}");
}

#[test]
fn convolution_matches_double_sum_on_every_pair_at_small_sizes() {
    let cfg = ImedConfig::default();
    for (h, w) in [(1, 3), (2, 2), (2, 3), (1, 6)] {
        let n = h * w;
        let image = |code: usize| -> Vec<f64> { (0..n).map(|k| ((code >> k) & 1) as f64).collect() };
        for x in 0..1usize << n {
            for y in 0..1usize << n {
                let (a, b) = (image(x), image(y));
                let fast = imed(&a, &b, h, w, &cfg).unwrap();
                assert!((fast - double_sum(&a, &b, h, w, 1.0)).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn fixed_4x4_pair() {
    #[rustfmt::skip]
    let a = [
        0.0, 1.0, 1.0, 0.0,
        1.0, 1.0, 1.0, 1.0,
        0.0, 1.0, 1.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
    ];
    #[rustfmt::skip]
    let b = [
        0.0, 0.0, 1.0, 0.0,
        0.0, 1.0, 1.0, 1.0,
        0.0, 1.0, 1.0, 1.0,
        0.0, 0.0, 0.0, 0.0,
    ];
    let got = imed(&a, &b, 4, 4, &ImedConfig::default()).unwrap();
    let want = double_sum(&a, &b, 4, 4, 1.0);
    assert!((got - want).abs() < 1e-10);
    assert!(got > 0.0);
}

#[test]
fn narrow_kernel_tends_to_scaled_euclidean() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sigma = 1e-3;
    let cfg = ImedConfig { sigma, ..ImedConfig::default() };
    for _ in 0..20 {
        let a = binary(&mut rng, 30);
        let b = binary(&mut rng, 30);
        let euclid: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let want = euclid / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
        let got = imed(&a, &b, 5, 6, &cfg).unwrap();
        assert!((got - want).abs() <= 1e-6 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn metric_axioms_on_random_pairs() {
    let cfg = ImedConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let (h, w) = (rng.random_range(1..=7), rng.random_range(1..=7));
        let n = h * w;
        let (a, b, c) = (binary(&mut rng, n), binary(&mut rng, n), binary(&mut rng, n));
        let ab = imed(&a, &b, h, w, &cfg).unwrap();
        let ba = imed(&b, &a, h, w, &cfg).unwrap();
        let ac = imed(&a, &c, h, w, &cfg).unwrap();
        let cb = imed(&c, &b, h, w, &cfg).unwrap();
        assert!(ab >= 0.0);
        assert!((ab - ba).abs() < 1e-12);
        assert!(ab <= ac + cb + 1e-12);
        assert_eq!(ab == 0.0, a == b, "zero exactly when equal");
    }
}

/// Every difference pattern in {-1, 0, 1}^n is reachable by some binary
/// pair, so enumerating them covers every pair of binary images.
#[test]
fn ones_vs_zeros_is_the_largest_distance_at_tiny_sizes() {
    let cfg = ImedConfig {
        normalization: Normalization::None,
        ..ImedConfig::default()
    };
    for (h, w) in [(1, 1), (1, 4), (2, 2), (2, 3), (3, 3)] {
        let n = h * w;
        let ones = vec![1.0; n];
        let zeros = vec![0.0; n];
        let max = imed(&ones, &zeros, h, w, &cfg).unwrap();
        let mut best: f64 = 0.0;
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    let t = c % 3;
                    c /= 3;
                    t as f64 - 1.0
                })
                .collect();
            let got = imed(&d, &zeros, h, w, &cfg).unwrap();
            best = best.max(got);
        }
        assert!((best - max).abs() < 1e-12, "{h}x{w}: {best} vs {max}");
    }
}

#[test]
fn complement_of_a_shape_stays_below_one() {
    let side = 25;
    let cfg = ImedConfig::default();
    let truth: Vec<u8> = (0..side * side).map(|k| u8::from((k / side) > 8 && (k % side) < 15)).collect();
    let inverted: Vec<u8> = truth.iter().map(|&b| 1 - b).collect();
    let s = normalized_imed(&inverted, &truth, side, &cfg).unwrap();
    assert!(s > 0.9 && s < 1.0, "{s}");
    assert_eq!(normalized_imed(&truth, &truth, side, &cfg).unwrap(), 0.0);
}

#[test]
fn full_report_has_table_shape() {
    let cfg = ImedConfig::default();
    let truth = vec![0u8, 1, 1, 0];
    let pred = vec![1u8, 1, 0, 0];
    let specs = DegradationSpec::all();
    let evals: Vec<SpecEvaluation<'_>> = specs
        .iter()
        .map(|&spec| SpecEvaluation {
            spec,
            side: 2,
            pairs: vec![("a", &pred, &truth), ("b", &truth, &truth)],
            dataset_digest: None,
        })
        .collect();
    let report = build_report(&evals, &cfg, None).unwrap();
    assert_eq!(report.specs.len(), 24);
    let table = report.table();
    let rows: Vec<&str> = table.lines().filter(|l| l.trim_start().starts_with(char::is_numeric)).collect();
    assert_eq!(rows.len(), 4);
    for (row, ssf) in rows.iter().zip(["8", "4", "2", "1"]) {
        assert!(row.trim_start().starts_with(ssf));
        assert_eq!(row.split_whitespace().filter(|t| t.parse::<f64>().is_ok()).count(), 7);
        assert!(!row.contains(" - "));
    }
    for scores in report.specs.values() {
        let mean = scores.records.iter().map(|r| r.score).sum::<f64>() / scores.records.len() as f64;
        assert!((scores.mean - mean).abs() < 1e-12);
    }
}

#[test]
fn report_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let truth = vec![0u8; 9];
    let pred = vec![0u8, 0, 1, 0, 0, 0, 0, 0, 0];
    let ev = SpecEvaluation {
        spec: "high-s4-ssf4".parse().unwrap(),
        side: 3,
        pairs: vec![("x", &pred, &truth)],
        dataset_digest: Some("abc".into()),
    };
    let report = build_report(&[ev], &ImedConfig::default(), Some("cfg".into())).unwrap();
    report.write(dir.path()).unwrap();
    let back: scatterforge::imed::EvaluationReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(back, report);
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap(), report.table());
}

fn image_pair() -> impl Strategy<Value = (usize, Vec<u8>, Vec<u8>)> {
    (1usize..10).prop_flat_map(|side| {
        (
            Just(side),
            proptest::collection::vec(0u8..2, side * side),
            proptest::collection::vec(0u8..2, side * side),
        )
    })
}

proptest! {
    #[test]
    fn normalized_scores_lie_in_unit_interval((side, a, b) in image_pair()) {
        let s = normalized_imed(&a, &b, side, &ImedConfig::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        let raw = normalized_imed(&a, &b, side, &ImedConfig { normalization: Normalization::None, ..ImedConfig::default() }).unwrap();
        prop_assert!(raw >= 0.0);
    }

    #[test]
    fn distance_is_translation_invariant_on_padded_images((side, a, b) in image_pair(), shift in 0usize..3) {
        // Embedding both images at the same offset in a larger zero frame
        // leaves the difference image, and hence the distance, unchanged.
        let big = side + 3;
        let embed = |img: &[u8]| {
            let mut out = vec![0.0; big * big];
            for r in 0..side {
                for c in 0..side {
                    out[(r + shift) * big + c + shift] = f64::from(img[r * side + c]);
                }
            }
            out
        };
        let cfg = ImedConfig::default();
        let af: Vec<f64> = a.iter().map(|&x| f64::from(x)).collect();
        let bf: Vec<f64> = b.iter().map(|&x| f64::from(x)).collect();
        let small = imed(&af, &bf, side, side, &cfg).unwrap();
        let large = imed(&embed(&a), &embed(&b), big, big, &cfg).unwrap();
        prop_assert!((small - large).abs() < 1e-12);
    }
}
