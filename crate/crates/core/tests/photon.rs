use afshar_core::photon::{run_counting, sample_poisson, which_way_k, wilson_interval, Z95, CHUNK};
use afshar_core::*;

/// Outcome weights close to the canonical single-pinhole run with the grid.
const S4_LIKE: [f64; 4] = [0.8233, 0.00288, 0.04997, 0.12385];
const MEAN_COUNT: f64 = 3.0e4 * 30.0;

fn probs(w: [f64; 4]) -> OutcomeProbabilities {
    OutcomeProbabilities::new(w).unwrap()
}

#[test]
fn tallies_are_identical_for_any_worker_count() {
    let p = probs(S4_LIKE);
    let cfg = CountingConfig::new(3.0e4, 30.0, 20040703, "S4-left").unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let tally = pool.install(|| run_counting(&cfg, &p));
        serde_json::to_string(&tally).unwrap()
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(8));
    assert_eq!(one, run(1));
}

#[test]
fn counts_add_up_and_follow_the_seed() {
    let p = probs(S4_LIKE);
    for seed in [0, 1, u64::MAX] {
        let cfg = CountingConfig::new(3.0e4, 30.0, seed, "x").unwrap();
        let t = run_counting(&cfg, &p);
        assert_eq!(t.counts().iter().sum::<u64>(), t.total);
        assert_eq!(t.total, sample_photon_count(&cfg));
        assert_eq!(t.seed, seed);
        assert!(t.total > CHUNK, "spans several chunks");
    }
    let a = sample_outcomes(1_000_000, &p, 5);
    let b = sample_outcomes(1_000_000, &p, 6);
    assert_ne!(a.counts(), b.counts());
    let empty = sample_outcomes(0, &p, 5);
    assert_eq!(empty.total, 0);
    assert_eq!(empty.fractions(), [0.0; 4]);
}

#[test]
fn certain_outcomes_take_every_photon() {
    let t = sample_outcomes(200_000, &probs([0.0, 0.0, 1.0, 0.0]), 3);
    assert_eq!(t.counts(), [0, 0, 200_000, 0]);
    let t = sample_outcomes(200_000, &probs([0.0, 0.0, 0.0, 2.0]), 3);
    assert_eq!(t.counts(), [0, 0, 0, 200_000]);
}

#[test]
fn estimates_sit_within_three_sigma_of_the_field_probabilities() {
    let p = probs(S4_LIKE);
    let split = p.detector_1() / (p.detector_1() + p.detector_2());
    let (mut blocked_ok, mut split_ok) = (0, 0);
    for trial in 0..100u64 {
        let cfg = CountingConfig::new(3.0e4, 30.0, 1000 + trial, "trial").unwrap();
        let t = run_counting(&cfg, &p);
        let n = t.total as f64;
        let sigma = (p.blocked() * (1.0 - p.blocked()) / n).sqrt();
        if (t.fractions()[2] - p.blocked()).abs() <= 3.0 * sigma {
            blocked_ok += 1;
        }
        let nd = t.detector_counts() as f64;
        let est = t.n_detector_1 as f64 / nd;
        let sigma = (split * (1.0 - split) / nd).sqrt();
        if (est - split).abs() <= 3.0 * sigma {
            split_ok += 1;
        }
    }
    assert!(blocked_ok >= 99, "{blocked_ok}/100");
    assert!(split_ok >= 99, "{split_ok}/100");
}

#[test]
fn poisson_counts_have_the_right_mean_and_spread() {
    let draws: Vec<f64> = (0..400).map(|s| sample_poisson(MEAN_COUNT, s).unwrap() as f64).collect();
    let m = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    let se = (MEAN_COUNT / draws.len() as f64).sqrt();
    assert!((m - MEAN_COUNT).abs() < 4.0 * se, "{m}");
    // Sample variance of 400 draws is within ~20% of the mean.
    assert!((var / MEAN_COUNT - 1.0).abs() < 0.25, "{var}");
    assert_eq!(sample_poisson(0.0, 1).unwrap(), 0);
}

#[test]
fn wilson_intervals_match_reference_values() {
    // Reference values from an independent statistics package.
    let cases = [
        (81, 263, 0.2552885198782742, 0.36620957698280004),
        (0, 50, 0.0, 0.07134759913335874),
        (50, 50, 0.9286524008666412, 1.0),
        (2600, 900000, 0.0027801078689886024, 0.0030019135170376633),
    ];
    for (k, n, lo, hi) in cases {
        let i = wilson_interval(k, n, Z95);
        assert!((i.low - lo).abs() < 1e-12 && (i.high - hi).abs() < 1e-12, "{k}/{n}: {i:?}");
    }
}

#[test]
fn which_way_parameter_is_bounded() {
    assert_eq!(which_way_k((1.0, 0.0), (1.0, 0.0)).unwrap(), 1.0);
    assert_eq!(which_way_k((1.0, 1.0), (2.0, 2.0)).unwrap(), 0.0);
    assert!(which_way_k((0.0, 0.0), (1.0, 0.0)).is_err());
    let p = probs(S4_LIKE);
    let mirrored = probs([S4_LIKE[1], S4_LIKE[0], S4_LIKE[2], S4_LIKE[3]]);
    let left = sample_outcomes(900_000, &p, 11);
    let right = sample_outcomes(900_000, &mirrored, 12);
    let k = estimate_k(&left, &right).unwrap();
    let exact = (S4_LIKE[0] - S4_LIKE[1]) / (S4_LIKE[0] + S4_LIKE[1]);
    assert!((0.0..=1.0).contains(&k));
    assert!((k - exact).abs() < 1e-3, "{k} vs {exact}");
}

#[test]
fn flux_reduction_interval_covers_the_truth() {
    let without = probs([0.456, 0.456, 0.0, 0.088]);
    let with = probs([0.40, 0.40, 0.05, 0.15]);
    let truth = 1.0 - 0.80 / 0.912;
    let mut covered = 0;
    for s in 0..100u64 {
        let r = flux_reduction(&sample_outcomes(900_000, &with, 2 * s), &sample_outcomes(900_000, &without, 2 * s + 1)).unwrap();
        assert!(r.ci_low <= r.value && r.value <= r.ci_high);
        if r.ci_low <= truth && truth <= r.ci_high {
            covered += 1;
        }
    }
    // Nominal 95%; 100 trials rarely fall below 88.
    assert!(covered >= 88, "{covered}/100");
    let none = sample_outcomes(1000, &probs([0.0, 0.0, 1.0, 0.0]), 1);
    assert!(flux_reduction(&none, &none).is_err());
}
