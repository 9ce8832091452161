mod common;

use nestcv::learners::LearnerId;
use nestcv::selection::select_algorithm;
use nestcv::stats::{
    bootstrap_ci_mean, mean_ranks, same_choice_rate, wilcoxon_one_sided, Alternative, Direction, Method, PairedSample,
};
use nestcv::Seed;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Non-zero differences with distinct magnitudes 1..=n (scaled), random signs.
fn tie_free(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    (1..=max_n).prop_flat_map(|n| {
        (
            Just((1..=n).collect::<Vec<usize>>()).prop_shuffle(),
            proptest::collection::vec(any::<bool>(), n),
            0.01f64..10.0,
        )
            .prop_map(|(mags, signs, scale)| {
                mags.into_iter()
                    .zip(signs)
                    .map(|(m, s)| if s { m as f64 * scale } else { -(m as f64) * scale })
                    .collect()
            })
    })
}

fn p_value(d: &[f64]) -> f64 {
    wilcoxon_one_sided(&PairedSample::from_differences(d).unwrap(), Alternative::Less)
        .unwrap()
        .p_value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn exact_p_matches_enumeration(d in tie_free(10)) {
        let r = wilcoxon_one_sided(&PairedSample::from_differences(&d).unwrap(), Alternative::Less).unwrap();
        prop_assert_eq!(r.method, Method::Exact);
        prop_assert_eq!(r.n_effective, d.len());
        prop_assert!((r.p_value - common::wilcoxon_brute_force(&d)).abs() < 1e-12);
        // A multiple of 2^-n.
        let scaled = r.p_value * (1u64 << d.len()) as f64;
        prop_assert_eq!(scaled, scaled.round());
    }

    #[test]
    fn more_negative_never_raises_p(d in tie_free(12), pick in any::<prop::sample::Index>(), extra in 0.5f64..20.0) {
        let negatives: Vec<usize> = (0..d.len()).filter(|&i| d[i] < 0.0).collect();
        prop_assume!(!negatives.is_empty());
        let i = negatives[pick.index(negatives.len())];
        let mut moved = d.clone();
        moved[i] -= extra;
        prop_assume!((0..d.len()).all(|j| j == i || moved[j].abs() != moved[i].abs()));
        prop_assert!(p_value(&moved) <= p_value(&d));
    }

    #[test]
    fn mean_ranks_stay_in_range(cells in proptest::collection::vec(proptest::collection::vec(0u32..20, 4), 1..15)) {
        let learners = [LearnerId::Knn, LearnerId::Rf, LearnerId::Gnb, LearnerId::Proto];
        let cells: Vec<Vec<f64>> = cells.iter().map(|c| c.iter().map(|&v| v as f64 / 20.0).collect()).collect();
        let ranks = mean_ranks(&learners, &cells, Direction::HigherIsBetter).unwrap();
        prop_assert_eq!(ranks.len(), 4);
        let total: f64 = ranks.iter().map(|r| r.1).sum();
        prop_assert!((total - 10.0).abs() < 1e-9);
        prop_assert!(ranks.iter().all(|r| (1.0..=4.0).contains(&r.1)));
        prop_assert!(ranks.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn positive_scaling_changes_no_choice(
        cells in proptest::collection::vec(proptest::collection::vec(0u32..100, 3), 1..10),
        c in 0.5f64..2.0,
    ) {
        let learners = [LearnerId::Knn, LearnerId::Rf, LearnerId::LinRidge];
        let cells: Vec<Vec<f64>> = cells.iter().map(|r| r.iter().map(|&v| v as f64 / 100.0).collect()).collect();
        let scaled: Vec<Vec<f64>> = cells.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        let choose = |row: &[f64]| {
            let pairs: Vec<_> = learners.iter().copied().zip(row.iter().copied()).collect();
            select_algorithm(&pairs).unwrap()
        };
        let choices: Vec<_> = cells.iter().map(|r| choose(r)).collect();
        let scaled_choices: Vec<_> = scaled.iter().map(|r| choose(r)).collect();
        prop_assert_eq!(&choices, &scaled_choices);

        let ranks = mean_ranks(&learners, &cells, Direction::HigherIsBetter).unwrap();
        let scaled_ranks = mean_ranks(&learners, &scaled, Direction::HigherIsBetter).unwrap();
        prop_assert_eq!(ranks, scaled_ranks);

        let against: Vec<_> = choices.iter().map(|&x| (x, LearnerId::Rf)).collect();
        let scaled_against: Vec<_> = scaled_choices.iter().map(|&x| (x, LearnerId::Rf)).collect();
        prop_assert_eq!(same_choice_rate(&against, 3).unwrap(), same_choice_rate(&scaled_against, 3).unwrap());
    }
}

#[test]
fn fixed_wilcoxon_cases() {
    assert_eq!(p_value(&[-1.0, -2.0, -3.0, -4.0, -5.0]), 0.03125);
    assert_eq!(p_value(&[-3.0, -2.0, 1.0]), 0.25);
    let zero = wilcoxon_one_sided(&PairedSample::from_differences(&[0.0; 4]).unwrap(), Alternative::Less).unwrap();
    assert_eq!((zero.p_value, zero.n_effective), (1.0, 0));
}

#[test]
fn bootstrap_matches_exhaustive_enumeration() {
    let values = [1.0, 2.0, 3.0, 4.0, 5.0];
    let (lo, hi) = common::bootstrap_exhaustive(&values, 0.95);
    for seed in 0..5 {
        let ci = bootstrap_ci_mean(&values, 5000, 0.95, Seed(seed)).unwrap();
        assert!((ci.lower - lo).abs() <= 0.2, "lower {} vs {lo}", ci.lower);
        assert!((ci.upper - hi).abs() <= 0.2, "upper {} vs {hi}", ci.upper);
        assert_eq!(ci.mean, 3.0);
    }
}

#[test]
fn bootstrap_constant_is_degenerate() {
    let ci = bootstrap_ci_mean(&[0.5; 10], 5000, 0.95, Seed(3)).unwrap();
    assert_eq!((ci.lower, ci.mean, ci.upper), (0.5, 0.5, 0.5));
}

#[test]
fn bootstrap_coverage_on_normal_samples() {
    let dist = Normal::new(2.0, 1.0).unwrap();
    let mut covered = 0;
    for trial in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let sample: Vec<f64> = (0..30).map(|_| dist.sample(&mut rng)).collect();
        let ci = bootstrap_ci_mean(&sample, 5000, 0.95, Seed(trial)).unwrap();
        if ci.lower <= 2.0 && 2.0 <= ci.upper {
            covered += 1;
        }
    }
    let rate = covered as f64 / 200.0;
    assert!((0.90..=0.98).contains(&rate), "coverage {rate}");
}
