#![allow(dead_code)]

use nestcv::Dataset;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

/// Exactly balanced labels in random order.
fn balanced_labels(n: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
    labels.shuffle(rng);
    labels
}

/// Two unit-variance Gaussian classes with equal priors whose means differ
/// along the first axis only. With means at `±s` the optimal rule thresholds
/// at 0 and errs with probability `Phi(-s)`.
pub fn gaussian_mixture(name: &str, n: usize, d: usize, bayes_error: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = -Normal::standard().inverse_cdf(bayes_error);
    let labels = balanced_labels(n, &mut rng);
    let rows = labels
        .iter()
        .map(|&y| {
            (0..d)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if j == 0 {
                        if y == 1 {
                            z + shift
                        } else {
                            z - shift
                        }
                    } else {
                        z
                    }
                })
                .collect()
        })
        .collect();
    Dataset::new(name, rows, labels).unwrap()
}

/// Standard-normal features with labels independent of them.
pub fn pure_noise(name: &str, n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = balanced_labels(n, &mut rng);
    let rows = (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    Dataset::new(name, rows, labels).unwrap()
}

/// One-sided signed-rank p-value P(W+ <= observed) by enumerating all 2^n
/// sign assignments. `d` must be non-zero with distinct magnitudes.
pub fn wilcoxon_brute_force(d: &[f64]) -> f64 {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut rank = vec![0u32; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32 + 1;
    }
    let observed: u32 = (0..n).filter(|&i| d[i] > 0.0).map(|i| rank[i]).sum();
    let hits = (0u32..1 << n)
        .filter(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| rank[i]).sum::<u32>() <= observed)
        .count();
    hits as f64 / (1u64 << n) as f64
}

/// Percentile bounds of the mean over every one of the n^n equally likely
/// resamples, with linearly interpolated (type 7) quantiles.
pub fn bootstrap_exhaustive(values: &[f64], level: f64) -> (f64, f64) {
    let n = values.len();
    let total = n.pow(n as u32);
    let mut means = Vec::with_capacity(total);
    for code in 0..total {
        let (mut c, mut sum) = (code, 0.0);
        for _ in 0..n {
            sum += values[c % n];
            c /= n;
        }
        means.push(sum / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = (means.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(means.len() - 1);
        means[lo] + (h - lo as f64) * (means[hi] - means[lo])
    };
    let tail = (1.0 - level) / 2.0;
    (q(tail), q(1.0 - tail))
}
