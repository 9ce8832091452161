use statrs::distribution::{ContinuousCDF, Normal};

use super::{Result, StatsError};

/// Largest effective sample size handled by exact enumeration.
pub const EXACT_MAX_N: usize = 25;

/// Paired observations `(x_j, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pairs: Vec<(f64, f64)>,
}

impl PairedSample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(StatsError::EmptySample);
        }
        if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(PairedSample { pairs })
    }

    /// Pairs `(d_j, 0)`, i.e. a one-sample test on the differences.
    pub fn from_differences(d: &[f64]) -> Result<Self> {
        Self::new(d.iter().map(|&v| (v, 0.0)).collect())
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Direction of the one-sided alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    /// x tends to be smaller than y.
    Less,
    /// x tends to be larger than y.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    NormalApproximation,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::NormalApproximation => "normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub p_value: f64,
    /// Sum of the ranks of the positive differences, W+.
    pub statistic: f64,
    pub n_effective: usize,
    pub method: Method,
}

/// One-sided Wilcoxon signed-rank test on `d_j = x_j - y_j`.
///
/// Zero differences are dropped and tied `|d|` get average ranks. Up to
/// [`EXACT_MAX_N`] non-zero differences the p-value comes from the exact
/// permutation distribution of W+ (conditional on the observed ranks);
/// beyond that, from the normal approximation with tie-corrected variance
/// and a 0.5 continuity correction. With every difference zero, p = 1.
pub fn wilcoxon_one_sided(sample: &PairedSample, alternative: Alternative) -> Result<TestResult> {
    let d: Vec<f64> = sample.pairs.iter().map(|(x, y)| x - y).filter(|&v| v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(TestResult {
            p_value: 1.0,
            statistic: 0.0,
            n_effective: 0,
            method: Method::Exact,
        });
    }

    // Doubled average ranks stay integral: a tie block over sorted
    // positions i..=j (1-based) gets rank (i + j) / 2.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut rank2 = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && d[order[end + 1]].abs() == d[order[start]].abs() {
            end += 1;
        }
        for &o in &order[start..=end] {
            rank2[o] = (start + 1 + end + 1) as u64;
        }
        let t = (end - start + 1) as f64;
        tie_term += t * t * t - t;
        start = end + 1;
    }
    let w2: u64 = (0..n).filter(|&j| d[j] > 0.0).map(|j| rank2[j]).sum();
    let statistic = w2 as f64 / 2.0;

    if n <= EXACT_MAX_N {
        // Number of sign assignments giving each doubled rank sum.
        let max: u64 = rank2.iter().sum();
        let mut counts = vec![0u64; max as usize + 1];
        counts[0] = 1;
        let mut reach = 0usize;
        for &r in &rank2 {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let hits: u64 = match alternative {
            Alternative::Less => counts[..=w2 as usize].iter().sum(),
            Alternative::Greater => counts[w2 as usize..].iter().sum(),
        };
        let p_value = hits as f64 / 2f64.powi(n as i32);
        return Ok(TestResult {
            p_value,
            statistic,
            n_effective: n,
            method: Method::Exact,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let sd = var.sqrt();
    let normal = Normal::standard();
    let p_value = match alternative {
        Alternative::Less => normal.cdf((statistic - mean + 0.5) / sd),
        Alternative::Greater => normal.sf((statistic - mean - 0.5) / sd),
    };
    Ok(TestResult {
        p_value: p_value.clamp(0.0, 1.0),
        statistic,
        n_effective: n,
        method: Method::NormalApproximation,
    })
}
