use rand::seq::index;

use super::tree::{Criterion, Tree, TreeParams};
use super::Samples;
use crate::seed::Seed;

/// Fraction of training rows drawn (without replacement) for each round.
const BAG_FRACTION: f64 = 0.5;
const MIN_LEAF: usize = 5;

/// Stochastic gradient boosting of depth-limited regression trees under
/// logistic loss. Leaves take a single Newton step; predicts class 1 when
/// the additive score is positive.
#[derive(Debug, Clone)]
pub(crate) struct Boost {
    base: f64,
    rate: f64,
    trees: Vec<Tree>,
}

fn sigmoid(f: f64) -> f64 {
    1.0 / (1.0 + (-f).exp())
}

impl Boost {
    pub fn fit(s: &Samples, rounds: usize, rate: f64, depth: usize, seed: Seed) -> Self {
        let n = s.len();
        let ones = s.y.iter().filter(|&&y| y == 1).count() as f64;
        let base = ones.ln() - (n as f64 - ones).ln();
        let params = TreeParams {
            criterion: Criterion::SquaredError,
            max_depth: Some(depth),
            min_leaf: MIN_LEAF,
            mtry: s.d,
        };
        let bag = ((BAG_FRACTION * n as f64).round() as usize).clamp(1, n);

        let mut score = vec![base; n];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut trees = Vec::with_capacity(rounds);
        for round in 0..rounds {
            for i in 0..n {
                // Residual y - p, computed per class so flipping labels and
                // scores negates it exactly.
                let (p, q) = (sigmoid(score[i]), sigmoid(-score[i]));
                grad[i] = if s.y[i] == 1 { q } else { -p };
                hess[i] = p * q;
            }
            let mut rng = seed.child(round as u64).rng();
            let mut rows = index::sample(&mut rng, n, bag).into_vec();
            rows.sort_unstable();
            let newton = |leaf_rows: &[usize]| {
                let g: f64 = leaf_rows.iter().map(|&i| grad[i]).sum();
                let h: f64 = leaf_rows.iter().map(|&i| hess[i]).sum();
                g / h.max(1e-12)
            };
            let tree = Tree::grow(s, &grad, rows, &params, &mut rng, &newton);
            for (i, f) in score.iter_mut().enumerate() {
                *f += rate * tree.predict(s.row(i));
            }
            trees.push(tree);
        }
        Boost { base, rate, trees }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.base + self.rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.decision(x) > 0.0)
    }
}
