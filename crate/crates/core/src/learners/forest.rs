use rand::Rng;

use super::tree::{Criterion, Tree, TreeParams};
use super::Samples;
use crate::seed::Seed;

/// Random forest: fully grown Gini trees on bootstrap resamples, with
/// `mtry` features drawn at each split; majority vote, ties to class 0.
#[derive(Debug, Clone)]
pub(crate) struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(s: &Samples, n_trees: usize, mtry_fraction: f64, seed: Seed) -> Self {
        let mtry = ((mtry_fraction * s.d as f64).round() as usize).clamp(1, s.d);
        let params = TreeParams {
            criterion: Criterion::Gini,
            max_depth: None,
            min_leaf: 1,
            mtry,
        };
        let targets: Vec<f64> = s.y.iter().map(|&y| f64::from(y)).collect();
        let majority = |rows: &[usize]| {
            let ones = rows.iter().filter(|&&i| s.y[i] == 1).count();
            if 2 * ones > rows.len() {
                1.0
            } else {
                0.0
            }
        };
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng = seed.child(t as u64).rng();
                let rows: Vec<usize> = (0..s.len()).map(|_| rng.random_range(0..s.len())).collect();
                Tree::grow(s, &targets, rows, &params, &mut rng, &majority)
            })
            .collect();
        Forest { trees }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let ones = self.trees.iter().filter(|t| t.predict(x) > 0.5).count();
        u8::from(2 * ones > self.trees.len())
    }
}
