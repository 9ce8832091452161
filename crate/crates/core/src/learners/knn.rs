use super::{sq_dist, Samples};

/// k-nearest neighbours with Euclidean distance and majority vote.
#[derive(Debug, Clone)]
pub(crate) struct Knn {
    samples: Samples,
    k: usize,
}

impl Knn {
    pub fn fit(samples: Samples, k: usize) -> Self {
        let k = k.min(samples.len()).max(1);
        Knn { samples, k }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut dist: Vec<(f64, usize)> = (0..self.samples.len())
            .map(|i| (sq_dist(self.samples.row(i), x), i))
            .collect();
        // Distance ties resolve to the lower training index.
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_dist);
        }
        let ones = dist[..self.k].iter().filter(|&&(_, i)| self.samples.y[i] == 1).count();
        u8::from(2 * ones > self.k)
    }
}
