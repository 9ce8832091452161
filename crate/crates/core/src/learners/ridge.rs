use nalgebra::{DMatrix, DVector};

use super::Samples;

/// Ridge regression on ±1 targets with an unpenalized intercept; predicts
/// class 1 when the score is positive.
#[derive(Debug, Clone)]
pub(crate) struct Ridge {
    weights: Vec<f64>,
    intercept: f64,
}

impl Ridge {
    pub fn fit(s: &Samples, penalty: f64) -> Self {
        let (n, d) = (s.len(), s.d);
        let target = |i: usize| if s.y[i] == 1 { 1.0 } else { -1.0 };
        let x_mean: Vec<f64> = (0..d)
            .map(|j| (0..n).map(|i| s.row(i)[j]).sum::<f64>() / n as f64)
            .collect();
        let y_mean = (0..n).map(target).sum::<f64>() / n as f64;

        let xc = DMatrix::from_fn(n, d, |i, j| s.row(i)[j] - x_mean[j]);
        let yc = DVector::from_fn(n, |i, _| target(i) - y_mean);
        let gram = xc.transpose() * &xc + DMatrix::identity(d, d) * penalty;
        let rhs = xc.transpose() * yc;
        let w = gram
            .cholesky()
            .expect("ridge system is positive definite for penalty > 0")
            .solve(&rhs);

        let weights: Vec<f64> = w.iter().copied().collect();
        let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
        Ridge { weights, intercept }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let score = self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        u8::from(score > 0.0)
    }
}
