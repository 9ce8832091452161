use super::Samples;

/// Gaussian naive Bayes. `var_smoothing` adds that fraction of the largest
/// feature variance to every per-class variance.
#[derive(Debug, Clone)]
pub(crate) struct Gnb {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

impl Gnb {
    pub fn fit(s: &Samples, var_smoothing: f64) -> Self {
        let d = s.d;
        let n = s.len() as f64;
        let mut count = [0usize; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        for i in 0..s.len() {
            let c = s.y[i] as usize;
            count[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(s.row(i)) {
                *m += v;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
        }
        let mut var = [vec![0.0; d], vec![0.0; d]];
        for i in 0..s.len() {
            let c = s.y[i] as usize;
            for ((acc, v), m) in var[c].iter_mut().zip(s.row(i)).zip(&mean[c]) {
                *acc += (v - m) * (v - m);
            }
        }
        for c in 0..2 {
            var[c].iter_mut().for_each(|v| *v /= count[c] as f64);
        }

        // Overall variance per feature, for the smoothing floor.
        let mut max_var: f64 = 0.0;
        for j in 0..d {
            let mu = (0..s.len()).map(|i| s.row(i)[j]).sum::<f64>() / n;
            let v = (0..s.len()).map(|i| (s.row(i)[j] - mu).powi(2)).sum::<f64>() / n;
            max_var = max_var.max(v);
        }
        let eps = var_smoothing * if max_var > 0.0 { max_var } else { 1.0 };
        for c in 0..2 {
            var[c].iter_mut().for_each(|v| *v += eps);
        }

        Gnb {
            log_prior: [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()],
            mean,
            var,
        }
    }

    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let mut ll = self.log_prior[c];
        for ((v, m), s2) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            ll -= 0.5 * (2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / (2.0 * s2);
        }
        ll
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.log_joint(1, x) > self.log_joint(0, x))
    }
}
