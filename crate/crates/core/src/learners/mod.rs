//! Classifier abstraction and the built-in learners.
//!
//! Every learner sees z-scored features: the scaler is fitted on the training
//! view and stored in the model, so test rows are transformed with
//! training-side statistics only.

mod boost;
mod forest;
mod gnb;
pub mod grid;
mod knn;
mod proto;
mod ridge;
mod tree;

use thiserror::Error;

use crate::data::View;
use crate::seed::Seed;

pub use grid::{create_grid, create_grid_for, HyperGrid, HyperPoint, LearnerId, LearnerSpec, ParamValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("unknown learner {0:?}")]
    UnknownLearner(String),
    #[error("{learner} has no hyperparameter {name:?}")]
    UnknownHyperparameter { learner: LearnerId, name: String },
    #[error("{learner}: value {value} out of bounds for {name}")]
    OutOfBounds {
        learner: LearnerId,
        name: String,
        value: f64,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("hyperparameters {theta} are not on the grid of {learner}")]
    ThetaMismatch { learner: LearnerId, theta: String },
    #[error("training set holds a single class")]
    SingleClassTrainingSet,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("model expects {expected} features, data has {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Dense row-major training samples (already standardized).
#[derive(Debug, Clone)]
pub(crate) struct Samples {
    pub x: Vec<f64>,
    pub y: Vec<u8>,
    pub d: usize,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-feature z-scoring fitted on training rows. Zero-variance features
/// are centred but not scaled.
#[derive(Debug, Clone)]
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(view: &View<'_>) -> Self {
        let d = view.n_features();
        let n = view.len() as f64;
        let mut mean = vec![0.0; d];
        for i in 0..view.len() {
            for (m, v) in mean.iter_mut().zip(view.x(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for i in 0..view.len() {
            for ((s, v), m) in var.iter_mut().zip(view.x(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }
}

#[derive(Debug, Clone)]
enum ModelKind {
    Constant(u8),
    Knn(knn::Knn),
    Gnb(gnb::Gnb),
    Proto(proto::Proto),
    Forest(forest::Forest),
    Boost(boost::Boost),
    Ridge(ridge::Ridge),
}

/// A fitted classifier, immutable once trained.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    n_features: usize,
    scaler: Option<Standardizer>,
    kind: ModelKind,
}

impl TrainedModel {
    /// A model that always predicts `class`.
    pub fn constant(class: u8, n_features: usize) -> Self {
        TrainedModel {
            n_features,
            scaler: None,
            kind: ModelKind::Constant(class),
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, ModelKind::Constant(_))
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut buf = vec![0.0; self.n_features];
        self.predict_into(x, &mut buf)
    }

    fn predict_into(&self, x: &[f64], buf: &mut [f64]) -> u8 {
        let z: &[f64] = match &self.scaler {
            Some(s) => {
                s.apply(x, buf);
                buf
            }
            None => x,
        };
        match &self.kind {
            ModelKind::Constant(c) => *c,
            ModelKind::Knn(m) => m.predict(z),
            ModelKind::Gnb(m) => m.predict(z),
            ModelKind::Proto(m) => m.predict(z),
            ModelKind::Forest(m) => m.predict(z),
            ModelKind::Boost(m) => m.predict(z),
            ModelKind::Ridge(m) => m.predict(z),
        }
    }
}

/// Fits `spec`'s learner on `train` with hyperparameters `theta`.
/// Only `rf` and `gbstump` consume `seed`.
pub fn train(
    spec: &LearnerSpec,
    train: View<'_>,
    theta: &HyperPoint,
    seed: Seed,
) -> Result<TrainedModel, LearnerError> {
    if !spec.contains(theta) {
        return Err(LearnerError::ThetaMismatch {
            learner: spec.id(),
            theta: theta.to_string(),
        });
    }
    if train.is_empty() {
        return Err(LearnerError::EmptyTrainingSet);
    }
    let counts = train.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(LearnerError::SingleClassTrainingSet);
    }
    let scaler = Standardizer::fit(&train);
    let d = train.n_features();
    let mut x = vec![0.0; train.len() * d];
    for i in 0..train.len() {
        scaler.apply(train.x(i), &mut x[i * d..(i + 1) * d]);
    }
    let samples = Samples {
        x,
        y: train.labels(),
        d,
    };
    let kind = match spec.id() {
        LearnerId::Knn => ModelKind::Knn(knn::Knn::fit(samples, theta.int("k") as usize)),
        LearnerId::Gnb => ModelKind::Gnb(gnb::Gnb::fit(&samples, theta.real("var_smoothing"))),
        LearnerId::Proto => ModelKind::Proto(proto::Proto::fit(&samples, theta.int("prototypes") as usize)),
        LearnerId::Rf => ModelKind::Forest(forest::Forest::fit(
            &samples,
            theta.int("trees") as usize,
            theta.real("mtry"),
            seed,
        )),
        LearnerId::GbStump => ModelKind::Boost(boost::Boost::fit(
            &samples,
            theta.int("rounds") as usize,
            theta.real("learning_rate"),
            theta.int("depth") as usize,
            seed,
        )),
        LearnerId::LinRidge => ModelKind::Ridge(ridge::Ridge::fit(&samples, theta.real("penalty"))),
    };
    Ok(TrainedModel {
        n_features: d,
        scaler: Some(scaler),
        kind,
    })
}

/// Fraction of `test` rows whose label the model predicts correctly.
pub fn accuracy(model: &TrainedModel, test: View<'_>) -> Result<f64, LearnerError> {
    if test.is_empty() {
        return Err(LearnerError::EmptyTestSet);
    }
    if test.n_features() != model.n_features {
        return Err(LearnerError::DimensionMismatch {
            expected: model.n_features,
            found: test.n_features(),
        });
    }
    let mut buf = vec![0.0; model.n_features];
    let correct = (0..test.len())
        .filter(|&i| model.predict_into(test.x(i), &mut buf) == test.y(i))
        .count();
    Ok(correct as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;

    fn two_points() -> Dataset {
        Dataset::new("p", vec![vec![0.0], vec![10.0]], vec![0, 1]).unwrap()
    }

    #[test]
    fn one_nn_picks_nearest() {
        let d = two_points();
        let rows = d.all_rows();
        let spec = LearnerSpec::builtin(LearnerId::Knn).with_axis("k", &[1.0]).unwrap();
        let theta = create_grid(&spec).points()[0].clone();
        let m = train(&spec, d.view(&rows), &theta, Seed(0)).unwrap();
        assert_eq!(m.predict(&[1.0]), 0);
        assert_eq!(m.predict(&[9.0]), 1);
    }

    #[test]
    fn gnb_symmetric_tie_goes_to_class_zero() {
        // Class means -1 and +1, equal spread and priors: equal posteriors at 0.
        let rows = vec![vec![-1.5], vec![-0.5], vec![0.5], vec![1.5]];
        let d = Dataset::new("s", rows, vec![0, 0, 1, 1]).unwrap();
        let idx = d.all_rows();
        let spec = LearnerSpec::builtin(LearnerId::Gnb);
        for theta in create_grid(&spec).points() {
            let m = train(&spec, d.view(&idx), theta, Seed(0)).unwrap();
            assert_eq!(m.predict(&[0.0]), 0);
            assert_eq!(m.predict(&[0.01]), 1);
            assert_eq!(m.predict(&[-0.01]), 0);
        }
    }

    #[test]
    fn accuracy_counts() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let d = Dataset::new("a", rows, vec![0, 0, 1, 0]).unwrap();
        let idx = d.all_rows();
        let m = TrainedModel::constant(0, 1);
        assert_eq!(accuracy(&m, d.view(&idx)).unwrap(), 0.75);

        let balanced: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let b = Dataset::new("b", balanced, (0..10).map(|i| (i % 2) as u8).collect()).unwrap();
        let all = b.all_rows();
        assert_eq!(accuracy(&TrainedModel::constant(1, 1), b.view(&all)).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_errors() {
        let d = two_points();
        let empty: Vec<usize> = vec![];
        let m = TrainedModel::constant(0, 1);
        assert_eq!(accuracy(&m, d.view(&empty)), Err(LearnerError::EmptyTestSet));
        let wide = TrainedModel::constant(0, 3);
        let rows = d.all_rows();
        assert!(matches!(
            accuracy(&wide, d.view(&rows)),
            Err(LearnerError::DimensionMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn train_rejects_single_class_and_foreign_theta() {
        let d = Dataset::new("s", vec![vec![0.0], vec![1.0]], vec![1, 1]).unwrap();
        let rows = d.all_rows();
        let spec = LearnerSpec::builtin(LearnerId::Knn);
        let theta = create_grid(&spec).points()[0].clone();
        assert_eq!(
            train(&spec, d.view(&rows), &theta, Seed(0)).unwrap_err(),
            LearnerError::SingleClassTrainingSet
        );
        let rf = LearnerSpec::builtin(LearnerId::Rf);
        assert!(matches!(
            train(&rf, d.view(&rows), &theta, Seed(0)),
            Err(LearnerError::ThetaMismatch { .. })
        ));
    }
}
