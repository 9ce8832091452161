//! The two estimators under comparison: flat CV, which tunes and estimates
//! on the same folds, and nested CV, which tunes inside each outer training
//! fold. Plus the argmax over candidate learners.
//!
//! Both estimators draw their outer folds from `seed` in the same way, and the
//! model for outer fold `k` is always fitted with the same derived seed, so
//! with a one-point grid the two estimates coincide exactly.

use rayon::prelude::*;
use thiserror::Error;

use crate::data::{stratified_kfold, DataError, Dataset, FoldPlan, View};
use crate::learners::{self, create_grid, HyperPoint, LearnerError, LearnerId, LearnerSpec, TrainedModel};
use crate::seed::{role, Seed};

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("no candidate learners to select from")]
    EmptyCandidateSet,
}

pub type Result<T> = std::result::Result<T, SelectionError>;

/// Outcome of flat cross-validation for one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatResult {
    pub learner: LearnerId,
    pub best_theta: HyperPoint,
    pub estimate: f64,
    /// Fold-mean accuracy of every grid point, in grid order.
    pub grid_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterFold {
    pub theta: HyperPoint,
    pub accuracy: f64,
}

/// Outcome of nested cross-validation for one learner.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedResult {
    pub learner: LearnerId,
    pub estimate: f64,
    pub folds: Vec<OuterFold>,
}

/// The fold plan both estimators use for `(data, k, seed)`.
pub fn outer_folds(data: View<'_>, k: usize, seed: Seed) -> Result<FoldPlan> {
    Ok(stratified_kfold(&data.labels(), k, seed.child(role::FOLDS))?)
}

fn fit_seed(seed: Seed, fold: usize) -> Seed {
    seed.child(role::FIT).child(fold as u64)
}

/// Trains on `train_rows` and scores on `test_rows`. A training side that
/// lost one class (reachable for small strata in inner folds) is scored as
/// the constant majority-class model instead of failing.
fn fit_and_score(
    spec: &LearnerSpec,
    data: &Dataset,
    train_rows: &[usize],
    test_rows: &[usize],
    theta: &HyperPoint,
    seed: Seed,
) -> Result<f64> {
    let train = data.view(train_rows);
    let model = match learners::train(spec, train, theta, seed) {
        Ok(m) => m,
        Err(LearnerError::SingleClassTrainingSet) => {
            let counts = train.class_counts();
            TrainedModel::constant(u8::from(counts[1] > counts[0]), data.n_features())
        }
        Err(e) => return Err(e.into()),
    };
    Ok(learners::accuracy(&model, data.view(test_rows))?)
}

/// Dataset-index (train, test) lists for each fold of `plan` over `data`.
fn fold_rows(data: View<'_>, plan: &FoldPlan) -> Vec<(Vec<usize>, Vec<usize>)> {
    plan.pairs()
        .into_iter()
        .map(|p| (data.map_positions(&p.train), data.map_positions(&p.test)))
        .collect()
}

fn first_argmax(values: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

/// Flat k-fold CV: every grid point is scored by its mean test-fold
/// accuracy; the best point (first in grid order on ties) and its mean are
/// returned.
pub fn flat_cv(spec: &LearnerSpec, data: View<'_>, k: usize, seed: Seed) -> Result<FlatResult> {
    let plan = outer_folds(data, k, seed)?;
    let folds = fold_rows(data, &plan);
    let grid = create_grid(spec);
    let points = grid.points();
    let dataset = data.dataset();

    let accs: Vec<f64> = (0..points.len() * k)
        .into_par_iter()
        .map(|job| {
            let (t, f) = (job / k, job % k);
            fit_and_score(spec, dataset, &folds[f].0, &folds[f].1, &points[t], fit_seed(seed, f))
        })
        .collect::<Result<_>>()?;

    // Sum in fold order, divide once: independent of the worker count.
    let grid_means: Vec<f64> = accs
        .chunks(k)
        .map(|fold_accs| fold_accs.iter().sum::<f64>() / k as f64)
        .collect();
    let (best, estimate) = first_argmax(grid_means.iter().copied()).expect("grids are non-empty");
    Ok(FlatResult {
        learner: spec.id(),
        best_theta: points[best].clone(),
        estimate,
        grid_means,
    })
}

/// Nested CV: within each outer training fold, hyperparameters are chosen by
/// an inner flat CV; the outer estimate is the mean accuracy of models
/// refitted on each outer training fold with its own selection.
pub fn nested_cv(
    spec: &LearnerSpec,
    data: View<'_>,
    k_outer: usize,
    k_inner: usize,
    seed: Seed,
) -> Result<NestedResult> {
    let plan = outer_folds(data, k_outer, seed)?;
    let folds = fold_rows(data, &plan);
    let dataset = data.dataset();

    let outer: Vec<OuterFold> = folds
        .par_iter()
        .enumerate()
        .map(|(f, (train_rows, test_rows))| {
            let inner_seed = seed.child(role::INNER).child(f as u64);
            let inner = flat_cv(spec, dataset.view(train_rows), k_inner, inner_seed)?;
            let accuracy = fit_and_score(
                spec,
                dataset,
                train_rows,
                test_rows,
                &inner.best_theta,
                fit_seed(seed, f),
            )?;
            Ok(OuterFold {
                theta: inner.best_theta,
                accuracy,
            })
        })
        .collect::<Result<_>>()?;

    let estimate = outer.iter().map(|o| o.accuracy).sum::<f64>() / k_outer as f64;
    Ok(NestedResult {
        learner: spec.id(),
        estimate,
        folds: outer,
    })
}

/// The learner with the highest estimate; ties go to the earliest entry.
pub fn select_algorithm(results: &[(LearnerId, f64)]) -> Result<LearnerId> {
    first_argmax(results.iter().map(|r| r.1))
        .map(|(i, _)| results[i].0)
        .ok_or(SelectionError::EmptyCandidateSet)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize) -> Dataset {
        let rows = (0..n)
            .map(|i| vec![if i % 2 == 0 { -5.0 } else { 5.0 } + (i as f64) * 1e-3])
            .collect();
        Dataset::new("sep", rows, (0..n).map(|i| (i % 2) as u8).collect()).unwrap()
    }

    #[test]
    fn select_argmax_and_ties() {
        use LearnerId::*;
        assert_eq!(select_algorithm(&[(Rf, 0.90), (Knn, 0.85)]).unwrap(), Rf);
        assert_eq!(select_algorithm(&[(Rf, 0.90), (Knn, 0.90)]).unwrap(), Rf);
        assert_eq!(select_algorithm(&[(Knn, 0.90), (Rf, 0.90)]).unwrap(), Knn);
        assert!(matches!(select_algorithm(&[]), Err(SelectionError::EmptyCandidateSet)));
    }

    #[test]
    fn singleton_grid_flat_estimate() {
        let d = separable(40);
        let rows = d.all_rows();
        let spec = LearnerSpec::builtin(LearnerId::Knn).with_axis("k", &[3.0]).unwrap();
        let r = flat_cv(&spec, d.view(&rows), 5, Seed(1)).unwrap();
        assert_eq!(r.best_theta, create_grid(&spec).points()[0]);
        assert_eq!(r.estimate, r.grid_means[0]);
        assert_eq!(r.estimate, 1.0);
    }

    #[test]
    fn dominant_point_wins() {
        // 12 vs 8 separable rows: k=1 is perfect; k=15 over 16 training rows
        // outvotes every minority-class test row.
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![if i < 12 { -5.0 } else { 5.0 } + i as f64 * 1e-3])
            .collect();
        let d = Dataset::new("imb", rows, (0..20).map(|i| u8::from(i >= 12)).collect()).unwrap();
        let rows = d.all_rows();
        let spec = LearnerSpec::builtin(LearnerId::Knn)
            .with_axis("k", &[15.0, 1.0])
            .unwrap();
        let r = flat_cv(&spec, d.view(&rows), 5, Seed(3)).unwrap();
        assert_eq!(r.best_theta.to_string(), "k=1");
        assert_eq!(r.estimate, 1.0);
        assert!(r.grid_means[0] < 1.0);
    }

    #[test]
    fn nested_shape() {
        let d = separable(40);
        let rows = d.all_rows();
        let spec = LearnerSpec::builtin(LearnerId::Knn);
        let r = nested_cv(&spec, d.view(&rows), 2, 5, Seed(2)).unwrap();
        assert_eq!(r.folds.len(), 2);
        assert_eq!(r.estimate, (r.folds[0].accuracy + r.folds[1].accuracy) / 2.0);
    }
}
