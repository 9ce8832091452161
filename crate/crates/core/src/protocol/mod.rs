//! The experimental procedure: repeated stratified holdout splits, flat and
//! nested selection on each training half, future accuracy on each test
//! half, and the per-repetition accuracy gain and irrelevance threshold.

mod analysis;

use std::collections::HashSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::{stratified_holdout, DataError, Dataset};
use crate::learners::{self, HyperPoint, LearnerId, LearnerSpec};
use crate::seed::{role, Seed};
use crate::selection::{flat_cv, nested_cv, select_algorithm, SelectionError};
use crate::stats::StatsError;

pub use analysis::{
    analyse, analysis_avg_first, analysis_per_repetition, analysis_primary, baseline_fixed, baseline_repetition,
    same_choice, threshold_stddev, Analysis, PairRow, PairedAnalysis, Reference, Threshold,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("dataset {dataset}, repetition {repetition}, learner {learner}: {source}")]
    Learner {
        dataset: String,
        repetition: usize,
        learner: LearnerId,
        #[source]
        source: SelectionError,
    },
    #[error("dataset {dataset}, repetition {repetition}: {source}")]
    Split {
        dataset: String,
        repetition: usize,
        #[source]
        source: DataError,
    },
    #[error("learner {0} is not configured")]
    UnknownLearner(String),
    #[error("invalid study: {0}")]
    InvalidStudy(String),
    #[error("mismatched records: {0}")]
    MismatchedRecords(String),
    #[error("incomplete table: {0}")]
    IncompleteTable(String),
    #[error("need at least 2 repetitions, found {found}")]
    InsufficientRepetitions { found: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// A named, ordered subset of the configured learners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub learners: Vec<LearnerId>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, learners: Vec<LearnerId>) -> Self {
        Scenario {
            name: name.into(),
            learners,
        }
    }
}

/// Study parameters shared by every dataset and repetition.
#[derive(Debug, Clone)]
pub struct StudyPlan {
    /// Configured learners and their grids.
    pub learners: Vec<LearnerSpec>,
    pub repetitions: usize,
    pub split_fraction: f64,
    pub k_outer: usize,
    pub k_inner: usize,
    pub master_seed: u64,
}

impl Default for StudyPlan {
    fn default() -> Self {
        StudyPlan {
            learners: LearnerId::ALL.iter().map(|&id| LearnerSpec::builtin(id)).collect(),
            repetitions: 6,
            split_fraction: 0.5,
            k_outer: 5,
            k_inner: 5,
            master_seed: 0,
        }
    }
}

impl StudyPlan {
    pub fn spec(&self, id: LearnerId) -> Option<&LearnerSpec> {
        self.learners.iter().find(|s| s.id() == id)
    }

    /// Checks the plan and that every scenario learner is configured.
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        if self.repetitions == 0 {
            return Err(ProtocolError::InvalidStudy("repetitions must be at least 1".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(ProtocolError::InvalidStudy(format!(
                "split fraction {} outside (0, 1)",
                self.split_fraction
            )));
        }
        if self.k_outer < 2 || self.k_inner < 2 {
            return Err(ProtocolError::InvalidStudy("fold counts must be at least 2".into()));
        }
        if scenario.learners.is_empty() {
            return Err(ProtocolError::InvalidStudy(format!(
                "scenario {} has no learners",
                scenario.name
            )));
        }
        let mut seen = HashSet::new();
        for &id in &scenario.learners {
            if self.spec(id).is_none() {
                return Err(ProtocolError::UnknownLearner(id.to_string()));
            }
            if !seen.insert(id) {
                return Err(ProtocolError::InvalidStudy(format!(
                    "scenario {} lists {id} twice",
                    scenario.name
                )));
            }
        }
        Ok(())
    }
}

/// Per-learner results on one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerOutcome {
    pub learner: LearnerId,
    pub flat_estimate: f64,
    pub nested_estimate: f64,
    /// Hyperparameters chosen by flat CV on the training half.
    pub theta: HyperPoint,
    /// Accuracy on the test half of the model trained on the training half
    /// with `theta`.
    pub future_accuracy: f64,
    /// Hyperparameters chosen in each outer fold of nested CV.
    pub nested_thetas: Vec<HyperPoint>,
}

impl LearnerOutcome {
    /// Gap between the nested estimate and the measured future accuracy.
    pub fn nested_gap(&self) -> f64 {
        (self.nested_estimate - self.future_accuracy).abs()
    }
}

/// Everything measured on one (dataset, repetition) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionRecord {
    pub dataset: String,
    pub repetition: usize,
    pub n_instances: usize,
    /// In scenario order.
    pub learners: Vec<LearnerOutcome>,
    pub flat_choice: LearnerId,
    pub nested_choice: LearnerId,
    pub future_flat: f64,
    pub future_nested: f64,
    /// `future_nested - future_flat`.
    pub accgain: f64,
    pub delta_flat: f64,
    pub delta_nested: f64,
    /// Smaller of the two gaps.
    pub delta: f64,
}

impl RepetitionRecord {
    /// Derives the selections, gain and threshold from per-learner outcomes.
    pub fn from_outcomes(
        dataset: impl Into<String>,
        repetition: usize,
        n_instances: usize,
        learners: Vec<LearnerOutcome>,
    ) -> Result<Self> {
        let flat: Vec<(LearnerId, f64)> = learners.iter().map(|o| (o.learner, o.flat_estimate)).collect();
        let nested: Vec<(LearnerId, f64)> = learners.iter().map(|o| (o.learner, o.nested_estimate)).collect();
        let empty = |_| ProtocolError::InvalidStudy("repetition without learners".into());
        let flat_choice = select_algorithm(&flat).map_err(empty)?;
        let nested_choice = select_algorithm(&nested).map_err(empty)?;
        let find = |id: LearnerId| {
            learners
                .iter()
                .find(|o| o.learner == id)
                .expect("chosen from this list")
        };
        let (f, n) = (find(flat_choice), find(nested_choice));
        let (delta_flat, delta_nested) = (f.nested_gap(), n.nested_gap());
        let (future_flat, future_nested) = (f.future_accuracy, n.future_accuracy);
        Ok(RepetitionRecord {
            dataset: dataset.into(),
            repetition,
            n_instances,
            flat_choice,
            nested_choice,
            future_flat,
            future_nested,
            accgain: future_nested - future_flat,
            delta_flat,
            delta_nested,
            delta: delta_nested.min(delta_flat),
            learners,
        })
    }

    pub fn outcome(&self, id: LearnerId) -> Option<&LearnerOutcome> {
        self.learners.iter().find(|o| o.learner == id)
    }

    pub fn same_choice(&self) -> bool {
        self.flat_choice == self.nested_choice
    }
}

/// Per-dataset aggregate over repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub dataset: String,
    pub n_instances: usize,
    /// Mean of the per-repetition accuracy gains.
    pub accgain: f64,
    /// Mean of the per-repetition thresholds.
    pub delta: f64,
    pub repetitions: Vec<RepetitionRecord>,
}

impl DatasetRecord {
    pub fn abs_accgain(&self) -> f64 {
        self.accgain.abs()
    }
}

/// The full raw table of a study for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub scenario: Scenario,
    pub master_seed: u64,
    pub datasets: Vec<DatasetRecord>,
}

impl StudyRecord {
    pub fn records(&self) -> impl Iterator<Item = &RepetitionRecord> {
        self.datasets.iter().flat_map(|d| d.repetitions.iter())
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetRecord> {
        self.datasets.iter().find(|d| d.dataset == name)
    }

    /// The study restricted to datasets with at least `min` instances.
    pub fn filter_min_size(&self, min: usize) -> StudyRecord {
        StudyRecord {
            scenario: self.scenario.clone(),
            master_seed: self.master_seed,
            datasets: self.datasets.iter().filter(|d| d.n_instances >= min).cloned().collect(),
        }
    }

    /// One row per (dataset, repetition) of the chosen estimate for every
    /// scenario learner, for mean-rank tables.
    pub fn rank_cells(&self, nested: bool) -> Vec<Vec<f64>> {
        self.records()
            .map(|r| {
                self.scenario
                    .learners
                    .iter()
                    .map(|&id| {
                        r.outcome(id)
                            .map_or(f64::NAN, |o| if nested { o.nested_estimate } else { o.flat_estimate })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Runs one repetition: a stratified holdout split, flat and nested CV for
/// every scenario learner on the training half, and future accuracy of each
/// learner (with its flat-selected hyperparameters) on the test half.
pub fn run_repetition(
    data: &Dataset,
    scenario: &Scenario,
    plan: &StudyPlan,
    repetition: usize,
    seed: Seed,
) -> Result<RepetitionRecord> {
    let split = stratified_holdout(data.labels(), plan.split_fraction, seed.child(role::SPLIT)).map_err(|source| {
        ProtocolError::Split {
            dataset: data.name().to_string(),
            repetition,
            source,
        }
    })?;
    let train = data.view(&split.train);
    let test = data.view(&split.test);

    let outcomes: Vec<LearnerOutcome> = scenario
        .learners
        .par_iter()
        .map(|&id| {
            let wrap = |source: SelectionError| ProtocolError::Learner {
                dataset: data.name().to_string(),
                repetition,
                learner: id,
                source,
            };
            let spec = plan
                .spec(id)
                .ok_or_else(|| ProtocolError::UnknownLearner(id.to_string()))?;
            let flat = flat_cv(spec, train, plan.k_outer, seed).map_err(wrap)?;
            let nested = nested_cv(spec, train, plan.k_outer, plan.k_inner, seed).map_err(wrap)?;
            let model =
                learners::train(spec, train, &flat.best_theta, seed.child(role::FUTURE)).map_err(|e| wrap(e.into()))?;
            let future_accuracy = learners::accuracy(&model, test).map_err(|e| wrap(e.into()))?;
            Ok(LearnerOutcome {
                learner: id,
                flat_estimate: flat.estimate,
                nested_estimate: nested.estimate,
                theta: flat.best_theta,
                future_accuracy,
                nested_thetas: nested.folds.into_iter().map(|f| f.theta).collect(),
            })
        })
        .collect::<Result<_>>()?;

    RepetitionRecord::from_outcomes(data.name(), repetition, data.n_instances(), outcomes)
}

/// Averages gains and thresholds over the repetitions of one dataset.
pub fn aggregate_dataset(records: &[RepetitionRecord], expected: usize) -> Result<DatasetRecord> {
    let first = records
        .first()
        .ok_or_else(|| ProtocolError::MismatchedRecords("no repetition records".into()))?;
    if records.len() != expected {
        return Err(ProtocolError::MismatchedRecords(format!(
            "{}: {} repetitions, expected {expected}",
            first.dataset,
            records.len()
        )));
    }
    if let Some(r) = records
        .iter()
        .find(|r| r.dataset != first.dataset || r.n_instances != first.n_instances)
    {
        return Err(ProtocolError::MismatchedRecords(format!(
            "records mix datasets {} and {}",
            first.dataset, r.dataset
        )));
    }
    let n = records.len() as f64;
    Ok(DatasetRecord {
        dataset: first.dataset.clone(),
        n_instances: first.n_instances,
        accgain: records.iter().map(|r| r.accgain).sum::<f64>() / n,
        delta: records.iter().map(|r| r.delta).sum::<f64>() / n,
        repetitions: records.to_vec(),
    })
}

/// Runs every (dataset, repetition) cell of a study. Cells run in parallel;
/// seeds derive from the master seed, dataset name and repetition index, so
/// the table does not depend on scheduling or dataset order.
pub fn run_study(datasets: &[Dataset], scenario: &Scenario, plan: &StudyPlan) -> Result<StudyRecord> {
    if datasets.is_empty() {
        return Err(ProtocolError::InvalidStudy("no datasets".into()));
    }
    plan.validate(scenario)?;
    let mut names = HashSet::new();
    for d in datasets {
        if !names.insert(d.name()) {
            return Err(ProtocolError::InvalidStudy(format!(
                "duplicate dataset id {}",
                d.name()
            )));
        }
        d.check_study_ready()?;
    }

    let master = Seed(plan.master_seed);
    let r_count = plan.repetitions;
    let cells: Vec<RepetitionRecord> = (0..datasets.len() * r_count)
        .into_par_iter()
        .map(|job| {
            let (i, r) = (job / r_count, job % r_count);
            let data = &datasets[i];
            run_repetition(data, scenario, plan, r, master.for_repetition(data.name(), r))
        })
        .collect::<Result<_>>()?;

    let datasets = cells
        .chunks(r_count)
        .map(|chunk| aggregate_dataset(chunk, r_count))
        .collect::<Result<_>>()?;
    Ok(StudyRecord {
        scenario: scenario.clone(),
        master_seed: plan.master_seed,
        datasets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::create_grid;

    fn outcome(id: LearnerId, flat: f64, nested: f64, future: f64) -> LearnerOutcome {
        let theta = create_grid(&LearnerSpec::builtin(id)).points()[0].clone();
        LearnerOutcome {
            learner: id,
            flat_estimate: flat,
            nested_estimate: nested,
            theta: theta.clone(),
            future_accuracy: future,
            nested_thetas: vec![theta; 5],
        }
    }

    #[test]
    fn gain_and_threshold_identities() {
        // Flat picks rf (0.90), nested picks knn (0.80).
        let rec = RepetitionRecord::from_outcomes(
            "d",
            0,
            100,
            vec![
                outcome(LearnerId::Rf, 0.90, 0.75, 0.82),
                outcome(LearnerId::Knn, 0.85, 0.80, 0.85),
            ],
        )
        .unwrap();
        assert_eq!(rec.flat_choice, LearnerId::Rf);
        assert_eq!(rec.nested_choice, LearnerId::Knn);
        assert_eq!(rec.accgain, 0.85 - 0.82);
        assert!((rec.accgain - 0.03).abs() < 1e-12);
        assert_eq!(rec.delta, rec.delta_flat.min(rec.delta_nested));
    }

    #[test]
    fn threshold_is_smaller_gap() {
        // Nested choice: estimate 0.80 vs future 0.77; flat choice gap 0.05.
        let rec = RepetitionRecord::from_outcomes(
            "d",
            0,
            100,
            vec![
                outcome(LearnerId::Knn, 0.70, 0.80, 0.77),
                outcome(LearnerId::Rf, 0.90, 0.70, 0.75),
            ],
        )
        .unwrap();
        assert!((rec.delta_nested - 0.03).abs() < 1e-12);
        assert!((rec.delta_flat - 0.05).abs() < 1e-12);
        assert_eq!(rec.delta, rec.delta_nested);
    }

    #[test]
    fn single_learner_forces_agreement() {
        let rec = RepetitionRecord::from_outcomes("d", 0, 10, vec![outcome(LearnerId::Gnb, 0.7, 0.6, 0.65)]).unwrap();
        assert!(rec.same_choice());
        assert_eq!(rec.accgain, 0.0);
        assert_eq!(rec.delta, rec.learners[0].nested_gap());
    }

    fn rep_with_gain(r: usize, gain: f64, delta: f64) -> RepetitionRecord {
        let mut rec =
            RepetitionRecord::from_outcomes("d", r, 50, vec![outcome(LearnerId::Knn, 0.7, 0.7, 0.7)]).unwrap();
        rec.accgain = gain;
        rec.delta = delta;
        rec
    }

    #[test]
    fn aggregate_means() {
        let gains = [0.03, 0.0, 0.0, -0.01, 0.01, 0.03];
        let recs: Vec<_> = gains
            .iter()
            .enumerate()
            .map(|(r, &g)| rep_with_gain(r, g, 0.02))
            .collect();
        let agg = aggregate_dataset(&recs, 6).unwrap();
        assert!((agg.accgain - 0.01).abs() < 1e-15);
        assert_eq!(agg.delta, 0.02);

        let zeros: Vec<_> = (0..6).map(|r| rep_with_gain(r, 0.0, 0.04)).collect();
        let agg = aggregate_dataset(&zeros, 6).unwrap();
        assert_eq!(agg.abs_accgain(), 0.0);
        assert!(agg.abs_accgain() < agg.delta);
    }

    #[test]
    fn aggregate_rejects_mismatch() {
        let mut recs: Vec<_> = (0..3).map(|r| rep_with_gain(r, 0.0, 0.0)).collect();
        assert!(matches!(
            aggregate_dataset(&recs, 6),
            Err(ProtocolError::MismatchedRecords(_))
        ));
        recs[1].dataset = "other".into();
        assert!(matches!(
            aggregate_dataset(&recs, 3),
            Err(ProtocolError::MismatchedRecords(_))
        ));
        assert!(matches!(
            aggregate_dataset(&[], 3),
            Err(ProtocolError::MismatchedRecords(_))
        ));
    }

    #[test]
    fn unconfigured_learner_rejected_before_training() {
        let plan = StudyPlan {
            learners: vec![LearnerSpec::builtin(LearnerId::Knn)],
            ..StudyPlan::default()
        };
        let scenario = Scenario::new("s", vec![LearnerId::Knn, LearnerId::Rf]);
        let rows = (0..20).map(|i| vec![i as f64]).collect();
        let d = Dataset::new("d", rows, (0..20).map(|i| (i % 2) as u8).collect()).unwrap();
        assert!(matches!(
            run_study(&[d], &scenario, &plan),
            Err(ProtocolError::UnknownLearner(s)) if s == "rf"
        ));
    }
}
