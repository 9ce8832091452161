//! Turns a study table into the paired (|gain|, threshold) values fed to the
//! signed-rank test, under the primary analysis and its variants.

use std::fmt;
use std::str::FromStr;

use super::{DatasetRecord, ProtocolError, RepetitionRecord, Result, StudyRecord};
use crate::learners::LearnerId;
use crate::selection::select_algorithm;
use crate::stats::{same_choice_rate, PairedSample, SameChoice};

/// How repetitions are combined before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    /// Gains and thresholds per repetition, averaged per dataset.
    Primary,
    /// Estimates averaged over repetitions first, one selection per dataset.
    AvgFirst,
    /// Every (dataset, repetition) cell is its own pair.
    PerRepetition,
}

impl Analysis {
    pub const ALL: [Analysis; 3] = [Analysis::Primary, Analysis::AvgFirst, Analysis::PerRepetition];

    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Primary => "primary",
            Analysis::AvgFirst => "avg_first",
            Analysis::PerRepetition => "per_repetition",
        }
    }
}

/// Which irrelevance threshold is attached to each pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    /// Gap between nested estimate and future accuracy.
    NestedGap,
    /// Smallest across-repetition standard deviation of the three accuracy
    /// series.
    StdDev,
}

impl Threshold {
    pub const ALL: [Threshold; 2] = [Threshold::NestedGap, Threshold::StdDev];

    pub fn as_str(self) -> &'static str {
        match self {
            Threshold::NestedGap => "nested_gap",
            Threshold::StdDev => "stddev",
        }
    }
}

macro_rules! text_enum {
    ($t:ty) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                <$t>::ALL
                    .into_iter()
                    .find(|v| v.as_str() == s)
                    .ok_or_else(|| format!("unknown {} {s:?}", stringify!($t).to_lowercase()))
            }
        }
    };
}

text_enum!(Analysis);
text_enum!(Threshold);

/// What the nested choice is compared against for the same-choice rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    FlatVsNested,
    FixedVsNested(LearnerId),
}

/// One paired observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub dataset: String,
    /// `None` when the row aggregates all repetitions.
    pub repetition: Option<usize>,
    pub n_instances: usize,
    /// Signed accuracy gain of the nested choice over the reference choice.
    pub gain: f64,
    pub delta: f64,
}

impl PairRow {
    pub fn abs_gain(&self) -> f64 {
        self.gain.abs()
    }

    /// `|gain| - delta`; negative when the gain is irrelevant.
    pub fn excess(&self) -> f64 {
        self.abs_gain() - self.delta
    }
}

/// Paired values plus the selections behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedAnalysis {
    pub analysis: Analysis,
    pub threshold: Threshold,
    pub rows: Vec<PairRow>,
    /// (reference choice, nested choice) per selection event.
    pub choices: Vec<(LearnerId, LearnerId)>,
    pub n_candidates: usize,
}

impl PairedAnalysis {
    /// Pairs `(|gain|, delta)` for the signed-rank test.
    pub fn sample(&self) -> Result<PairedSample> {
        Ok(PairedSample::new(
            self.rows.iter().map(|r| (r.abs_gain(), r.delta)).collect(),
        )?)
    }

    pub fn excesses(&self) -> Vec<f64> {
        self.rows.iter().map(PairRow::excess).collect()
    }

    pub fn same_choice(&self) -> Result<SameChoice> {
        Ok(same_choice_rate(&self.choices, self.n_candidates)?)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Sample standard deviation; exactly 0 for a constant series.
fn sample_sd(values: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut m, mut m2) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        let d = v - m;
        m += d / n as f64;
        m2 += d * (v - m);
    }
    (m2 / (n - 1) as f64).max(0.0).sqrt()
}

/// Every record must carry every scenario learner, in scenario order, and
/// every dataset must have repetitions `0..R` for a common `R`.
fn check_complete(study: &StudyRecord) -> Result<usize> {
    let first = study
        .datasets
        .first()
        .ok_or_else(|| ProtocolError::IncompleteTable("no datasets".into()))?;
    let reps = first.repetitions.len();
    for d in &study.datasets {
        if d.repetitions.len() != reps || reps == 0 {
            return Err(ProtocolError::IncompleteTable(format!(
                "{} has {} repetitions, expected {reps}",
                d.dataset,
                d.repetitions.len()
            )));
        }
        for (r, rec) in d.repetitions.iter().enumerate() {
            let ids: Vec<LearnerId> = rec.learners.iter().map(|o| o.learner).collect();
            if rec.repetition != r || ids != study.scenario.learners {
                return Err(ProtocolError::IncompleteTable(format!(
                    "{} repetition {}: learners {ids:?} do not match the scenario",
                    d.dataset, rec.repetition
                )));
            }
        }
    }
    Ok(reps)
}

fn scenario_learner(study: &StudyRecord, id: LearnerId) -> Result<()> {
    if study.scenario.learners.contains(&id) {
        Ok(())
    } else {
        Err(ProtocolError::UnknownLearner(id.to_string()))
    }
}

fn outcome(rec: &RepetitionRecord, id: LearnerId) -> Result<&super::LearnerOutcome> {
    rec.outcome(id).ok_or_else(|| {
        ProtocolError::IncompleteTable(format!("{} repetition {} lacks {id}", rec.dataset, rec.repetition))
    })
}

fn sd_threshold(d: &DatasetRecord, a: LearnerId) -> Result<f64> {
    if d.repetitions.len() < 2 {
        return Err(ProtocolError::InsufficientRepetitions {
            found: d.repetitions.len(),
        });
    }
    let series = |pick: fn(&super::LearnerOutcome) -> f64| -> Result<f64> {
        let values = d
            .repetitions
            .iter()
            .map(|r| outcome(r, a).map(pick))
            .collect::<Result<Vec<f64>>>()?;
        Ok(sample_sd(values.into_iter()))
    };
    let nested = series(|o| o.nested_estimate)?;
    let flat = series(|o| o.flat_estimate)?;
    let future = series(|o| o.future_accuracy)?;
    Ok(nested.min(flat).min(future))
}

/// Smallest of the across-repetition standard deviations of the nested
/// estimate, flat estimate and future accuracy of `learner` on `dataset`.
pub fn threshold_stddev(study: &StudyRecord, learner: LearnerId, dataset: &str) -> Result<f64> {
    scenario_learner(study, learner)?;
    let d = study
        .dataset(dataset)
        .ok_or_else(|| ProtocolError::IncompleteTable(format!("no dataset {dataset}")))?;
    sd_threshold(d, learner)
}

/// Threshold of one record: the stored nested gap, or the standard-deviation
/// threshold of the two chosen learners.
fn record_delta(d: &DatasetRecord, rec: &RepetitionRecord, threshold: Threshold, other: LearnerId) -> Result<f64> {
    match threshold {
        Threshold::NestedGap => Ok(outcome(rec, rec.nested_choice)?
            .nested_gap()
            .min(outcome(rec, other)?.nested_gap())),
        Threshold::StdDev => Ok(sd_threshold(d, rec.nested_choice)?.min(sd_threshold(d, other)?)),
    }
}

/// The primary analysis: per-dataset means of the per-repetition gains and
/// thresholds.
pub fn analysis_primary(study: &StudyRecord, threshold: Threshold) -> Result<PairedAnalysis> {
    check_complete(study)?;
    let mut rows = Vec::new();
    for d in &study.datasets {
        let deltas = d
            .repetitions
            .iter()
            .map(|r| record_delta(d, r, threshold, r.flat_choice))
            .collect::<Result<Vec<_>>>()?;
        rows.push(PairRow {
            dataset: d.dataset.clone(),
            repetition: None,
            n_instances: d.n_instances,
            gain: mean(d.repetitions.iter().map(|r| r.accgain)),
            delta: mean(deltas.into_iter()),
        });
    }
    Ok(PairedAnalysis {
        analysis: Analysis::Primary,
        threshold,
        rows,
        choices: study.records().map(|r| (r.flat_choice, r.nested_choice)).collect(),
        n_candidates: study.scenario.learners.len(),
    })
}

/// Each (dataset, repetition) cell as an independent pair.
pub fn analysis_per_repetition(study: &StudyRecord, threshold: Threshold) -> Result<PairedAnalysis> {
    check_complete(study)?;
    let mut rows = Vec::new();
    for d in &study.datasets {
        for r in &d.repetitions {
            rows.push(PairRow {
                dataset: d.dataset.clone(),
                repetition: Some(r.repetition),
                n_instances: d.n_instances,
                gain: r.accgain,
                delta: record_delta(d, r, threshold, r.flat_choice)?,
            });
        }
    }
    Ok(PairedAnalysis {
        analysis: Analysis::PerRepetition,
        threshold,
        rows,
        choices: study.records().map(|r| (r.flat_choice, r.nested_choice)).collect(),
        n_candidates: study.scenario.learners.len(),
    })
}

/// Estimates and future accuracies are averaged over repetitions first;
/// flat and nested CV then each choose one learner per dataset.
pub fn analysis_avg_first(study: &StudyRecord, threshold: Threshold) -> Result<PairedAnalysis> {
    check_complete(study)?;
    let learners = &study.scenario.learners;
    let mut rows = Vec::new();
    let mut choices = Vec::new();
    for d in &study.datasets {
        let avg = |a: LearnerId, pick: fn(&super::LearnerOutcome) -> f64| -> Result<f64> {
            let values = d
                .repetitions
                .iter()
                .map(|r| outcome(r, a).map(pick))
                .collect::<Result<Vec<_>>>()?;
            Ok(mean(values.into_iter()))
        };
        let mut flat = Vec::new();
        let mut nested = Vec::new();
        let mut future = Vec::new();
        for &a in learners {
            flat.push((a, avg(a, |o| o.flat_estimate)?));
            nested.push((a, avg(a, |o| o.nested_estimate)?));
            future.push(avg(a, |o| o.future_accuracy)?);
        }
        let empty = |_| ProtocolError::IncompleteTable("scenario without learners".into());
        let f = select_algorithm(&flat).map_err(empty)?;
        let n = select_algorithm(&nested).map_err(empty)?;
        let pos = |a: LearnerId| learners.iter().position(|&l| l == a).expect("chosen from the scenario");
        let delta_of = |a: LearnerId| -> Result<f64> {
            match threshold {
                Threshold::NestedGap => Ok((nested[pos(a)].1 - future[pos(a)]).abs()),
                Threshold::StdDev => sd_threshold(d, a),
            }
        };
        rows.push(PairRow {
            dataset: d.dataset.clone(),
            repetition: None,
            n_instances: d.n_instances,
            gain: future[pos(n)] - future[pos(f)],
            delta: delta_of(n)?.min(delta_of(f)?),
        });
        choices.push((f, n));
    }
    Ok(PairedAnalysis {
        analysis: Analysis::AvgFirst,
        threshold,
        rows,
        choices,
        n_candidates: learners.len(),
    })
}

/// Runs the chosen analysis.
pub fn analyse(study: &StudyRecord, analysis: Analysis, threshold: Threshold) -> Result<PairedAnalysis> {
    match analysis {
        Analysis::Primary => analysis_primary(study, threshold),
        Analysis::AvgFirst => analysis_avg_first(study, threshold),
        Analysis::PerRepetition => analysis_per_repetition(study, threshold),
    }
}

/// Gain and threshold of one record when the flat choice is replaced by
/// the fixed learner.
pub fn baseline_repetition(rec: &RepetitionRecord, fixed: LearnerId) -> Result<(f64, f64)> {
    let n = outcome(rec, rec.nested_choice)?;
    let x = outcome(rec, fixed)?;
    Ok((
        n.future_accuracy - x.future_accuracy,
        n.nested_gap().min(x.nested_gap()),
    ))
}

/// The primary analysis with a fixed learner standing in for flat CV's
/// choice.
pub fn baseline_fixed(study: &StudyRecord, fixed: LearnerId, threshold: Threshold) -> Result<PairedAnalysis> {
    scenario_learner(study, fixed)?;
    check_complete(study)?;
    let mut rows = Vec::new();
    for d in &study.datasets {
        let mut gains = Vec::new();
        let mut deltas = Vec::new();
        for r in &d.repetitions {
            gains.push(baseline_repetition(r, fixed)?.0);
            deltas.push(record_delta(d, r, threshold, fixed)?);
        }
        rows.push(PairRow {
            dataset: d.dataset.clone(),
            repetition: None,
            n_instances: d.n_instances,
            gain: mean(gains.into_iter()),
            delta: mean(deltas.into_iter()),
        });
    }
    Ok(PairedAnalysis {
        analysis: Analysis::Primary,
        threshold,
        rows,
        choices: study.records().map(|r| (fixed, r.nested_choice)).collect(),
        n_candidates: study.scenario.learners.len(),
    })
}

/// Fraction of repetitions on which the nested choice matches the
/// reference, with the random-choice baseline.
pub fn same_choice(study: &StudyRecord, reference: Reference) -> Result<SameChoice> {
    let choices: Vec<(LearnerId, LearnerId)> = match reference {
        Reference::FlatVsNested => study.records().map(|r| (r.flat_choice, r.nested_choice)).collect(),
        Reference::FixedVsNested(fixed) => {
            scenario_learner(study, fixed)?;
            study.records().map(|r| (fixed, r.nested_choice)).collect()
        }
    };
    Ok(same_choice_rate(&choices, study.scenario.learners.len())?)
}
