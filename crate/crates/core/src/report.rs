//! Summary statistics of a study and their text artifacts.
//!
//! The report file holds three blocks, each introduced by a `# name` line
//! and a fixed header row, separated by blank lines:
//!
//! ```text
//! # summary
//! scenario,comparison,analysis,threshold,n,same_choice,random_baseline,p_value,statistic,method,mean,low_ci,high_ci,low_power
//! # ranks
//! scenario,ordering,learner,mean_rank
//! # pairs
//! scenario,comparison,dataset,repetition,n_instances,gain,abs_gain,delta,excess
//! ```
//!
//! `comparison` is `flat` for flat CV against nested CV, or `fixed:<id>` for
//! a fixed learner against nested CV. `mean` and the interval refer to
//! `|gain| - delta`, and `p_value` to the one-sided signed-rank test that
//! `|gain|` is smaller than `delta`.
//!
//! Plot data comes as two files per scenario: a scatter file with header
//! `dataset,abs_gain,delta` (points below the diagonal are irrelevant
//! gains) and a pooled file with header `series,value`, where `series` is
//! `abs_gain` or `delta`.

use std::io::Write;

use thiserror::Error;

use crate::learners::LearnerId;
use crate::protocol::{analyse, baseline_fixed, Analysis, PairedAnalysis, ProtocolError, StudyRecord, Threshold};
use crate::seed::Seed;
use crate::stats::{
    bootstrap_ci_mean, mean_ranks, wilcoxon_one_sided, Alternative, Direction, Method, StatsError, DEFAULT_LEVEL,
    DEFAULT_RESAMPLES,
};

/// Below this many non-zero differences no one-sided exact p-value can
/// reach 0.05.
pub const LOW_POWER_BELOW: usize = 5;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("incomplete study: {0}")]
    IncompleteStudy(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ReportError>;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub analysis: Analysis,
    pub threshold: Threshold,
    /// Adds a fixed-learner comparison row per scenario containing it.
    pub baseline: Option<LearnerId>,
    /// Keeps only datasets with at least this many instances.
    pub min_size: Option<usize>,
    pub resamples: usize,
    pub level: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            analysis: Analysis::Primary,
            threshold: Threshold::NestedGap,
            baseline: None,
            min_size: None,
            resamples: DEFAULT_RESAMPLES,
            level: DEFAULT_LEVEL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub comparison: String,
    pub analysis: Analysis,
    pub threshold: Threshold,
    /// Number of pairs.
    pub n: usize,
    pub same_choice: f64,
    pub random_baseline: f64,
    pub p_value: f64,
    pub statistic: f64,
    pub method: Method,
    /// Mean of `|gain| - delta`.
    pub mean: f64,
    pub low_ci: f64,
    pub high_ci: f64,
    pub low_power: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub scenario: String,
    /// `nested` or `flat`.
    pub ordering: &'static str,
    /// Sorted by mean rank, best first.
    pub ranks: Vec<(LearnerId, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonPairs {
    pub scenario: String,
    pub comparison: String,
    pub analysis: PairedAnalysis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub summaries: Vec<SummaryRow>,
    pub ranks: Vec<RankTable>,
    pub pairs: Vec<ComparisonPairs>,
}

fn summarise(
    scenario: &str,
    comparison: &str,
    pairs: &PairedAnalysis,
    opts: &ReportOptions,
    seed: Seed,
) -> Result<SummaryRow> {
    let test = wilcoxon_one_sided(&pairs.sample()?, Alternative::Less)?;
    let ci = bootstrap_ci_mean(&pairs.excesses(), opts.resamples, opts.level, seed)?;
    let agreement = pairs.same_choice()?;
    Ok(SummaryRow {
        scenario: scenario.to_string(),
        comparison: comparison.to_string(),
        analysis: pairs.analysis,
        threshold: pairs.threshold,
        n: pairs.rows.len(),
        same_choice: agreement.rate,
        random_baseline: agreement.random_baseline,
        p_value: test.p_value,
        statistic: test.statistic,
        method: test.method,
        mean: ci.mean,
        low_ci: ci.lower,
        high_ci: ci.upper,
        low_power: test.n_effective < LOW_POWER_BELOW,
    })
}

/// Builds the report for each scenario's study. The bootstrap stream is
/// derived from the master seed and the scenario and comparison names.
pub fn build_report(studies: &[StudyRecord], opts: &ReportOptions) -> Result<StudyReport> {
    if studies.is_empty() {
        return Err(ReportError::IncompleteStudy("no scenarios".into()));
    }
    let mut report = StudyReport {
        summaries: Vec::new(),
        ranks: Vec::new(),
        pairs: Vec::new(),
    };
    for full in studies {
        let study = match opts.min_size {
            Some(m) => full.filter_min_size(m),
            None => full.clone(),
        };
        let name = study.scenario.name.as_str();
        if study.datasets.is_empty() {
            return Err(ReportError::IncompleteStudy(format!(
                "scenario {name} has no datasets to report"
            )));
        }
        let seed = Seed(study.master_seed).child_str("report").child_str(name);

        let mut comparisons = vec![("flat".to_string(), analyse(&study, opts.analysis, opts.threshold)?)];
        if let Some(fixed) = opts.baseline.filter(|f| study.scenario.learners.contains(f)) {
            comparisons.push((format!("fixed:{fixed}"), baseline_fixed(&study, fixed, opts.threshold)?));
        }
        for (comparison, pairs) in comparisons {
            report
                .summaries
                .push(summarise(name, &comparison, &pairs, opts, seed.child_str(&comparison))?);
            report.pairs.push(ComparisonPairs {
                scenario: name.to_string(),
                comparison,
                analysis: pairs,
            });
        }

        for (ordering, nested) in [("nested", true), ("flat", false)] {
            let ranks = mean_ranks(
                &study.scenario.learners,
                &study.rank_cells(nested),
                Direction::HigherIsBetter,
            )?;
            report.ranks.push(RankTable {
                scenario: name.to_string(),
                ordering,
                ranks,
            });
        }
    }
    Ok(report)
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Writes the three-block report described in the module docs.
pub fn write_report<W: Write>(report: &StudyReport, mut out: W) -> Result<()> {
    let block = |title: &str, header: &[&str], rows: Vec<Vec<String>>, out: &mut W| -> Result<()> {
        writeln!(out, "# {title}")?;
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(header).map_err(csv_io)?;
        for r in rows {
            w.write_record(&r).map_err(csv_io)?;
        }
        out.write_all(&w.into_inner().map_err(|e| e.into_error())?)?;
        Ok(())
    };

    let summary = report
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.scenario.clone(),
                s.comparison.clone(),
                s.analysis.to_string(),
                s.threshold.to_string(),
                s.n.to_string(),
                s.same_choice.to_string(),
                s.random_baseline.to_string(),
                s.p_value.to_string(),
                s.statistic.to_string(),
                s.method.as_str().to_string(),
                s.mean.to_string(),
                s.low_ci.to_string(),
                s.high_ci.to_string(),
                s.low_power.to_string(),
            ]
        })
        .collect();
    block(
        "summary",
        &[
            "scenario",
            "comparison",
            "analysis",
            "threshold",
            "n",
            "same_choice",
            "random_baseline",
            "p_value",
            "statistic",
            "method",
            "mean",
            "low_ci",
            "high_ci",
            "low_power",
        ],
        summary,
        &mut out,
    )?;
    writeln!(out)?;

    let ranks = report
        .ranks
        .iter()
        .flat_map(|t| {
            t.ranks.iter().map(move |(id, r)| {
                vec![
                    t.scenario.clone(),
                    t.ordering.to_string(),
                    id.to_string(),
                    r.to_string(),
                ]
            })
        })
        .collect();
    block(
        "ranks",
        &["scenario", "ordering", "learner", "mean_rank"],
        ranks,
        &mut out,
    )?;
    writeln!(out)?;

    let pairs = report
        .pairs
        .iter()
        .flat_map(|c| {
            c.analysis.rows.iter().map(move |p| {
                vec![
                    c.scenario.clone(),
                    c.comparison.clone(),
                    p.dataset.clone(),
                    opt(p.repetition),
                    p.n_instances.to_string(),
                    p.gain.to_string(),
                    p.abs_gain().to_string(),
                    p.delta.to_string(),
                    p.excess().to_string(),
                ]
            })
        })
        .collect();
    block(
        "pairs",
        &[
            "scenario",
            "comparison",
            "dataset",
            "repetition",
            "n_instances",
            "gain",
            "abs_gain",
            "delta",
            "excess",
        ],
        pairs,
        &mut out,
    )?;
    out.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Scatter rows `dataset,abs_gain,delta`, one per pair.
pub fn write_scatter<W: Write>(pairs: &PairedAnalysis, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "abs_gain", "delta"]).map_err(csv_io)?;
    for p in &pairs.rows {
        w.write_record([p.dataset.clone(), p.abs_gain().to_string(), p.delta.to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Pooled rows `series,value`: every `|gain|` then every `delta`.
pub fn write_pooled<W: Write>(pairs: &PairedAnalysis, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "value"]).map_err(csv_io)?;
    for p in &pairs.rows {
        w.write_record(["abs_gain", &p.abs_gain().to_string()])
            .map_err(csv_io)?;
    }
    for p in &pairs.rows {
        w.write_record(["delta", &p.delta.to_string()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}
