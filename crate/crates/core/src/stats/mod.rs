//! Paired nonparametric statistics used to summarise a study.

mod bootstrap;
mod ranks;
mod wilcoxon;

use thiserror::Error;

pub use bootstrap::{bootstrap_ci_mean, quantile_sorted, IntervalEstimate, DEFAULT_LEVEL, DEFAULT_RESAMPLES};
pub use ranks::{mean_ranks, same_choice_rate, Direction, SameChoice};
pub use wilcoxon::{wilcoxon_one_sided, Alternative, Method, PairedSample, TestResult, EXACT_MAX_N};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("at least one bootstrap resample is required")]
    NoResamples,
    #[error("incomplete matrix: {0}")]
    IncompleteMatrix(String),
}

pub type Result<T> = std::result::Result<T, StatsError>;
