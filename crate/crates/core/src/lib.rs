//! Flat versus nested cross-validation as algorithm-selection procedures.
//!
//! The crate runs both procedures over datasets and candidate learners,
//! measures the held-out accuracy gain of the nested choice over the flat
//! one, compares it with a per-dataset irrelevance threshold, and summarises
//! the comparison with paired nonparametric statistics.
//!
//! Modules, bottom up:
//! - [`data`]: datasets, CSV ingestion, stratified splits and folds.
//! - [`learners`]: the classifier abstraction and built-in learners with
//!   their hyperparameter grids.
//! - [`selection`]: the flat and nested CV estimators and algorithm argmax.
//! - [`protocol`]: repetitions, accuracy gain, thresholds, analysis variants.
//! - [`stats`]: Wilcoxon signed-rank test, bootstrap CI, mean ranks.
//! - [`table`], [`report`]: the raw study table and the summary report.

pub mod data;
pub mod learners;
pub mod protocol;
pub mod report;
pub mod seed;
pub mod selection;
pub mod stats;
pub mod table;

pub use data::{Dataset, FoldPlan, SplitPair, View};
pub use learners::{HyperGrid, HyperPoint, LearnerId, LearnerSpec, TrainedModel};
pub use seed::Seed;
