//! Study configuration file (TOML).
//!
//! ```toml
//! master_seed = 7
//! repetitions = 6          # default 6
//! split_fraction = 0.5     # default 0.5
//! k_outer = 5              # default 5
//! k_inner = 5              # default 5
//! output_dir = "results"   # default "nestcv-out", relative to this file
//! analysis = "primary"     # primary | avg_first | per_repetition
//! threshold = "nested_gap" # nested_gap | stddev
//! baseline = "rf"          # optional fixed-learner comparison
//! min_size = 2000          # optional dataset-size filter for the report
//! workers = 4              # optional; NESTCV_WORKERS or --workers override
//!
//! [[dataset]]
//! path = "data/sonar.csv"  # relative to this file
//! label = "class"          # column name or zero-based index; default 0
//! header = true            # default true
//! cap = 5000               # default 5000; larger datasets are subsampled
//! name = "sonar"           # default: file stem
//!
//! [[scenario]]
//! name = "top3"
//! learners = ["rf", "gbstump", "knn"]
//!
//! [learners.knn]
//! k = [1, 5, 9]
//! ```
//!
//! Without any `[[scenario]]`, a single scenario `full` with every learner
//! is used. `[learners.<id>]` tables replace the values of the named grid
//! axes; unlisted axes keep their defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nestcv::data::{CsvOptions, LabelColumn};
use nestcv::learners::{LearnerError, LearnerId, LearnerSpec};
use nestcv::protocol::{Analysis, Scenario, StudyPlan, Threshold};
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_CAP: usize = 5000;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum LabelSpec {
    Index(usize),
    Name(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub label: Option<LabelSpec>,
    #[serde(default = "yes")]
    pub header: bool,
    #[serde(default = "default_cap")]
    pub cap: usize,
    pub name: Option<String>,
}

fn yes() -> bool {
    true
}

fn default_cap() -> usize {
    DEFAULT_CAP
}

impl DatasetEntry {
    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label: match &self.label {
                None => LabelColumn::Index(0),
                Some(LabelSpec::Index(i)) => LabelColumn::Index(*i),
                Some(LabelSpec::Name(n)) => LabelColumn::Name(n.clone()),
            },
            has_header: self.header,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub name: String,
    pub learners: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub master_seed: u64,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default = "default_fraction")]
    pub split_fraction: f64,
    #[serde(default = "default_folds")]
    pub k_outer: usize,
    #[serde(default = "default_folds")]
    pub k_inner: usize,
    pub output_dir: Option<PathBuf>,
    pub analysis: Option<String>,
    pub threshold: Option<String>,
    pub baseline: Option<String>,
    pub min_size: Option<usize>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub dataset: Vec<DatasetEntry>,
    #[serde(default)]
    pub scenario: Vec<ScenarioEntry>,
    #[serde(default)]
    pub learners: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

fn default_reps() -> usize {
    6
}

fn default_fraction() -> f64 {
    0.5
}

fn default_folds() -> usize {
    5
}

/// A validated configuration.
#[derive(Debug)]
pub struct StudyConfig {
    pub plan: StudyPlan,
    pub datasets: Vec<DatasetEntry>,
    pub scenarios: Vec<Scenario>,
    pub output_dir: PathBuf,
    pub analysis: Analysis,
    pub threshold: Threshold,
    pub baseline: Option<LearnerId>,
    pub min_size: Option<usize>,
    pub workers: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Learner(#[from] LearnerError),
    #[error("config: {0}")]
    Invalid(String),
}

pub fn parse_analysis(s: &str) -> Result<Analysis, ConfigError> {
    s.parse().map_err(ConfigError::Invalid)
}

pub fn parse_threshold(s: &str) -> Result<Threshold, ConfigError> {
    s.parse().map_err(ConfigError::Invalid)
}

pub fn load(path: &Path) -> Result<StudyConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    from_str(&text, base)
}

/// Parses and validates a configuration; relative paths resolve against
/// `base`.
pub fn from_str(text: &str, base: &Path) -> Result<StudyConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

    let mut learners: Vec<LearnerSpec> = LearnerId::ALL.iter().map(|&id| LearnerSpec::builtin(id)).collect();
    for (id, axes) in &raw.learners {
        let id: LearnerId = id.parse()?;
        let slot = learners
            .iter_mut()
            .find(|s| s.id() == id)
            .expect("every learner is built in");
        for (axis, values) in axes {
            *slot = slot.clone().with_axis(axis, values)?;
        }
    }

    let scenarios = if raw.scenario.is_empty() {
        vec![Scenario::new("full", LearnerId::ALL.to_vec())]
    } else {
        raw.scenario
            .iter()
            .map(|s| {
                let ids = s
                    .learners
                    .iter()
                    .map(|l| l.parse())
                    .collect::<Result<Vec<LearnerId>, _>>()?;
                Ok(Scenario::new(s.name.clone(), ids))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?
    };
    let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(ConfigError::Invalid("duplicate scenario names".into()));
    }

    let baseline = raw.baseline.as_deref().map(str::parse).transpose()?;
    let plan = StudyPlan {
        learners,
        repetitions: raw.repetitions,
        split_fraction: raw.split_fraction,
        k_outer: raw.k_outer,
        k_inner: raw.k_inner,
        master_seed: raw.master_seed,
    };
    for s in &scenarios {
        plan.validate(s).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    if raw.dataset.is_empty() {
        return Err(ConfigError::Invalid("no [[dataset]] entries".into()));
    }
    if raw.workers == Some(0) {
        return Err(ConfigError::Invalid("workers must be at least 1".into()));
    }
    let datasets = raw
        .dataset
        .into_iter()
        .map(|mut d| {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
            d
        })
        .collect();

    Ok(StudyConfig {
        plan,
        datasets,
        scenarios,
        output_dir: base.join(raw.output_dir.unwrap_or_else(|| PathBuf::from("nestcv-out"))),
        analysis: raw
            .analysis
            .as_deref()
            .map(parse_analysis)
            .transpose()?
            .unwrap_or(Analysis::Primary),
        threshold: raw
            .threshold
            .as_deref()
            .map(parse_threshold)
            .transpose()?
            .unwrap_or(Threshold::NestedGap),
        baseline,
        min_size: raw.min_size,
        workers: raw.workers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "master_seed = 1\n[[dataset]]\npath = \"a.csv\"\n";

    #[test]
    fn defaults() {
        let c = from_str(MINIMAL, Path::new("/tmp/x")).unwrap();
        assert_eq!(c.plan.repetitions, 6);
        assert_eq!(c.plan.split_fraction, 0.5);
        assert_eq!((c.plan.k_outer, c.plan.k_inner), (5, 5));
        assert_eq!(c.datasets[0].cap, 5000);
        assert_eq!(c.datasets[0].path, Path::new("/tmp/x/a.csv"));
        assert_eq!(c.scenarios[0].learners.len(), 6);
        assert_eq!(c.analysis, Analysis::Primary);
    }

    #[test]
    fn unknown_learner_in_scenario() {
        let text = format!("{MINIMAL}[[scenario]]\nname = \"s\"\nlearners = [\"rf\", \"svmRadial\"]\n");
        let err = from_str(&text, Path::new(".")).unwrap_err();
        assert!(matches!(err, ConfigError::Learner(LearnerError::UnknownLearner(ref s)) if s == "svmRadial"));
    }

    #[test]
    fn grid_override_and_bounds() {
        let text = format!("{MINIMAL}[learners.knn]\nk = [1, 7]\n");
        let c = from_str(&text, Path::new(".")).unwrap();
        let knn = c.plan.spec(LearnerId::Knn).unwrap();
        assert_eq!(nestcv::learners::create_grid(knn).len(), 2);

        let bad = format!("{MINIMAL}[learners.gnb]\nvar_smoothing = [0.0]\n");
        assert!(matches!(from_str(&bad, Path::new(".")), Err(ConfigError::Learner(_))));
    }

    #[test]
    fn invalid_values() {
        let text = MINIMAL.replace("master_seed = 1", "master_seed = 1\nsplit_fraction = 1.0");
        assert!(matches!(from_str(&text, Path::new(".")), Err(ConfigError::Invalid(_))));
        let text = MINIMAL.replace("master_seed = 1", "master_seed = 1\nrepetitions = 0");
        assert!(matches!(from_str(&text, Path::new(".")), Err(ConfigError::Invalid(_))));
        let text = MINIMAL.replace("master_seed = 1", "master_seed = 1\nanalysis = \"bayes\"");
        assert!(matches!(from_str(&text, Path::new(".")), Err(ConfigError::Invalid(_))));
        assert!(matches!(
            from_str("master_seed = 1\n", Path::new(".")),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            from_str("master_seed = \"x\"", Path::new(".")),
            Err(ConfigError::Parse(_))
        ));
    }
}
