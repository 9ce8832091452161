//! Datasets, CSV ingestion and stratified index-level splitting.
//!
//! All splitters work on label slices and return positions into that slice,
//! so the same code folds a whole dataset or the training side of a split.

use std::path::Path;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::seed::Seed;

/// Minimum instances per class for a dataset to take part in a study.
pub const MIN_PER_CLASS: usize = 4;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },
    #[error("label column must hold exactly 2 distinct values, found {found}")]
    NonBinaryLabels { found: usize },
    #[error("too few instances: {what} has {count}, need at least {required}")]
    TooFewInstances {
        what: String,
        count: usize,
        required: usize,
    },
    #[error("label column {0} not found")]
    MissingLabelColumn(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// A binary classification dataset stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    labels: Vec<u8>,
    n_features: usize,
    class_names: [String; 2],
}

impl Dataset {
    /// Builds a dataset from rows. Checks shape, finiteness and that labels
    /// are in {0, 1}; class-count requirements are checked separately by
    /// [`Dataset::check_study_ready`].
    pub fn new(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(DataError::Invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n_features = rows.first().map_or(0, Vec::len);
        if n_features == 0 {
            return Err(DataError::Invalid("at least one feature and one row required".into()));
        }
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(DataError::Invalid(format!(
                    "row {i} has {} features, expected {n_features}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(DataError::Invalid(format!("row {i} holds non-finite value {v}")));
            }
            features.extend_from_slice(row);
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(DataError::Invalid(format!("label {l} outside {{0, 1}}")));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            n_features,
            class_names: ["0".into(), "1".into()],
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_class_names(mut self, names: [String; 2]) -> Self {
        self.class_names = names;
        self
    }

    /// Both classes present with at least [`MIN_PER_CLASS`] instances each.
    pub fn check_study_ready(&self) -> Result<()> {
        let counts = self.class_counts();
        let present = counts.iter().filter(|&&c| c > 0).count();
        if present != 2 {
            return Err(DataError::NonBinaryLabels { found: present });
        }
        for (class, &count) in counts.iter().enumerate() {
            if count < MIN_PER_CLASS {
                return Err(DataError::TooFewInstances {
                    what: format!("class {class} of {}", self.name),
                    count,
                    required: MIN_PER_CLASS,
                });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_instances(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String; 2] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn class_counts(&self) -> [usize; 2] {
        class_counts(&self.labels)
    }

    pub fn all_rows(&self) -> Vec<usize> {
        (0..self.n_instances()).collect()
    }

    pub fn view<'a>(&'a self, rows: &'a [usize]) -> View<'a> {
        View { data: self, rows }
    }

    /// New dataset holding `rows` (in the given order).
    pub fn select(&self, rows: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        Dataset {
            name: self.name.clone(),
            features,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            n_features: self.n_features,
            class_names: self.class_names.clone(),
        }
    }
}

/// A borrowed subset of a dataset's rows.
#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    data: &'a Dataset,
    rows: &'a [usize],
}

impl<'a> View<'a> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.data
    }

    /// Dataset indices covered by this view.
    pub fn rows(&self) -> &'a [usize] {
        self.rows
    }

    pub fn x(&self, i: usize) -> &'a [f64] {
        self.data.row(self.rows[i])
    }

    pub fn y(&self, i: usize) -> u8 {
        self.data.labels[self.rows[i]]
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|&r| self.data.labels[r]).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for &r in self.rows {
            c[self.data.labels[r] as usize] += 1;
        }
        c
    }

    /// Maps positions within this view to dataset indices.
    pub fn map_positions(&self, positions: &[usize]) -> Vec<usize> {
        positions.iter().map(|&p| self.rows[p]).collect()
    }
}

pub fn class_counts(labels: &[u8]) -> [usize; 2] {
    let mut c = [0; 2];
    for &l in labels {
        c[l as usize] += 1;
    }
    c
}

/// Disjoint train/test index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPair {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-instance fold assignment for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn test_positions(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    /// `(train, test)` position lists, one per fold, in fold order.
    pub fn pairs(&self) -> Vec<SplitPair> {
        (0..self.k)
            .map(|fold| {
                let (test, train) = (0..self.assignment.len()).partition(|&i| self.assignment[i] == fold);
                SplitPair { train, test }
            })
            .collect()
    }
}

/// Largest-remainder apportionment: each entry gets `floor(quota)` or
/// `ceil(quota)` and the entries sum to `total`. Remainder ties go to the
/// lower index.
fn apportion(quotas: &[f64], total: usize) -> Vec<usize> {
    let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut deficit = total.saturating_sub(assigned);
    let mut i = 0;
    while deficit > 0 && !order.is_empty() {
        out[order[i % order.len()]] += 1;
        deficit -= 1;
        i += 1;
    }
    out
}

fn shuffled_class_positions(labels: &[u8], seed: Seed) -> [Vec<usize>; 2] {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(i);
    }
    for (class, positions) in by_class.iter_mut().enumerate() {
        positions.shuffle(&mut seed.child(class as u64).rng());
    }
    by_class
}

/// Stratified train/test split. Each class sends `round(fraction * count)`
/// instances to the training side, with largest-remainder correction so the
/// training side holds `round(fraction * n)` instances overall.
pub fn stratified_holdout(labels: &[u8], fraction: f64, seed: Seed) -> Result<SplitPair> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::InvalidFraction(fraction));
    }
    let counts = class_counts(labels);
    let quotas: Vec<f64> = counts.iter().map(|&c| fraction * c as f64).collect();
    let total = (fraction * labels.len() as f64).round() as usize;
    let train_counts = apportion(&quotas, total);
    for class in 0..2 {
        if train_counts[class] == 0 || train_counts[class] == counts[class] {
            return Err(DataError::DegenerateSplit(format!(
                "class {class} ({} instances) would leave one side empty at fraction {fraction}",
                counts[class]
            )));
        }
    }
    let by_class = shuffled_class_positions(labels, seed);
    let mut train = Vec::with_capacity(total);
    let mut test = Vec::with_capacity(labels.len() - total);
    for (class, positions) in by_class.iter().enumerate() {
        let (tr, te) = positions.split_at(train_counts[class]);
        train.extend_from_slice(tr);
        test.extend_from_slice(te);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPair { train, test })
}

/// Stratified k-fold assignment. Instances of each class are shuffled and
/// dealt round-robin over the folds, continuing the deal across classes, so
/// per-class and overall fold sizes differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: Seed) -> Result<FoldPlan> {
    if k < 2 {
        return Err(DataError::InvalidFoldCount(k));
    }
    if labels.len() < k {
        return Err(DataError::TooFewInstances {
            what: format!("{k}-fold split"),
            count: labels.len(),
            required: k,
        });
    }
    let by_class = shuffled_class_positions(labels, seed);
    let mut assignment = vec![0; labels.len()];
    let mut slot = 0;
    for positions in &by_class {
        for &p in positions {
            assignment[p] = slot % k;
            slot += 1;
        }
    }
    Ok(FoldPlan { k, assignment })
}

/// Stratified random subset of at most `cap` instances. Datasets already
/// within the cap are returned unchanged; the subset keeps original row order.
pub fn subsample(data: &Dataset, cap: usize, seed: Seed) -> Result<Dataset> {
    let n = data.n_instances();
    if n <= cap {
        return Ok(data.clone());
    }
    let counts = data.class_counts();
    let quotas: Vec<f64> = counts.iter().map(|&c| (cap as f64) * (c as f64) / (n as f64)).collect();
    let take = apportion(&quotas, cap);
    for class in 0..2 {
        if counts[class] > 0 && take[class] < 2 {
            return Err(DataError::TooFewInstances {
                what: format!("class {class} after subsampling to {cap}"),
                count: take[class],
                required: 2,
            });
        }
    }
    let by_class = shuffled_class_positions(data.labels(), seed);
    let mut rows: Vec<usize> = by_class
        .iter()
        .zip(take)
        .flat_map(|(positions, t)| positions[..t].iter().copied())
        .collect();
    rows.sort_unstable();
    Ok(data.select(&rows))
}

/// Which CSV column carries the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label: LabelColumn,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            label: LabelColumn::Index(0),
            has_header: true,
        }
    }
}

/// Reads a comma-separated file with numeric features and a binary label
/// column. Label values are mapped to {0, 1} by sorted original value
/// (numerically when every value parses as a number).
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    read_csv(name, file, options)
}

pub fn read_csv<R: std::io::Read>(name: impl Into<String>, reader: R, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(options.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let label_idx = match &options.label {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(col) => {
            if !options.has_header {
                return Err(DataError::MissingLabelColumn(col.clone()));
            }
            rdr.headers()?
                .iter()
                .position(|h| h == col)
                .ok_or_else(|| DataError::MissingLabelColumn(col.clone()))?
        }
    };

    let mut arity = None;
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let width = *arity.get_or_insert(record.len());
        if record.len() != width {
            return Err(DataError::MalformedRow {
                row: line,
                reason: format!("{} fields, expected {width}", record.len()),
            });
        }
        if label_idx >= width {
            return Err(DataError::MissingLabelColumn(label_idx.to_string()));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            let v: f64 = field.parse().map_err(|_| DataError::MalformedRow {
                row: line,
                reason: format!("field {} is not numeric: {field:?}", j + 1),
            })?;
            if !v.is_finite() {
                return Err(DataError::MalformedRow {
                    row: line,
                    reason: format!("field {} is not finite", j + 1),
                });
            }
            row.push(v);
        }
        let label = record.get(label_idx).unwrap_or_default();
        if label.is_empty() {
            return Err(DataError::MalformedRow {
                row: line,
                reason: "missing label".into(),
            });
        }
        raw_labels.push(label.to_string());
        rows.push(row);
    }

    let mut distinct: Vec<&String> = raw_labels.iter().collect();
    let all_numeric = distinct.iter().all(|s| s.parse::<f64>().is_ok());
    if all_numeric {
        distinct.sort_by(|a, b| {
            let (x, y): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
            x.total_cmp(&y)
        });
        distinct.dedup_by(|a, b| a.parse::<f64>().ok() == b.parse::<f64>().ok());
    } else {
        distinct.sort();
        distinct.dedup();
    }
    if distinct.len() != 2 {
        return Err(DataError::NonBinaryLabels { found: distinct.len() });
    }
    let class_names = [distinct[0].clone(), distinct[1].clone()];
    let is_first = |s: &str| {
        if all_numeric {
            s.parse::<f64>().ok() == class_names[0].parse::<f64>().ok()
        } else {
            s == class_names[0]
        }
    };
    let labels: Vec<u8> = raw_labels.iter().map(|s| u8::from(!is_first(s))).collect();

    let data = Dataset::new(name, rows, labels)?.with_class_names(class_names);
    data.check_study_ready()?;
    Ok(data)
}
