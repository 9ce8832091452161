//! Hyperparameter schemas and regular grids for the built-in learners.

use std::fmt;
use std::str::FromStr;

use super::LearnerError;

/// Built-in learner identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearnerId {
    Knn,
    Gnb,
    Proto,
    Rf,
    GbStump,
    LinRidge,
}

impl LearnerId {
    pub const ALL: [LearnerId; 6] = [
        LearnerId::Knn,
        LearnerId::Gnb,
        LearnerId::Proto,
        LearnerId::Rf,
        LearnerId::GbStump,
        LearnerId::LinRidge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerId::Knn => "knn",
            LearnerId::Gnb => "gnb",
            LearnerId::Proto => "proto",
            LearnerId::Rf => "rf",
            LearnerId::GbStump => "gbstump",
            LearnerId::LinRidge => "linridge",
        }
    }

    /// Whether training consumes the seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, LearnerId::Rf | LearnerId::GbStump)
    }

    pub(crate) fn schema(self) -> &'static [AxisSchema] {
        match self {
            LearnerId::Knn => &KNN_SCHEMA,
            LearnerId::Gnb => &GNB_SCHEMA,
            LearnerId::Proto => &PROTO_SCHEMA,
            LearnerId::Rf => &RF_SCHEMA,
            LearnerId::GbStump => &GBSTUMP_SCHEMA,
            LearnerId::LinRidge => &LINRIDGE_SCHEMA,
        }
    }
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerId {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| LearnerError::UnknownLearner(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Int,
    Real,
}

/// Declared hyperparameter axis: name, type and admissible range.
/// Real axes exclude their lower bound.
#[derive(Debug, Clone, Copy)]
pub struct AxisSchema {
    pub name: &'static str,
    pub kind: ValueKind,
    pub min: f64,
    pub max: f64,
    default: &'static [f64],
}

impl AxisSchema {
    fn admits(&self, v: ParamValue) -> bool {
        match (self.kind, v) {
            (ValueKind::Int, ParamValue::Int(i)) => (i as f64) >= self.min && (i as f64) <= self.max,
            (ValueKind::Real, ParamValue::Real(x)) => x.is_finite() && x > self.min && x <= self.max,
            _ => false,
        }
    }

    fn default_values(&self) -> Vec<ParamValue> {
        self.default
            .iter()
            .map(|&v| match self.kind {
                ValueKind::Int => ParamValue::Int(v as i64),
                ValueKind::Real => ParamValue::Real(v),
            })
            .collect()
    }
}

const fn axis(name: &'static str, kind: ValueKind, min: f64, max: f64, default: &'static [f64]) -> AxisSchema {
    AxisSchema {
        name,
        kind,
        min,
        max,
        default,
    }
}

static KNN_SCHEMA: [AxisSchema; 1] = [axis(
    "k",
    ValueKind::Int,
    1.0,
    1000.0,
    &[1.0, 3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0],
)];
static GNB_SCHEMA: [AxisSchema; 1] = [axis("var_smoothing", ValueKind::Real, 0.0, 1.0, &[1e-9, 1e-6, 1e-3])];
static PROTO_SCHEMA: [AxisSchema; 1] = [axis("prototypes", ValueKind::Int, 1.0, 64.0, &[1.0, 2.0, 4.0, 8.0])];
static RF_SCHEMA: [AxisSchema; 2] = [
    axis("trees", ValueKind::Int, 1.0, 5000.0, &[100.0, 300.0, 500.0]),
    axis("mtry", ValueKind::Real, 0.0, 1.0, &[0.25, 0.5, 1.0]),
];
static GBSTUMP_SCHEMA: [AxisSchema; 3] = [
    axis("rounds", ValueKind::Int, 1.0, 10000.0, &[50.0, 150.0, 450.0]),
    axis("learning_rate", ValueKind::Real, 0.0, 1.0, &[0.05, 0.1, 0.2]),
    axis("depth", ValueKind::Int, 1.0, 8.0, &[1.0, 2.0, 3.0]),
];
static LINRIDGE_SCHEMA: [AxisSchema; 1] = [axis(
    "penalty",
    ValueKind::Real,
    0.0,
    1e6,
    &[1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2],
)];

/// A single hyperparameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
}

impl ParamValue {
    pub fn as_f64(self) -> f64 {
        match self {
            ParamValue::Int(i) => i as f64,
            ParamValue::Real(x) => x,
        }
    }

    fn parse(kind: ValueKind, s: &str) -> Option<ParamValue> {
        match kind {
            ValueKind::Int => s.parse().ok().map(ParamValue::Int),
            ValueKind::Real => s.parse().ok().map(ParamValue::Real),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(x) => write!(f, "{x:?}"),
        }
    }
}

/// One value list per declared axis of a learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: &'static str,
    pub values: Vec<ParamValue>,
}

/// A learner together with the grid it is tuned over.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSpec {
    id: LearnerId,
    axes: Vec<Axis>,
}

impl LearnerSpec {
    /// The learner with its built-in grid.
    pub fn builtin(id: LearnerId) -> Self {
        let axes = id
            .schema()
            .iter()
            .map(|s| Axis {
                name: s.name,
                values: s.default_values(),
            })
            .collect();
        LearnerSpec { id, axes }
    }

    pub fn parse(id: &str) -> Result<Self, LearnerError> {
        Ok(Self::builtin(id.parse()?))
    }

    pub fn id(&self) -> LearnerId {
        self.id
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn n_hyperparameters(&self) -> usize {
        self.axes.len()
    }

    /// Replaces the values of one axis. Reals given for integer axes are
    /// accepted when they are whole numbers.
    pub fn with_axis(mut self, name: &str, values: &[f64]) -> Result<Self, LearnerError> {
        let schema =
            self.id
                .schema()
                .iter()
                .find(|s| s.name == name)
                .ok_or_else(|| LearnerError::UnknownHyperparameter {
                    learner: self.id,
                    name: name.to_string(),
                })?;
        if values.is_empty() {
            return Err(LearnerError::InvalidGrid(format!("{}: axis {name} is empty", self.id)));
        }
        let mut parsed = Vec::with_capacity(values.len());
        for &v in values {
            let pv = match schema.kind {
                ValueKind::Int if v.fract() == 0.0 && v.abs() < 9.0e15 => ParamValue::Int(v as i64),
                ValueKind::Int => ParamValue::Real(v),
                ValueKind::Real => ParamValue::Real(v),
            };
            if !schema.admits(pv) {
                return Err(LearnerError::OutOfBounds {
                    learner: self.id,
                    name: name.to_string(),
                    value: v,
                });
            }
            if parsed.contains(&pv) {
                return Err(LearnerError::InvalidGrid(format!(
                    "{}: duplicate value {v} on axis {name}",
                    self.id
                )));
            }
            parsed.push(pv);
        }
        let slot = self
            .axes
            .iter_mut()
            .find(|a| a.name == name)
            .expect("schema axis present");
        slot.values = parsed;
        Ok(self)
    }

    /// Whether every coordinate of `theta` lies on this spec's grid.
    pub fn contains(&self, theta: &HyperPoint) -> bool {
        theta.learner == self.id
            && theta.values.len() == self.axes.len()
            && self.axes.iter().zip(&theta.values).all(|(a, v)| a.values.contains(v))
    }
}

/// A point of a learner's hyperparameter grid, one value per declared axis.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperPoint {
    learner: LearnerId,
    values: Vec<ParamValue>,
}

impl HyperPoint {
    pub fn learner(&self) -> LearnerId {
        self.learner
    }

    pub fn values(&self) -> &[ParamValue] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<ParamValue> {
        let pos = self.learner.schema().iter().position(|s| s.name == name)?;
        self.values.get(pos).copied()
    }

    pub(crate) fn int(&self, name: &str) -> i64 {
        match self.get(name) {
            Some(ParamValue::Int(i)) => i,
            other => panic!("{}: {name} is not an integer hyperparameter ({other:?})", self.learner),
        }
    }

    pub(crate) fn real(&self, name: &str) -> f64 {
        self.get(name)
            .map(ParamValue::as_f64)
            .unwrap_or_else(|| panic!("{}: missing hyperparameter {name}", self.learner))
    }

    /// Parses the `name=value;name=value` form produced by `Display`.
    pub fn parse(learner: LearnerId, s: &str) -> Result<Self, LearnerError> {
        let schema = learner.schema();
        let parts: Vec<&str> = s.split(';').collect();
        if parts.len() != schema.len() {
            return Err(LearnerError::InvalidGrid(format!(
                "{learner}: cannot parse point {s:?}"
            )));
        }
        let mut values = Vec::with_capacity(schema.len());
        for (axis, part) in schema.iter().zip(parts) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| LearnerError::InvalidGrid(format!("{learner}: cannot parse point {s:?}")))?;
            if name != axis.name {
                return Err(LearnerError::UnknownHyperparameter {
                    learner,
                    name: name.to_string(),
                });
            }
            let v = ParamValue::parse(axis.kind, value)
                .filter(|v| axis.admits(*v))
                .ok_or_else(|| LearnerError::InvalidGrid(format!("{learner}: bad value {value:?} for {name}")))?;
            values.push(v);
        }
        Ok(HyperPoint { learner, values })
    }
}

impl fmt::Display for HyperPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (axis, v)) in self.learner.schema().iter().zip(&self.values).enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{}={v}", axis.name)?;
        }
        Ok(())
    }
}

/// Ordered list of grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    points: Vec<HyperPoint>,
}

impl HyperGrid {
    pub fn points(&self) -> &[HyperPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Cartesian product of the spec's axes in row-major order: the last
/// declared axis varies fastest.
pub fn create_grid(spec: &LearnerSpec) -> HyperGrid {
    let mut points = vec![Vec::new()];
    for axis in &spec.axes {
        points = points
            .into_iter()
            .flat_map(|prefix: Vec<ParamValue>| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    HyperGrid {
        points: points
            .into_iter()
            .map(|values| HyperPoint {
                learner: spec.id,
                values,
            })
            .collect(),
    }
}

/// Grid of a built-in learner addressed by name.
pub fn create_grid_for(id: &str) -> Result<HyperGrid, LearnerError> {
    Ok(create_grid(&LearnerSpec::parse(id)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_grid_sizes() {
        let sizes: Vec<usize> = LearnerId::ALL
            .iter()
            .map(|&id| create_grid(&LearnerSpec::builtin(id)).len())
            .collect();
        assert_eq!(sizes, vec![8, 3, 4, 9, 27, 6]);
        for id in LearnerId::ALL {
            let n = LearnerSpec::builtin(id).n_hyperparameters();
            assert!((1..=3).contains(&n));
        }
    }

    #[test]
    fn rf_grid_row_major() {
        let grid = create_grid(&LearnerSpec::builtin(LearnerId::Rf));
        let shown: Vec<String> = grid.points().iter().take(4).map(|p| p.to_string()).collect();
        assert_eq!(
            shown,
            [
                "trees=100;mtry=0.25",
                "trees=100;mtry=0.5",
                "trees=100;mtry=1.0",
                "trees=300;mtry=0.25"
            ]
        );
    }

    #[test]
    fn unknown_learner() {
        assert!(matches!(
            create_grid_for("svmRadial"),
            Err(LearnerError::UnknownLearner(s)) if s == "svmRadial"
        ));
    }

    #[test]
    fn grid_is_pure() {
        let spec = LearnerSpec::builtin(LearnerId::GbStump);
        assert_eq!(create_grid(&spec), create_grid(&spec));
    }

    #[test]
    fn point_text_round_trip() {
        for id in LearnerId::ALL {
            for p in create_grid(&LearnerSpec::builtin(id)).points() {
                assert_eq!(&HyperPoint::parse(id, &p.to_string()).unwrap(), p);
            }
        }
    }

    #[test]
    fn axis_override_validation() {
        let spec = LearnerSpec::builtin(LearnerId::Knn).with_axis("k", &[3.0]).unwrap();
        assert_eq!(create_grid(&spec).len(), 1);
        assert!(LearnerSpec::builtin(LearnerId::Knn).with_axis("k", &[0.0]).is_err());
        assert!(LearnerSpec::builtin(LearnerId::Knn).with_axis("k", &[2.5]).is_err());
        assert!(LearnerSpec::builtin(LearnerId::Knn)
            .with_axis("k", &[3.0, 3.0])
            .is_err());
        assert!(LearnerSpec::builtin(LearnerId::Knn).with_axis("gamma", &[1.0]).is_err());
        assert!(LearnerSpec::builtin(LearnerId::Rf).with_axis("mtry", &[1.5]).is_err());
    }
}
