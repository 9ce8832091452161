//! The raw study table: a CSV file with one row per (dataset, repetition,
//! learner), plus a derived row per repetition and per dataset.
//!
//! Columns are fixed (see [`HEADER`]). The `kind` column is `learner`,
//! `repetition` or `dataset`; cells that do not apply to a kind are empty.
//! Reals are written in shortest round-trip form, so reading a table back
//! reproduces the study bit for bit. On reading, every derived row is
//! recomputed from the learner rows and must match exactly.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::learners::{HyperPoint, LearnerId};
use crate::protocol::{aggregate_dataset, LearnerOutcome, ProtocolError, RepetitionRecord, Scenario, StudyRecord};

pub const HEADER: [&str; 20] = [
    "kind",
    "scenario",
    "master_seed",
    "dataset",
    "n_instances",
    "repetition",
    "learner",
    "flat_estimate",
    "nested_estimate",
    "future_accuracy",
    "theta",
    "nested_thetas",
    "flat_choice",
    "nested_choice",
    "future_flat",
    "future_nested",
    "accgain",
    "delta_flat",
    "delta_nested",
    "delta",
];

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("inconsistent table: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

pub type Result<T> = std::result::Result<T, TableError>;

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

/// Writes every study to one table, in order.
pub fn write_table<W: Write>(studies: &[StudyRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for study in studies {
        let seed = study.master_seed.to_string();
        let scenario = study.scenario.name.as_str();
        for d in &study.datasets {
            let n = d.n_instances.to_string();
            for r in &d.repetitions {
                let rep = r.repetition.to_string();
                for o in &r.learners {
                    let nested_thetas: Vec<String> = o.nested_thetas.iter().map(|t| t.to_string()).collect();
                    w.write_record([
                        "learner",
                        scenario,
                        &seed,
                        &d.dataset,
                        &n,
                        &rep,
                        o.learner.as_str(),
                        &fmt_f(o.flat_estimate),
                        &fmt_f(o.nested_estimate),
                        &fmt_f(o.future_accuracy),
                        &o.theta.to_string(),
                        &nested_thetas.join("|"),
                        "",
                        "",
                        "",
                        "",
                        "",
                        "",
                        "",
                        "",
                    ])?;
                }
                w.write_record([
                    "repetition",
                    scenario,
                    &seed,
                    &d.dataset,
                    &n,
                    &rep,
                    "",
                    "",
                    "",
                    "",
                    "",
                    "",
                    r.flat_choice.as_str(),
                    r.nested_choice.as_str(),
                    &fmt_f(r.future_flat),
                    &fmt_f(r.future_nested),
                    &fmt_f(r.accgain),
                    &fmt_f(r.delta_flat),
                    &fmt_f(r.delta_nested),
                    &fmt_f(r.delta),
                ])?;
            }
            let mut row = vec![""; HEADER.len()];
            row[0] = "dataset";
            row[1] = scenario;
            row[2] = &seed;
            row[3] = &d.dataset;
            row[4] = &n;
            let (gain, delta) = (fmt_f(d.accgain), fmt_f(d.delta));
            row[16] = &gain;
            row[19] = &delta;
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|source| TableError::Io {
        path: PathBuf::from("<table>"),
        source,
    })?;
    Ok(())
}

pub fn save_table(studies: &[StudyRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| TableError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_table(studies, std::io::BufWriter::new(file))
}

pub fn load_table(path: impl AsRef<Path>) -> Result<Vec<StudyRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TableError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_table(file)
}

struct Cells<'a> {
    record: &'a csv::StringRecord,
    line: u64,
}

impl Cells<'_> {
    fn str(&self, col: usize) -> &str {
        self.record.get(col).unwrap_or("")
    }

    fn err(&self, reason: String) -> TableError {
        TableError::Malformed {
            line: self.line,
            reason,
        }
    }

    fn parse<T: std::str::FromStr>(&self, col: usize) -> Result<T> {
        self.str(col)
            .parse()
            .map_err(|_| self.err(format!("bad {} {:?}", HEADER[col], self.str(col))))
    }

    fn learner(&self, col: usize) -> Result<LearnerId> {
        self.str(col).parse().map_err(|e| self.err(format!("{e}")))
    }

    fn theta(&self, learner: LearnerId, s: &str) -> Result<HyperPoint> {
        HyperPoint::parse(learner, s).map_err(|e| self.err(format!("{e}")))
    }
}

/// Stored derived values of one repetition row.
struct StoredRepetition {
    line: u64,
    values: [f64; 6],
    choices: (LearnerId, LearnerId),
}

#[derive(Default)]
struct PendingDataset {
    name: String,
    n_instances: usize,
    reps: Vec<(usize, Vec<LearnerOutcome>)>,
    stored_reps: HashMap<usize, StoredRepetition>,
    stored: Option<(u64, f64, f64)>,
}

struct PendingStudy {
    name: String,
    master_seed: u64,
    datasets: Vec<PendingDataset>,
}

/// Parses a table written by [`write_table`], checking every derived row.
pub fn read_table<R: Read>(input: R) -> Result<Vec<StudyRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(TableError::Malformed {
            line: 1,
            reason: "unexpected header".into(),
        });
    }

    let mut studies: Vec<PendingStudy> = Vec::new();
    for result in reader.records() {
        let record = result?;
        let c = Cells {
            line: record.position().map_or(0, |p| p.line()),
            record: &record,
        };
        let scenario = c.str(1);
        let master_seed: u64 = c.parse(2)?;
        let study = match studies.iter().position(|s| s.name == scenario) {
            Some(i) => &mut studies[i],
            None => {
                studies.push(PendingStudy {
                    name: scenario.to_string(),
                    master_seed,
                    datasets: Vec::new(),
                });
                studies.last_mut().expect("just pushed")
            }
        };
        if study.master_seed != master_seed {
            return Err(c.err(format!("scenario {scenario} mixes master seeds")));
        }
        let name = c.str(3);
        let n_instances: usize = c.parse(4)?;
        let dataset = match study.datasets.iter().position(|d| d.name == name) {
            Some(i) => &mut study.datasets[i],
            None => {
                study.datasets.push(PendingDataset {
                    name: name.to_string(),
                    n_instances,
                    ..PendingDataset::default()
                });
                study.datasets.last_mut().expect("just pushed")
            }
        };
        if dataset.n_instances != n_instances {
            return Err(c.err(format!("dataset {name} has conflicting sizes")));
        }

        match c.str(0) {
            "learner" => {
                let repetition: usize = c.parse(5)?;
                let learner = c.learner(6)?;
                let nested_thetas = match c.str(11) {
                    "" => Vec::new(),
                    s => s.split('|').map(|t| c.theta(learner, t)).collect::<Result<_>>()?,
                };
                let outcome = LearnerOutcome {
                    learner,
                    flat_estimate: c.parse(7)?,
                    nested_estimate: c.parse(8)?,
                    future_accuracy: c.parse(9)?,
                    theta: c.theta(learner, c.str(10))?,
                    nested_thetas,
                };
                match dataset.reps.iter_mut().find(|(r, _)| *r == repetition) {
                    Some((_, outcomes)) => outcomes.push(outcome),
                    None => dataset.reps.push((repetition, vec![outcome])),
                }
            }
            "repetition" => {
                let repetition: usize = c.parse(5)?;
                let stored = StoredRepetition {
                    line: c.line,
                    values: [
                        c.parse(14)?,
                        c.parse(15)?,
                        c.parse(16)?,
                        c.parse(17)?,
                        c.parse(18)?,
                        c.parse(19)?,
                    ],
                    choices: (c.learner(12)?, c.learner(13)?),
                };
                if dataset.stored_reps.insert(repetition, stored).is_some() {
                    return Err(c.err(format!("duplicate repetition row {repetition} for {name}")));
                }
            }
            "dataset" => {
                if dataset.stored.replace((c.line, c.parse(16)?, c.parse(19)?)).is_some() {
                    return Err(c.err(format!("duplicate dataset row for {name}")));
                }
            }
            other => return Err(c.err(format!("unknown row kind {other:?}"))),
        }
    }

    studies.into_iter().map(finish_study).collect()
}

fn finish_study(p: PendingStudy) -> Result<StudyRecord> {
    let mut learners: Option<Vec<LearnerId>> = None;
    let mut datasets = Vec::new();
    for mut d in p.datasets {
        d.reps.sort_by_key(|(r, _)| *r);
        let count = d.reps.len();
        if d.reps.iter().enumerate().any(|(i, (r, _))| i != *r) {
            return Err(TableError::Inconsistent(format!(
                "{}: repetitions are not 0..{count}",
                d.name
            )));
        }
        let mut records = Vec::with_capacity(count);
        for (r, outcomes) in d.reps {
            let ids: Vec<LearnerId> = outcomes.iter().map(|o| o.learner).collect();
            match &learners {
                None => learners = Some(ids),
                Some(l) if *l != ids => {
                    return Err(TableError::Inconsistent(format!(
                        "{} repetition {r}: learners differ from the rest of scenario {}",
                        d.name, p.name
                    )))
                }
                Some(_) => {}
            }
            let rec = RepetitionRecord::from_outcomes(d.name.clone(), r, d.n_instances, outcomes)?;
            let stored = d
                .stored_reps
                .remove(&r)
                .ok_or_else(|| TableError::Inconsistent(format!("{} repetition {r}: no repetition row", d.name)))?;
            let recomputed = [
                rec.future_flat,
                rec.future_nested,
                rec.accgain,
                rec.delta_flat,
                rec.delta_nested,
                rec.delta,
            ];
            if stored.values != recomputed || stored.choices != (rec.flat_choice, rec.nested_choice) {
                return Err(TableError::Inconsistent(format!(
                    "line {}: derived values do not match the learner rows",
                    stored.line
                )));
            }
            records.push(rec);
        }
        if let Some(r) = d.stored_reps.keys().next() {
            return Err(TableError::Inconsistent(format!(
                "{} repetition {r}: no learner rows",
                d.name
            )));
        }
        let agg = aggregate_dataset(&records, count)?;
        match d.stored {
            Some((_, gain, delta)) if gain == agg.accgain && delta == agg.delta => {}
            Some((line, ..)) => {
                return Err(TableError::Inconsistent(format!(
                    "line {line}: dataset means do not match the repetition rows"
                )))
            }
            None => return Err(TableError::Inconsistent(format!("{}: no dataset row", d.name))),
        }
        datasets.push(agg);
    }
    Ok(StudyRecord {
        scenario: Scenario::new(p.name, learners.unwrap_or_default()),
        master_seed: p.master_seed,
        datasets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{create_grid, LearnerSpec};

    fn outcome(id: LearnerId, flat: f64, nested: f64, future: f64) -> LearnerOutcome {
        let points = create_grid(&LearnerSpec::builtin(id)).points().to_vec();
        LearnerOutcome {
            learner: id,
            flat_estimate: flat,
            nested_estimate: nested,
            theta: points[1].clone(),
            future_accuracy: future,
            nested_thetas: vec![points[0].clone(), points[2].clone()],
        }
    }

    fn study() -> StudyRecord {
        let mut datasets = Vec::new();
        for (name, bump) in [("alpha", 0.0), ("beta, quoted", 0.1)] {
            let recs: Vec<_> = (0..2)
                .map(|r| {
                    let x = r as f64 * 0.03 + bump;
                    RepetitionRecord::from_outcomes(
                        name,
                        r,
                        120,
                        vec![
                            outcome(LearnerId::Rf, 0.7 + x, 0.61 + x, 0.6 + x / 3.0),
                            outcome(LearnerId::GbStump, 0.69, 0.66 - x, 0.1 + 0.2),
                        ],
                    )
                    .unwrap()
                })
                .collect();
            datasets.push(aggregate_dataset(&recs, 2).unwrap());
        }
        StudyRecord {
            scenario: Scenario::new("top", vec![LearnerId::Rf, LearnerId::GbStump]),
            master_seed: 42,
            datasets,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let s = study();
        let mut buf = Vec::new();
        write_table(std::slice::from_ref(&s), &mut buf).unwrap();
        let back = read_table(buf.as_slice()).unwrap();
        assert_eq!(back, vec![s]);
    }

    #[test]
    fn tampered_derived_row_is_rejected() {
        let mut buf = Vec::new();
        write_table(&[study()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().find(|l| l.starts_with("dataset,")).unwrap();
        let mut cells: Vec<&str> = line.split(',').collect();
        cells[16] = "0.5";
        let tampered = text.replacen(line, &cells.join(","), 1);
        assert!(matches!(
            read_table(tampered.as_bytes()),
            Err(TableError::Inconsistent(_))
        ));
    }

    #[test]
    fn bad_header_and_kind() {
        assert!(matches!(
            read_table("a,b\n".as_bytes()),
            Err(TableError::Malformed { line: 1, .. })
        ));
        let mut text = HEADER.join(",");
        text.push_str("\nbogus,s,1,d,10,0,,,,,,,,,,,,,,\n");
        assert!(matches!(
            read_table(text.as_bytes()),
            Err(TableError::Malformed { line: 2, .. })
        ));
    }
}
