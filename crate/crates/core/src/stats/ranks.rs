use super::{Result, StatsError};
use crate::learners::LearnerId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

/// Mean rank of each learner over cells (one row of scores per cell, one
/// column per learner). Rank 1 is the best score in a cell; ties share the
/// average rank. The result is sorted by mean rank, ties in input order.
pub fn mean_ranks(learners: &[LearnerId], cells: &[Vec<f64>], direction: Direction) -> Result<Vec<(LearnerId, f64)>> {
    if learners.is_empty() || cells.is_empty() {
        return Err(StatsError::IncompleteMatrix("no learners or no cells".into()));
    }
    let l = learners.len();
    let mut totals = vec![0.0; l];
    for (c, row) in cells.iter().enumerate() {
        if row.len() != l {
            return Err(StatsError::IncompleteMatrix(format!(
                "cell {c} has {} scores for {l} learners",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::IncompleteMatrix(format!("cell {c} has a missing score")));
        }
        for (t, r) in totals.iter_mut().zip(cell_ranks(row, direction)) {
            *t += r;
        }
    }
    let mut out: Vec<(LearnerId, f64)> = learners
        .iter()
        .zip(totals)
        .map(|(&id, t)| (id, t / cells.len() as f64))
        .collect();
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(out)
}

fn cell_ranks(row: &[f64], direction: Direction) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| match direction {
        Direction::HigherIsBetter => row[b].total_cmp(&row[a]),
        Direction::LowerIsBetter => row[a].total_cmp(&row[b]),
    });
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && row[order[end + 1]] == row[order[start]] {
            end += 1;
        }
        let avg = (start + end) as f64 / 2.0 + 1.0;
        for &o in &order[start..=end] {
            ranks[o] = avg;
        }
        start = end + 1;
    }
    ranks
}

/// Agreement between two selection procedures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SameChoice {
    pub agreements: usize,
    pub total: usize,
    pub rate: f64,
    /// Agreement expected from picking uniformly among the candidates.
    pub random_baseline: f64,
}

/// Fraction of `(a, b)` choice pairs that coincide.
pub fn same_choice_rate(choices: &[(LearnerId, LearnerId)], n_candidates: usize) -> Result<SameChoice> {
    if choices.is_empty() || n_candidates == 0 {
        return Err(StatsError::EmptySample);
    }
    let agreements = choices.iter().filter(|(a, b)| a == b).count();
    Ok(SameChoice {
        agreements,
        total: choices.len(),
        rate: agreements as f64 / choices.len() as f64,
        random_baseline: 1.0 / n_candidates as f64,
    })
}
