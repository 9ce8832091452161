//! CART-style binary trees with axis-aligned splits.
//!
//! Classification trees minimise Gini impurity over 0/1 targets; regression
//! trees minimise squared error. Both reduce to comparing per-side sums of
//! the targets, so they share one split search.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::Samples;

#[derive(Debug, Clone, Copy)]
pub(crate) enum Criterion {
    Gini,
    SquaredError,
}

#[derive(Debug, Clone)]
pub(crate) struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split; all features when `>= d`.
    pub mtry: usize,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Tree {
    /// Grows a tree over `rows` (indices into `s`, repeats allowed).
    /// `leaf` maps the rows reaching a leaf to its output value.
    pub fn grow(
        s: &Samples,
        targets: &[f64],
        mut rows: Vec<usize>,
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
        leaf: &dyn Fn(&[usize]) -> f64,
    ) -> Tree {
        let mut nodes = vec![Node::Leaf(0.0)];
        let mut column = Vec::with_capacity(rows.len());
        // Each node owns the range rows[start..end]; children reorder it in place.
        let mut stack = vec![(0usize, 0usize, rows.len(), 0usize)];
        while let Some((id, start, end, depth)) = stack.pop() {
            let node_rows = &mut rows[start..end];
            let can_split = params.max_depth.is_none_or(|m| depth < m) && node_rows.len() >= 2 * params.min_leaf;
            let split = if can_split {
                best_split(s, targets, node_rows, params, rng, &mut column)
            } else {
                None
            };
            match split {
                None => nodes[id] = Node::Leaf(leaf(node_rows)),
                Some(b) => {
                    let mut mid = 0;
                    for k in 0..node_rows.len() {
                        if s.row(node_rows[k])[b.feature] <= b.threshold {
                            node_rows.swap(mid, k);
                            mid += 1;
                        }
                    }
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(Node::Leaf(0.0));
                    nodes.push(Node::Leaf(0.0));
                    nodes[id] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right,
                    };
                    stack.push((right, start + mid, end, depth + 1));
                    stack.push((left, start, start + mid, depth + 1));
                }
            }
        }
        Tree { nodes }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

/// Node impurity up to a constant shared by all candidate splits; lower is
/// better. For 0/1 targets the Gini form `s(n-s)/n` is used, which is exactly
/// symmetric under swapping the classes.
fn side_cost(criterion: Criterion, n: f64, sum: f64) -> f64 {
    match criterion {
        Criterion::Gini => sum * (n - sum) / n,
        Criterion::SquaredError => -(sum * sum) / n,
    }
}

const SIGN: u64 = 1 << 63;

/// Packs (value, row) into one integer whose order is `f64::total_cmp` on the
/// value, then row index.
fn pack(v: f64, row: usize) -> u128 {
    let bits = v.to_bits();
    let key = if bits & SIGN != 0 { !bits } else { bits | SIGN };
    (u128::from(key) << 64) | row as u128
}

fn unpack(packed: u128) -> (f64, usize) {
    let key = (packed >> 64) as u64;
    let bits = if key & SIGN != 0 { key & !SIGN } else { !key };
    (f64::from_bits(bits), packed as u64 as usize)
}

/// Best threshold over the sampled features; candidates are ordered by
/// (value, row index).
fn best_split(
    s: &Samples,
    t: &[f64],
    rows: &[usize],
    p: &TreeParams,
    rng: &mut ChaCha8Rng,
    column: &mut Vec<u128>,
) -> Option<Best> {
    let n = rows.len();
    let total: f64 = rows.iter().map(|&i| t[i]).sum();
    let parent = side_cost(p.criterion, n as f64, total);
    if matches!(p.criterion, Criterion::Gini) && (total == 0.0 || total == n as f64) {
        return None;
    }

    let features: Vec<usize> = if p.mtry >= s.d {
        (0..s.d).collect()
    } else {
        index::sample(rng, s.d, p.mtry).into_vec()
    };

    let mut best: Option<Best> = None;
    for &f in &features {
        column.clear();
        column.extend(rows.iter().map(|&i| pack(s.x[i * s.d + f], i)));
        column.sort_unstable();
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            let (lo, row) = unpack(column[k]);
            left_sum += t[row];
            let hi = unpack(column[k + 1]).0;
            let n_left = k + 1;
            if lo == hi || n_left < p.min_leaf || n - n_left < p.min_leaf {
                continue;
            }
            let score = side_cost(p.criterion, n_left as f64, left_sum)
                + side_cost(p.criterion, (n - n_left) as f64, total - left_sum);
            if best.as_ref().is_none_or(|b| score < b.score) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Best {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }
    best.filter(|b| parent - b.score > 1e-12 * parent.abs().max(1.0))
}
