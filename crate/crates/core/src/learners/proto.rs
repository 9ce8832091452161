use super::{sq_dist, Samples};

const LVQ_RATE: f64 = 0.05;
const KMEANS_ITERS: usize = 25;

/// LVQ1 classifier. Prototypes are initialised per class by k-means (with a
/// deterministic farthest-point start) and refined by one LVQ1 pass over the
/// training rows with a linearly decaying learning rate.
#[derive(Debug, Clone)]
pub(crate) struct Proto {
    d: usize,
    // Class-0 prototypes come first, so distance ties resolve to class 0.
    prototypes: Vec<f64>,
    classes: Vec<u8>,
}

impl Proto {
    pub fn fit(s: &Samples, per_class: usize) -> Self {
        let d = s.d;
        let mut prototypes = Vec::new();
        let mut classes = Vec::new();
        for class in 0..2u8 {
            let members: Vec<usize> = (0..s.len()).filter(|&i| s.y[i] == class).collect();
            for c in kmeans(s, &members, per_class.min(members.len())) {
                prototypes.extend_from_slice(&c);
                classes.push(class);
            }
        }
        let mut model = Proto { d, prototypes, classes };

        let n = s.len() as f64;
        for i in 0..s.len() {
            let rate = LVQ_RATE * (1.0 - i as f64 / n);
            let x = s.row(i);
            let w = model.nearest(x);
            let sign = if model.classes[w] == s.y[i] { 1.0 } else { -1.0 };
            for (p, v) in model.prototypes[w * d..(w + 1) * d].iter_mut().zip(x) {
                *p += sign * rate * (v - *p);
            }
        }
        model
    }

    fn nearest(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for p in 0..self.classes.len() {
            let dist = sq_dist(&self.prototypes[p * self.d..(p + 1) * self.d], x);
            if dist < best_d {
                best_d = dist;
                best = p;
            }
        }
        best
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        self.classes[self.nearest(x)]
    }
}

fn kmeans(s: &Samples, members: &[usize], k: usize) -> Vec<Vec<f64>> {
    let d = s.d;
    let mut centroid = vec![0.0; d];
    for &i in members {
        for (c, v) in centroid.iter_mut().zip(s.row(i)) {
            *c += v;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= members.len() as f64);

    // Farthest-point start: the member nearest the class mean, then
    // repeatedly the member farthest from all chosen centres.
    let argmin_by = |f: &dyn Fn(usize) -> f64| {
        members
            .iter()
            .copied()
            .min_by(|&a, &b| f(a).total_cmp(&f(b)).then(a.cmp(&b)))
            .expect("non-empty class")
    };
    let first = argmin_by(&|i| sq_dist(s.row(i), &centroid));
    let mut centres: Vec<Vec<f64>> = vec![s.row(first).to_vec()];
    while centres.len() < k {
        let next = argmin_by(&|i| {
            -centres
                .iter()
                .map(|c| sq_dist(s.row(i), c))
                .fold(f64::INFINITY, f64::min)
        });
        centres.push(s.row(next).to_vec());
    }

    let mut assign = vec![usize::MAX; members.len()];
    for _ in 0..KMEANS_ITERS {
        let mut changed = false;
        for (slot, &i) in assign.iter_mut().zip(members) {
            let best = (0..centres.len())
                .min_by(|&a, &b| {
                    sq_dist(s.row(i), &centres[a])
                        .total_cmp(&sq_dist(s.row(i), &centres[b]))
                        .then(a.cmp(&b))
                })
                .expect("at least one centre");
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; centres.len()];
        let mut counts = vec![0usize; centres.len()];
        for (&a, &i) in assign.iter().zip(members) {
            counts[a] += 1;
            for (acc, v) in sums[a].iter_mut().zip(s.row(i)) {
                *acc += v;
            }
        }
        for (c, (sum, count)) in centres.iter_mut().zip(sums.into_iter().zip(counts)) {
            // Empty clusters keep their previous centre.
            if count > 0 {
                *c = sum.into_iter().map(|v| v / count as f64).collect();
            }
        }
    }
    centres
}
