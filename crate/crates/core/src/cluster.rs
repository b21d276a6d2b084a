//! Input selection: k-means over embeddings, negative representative
//! sampling and assembly of per-cluster learning tasks.

use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng as _;
use thiserror::Error;

use crate::learners::BinaryTask;
use crate::represent::EmbeddedMatrix;
use crate::seed::{derive_seed, rng};

pub const MAX_ITERATIONS: usize = 300;
pub const DEFAULT_POS_CLUSTERS: usize = 3;
pub const DEFAULT_NEG_CLUSTERS: usize = 30;
pub const DEFAULT_NEG_FRACTION: f64 = 0.25;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k = {k} must be in [1, {points}]")]
    InvalidK { k: usize, points: usize },
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step, first entry from the seeding.
    pub inertia_history: Vec<f64>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Trivial single-cluster assignment of `n` points.
    pub fn single(points: &EmbeddedMatrix) -> Clustering {
        let mut c = vec![0.0; points.dim];
        for i in 0..points.rows() {
            for (m, v) in c.iter_mut().zip(points.row(i)) {
                *m += v;
            }
        }
        c.iter_mut().for_each(|m| *m /= points.rows().max(1) as f64);
        let inertia = (0..points.rows()).map(|i| sq_dist(points.row(i), &c)).sum();
        Clustering {
            assignments: vec![0; points.rows()],
            centroids: vec![c],
            inertia,
            inertia_history: vec![inertia],
        }
    }

    /// `row_id,cluster_id` lines, one per point.
    pub fn write_csv(&self, row_ids: &[usize], path: impl AsRef<Path>) -> Result<(), ClusterError> {
        let mut out = String::from("row_id,cluster_id\n");
        for (r, c) in row_ids.iter().zip(&self.assignments) {
            out.push_str(&format!("{r},{c}\n"));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| ClusterError::Io(e.to_string()))
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(points: &EmbeddedMatrix, k: usize, rng: &mut crate::seed::Rng) -> Vec<Vec<f64>> {
    let n = points.rows();
    let mut centroids = vec![points.row(rng.gen_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Nearest centroid (lowest index on ties) with the nearest and
/// second-nearest squared distances.
fn nearest_two(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64, f64) {
    let (mut j, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < d1 {
            d2 = d1;
            (j, d1) = (c, d);
        } else if d < d2 {
            d2 = d;
        }
    }
    (j, d1, d2)
}

/// Assignment step with Hamerly bounds: `lower[i]` bounds the distance from
/// point `i` to every centroid other than its own. Points whose own centroid
/// is strictly closer than that bound keep their assignment without a scan,
/// which gives exactly the assignments of a full scan.
fn assign(
    points: &EmbeddedMatrix,
    centroids: &[Vec<f64>],
    assignments: &mut [usize],
    dists: &mut [f64],
    lower: &mut [f64],
    full: bool,
) -> f64 {
    let mut inertia = 0.0;
    for i in 0..points.rows() {
        let p = points.row(i);
        let mut d = sq_dist(p, &centroids[assignments[i]]);
        let u = d.sqrt();
        if full || u + 1e-9 * (u + 1.0) >= lower[i] {
            let (j, d1, d2) = nearest_two(p, centroids);
            assignments[i] = j;
            d = d1;
            lower[i] = d2.sqrt();
        }
        dists[i] = d;
        inertia += d;
    }
    inertia
}

/// Lloyd iterations from a k-means++ start; empty clusters are re-seeded
/// with the point farthest from its centroid.
pub fn kmeans(points: &EmbeddedMatrix, k: usize, seed: u64) -> Result<Clustering, ClusterError> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, points: n });
    }
    let mut rng = rng(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let mut dists = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut inertia = assign(points, &centroids, &mut assignments, &mut dists, &mut lower, true);
    let mut history = vec![inertia];

    for _ in 0..MAX_ITERATIONS {
        let mut sums = vec![vec![0.0; points.dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let a = assignments[i];
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut taken = vec![false; n];
        let mut moves = vec![0.0; k];
        let mut reseeded = false;
        for j in 0..k {
            if counts[j] > 0 {
                let updated: Vec<f64> = sums[j].iter().map(|s| s / counts[j] as f64).collect();
                moves[j] = sq_dist(&updated, &centroids[j]).sqrt();
                centroids[j] = updated;
            } else {
                reseeded = true;
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    })
                    .expect("k <= n leaves a candidate");
                taken[far] = true;
                dists[far] = 0.0;
                centroids[j] = points.row(far).to_vec();
            }
        }
        // each point's bound shrinks by the largest move among other centroids
        let top = (0..k).fold(0, |b, j| if moves[j] > moves[b] { j } else { b });
        let runner_up = (0..k).filter(|&j| j != top).map(|j| moves[j]).fold(0.0, f64::max);
        for i in 0..n {
            lower[i] -= if assignments[i] == top { runner_up } else { moves[top] };
        }
        let previous = assignments.clone();
        inertia = assign(points, &centroids, &mut assignments, &mut dists, &mut lower, reseeded);
        history.push(inertia);
        if previous == assignments {
            break;
        }
    }
    Ok(Clustering {
        assignments,
        centroids,
        inertia,
        inertia_history: history,
    })
}

/// Per cluster, a uniform sample without replacement of
/// `max(1, round(fraction * size))` members; returns sorted positions.
pub fn select_negative_representatives(neg: &Clustering, fraction: f64, seed: u64) -> Vec<usize> {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must be in (0, 1]");
    let mut chosen = Vec::new();
    for cluster in 0..neg.k() {
        let members = neg.members(cluster);
        if members.is_empty() {
            continue;
        }
        let want = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len());
        let mut rng = rng(derive_seed(seed, cluster as u64));
        chosen.extend(sample(&mut rng, members.len(), want).into_iter().map(|i| members[i]));
    }
    chosen.sort_unstable();
    chosen
}

/// One positive cluster plus the shared negative representatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterTask {
    pub cluster_id: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
    pub rule_cap: usize,
}

/// `pos` clusters the task's positives (in task order); `neg_reps` are matrix row indices.
pub fn build_cluster_tasks(
    task: &BinaryTask<'_>,
    pos: &Clustering,
    neg_reps: &[usize],
    rule_cap: usize,
) -> Vec<ClusterTask> {
    assert_eq!(
        pos.assignments.len(),
        task.positives.len(),
        "clustering must cover all positives"
    );
    assert!(rule_cap >= 1);
    (0..pos.k())
        .filter_map(|c| {
            let positives: Vec<usize> = pos.members(c).into_iter().map(|i| task.positives[i]).collect();
            (!positives.is_empty()).then(|| ClusterTask {
                cluster_id: c,
                positives,
                negatives: neg_reps.to_vec(),
                rule_cap,
            })
        })
        .collect()
}
