//! Geometric primitives: Euclidean distance, seeded Lloyd k-means (also the
//! 2-means splitter used for ball generation), and DBSCAN.
//!
//! Every tie is broken toward the lowest index and every scan runs in index
//! order, so results are a pure function of (input, parameters, seed).

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

/// Default Lloyd iteration cap.
pub const KMEANS_MAX_ITER: usize = 100;

/// Cluster labels for each input row. `None` marks noise (DBSCAN only);
/// every `Some(c)` satisfies `c < k`. For k-means outputs, `centroids[c]`
/// is the mean of the rows assigned to `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<Option<usize>>,
    pub centroids: Option<Vec<Vec<f64>>>,
    pub k: usize,
}

impl ClusterAssignment {
    /// Member row indices per cluster, each ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                out[*c].push(i);
            }
        }
        out
    }

    /// Row indices labeled noise, ascending.
    pub fn noise(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Standard L2 distance. Panics on dimension mismatch.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest center index.
fn nearest_center(row: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(row, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Deterministic farthest-point initialization: the seed picks the first
/// center, then each next center is the row maximizing the distance to its
/// nearest chosen center (ties to the lowest row index).
fn farthest_point_init(points: &Matrix, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = points.rows();
    let mut rng = SplitMix64::new(seed);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points.row(rng.next_below(n)).to_vec());
    let mut min_d: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), &centers[0]))
        .collect();
    while centers.len() < k {
        let mut far = 0;
        let mut far_d = -1.0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > far_d {
                far_d = d;
                far = i;
            }
        }
        let center = points.row(far).to_vec();
        for (i, d) in min_d.iter_mut().enumerate() {
            let dist = squared_distance(points.row(i), &center);
            if dist < *d {
                *d = dist;
            }
        }
        centers.push(center);
    }
    centers
}

/// Lloyd k-means until the assignment reaches a fixpoint or `max_iter`.
///
/// `seeds`, when given, are the initial centers (their count must be `k`);
/// otherwise seeded farthest-point initialization is used. Empty clusters are
/// refilled with the row farthest from its own centroid. Requires `k` not to
/// exceed the number of distinct rows.
pub fn kmeans(
    points: &Matrix,
    k: usize,
    seeds: Option<&[Vec<f64>]>,
    max_iter: usize,
    seed: u64,
) -> Result<ClusterAssignment> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    let distinct = points.distinct_rows();
    if k > distinct {
        return Err(Error::TooFewDistinctPoints { k, distinct });
    }
    if let Some(s) = seeds {
        if s.len() != k {
            return Err(Error::InvalidConfig(format!(
                "expected {k} seed centers, got {}",
                s.len()
            )));
        }
    }

    let mut centers: Vec<Vec<f64>> = match seeds {
        Some(s) => s.to_vec(),
        None => farthest_point_init(points, k, seed),
    };
    let mut assign: Vec<usize> = vec![usize::MAX; n];

    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (i, slot) in assign.iter_mut().enumerate() {
            let c = nearest_center(points.row(i), &centers);
            if *slot != c {
                *slot = c;
                changed = true;
            }
        }

        // Refill empty clusters with the row farthest from its centroid.
        let mut sizes = vec![0usize; k];
        for &a in &assign {
            sizes[a] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let mut far = usize::MAX;
            let mut far_d = -1.0;
            for i in 0..n {
                if sizes[assign[i]] < 2 {
                    continue;
                }
                let d = squared_distance(points.row(i), &centers[assign[i]]);
                if d > far_d {
                    far_d = d;
                    far = i;
                }
            }
            if far != usize::MAX {
                sizes[assign[far]] -= 1;
                assign[far] = empty;
                sizes[empty] = 1;
                changed = true;
            }
        }

        // Recompute centroids as member means.
        let cols = points.cols();
        let mut sums = vec![vec![0.0; cols]; k];
        for i in 0..n {
            let row = points.row(i);
            let s = &mut sums[assign[i]];
            for (j, &v) in row.iter().enumerate() {
                s[j] += v;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                for v in sums[c].iter_mut() {
                    *v /= sizes[c] as f64;
                }
                centers[c] = sums[c].clone();
            }
        }

        if !changed {
            break;
        }
    }

    Ok(ClusterAssignment {
        labels: assign.into_iter().map(Some).collect(),
        centroids: Some(centers),
        k,
    })
}

/// DBSCAN with a closed eps-ball: a row is core iff at least `min_pts` rows
/// (itself included) lie within distance `eps` inclusive. Border rows attach
/// to the first core cluster that reaches them in scan order; unreachable
/// rows stay noise.
///
/// Coincident rows share one neighborhood, so the scan runs over unique rows
/// weighted by multiplicity; the outcome is identical to the point-by-point
/// scan because duplicates always land in the same cluster.
pub fn dbscan(points: &Matrix, eps: f64, min_pts: usize) -> ClusterAssignment {
    let n = points.rows();
    if n == 0 {
        return ClusterAssignment {
            labels: Vec::new(),
            centroids: None,
            k: 0,
        };
    }

    // Group bitwise-identical rows in first-appearance order.
    let mut row_group: Vec<usize> = Vec::with_capacity(n);
    let mut reps: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    {
        let mut seen: std::collections::HashMap<Vec<u64>, usize> = Default::default();
        for i in 0..n {
            let key: Vec<u64> = points.row(i).iter().map(|v| v.to_bits()).collect();
            let next = reps.len();
            let g = *seen.entry(key).or_insert(next);
            if g == reps.len() {
                reps.push(i);
                counts.push(0);
            }
            counts[g] += 1;
            row_group.push(g);
        }
    }
    let m = reps.len();
    let eps_sq = eps * eps;

    // Neighbor groups of a group, with the total member count inside eps.
    let neighbors = |g: usize| -> (Vec<usize>, usize) {
        let row = points.row(reps[g]);
        let mut nb = Vec::new();
        let mut weight = 0usize;
        for (h, &rep) in reps.iter().enumerate() {
            let other = points.row(rep);
            let d: f64 = row
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d <= eps_sq {
                nb.push(h);
                weight += counts[h];
            }
        }
        (nb, weight)
    };

    let mut group_label: Vec<Option<usize>> = vec![None; m];
    let mut visited = vec![false; m];
    let mut cluster = 0usize;
    for g in 0..m {
        if visited[g] {
            continue;
        }
        visited[g] = true;
        let (nb, weight) = neighbors(g);
        if weight < min_pts {
            continue;
        }
        group_label[g] = Some(cluster);
        let mut queue: std::collections::VecDeque<usize> = nb.into();
        while let Some(h) = queue.pop_front() {
            if group_label[h].is_none() {
                group_label[h] = Some(cluster);
            }
            if !visited[h] {
                visited[h] = true;
                let (nbh, weight_h) = neighbors(h);
                if weight_h >= min_pts {
                    queue.extend(nbh);
                }
            }
        }
        cluster += 1;
    }

    ClusterAssignment {
        labels: row_group.iter().map(|&g| group_label[g]).collect(),
        centroids: None,
        k: cluster,
    }
}
