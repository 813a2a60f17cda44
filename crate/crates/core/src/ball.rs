//! Granular-ball construction and updates.
//!
//! A granular-ball is a hypersphere (center, radius) covering a set of
//! instances in some feature subspace. Generation starts from a k-means
//! clustering seeded by per-class centroids and recursively 2-means-splits
//! every ball whose purity (majority-label fraction) falls below the
//! threshold; splitting stops at singletons and at coincident-point residues.
//! Once a ball is built its geometry is frozen: absorbing a known instance
//! only appends the member and updates the purity bookkeeping.

use crate::clustering::{euclidean, kmeans, KMEANS_MAX_ITER};
use crate::dataset::LabelId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::mix_seed;
use crate::rough_set::FeatureSubset;

#[derive(Debug, Clone, PartialEq)]
pub struct GranularBall {
    /// Center in the coordinates of `subspace` (one value per subspace dim).
    pub center: Vec<f64>,
    pub radius: f64,
    /// Member row indices into the instance store the ball was built
    /// against, ascending.
    pub members: Vec<usize>,
    pub label: LabelId,
    /// Majority-label fraction among members; maintained exactly as
    /// `label_hits / members.len()`.
    pub purity: f64,
    /// Members whose (possibly assumed) label equals `label`.
    pub label_hits: usize,
    /// Feature subspace the geometry was computed in.
    pub subspace: FeatureSubset,
}

impl GranularBall {
    /// Distance from a full-dimensional row to the center, measured in the
    /// ball's subspace.
    pub fn distance_to(&self, row: &[f64]) -> f64 {
        self.subspace
            .indices()
            .iter()
            .zip(&self.center)
            .map(|(&j, c)| (row[j] - c) * (row[j] - c))
            .sum::<f64>()
            .sqrt()
    }

    /// Closed-ball containment.
    pub fn contains(&self, row: &[f64]) -> bool {
        self.distance_to(row) <= self.radius
    }

    /// Absorbs a known instance: the member list grows, the geometry stays
    /// frozen, and the instance is assumed to carry the ball's label.
    /// Fails when the instance lies outside the closed ball.
    pub fn insert_known(&self, index: usize, store: &Matrix) -> Result<GranularBall> {
        let distance = self.distance_to(store.row(index));
        if distance > self.radius {
            return Err(Error::OutsideBall {
                distance,
                radius: self.radius,
            });
        }
        let mut updated = self.clone();
        updated.members.push(index);
        updated.label_hits += 1;
        updated.purity = updated.label_hits as f64 / updated.members.len() as f64;
        Ok(updated)
    }
}

/// Majority label (ties to the lowest id), its count, and the purity.
fn majority(labels: &[LabelId], members: &[usize]) -> (LabelId, usize, f64) {
    let mut counts: std::collections::BTreeMap<LabelId, usize> = Default::default();
    for &m in members {
        *counts.entry(labels[m]).or_insert(0) += 1;
    }
    let (&label, &hits) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("non-empty member set");
    (label, hits, hits as f64 / members.len() as f64)
}

/// Builds one ball over the given members: the center is the arithmetic mean
/// of the member rows projected to `subspace`, the radius the maximum member
/// distance to it, the label the majority member label.
pub fn ball_from_members(
    store: &Matrix,
    members: &[usize],
    subspace: &FeatureSubset,
    labels: &[LabelId],
) -> Result<GranularBall> {
    if members.is_empty() {
        return Err(Error::EmptyMembers);
    }
    let mut members = members.to_vec();
    members.sort_unstable();

    let cols = subspace.indices();
    let mut center = vec![0.0; cols.len()];
    for &m in &members {
        let row = store.row(m);
        for (j, &c) in cols.iter().enumerate() {
            center[j] += row[c];
        }
    }
    for v in center.iter_mut() {
        *v /= members.len() as f64;
    }

    let mut radius: f64 = 0.0;
    let mut proj = vec![0.0; cols.len()];
    for &m in &members {
        let row = store.row(m);
        for (j, &c) in cols.iter().enumerate() {
            proj[j] = row[c];
        }
        radius = radius.max(euclidean(&proj, &center));
    }

    let (label, label_hits, purity) = majority(labels, &members);
    Ok(GranularBall {
        center,
        radius,
        members,
        label,
        purity,
        label_hits,
        subspace: subspace.clone(),
    })
}

/// Generates the granular-ball cover of the store in `subspace`.
///
/// The initial clustering is k-means with one cluster per distinct label,
/// seeded by the per-class centroids; every ball below the purity threshold
/// with at least two members is then split by 2-means until pure, singleton,
/// or coincident. The returned balls partition the row indices and are
/// sorted by lowest member index.
pub fn generate_balls(
    store: &Matrix,
    labels: &[LabelId],
    subspace: &FeatureSubset,
    purity_threshold: f64,
    seed: u64,
) -> Result<Vec<GranularBall>> {
    if store.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != store.rows() {
        return Err(Error::DimensionMismatch {
            expected: store.rows(),
            found: labels.len(),
        });
    }
    if !(purity_threshold > 0.5 && purity_threshold <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "purity threshold must lie in (0.5, 1], got {purity_threshold}"
        )));
    }

    let proj = store.select_columns(subspace.indices());
    let n = proj.rows();

    let class_ids: Vec<LabelId> = labels
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();

    let initial_groups: Vec<Vec<usize>> = if class_ids.len() <= 1 {
        vec![(0..n).collect()]
    } else {
        let k = class_ids.len();
        if proj.distinct_rows() < k {
            // Cannot seed one cluster per class; let recursive splitting
            // handle the mixture.
            vec![(0..n).collect()]
        } else {
            let seeds: Vec<Vec<f64>> = class_ids
                .iter()
                .map(|&c| {
                    let members: Vec<usize> =
                        (0..n).filter(|&i| labels[i] == c).collect();
                    let mut mean = vec![0.0; proj.cols()];
                    for &m in &members {
                        for (j, &v) in proj.row(m).iter().enumerate() {
                            mean[j] += v;
                        }
                    }
                    for v in mean.iter_mut() {
                        *v /= members.len() as f64;
                    }
                    mean
                })
                .collect();
            let asn = kmeans(&proj, k, Some(&seeds), KMEANS_MAX_ITER, seed)?;
            asn.clusters().into_iter().filter(|c| !c.is_empty()).collect()
        }
    };

    let mut queue: Vec<Vec<usize>> = initial_groups;
    let mut done: Vec<Vec<usize>> = Vec::new();
    while let Some(members) = queue.pop() {
        let (_, _, purity) = majority(labels, &members);
        if purity >= purity_threshold || members.len() == 1 {
            done.push(members);
            continue;
        }
        let sub = proj.select_rows(&members);
        if sub.distinct_rows() < 2 {
            // Coincident points: finalized as-is, flagged via purity below
            // the threshold in the stats.
            done.push(members);
            continue;
        }
        let split_seed = mix_seed(seed, members[0] as u64);
        let asn = kmeans(&sub, 2, None, KMEANS_MAX_ITER, split_seed)?;
        let clusters = asn.clusters();
        if clusters.iter().any(|c| c.is_empty()) {
            done.push(members);
            continue;
        }
        for child in clusters {
            queue.push(child.into_iter().map(|i| members[i]).collect());
        }
    }

    done.sort_by_key(|g| g[0]);
    done.iter()
        .map(|g| ball_from_members(store, g, subspace, labels))
        .collect()
}

/// Aggregate diagnostics over a generated ball set.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BallSetStats {
    pub ball_count: usize,
    /// Total member count, i.e. the number of instances granulated.
    pub coverage: usize,
    pub mean_purity: f64,
    /// Balls finalized below the purity threshold (coincident-point
    /// residues); they never qualify for the positive region.
    pub residue_balls: usize,
}

pub fn ball_set_stats(balls: &[GranularBall], purity_threshold: f64) -> BallSetStats {
    let ball_count = balls.len();
    let coverage = balls.iter().map(|b| b.members.len()).sum();
    let mean_purity = if ball_count == 0 {
        0.0
    } else {
        balls.iter().map(|b| b.purity).sum::<f64>() / ball_count as f64
    };
    let residue_balls = balls
        .iter()
        .filter(|b| b.purity < purity_threshold)
        .count();
    BallSetStats {
        ball_count,
        coverage,
        mean_purity,
        residue_balls,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows[0].len(), rows).unwrap()
    }

    fn full(d: usize) -> FeatureSubset {
        FeatureSubset::full(d)
    }

    fn assert_partition(balls: &[GranularBall], n: usize) {
        let mut seen = vec![false; n];
        for ball in balls {
            for &m in &ball.members {
                assert!(!seen[m], "index {m} covered twice");
                seen[m] = true;
            }
        }
        assert!(seen.iter().all(|&s| s), "not all indices covered");
    }

    #[test]
    fn singleton_ball() {
        let s = store(&[vec![0.3, 0.7]]);
        let b = ball_from_members(&s, &[0], &full(2), &[5]).unwrap();
        assert_eq!(b.center, vec![0.3, 0.7]);
        assert_eq!(b.radius, 0.0);
        assert_eq!(b.purity, 1.0);
        assert_eq!(b.label, 5);
    }

    #[test]
    fn midpoint_ball() {
        let s = store(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let b = ball_from_members(&s, &[0, 1], &full(2), &[1, 1]).unwrap();
        assert_eq!(b.center, vec![1.0, 0.0]);
        assert_eq!(b.radius, 1.0);
        assert_eq!(b.purity, 1.0);
    }

    #[test]
    fn majority_label_and_purity() {
        let s = store(&[vec![0.0], vec![0.1], vec![0.2]]);
        let b = ball_from_members(&s, &[0, 1, 2], &full(1), &[0, 0, 1]).unwrap();
        assert_eq!(b.label, 0);
        assert!((b.purity - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.label_hits, 2);
    }

    #[test]
    fn majority_tie_goes_to_lowest_label() {
        let s = store(&[vec![0.0], vec![0.1]]);
        let b = ball_from_members(&s, &[0, 1], &full(1), &[7, 3]).unwrap();
        assert_eq!(b.label, 3);
    }

    #[test]
    fn empty_members_rejected() {
        let s = store(&[vec![0.0]]);
        assert!(matches!(
            ball_from_members(&s, &[], &full(1), &[0]),
            Err(Error::EmptyMembers)
        ));
    }

    #[test]
    fn generate_one_class_single_ball() {
        let s = store(&[vec![0.0, 0.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        let balls = generate_balls(&s, &[2, 2, 2], &full(2), 1.0, 0).unwrap();
        assert_eq!(balls.len(), 1);
        assert_eq!(balls[0].purity, 1.0);
        assert_partition(&balls, 3);
    }

    /// Class-centroid-seeded 2-means must separate two labeled blobs into two
    /// pure balls; the oracle checks every point is nearer its own class
    /// centroid.
    #[test]
    fn generate_two_blobs_two_pure_balls() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            rows.push(vec![0.05 * (i % 3) as f64, 0.01 * i as f64]);
            labels.push(0);
        }
        for i in 0..8 {
            rows.push(vec![1.0 + 0.05 * (i % 3) as f64, 1.0 - 0.01 * i as f64]);
            labels.push(1);
        }
        let s = store(&rows);

        let centroid = |class: LabelId| -> Vec<f64> {
            let members: Vec<&Vec<f64>> = rows
                .iter()
                .zip(&labels)
                .filter(|(_, &l)| l == class)
                .map(|(r, _)| r)
                .collect();
            (0..2)
                .map(|j| members.iter().map(|r| r[j]).sum::<f64>() / members.len() as f64)
                .collect()
        };
        let c0 = centroid(0);
        let c1 = centroid(1);
        for (row, &l) in rows.iter().zip(&labels) {
            let own = if l == 0 { &c0 } else { &c1 };
            let other = if l == 0 { &c1 } else { &c0 };
            assert!(euclidean(row, own) < euclidean(row, other));
        }

        let balls = generate_balls(&s, &labels, &full(2), 1.0, 9).unwrap();
        assert_eq!(balls.len(), 2);
        assert!(balls.iter().all(|b| b.purity == 1.0));
        assert_partition(&balls, 16);
    }

    /// XOR corners: every final ball is single-labeled after recursive
    /// splitting.
    #[test]
    fn generate_xor_splits_to_pure_balls() {
        let s = store(&[
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ]);
        let labels = [0, 0, 1, 1];
        let balls = generate_balls(&s, &labels, &full(2), 1.0, 4).unwrap();
        assert!(balls.iter().all(|b| b.purity == 1.0));
        for ball in &balls {
            let first = labels[ball.members[0]];
            assert!(ball.members.iter().all(|&m| labels[m] == first));
        }
        assert_partition(&balls, 4);
    }

    #[test]
    fn generate_coincident_residue() {
        // Identical rows with mixed labels cannot be split; the residue ball
        // is finalized impure and flagged in the stats.
        let s = store(&[vec![0.5], vec![0.5], vec![0.5], vec![0.5]]);
        let balls = generate_balls(&s, &[0, 0, 1, 1], &full(1), 1.0, 0).unwrap();
        assert_eq!(balls.len(), 1);
        assert!(balls[0].purity < 1.0);
        let stats = ball_set_stats(&balls, 1.0);
        assert_eq!(stats.residue_balls, 1);
        assert_eq!(stats.coverage, 4);
    }

    #[test]
    fn generate_deterministic() {
        let data = crate::synth::table_shaped(60, 6, 4, 6, 13);
        let labels = data.labels().unwrap();
        let a = generate_balls(data.instances(), labels, &full(6), 0.8, 7).unwrap();
        let b = generate_balls(data.instances(), labels, &full(6), 0.8, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generate_partitions_random_inputs() {
        for seed in 0..5 {
            let data = crate::synth::random_labeled(25, 3, 3, seed);
            let balls =
                generate_balls(data.instances(), data.labels().unwrap(), &full(3), 0.7, seed)
                    .unwrap();
            assert_partition(&balls, 25);
            for b in &balls {
                assert!(b.purity >= 0.7 || b.members.len() == 1 || b.purity < 0.7);
            }
        }
    }

    /// Freshly generated balls: recomputing center and radius from members
    /// reproduces the stored values within accumulation tolerance.
    #[test]
    fn center_radius_recomputable() {
        let data = crate::synth::table_shaped(80, 5, 3, 5, 21);
        let labels = data.labels().unwrap();
        let balls = generate_balls(data.instances(), labels, &full(5), 0.9, 3).unwrap();
        for ball in &balls {
            let again =
                ball_from_members(data.instances(), &ball.members, &ball.subspace, labels)
                    .unwrap();
            for (a, b) in ball.center.iter().zip(&again.center) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!((ball.radius - again.radius).abs() < 1e-9);
        }
    }

    #[test]
    fn insert_center_point() {
        let mut s = store(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let b = ball_from_members(&s, &[0, 1], &full(2), &[1, 1]).unwrap();
        s.push_row(&[1.0, 0.0]);
        let b2 = b.insert_known(2, &s).unwrap();
        assert_eq!(b2.members, vec![0, 1, 2]);
        assert_eq!(b2.radius, b.radius);
        assert_eq!(b2.center, b.center);
        assert_eq!(b2.purity, 1.0);
    }

    #[test]
    fn insert_boundary_point_accepted() {
        let mut s = store(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let b = ball_from_members(&s, &[0, 1], &full(2), &[1, 1]).unwrap();
        s.push_row(&[0.0, 0.0]);
        // Distance exactly equals the radius (closed ball).
        assert_eq!(b.distance_to(s.row(2)), b.radius);
        assert!(b.insert_known(2, &s).is_ok());
    }

    #[test]
    fn insert_outside_rejected() {
        let mut s = store(&[vec![0.0, 0.0], vec![2.0, 0.0]]);
        let b = ball_from_members(&s, &[0, 1], &full(2), &[1, 1]).unwrap();
        s.push_row(&[2.01, 0.0]);
        assert!(matches!(
            b.insert_known(2, &s),
            Err(Error::OutsideBall { .. })
        ));
    }

    #[test]
    fn insert_never_lowers_purity() {
        let s0 = store(&[vec![0.0], vec![0.2], vec![0.4]]);
        let b = ball_from_members(&s0, &[0, 1, 2], &full(1), &[0, 0, 1]).unwrap();
        let mut s = s0.clone();
        s.push_row(&[0.2]);
        let b2 = b.insert_known(3, &s).unwrap();
        assert!(b2.purity >= b.purity);
    }
}
