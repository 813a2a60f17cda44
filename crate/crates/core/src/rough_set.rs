//! Generation positive region, redundancy testing, and the initial
//! backward-elimination feature selection.
//!
//! A ball qualifies for the positive region iff its purity reaches the
//! threshold; the region's cardinality counts the members of qualifying
//! balls. A feature is relatively redundant when rebuilding the balls
//! without it does not shrink that coverage. Selection walks the features
//! in ascending index order, removes each redundant one, and refreshes the
//! baseline from the trial (balls are rebuilt from scratch after every
//! removal).

use serde::{Deserialize, Serialize};

use crate::ball::{generate_balls, GranularBall};
use crate::dataset::LabelId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Ordered set of feature indices (strictly increasing).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSubset {
    indices: Vec<usize>,
}

impl FeatureSubset {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    /// All features of a d-dimensional space.
    pub fn full(d: usize) -> Self {
        Self {
            indices: (0..d).collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.indices.binary_search(&feature).is_ok()
    }

    pub fn without(&self, feature: usize) -> Self {
        Self {
            indices: self
                .indices
                .iter()
                .copied()
                .filter(|&f| f != feature)
                .collect(),
        }
    }

    pub fn with(&self, feature: usize) -> Self {
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&feature) {
            indices.insert(pos, feature);
        }
        Self { indices }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        Self::new(indices)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.indices.iter().all(|&f| other.contains(f))
    }
}

impl std::fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{{{}}}",
            self.indices
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

/// Size of the generation positive region under a purity threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositiveRegionStat {
    /// Members of qualifying balls.
    pub covered_instances: usize,
    pub qualifying_balls: usize,
    pub threshold_used: f64,
}

/// A ball qualifies iff purity >= threshold; with threshold 1 this is
/// exactly the single-labeled-ball condition.
pub fn positive_region(balls: &[GranularBall], purity_threshold: f64) -> PositiveRegionStat {
    let mut covered = 0;
    let mut qualifying = 0;
    for ball in balls {
        if ball.purity >= purity_threshold {
            covered += ball.members.len();
            qualifying += 1;
        }
    }
    PositiveRegionStat {
        covered_instances: covered,
        qualifying_balls: qualifying,
        threshold_used: purity_threshold,
    }
}

/// Tests whether `candidate` is relatively redundant within `working`:
/// rebuilds the balls from scratch on `working` minus the candidate (same
/// seed discipline) and compares coverage against the baseline.
pub fn is_redundant(
    store: &Matrix,
    labels: &[LabelId],
    working: &FeatureSubset,
    candidate: usize,
    purity_threshold: f64,
    baseline: &PositiveRegionStat,
    seed: u64,
) -> Result<(bool, PositiveRegionStat)> {
    if !working.contains(candidate) {
        return Err(Error::NotInWorkingSet(candidate));
    }
    if working.len() < 2 {
        return Err(Error::LastFeature);
    }
    let reduced = working.without(candidate);
    let balls = generate_balls(store, labels, &reduced, purity_threshold, seed)?;
    let trial = positive_region(&balls, purity_threshold);
    Ok((trial.covered_instances >= baseline.covered_instances, trial))
}

/// One entry of the selection audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDecision {
    pub feature: usize,
    pub removed: bool,
    pub baseline: PositiveRegionStat,
    pub trial: PositiveRegionStat,
}

/// Backward elimination over all features in ascending index order. Each
/// redundant feature is removed and the baseline refreshed from its trial;
/// the final remaining feature is never tested. Returns the surviving
/// subset and the per-feature audit trail.
pub fn select_features_initial(
    store: &Matrix,
    labels: &[LabelId],
    purity_threshold: f64,
    seed: u64,
) -> Result<(FeatureSubset, Vec<FeatureDecision>)> {
    if store.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = store.cols();
    let mut working = FeatureSubset::full(d);
    let balls = generate_balls(store, labels, &working, purity_threshold, seed)?;
    let mut baseline = positive_region(&balls, purity_threshold);

    let mut audit = Vec::new();
    for feature in 0..d {
        if working.len() < 2 {
            break;
        }
        let (redundant, trial) = is_redundant(
            store,
            labels,
            &working,
            feature,
            purity_threshold,
            &baseline,
            seed,
        )?;
        audit.push(FeatureDecision {
            feature,
            removed: redundant,
            baseline,
            trial,
        });
        if redundant {
            working = working.without(feature);
            baseline = trial;
        }
    }
    Ok((working, audit))
}
