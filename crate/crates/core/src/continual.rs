//! The open-learning engine: a knowledge base of granular-balls plus the
//! selected feature subset, updated one stream period at a time.
//!
//! Per period: every instance is identified against the stored balls (inside
//! any closed ball means known), knowns are absorbed into their ball with
//! frozen geometry, unknowns are pooled with the carryover noise buffer and
//! DBSCAN-clustered, each cluster gets a fresh pseudo-label and its own
//! granular-balls, and the feature subset is enlarged with every candidate
//! feature that stopped being redundant. The subset can only grow, ball
//! counts can only grow, and a replay with the same seeds is byte-identical.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ball::{generate_balls, GranularBall};
use crate::clustering::dbscan;
use crate::dataset::{Dataset, LabelId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rough_set::{
    is_redundant, positive_region, select_features_initial, FeatureDecision, FeatureSubset,
};

pub const KB_FORMAT_VERSION: u32 = 1;

/// Pseudo-labels live in the top half of the id space, disjoint from any
/// dense dataset label.
pub const PSEUDO_LABEL_BASE: LabelId = 1 << 31;

pub fn is_pseudo_label(label: LabelId) -> bool {
    label >= PSEUDO_LABEL_BASE
}

/// Outcome of identifying one instance against the knowledge base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Identification {
    Known { label: LabelId, ball: usize },
    Unknown,
}

/// Wall time per processing phase, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PhaseTimings {
    pub identify_ms: f64,
    pub cluster_ms: f64,
    pub granulate_ms: f64,
    pub enhance_ms: f64,
}

impl PhaseTimings {
    pub fn total_ms(&self) -> f64 {
        self.identify_ms + self.cluster_ms + self.granulate_ms + self.enhance_ms
    }
}

/// What one stream period did to the knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub period_index: usize,
    pub known_count: usize,
    pub unknown_count: usize,
    /// Points left unclustered by DBSCAN this period (carryover included);
    /// they wait in the noise buffer for the next period.
    pub noise_count: usize,
    pub new_pseudo_labels: Vec<LabelId>,
    pub added_features: Vec<usize>,
    pub subset_after: Vec<usize>,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    /// Full-dimensional coordinates of every ball member.
    store: Matrix,
    balls: Vec<GranularBall>,
    selected: FeatureSubset,
    known_labels: BTreeSet<LabelId>,
    pseudo_counter: LabelId,
    noise_buffer: Vec<Vec<f64>>,
    purity_threshold: f64,
    generation_seed: u64,
    periods_processed: usize,
}

impl KnowledgeBase {
    /// Initial learning: granular-balls on the full feature set plus the
    /// backward-elimination subset. Returns the selection audit trail for
    /// reporting.
    pub fn build(
        initial: &Dataset,
        purity_threshold: f64,
        seed: u64,
    ) -> Result<(Self, Vec<FeatureDecision>)> {
        let labels = initial.labels().ok_or(Error::UnlabeledDataset)?;
        let full = FeatureSubset::full(initial.d());
        let balls = generate_balls(
            initial.instances(),
            labels,
            &full,
            purity_threshold,
            seed,
        )?;
        let (selected, audit) =
            select_features_initial(initial.instances(), labels, purity_threshold, seed)?;
        let kb = KnowledgeBase {
            store: initial.instances().clone(),
            balls,
            selected,
            known_labels: initial.class_ids(),
            pseudo_counter: PSEUDO_LABEL_BASE,
            noise_buffer: Vec::new(),
            purity_threshold,
            generation_seed: seed,
            periods_processed: 0,
        };
        Ok((kb, audit))
    }

    pub fn d(&self) -> usize {
        self.store.cols()
    }

    pub fn balls(&self) -> &[GranularBall] {
        &self.balls
    }

    pub fn selected(&self) -> &FeatureSubset {
        &self.selected
    }

    pub fn known_labels(&self) -> &BTreeSet<LabelId> {
        &self.known_labels
    }

    pub fn purity_threshold(&self) -> f64 {
        self.purity_threshold
    }

    pub fn generation_seed(&self) -> u64 {
        self.generation_seed
    }

    pub fn periods_processed(&self) -> usize {
        self.periods_processed
    }

    pub fn noise_buffer_len(&self) -> usize {
        self.noise_buffer.len()
    }

    pub fn store(&self) -> &Matrix {
        &self.store
    }

    /// Known iff the instance lies inside some stored closed ball; among
    /// containing balls the one with the smallest center distance wins,
    /// ties to the lowest ball id.
    pub fn identify(&self, instance: &[f64]) -> Identification {
        let mut best: Option<(f64, usize)> = None;
        for (id, ball) in self.balls.iter().enumerate() {
            let dist = ball.distance_to(instance);
            if dist <= ball.radius {
                let better = match best {
                    None => true,
                    Some((best_d, _)) => dist < best_d,
                };
                if better {
                    best = Some((dist, id));
                }
            }
        }
        match best {
            Some((_, id)) => Identification::Known {
                label: self.balls[id].label,
                ball: id,
            },
            None => Identification::Unknown,
        }
    }

    /// Open learning for one period. Labels on the batch, if any, are
    /// ignored.
    pub fn process_period(
        &mut self,
        batch: &Dataset,
        eps: f64,
        min_pts: usize,
    ) -> Result<PeriodReport> {
        if batch.d() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: batch.d(),
            });
        }
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")));
        }
        if min_pts == 0 {
            return Err(Error::InvalidConfig("min_pts must be at least 1".into()));
        }

        // Identify every instance in arrival order and absorb the knowns
        // into their balls (frozen geometry).
        let t0 = Instant::now();
        let mut known_count = 0;
        let mut unknown_rows: Vec<Vec<f64>> = std::mem::take(&mut self.noise_buffer);
        let carryover = unknown_rows.len();
        for row in batch.instances().iter_rows() {
            match self.identify(row) {
                Identification::Known { ball, .. } => {
                    let idx = self.store.rows();
                    self.store.push_row(row);
                    self.balls[ball] = self.balls[ball].insert_known(idx, &self.store)?;
                    known_count += 1;
                }
                Identification::Unknown => unknown_rows.push(row.to_vec()),
            }
        }
        let unknown_count = unknown_rows.len() - carryover;
        let identify_ms = t0.elapsed().as_secs_f64() * 1000.0;

        // Cluster the unknowns (carryover buffer first, then this period's).
        let t1 = Instant::now();
        let assignment = if unknown_rows.is_empty() {
            None
        } else {
            let mut m = Matrix::with_capacity(self.d(), unknown_rows.len());
            for row in &unknown_rows {
                m.push_row(row);
            }
            Some(dbscan(&m, eps, min_pts))
        };
        let cluster_ms = t1.elapsed().as_secs_f64() * 1000.0;

        // One fresh pseudo-label and one granular-ball set per cluster;
        // noise points wait in the buffer for the next period.
        let t2 = Instant::now();
        let mut new_pseudo_labels = Vec::new();
        let mut noise_count = 0;
        if let Some(asn) = assignment {
            let full = FeatureSubset::full(self.d());
            for members in asn.clusters() {
                let pseudo = self.pseudo_counter;
                self.pseudo_counter += 1;
                new_pseudo_labels.push(pseudo);

                let base = self.store.rows();
                let mut cluster_m = Matrix::with_capacity(self.d(), members.len());
                for &m in &members {
                    cluster_m.push_row(&unknown_rows[m]);
                    self.store.push_row(&unknown_rows[m]);
                }
                let labels = vec![pseudo; members.len()];
                let mut balls = generate_balls(
                    &cluster_m,
                    &labels,
                    &full,
                    self.purity_threshold,
                    self.generation_seed,
                )?;
                for ball in balls.iter_mut() {
                    for m in ball.members.iter_mut() {
                        *m += base;
                    }
                }
                self.balls.append(&mut balls);
            }
            for i in asn.noise() {
                self.noise_buffer.push(unknown_rows[i].clone());
                noise_count += 1;
            }
        }
        let granulate_ms = t2.elapsed().as_secs_f64() * 1000.0;

        // Enlarge the selected subset with candidates that stopped being
        // redundant.
        let t3 = Instant::now();
        let before = self.selected.clone();
        let after = self.enhance_subset(self.generation_seed)?;
        let added_features: Vec<usize> = after
            .indices()
            .iter()
            .copied()
            .filter(|&f| !before.contains(f))
            .collect();
        let enhance_ms = t3.elapsed().as_secs_f64() * 1000.0;

        let report = PeriodReport {
            period_index: self.periods_processed,
            known_count,
            unknown_count,
            noise_count,
            new_pseudo_labels,
            added_features,
            subset_after: after.indices().to_vec(),
            timings: PhaseTimings {
                identify_ms,
                cluster_ms,
                granulate_ms,
                enhance_ms,
            },
        };
        self.periods_processed += 1;
        Ok(report)
    }

    /// Rebuilds balls over the union of all ball members (each member
    /// carrying its ball's label, pseudo-labels included) and tests every
    /// candidate feature outside the selected subset in ascending order.
    /// Redundant candidates are dropped from the working set with a baseline
    /// refresh; the rest join the subset. Features already selected are
    /// never tested.
    pub fn enhance_subset(&mut self, seed: u64) -> Result<FeatureSubset> {
        if self.balls.is_empty() {
            return Err(Error::EmptyKnowledgeBase);
        }
        let d = self.d();
        let candidates: Vec<usize> = (0..d).filter(|&f| !self.selected.contains(f)).collect();
        if candidates.is_empty() {
            return Ok(self.selected.clone());
        }

        let mut union = Matrix::with_capacity(d, self.store.rows());
        let mut labels: Vec<LabelId> = Vec::with_capacity(self.store.rows());
        for ball in &self.balls {
            for &m in &ball.members {
                union.push_row(self.store.row(m));
                labels.push(ball.label);
            }
        }

        let mut working = FeatureSubset::full(d);
        let balls = generate_balls(&union, &labels, &working, self.purity_threshold, seed)?;
        let mut baseline = positive_region(&balls, self.purity_threshold);

        let mut kept = Vec::new();
        for a in candidates {
            if working.len() < 2 {
                kept.push(a);
                continue;
            }
            let (redundant, trial) = is_redundant(
                &union,
                &labels,
                &working,
                a,
                self.purity_threshold,
                &baseline,
                seed,
            )?;
            if redundant {
                working = working.without(a);
                baseline = trial;
            } else {
                kept.push(a);
            }
        }

        for f in kept {
            self.selected = self.selected.with(f);
        }
        Ok(self.selected.clone())
    }

    fn to_file(&self) -> KbFile {
        KbFile {
            version: KB_FORMAT_VERSION,
            purity_threshold: self.purity_threshold,
            seed: self.generation_seed,
            selected: self.selected.indices().to_vec(),
            known_labels: self.known_labels.iter().copied().collect(),
            pseudo_counter: self.pseudo_counter,
            periods_processed: self.periods_processed,
            noise_buffer: self.noise_buffer.clone(),
            balls: self
                .balls
                .iter()
                .map(|b| KbBall {
                    label: b.label,
                    center: b.center.clone(),
                    radius: b.radius,
                    subspace: b.subspace.indices().to_vec(),
                    members: b
                        .members
                        .iter()
                        .map(|&m| self.store.row(m).to_vec())
                        .collect(),
                    label_hits: b.label_hits,
                })
                .collect(),
        }
    }

    fn from_file(file: KbFile) -> Result<Self> {
        if file.version != KB_FORMAT_VERSION {
            return Err(Error::KbVersionMismatch {
                expected: KB_FORMAT_VERSION,
                found: file.version,
            });
        }
        if file.balls.is_empty() {
            return Err(Error::KbMalformed("knowledge base has no balls".into()));
        }
        let d = file
            .balls
            .first()
            .and_then(|b| b.members.first())
            .map(|r| r.len())
            .ok_or_else(|| Error::KbMalformed("first ball has no members".into()))?;

        let mut store = Matrix::new(d);
        let mut balls = Vec::with_capacity(file.balls.len());
        for (i, fb) in file.balls.into_iter().enumerate() {
            if fb.members.is_empty() {
                return Err(Error::KbMalformed(format!("ball {i} has no members")));
            }
            let mut members = Vec::with_capacity(fb.members.len());
            for row in &fb.members {
                if row.len() != d {
                    return Err(Error::KbMalformed(format!(
                        "ball {i} member arity {} != {d}",
                        row.len()
                    )));
                }
                members.push(store.rows());
                store.push_row(row);
            }
            let subspace = FeatureSubset::new(fb.subspace);
            if subspace.indices().iter().any(|&f| f >= d) {
                return Err(Error::KbMalformed(format!("ball {i} subspace out of range")));
            }
            if fb.center.len() != subspace.len() {
                return Err(Error::KbMalformed(format!(
                    "ball {i} center arity {} != subspace size {}",
                    fb.center.len(),
                    subspace.len()
                )));
            }
            if fb.label_hits > members.len() {
                return Err(Error::KbMalformed(format!("ball {i} label_hits too large")));
            }
            let purity = fb.label_hits as f64 / members.len() as f64;
            balls.push(GranularBall {
                center: fb.center,
                radius: fb.radius,
                members,
                label: fb.label,
                purity,
                label_hits: fb.label_hits,
                subspace,
            });
        }
        for row in &file.noise_buffer {
            if row.len() != d {
                return Err(Error::KbMalformed("noise buffer arity mismatch".into()));
            }
        }
        Ok(KnowledgeBase {
            store,
            balls,
            selected: FeatureSubset::new(file.selected),
            known_labels: file.known_labels.into_iter().collect(),
            pseudo_counter: file.pseudo_counter,
            noise_buffer: file.noise_buffer,
            purity_threshold: file.purity_threshold,
            generation_seed: file.seed,
            periods_processed: file.periods_processed,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("kb serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        // Check the version first so a future format fails with the right
        // error instead of a generic parse failure.
        let value: serde_json::Value =
            serde_json::from_str(json).map_err(|e| Error::KbMalformed(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::KbMalformed("missing version field".into()))?;
        if version != KB_FORMAT_VERSION as u64 {
            return Err(Error::KbVersionMismatch {
                expected: KB_FORMAT_VERSION,
                found: version as u32,
            });
        }
        let file: KbFile =
            serde_json::from_value(value).map_err(|e| Error::KbMalformed(e.to_string()))?;
        Self::from_file(file)
    }

    /// Writes the KB atomically: serialize to a temp file in the same
    /// directory, then rename over the target.
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = self.to_json();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, json.as_bytes()).map_err(|source| Error::Io {
            path: tmp.clone(),
            source,
        })?;
        std::fs::rename(&tmp, path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&json)
    }
}

/// Equality over the serialized projection: per-ball member coordinates
/// rather than raw store indices, so a saved-and-loaded KB compares equal
/// to the original.
impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.to_file() == other.to_file()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KbFile {
    version: u32,
    purity_threshold: f64,
    seed: u64,
    selected: Vec<usize>,
    known_labels: Vec<LabelId>,
    pseudo_counter: LabelId,
    periods_processed: usize,
    noise_buffer: Vec<Vec<f64>>,
    balls: Vec<KbBall>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KbBall {
    label: LabelId,
    center: Vec<f64>,
    radius: f64,
    subspace: Vec<usize>,
    members: Vec<Vec<f64>>,
    label_hits: usize,
}
