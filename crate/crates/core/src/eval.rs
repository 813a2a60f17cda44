//! Downstream validation: k-NN with stratified cross-validation and
//! macro-F1, unknown-detection metrics, and the continual-vs-from-scratch
//! wall-time benchmark.

use std::time::Instant;

use serde::Serialize;

use crate::continual::KnowledgeBase;
use crate::dataset::{split_periods, Dataset, LabelId, ScenarioSchedule};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{mix_seed, SplitMix64};
use crate::rough_set::{select_features_initial, FeatureSubset};

const FOLDS: usize = 10;

/// Majority vote over the k nearest train rows by Euclidean distance in the
/// subset's dimensions. Distance ties break toward the lower train index,
/// vote ties toward the lowest label id. `k` must be odd and at most the
/// train size.
pub fn knn_predict(
    train: &Dataset,
    test: &Dataset,
    k: usize,
    subset: &FeatureSubset,
) -> Result<Vec<LabelId>> {
    let labels = train.labels().ok_or(Error::UnlabeledDataset)?;
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "k must be a positive odd integer, got {k}"
        )));
    }
    if k > train.n() {
        return Err(Error::InvalidConfig(format!(
            "k={k} exceeds the train size {}",
            train.n()
        )));
    }
    let cols = subset.indices();
    let train_m = train.instances().select_columns(cols);
    let test_m = test.instances().select_columns(cols);

    let mut predictions = Vec::with_capacity(test.n());
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(train.n());
    for row in test_m.iter_rows() {
        dists.clear();
        for (i, t) in train_m.iter_rows().enumerate() {
            let d: f64 = row
                .iter()
                .zip(t)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            dists.push((d, i));
        }
        dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut counts: std::collections::BTreeMap<LabelId, usize> = Default::default();
        for &(_, i) in dists.iter().take(k) {
            *counts.entry(labels[i]).or_insert(0) += 1;
        }
        let (&label, _) = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .expect("k >= 1");
        predictions.push(label);
    }
    Ok(predictions)
}

/// Square confusion matrix over the fold's label universe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Confusion {
    /// Sorted label ids indexing both axes.
    pub labels: Vec<LabelId>,
    /// `counts[truth][predicted]`.
    pub counts: Vec<Vec<usize>>,
}

impl Confusion {
    fn new(truth: &[LabelId], predicted: &[LabelId]) -> Self {
        let labels: Vec<LabelId> = truth
            .iter()
            .chain(predicted)
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let idx = |l: LabelId| labels.binary_search(&l).unwrap();
        let mut counts = vec![vec![0usize; labels.len()]; labels.len()];
        for (&t, &p) in truth.iter().zip(predicted) {
            counts[idx(t)][idx(p)] += 1;
        }
        Self { labels, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        let correct: usize = (0..self.labels.len()).map(|i| self.counts[i][i]).sum();
        correct as f64 / self.total() as f64
    }

    /// Unweighted mean of per-class F1 over classes present in the truth.
    pub fn macro_f1(&self) -> f64 {
        let n = self.labels.len();
        let mut f1s = Vec::new();
        for c in 0..n {
            let truth_count: usize = self.counts[c].iter().sum();
            if truth_count == 0 {
                continue;
            }
            let tp = self.counts[c][c];
            let pred_count: usize = (0..n).map(|t| self.counts[t][c]).sum();
            let precision = if pred_count > 0 {
                tp as f64 / pred_count as f64
            } else {
                0.0
            };
            let recall = tp as f64 / truth_count as f64;
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            f1s.push(f1);
        }
        if f1s.is_empty() {
            0.0
        } else {
            f1s.iter().sum::<f64>() / f1s.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation over the folds.
    pub std_accuracy: f64,
    pub macro_f1_mean: f64,
    pub k_used: usize,
    pub subset_used: Vec<usize>,
    pub fold_confusions: Vec<Confusion>,
}

/// Seeded stratified ten-fold cross-validation: per class (ascending id),
/// the shuffled instances are dealt round-robin into folds through a global
/// counter, so per-class fold counts differ by at most one and fold sizes
/// stay balanced.
pub fn stratified_tenfold(
    data: &Dataset,
    subset: &FeatureSubset,
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    let labels = data.labels().ok_or(Error::UnlabeledDataset)?;
    if data.n() < FOLDS {
        return Err(Error::InvalidConfig(format!(
            "ten-fold cross-validation needs at least {FOLDS} instances, got {}",
            data.n()
        )));
    }

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); FOLDS];
    let mut cursor = 0usize;
    for class in data.class_ids() {
        let mut members: Vec<usize> = (0..data.n()).filter(|&i| labels[i] == class).collect();
        let mut rng = SplitMix64::new(mix_seed(seed, class as u64));
        rng.shuffle(&mut members);
        for idx in members {
            folds[cursor % FOLDS].push(idx);
            cursor += 1;
        }
    }

    let mut fold_accuracies = Vec::with_capacity(FOLDS);
    let mut fold_f1 = Vec::with_capacity(FOLDS);
    let mut fold_confusions = Vec::with_capacity(FOLDS);
    for f in 0..FOLDS {
        let mut test_rows = folds[f].clone();
        test_rows.sort_unstable();
        let mut train_rows: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != f)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        train_rows.sort_unstable();

        let train = data.subset(&train_rows)?;
        let test = data.subset(&test_rows)?;
        let truth: Vec<LabelId> = test.labels().unwrap().to_vec();
        // Clamp to the train size, keeping k odd.
        let mut k_fold = k.min(train.n());
        if k_fold.is_multiple_of(2) {
            k_fold -= 1;
        }
        let predicted = knn_predict(&train, &test, k_fold, subset)?;

        let confusion = Confusion::new(&truth, &predicted);
        fold_accuracies.push(confusion.accuracy());
        fold_f1.push(confusion.macro_f1());
        fold_confusions.push(confusion);
    }

    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / FOLDS as f64;
    let variance = fold_accuracies
        .iter()
        .map(|a| (a - mean_accuracy) * (a - mean_accuracy))
        .sum::<f64>()
        / FOLDS as f64;
    let macro_f1_mean = fold_f1.iter().sum::<f64>() / FOLDS as f64;
    Ok(CvResult {
        fold_accuracies,
        mean_accuracy,
        std_accuracy: variance.sqrt(),
        macro_f1_mean,
        k_used: k,
        subset_used: subset.indices().to_vec(),
        fold_confusions,
    })
}

/// Binary precision/recall/F1 treating "unknown" as the positive class.
/// Zero denominators yield 0.
pub fn unknown_detection_metrics(
    truth_unknown: &[bool],
    predicted_unknown: &[bool],
) -> Result<(f64, f64, f64)> {
    if truth_unknown.len() != predicted_unknown.len() {
        return Err(Error::DimensionMismatch {
            expected: truth_unknown.len(),
            found: predicted_unknown.len(),
        });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&t, &p) in truth_unknown.iter().zip(predicted_unknown) {
        match (t, p) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok((precision, recall, f1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchParams {
    pub purity_threshold: f64,
    pub eps: f64,
    pub min_pts: usize,
    pub seed: u64,
    pub repeats: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            purity_threshold: 0.65,
            eps: 0.3,
            min_pts: 10,
            seed: 0,
            repeats: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    /// Entry 0 is the initial build, then one entry per period; each entry
    /// is the median over the repeats.
    pub per_period_continual_ms: Vec<f64>,
    pub per_period_scratch_ms: Vec<f64>,
    /// Sum of the scratch entries over the sum of the continual entries.
    pub cumulative_speedup: f64,
    pub continual_config_hash: u64,
    pub scratch_config_hash: u64,
    pub repeats: usize,
}

fn fnv1a(s: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Replays the schedule twice per repeat: the continual arm builds the KB
/// once and processes each period; the from-scratch arm re-runs the full
/// supervised selection on all data revealed so far (true labels
/// substituted). Wall times come from a monotonic clock; one warm-up run is
/// excluded. Data preparation (merging, splitting) stays outside the clock.
pub fn bench_continual_vs_scratch(
    data: &Dataset,
    schedule: &ScenarioSchedule,
    params: &BenchParams,
) -> Result<BenchResult> {
    if schedule.periods.len() < 2 {
        return Err(Error::InvalidConfig(
            "benchmark needs at least 2 periods".into(),
        ));
    }
    if params.repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let (initial, streams) = split_periods(data, schedule)?;
    let entries = 1 + streams.len();

    // Pre-build the scratch arm's merged labeled prefixes.
    let mut merged: Vec<(Matrix, Vec<LabelId>)> = Vec::with_capacity(entries);
    let mut acc = initial.instances().clone();
    let mut acc_labels: Vec<LabelId> = initial.labels().unwrap().to_vec();
    merged.push((acc.clone(), acc_labels.clone()));
    for period in &streams {
        for (i, row) in period.data.instances().iter_rows().enumerate() {
            acc.push_row(row);
            acc_labels.push(period.truth[i]);
        }
        merged.push((acc.clone(), acc_labels.clone()));
    }

    let run_continual = || -> Result<Vec<f64>> {
        let mut times = Vec::with_capacity(entries);
        let t = Instant::now();
        let (mut kb, _) = KnowledgeBase::build(&initial, params.purity_threshold, params.seed)?;
        times.push(t.elapsed().as_secs_f64() * 1000.0);
        for period in &streams {
            let t = Instant::now();
            kb.process_period(&period.data, params.eps, params.min_pts)?;
            times.push(t.elapsed().as_secs_f64() * 1000.0);
        }
        Ok(times)
    };
    let run_scratch = || -> Result<Vec<f64>> {
        let mut times = Vec::with_capacity(entries);
        for (m, labels) in &merged {
            let t = Instant::now();
            select_features_initial(m, labels, params.purity_threshold, params.seed)?;
            times.push(t.elapsed().as_secs_f64() * 1000.0);
        }
        Ok(times)
    };

    // Warm-up, excluded from the statistics.
    run_continual()?;
    run_scratch()?;

    let mut continual_runs: Vec<Vec<f64>> = Vec::with_capacity(params.repeats);
    let mut scratch_runs: Vec<Vec<f64>> = Vec::with_capacity(params.repeats);
    for _ in 0..params.repeats {
        continual_runs.push(run_continual()?);
        scratch_runs.push(run_scratch()?);
    }

    let per_entry_median = |runs: &[Vec<f64>]| -> Vec<f64> {
        (0..entries)
            .map(|e| {
                let mut samples: Vec<f64> = runs.iter().map(|r| r[e]).collect();
                median(&mut samples)
            })
            .collect()
    };
    let per_period_continual_ms = per_entry_median(&continual_runs);
    let per_period_scratch_ms = per_entry_median(&scratch_runs);
    let cumulative_speedup = per_period_scratch_ms.iter().sum::<f64>()
        / per_period_continual_ms.iter().sum::<f64>();

    let config = |arm: &str| {
        fnv1a(&format!(
            "arm={arm};purity={};eps={};min_pts={};seed={};n={};d={};periods={}",
            params.purity_threshold,
            params.eps,
            params.min_pts,
            params.seed,
            data.n(),
            data.d(),
            schedule.periods.len()
        ))
    };
    Ok(BenchResult {
        per_period_continual_ms,
        per_period_scratch_ms,
        cumulative_speedup,
        continual_config_hash: config("shared"),
        scratch_config_hash: config("shared"),
        repeats: params.repeats,
    })
}
