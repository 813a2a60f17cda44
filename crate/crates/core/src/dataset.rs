//! Dataset ingestion, normalization, and class-incremental scenario
//! synthesis.
//!
//! A [`Dataset`] is a normalized instance matrix with optional dense integer
//! labels. Scenarios simulate an open stream from an offline labeled dataset:
//! a seeded shuffle of the class ids is cut into an initial labeled part and
//! a sequence of per-period class sets; splitting yields one labeled initial
//! dataset plus unlabeled stream periods whose true labels ride along in a
//! side channel the engine never reads.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

/// Dense label id. Known classes get ids by first appearance; pseudo-labels
/// are allocated from a disjoint high range (see the continual module).
pub type LabelId = u32;

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

/// Fractions are quantized to thousandths so the floor/ceil schedule
/// arithmetic is exact in integers (0.3 * 10 must give 3 classes, which
/// naive f64 floor gets wrong).
const FRACTION_DENOM: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Matrix,
    labels: Option<Vec<LabelId>>,
    feature_names: Vec<String>,
    /// Original label strings, indexed by label id.
    label_names: Vec<String>,
}

impl Dataset {
    pub fn from_parts(
        instances: Matrix,
        labels: Option<Vec<LabelId>>,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if instances.is_empty() || instances.cols() == 0 {
            return Err(Error::EmptyDataset);
        }
        if let Some(ref ls) = labels {
            if ls.len() != instances.rows() {
                return Err(Error::DimensionMismatch {
                    expected: instances.rows(),
                    found: ls.len(),
                });
            }
        }
        if feature_names.len() != instances.cols() {
            return Err(Error::DimensionMismatch {
                expected: instances.cols(),
                found: feature_names.len(),
            });
        }
        Ok(Self {
            instances,
            labels,
            feature_names,
            label_names,
        })
    }

    pub fn n(&self) -> usize {
        self.instances.rows()
    }

    pub fn d(&self) -> usize {
        self.instances.cols()
    }

    pub fn instances(&self) -> &Matrix {
        &self.instances
    }

    pub fn labels(&self) -> Option<&[LabelId]> {
        self.labels.as_deref()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_name(&self, id: LabelId) -> String {
        self.label_names
            .get(id as usize)
            .cloned()
            .unwrap_or_else(|| id.to_string())
    }

    /// Distinct label ids present, ascending.
    pub fn class_ids(&self) -> BTreeSet<LabelId> {
        match &self.labels {
            Some(ls) => ls.iter().copied().collect(),
            None => BTreeSet::new(),
        }
    }

    /// New dataset with the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let instances = self.instances.select_rows(rows);
        let labels = self
            .labels
            .as_ref()
            .map(|ls| rows.iter().map(|&r| ls[r]).collect());
        Dataset::from_parts(
            instances,
            labels,
            self.feature_names.clone(),
            self.label_names.clone(),
        )
    }

    /// Same instances without labels.
    pub fn without_labels(&self) -> Dataset {
        Dataset {
            instances: self.instances.clone(),
            labels: None,
            feature_names: self.feature_names.clone(),
            label_names: self.label_names.clone(),
        }
    }
}

/// Selects the label column of a CSV file by header name or position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Parses a CLI-style selector: a non-negative integer is a position,
    /// anything else a header name.
    pub fn parse(s: &str) -> LabelColumn {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

/// Loads a CSV file with a header row. Feature cells must be numeric; the
/// label column (if any) holds arbitrary discrete values that are mapped to
/// dense integer ids in first-appearance order.
pub fn load_csv(path: &Path, label: Option<&LabelColumn>, delimiter: u8) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(file);

    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let arity = header.len();

    let label_idx = match label {
        None => None,
        Some(LabelColumn::Index(i)) => {
            if *i >= arity {
                return Err(Error::LabelColumnNotFound(i.to_string()));
            }
            Some(*i)
        }
        Some(LabelColumn::Name(name)) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::LabelColumnNotFound(name.clone()))?,
        ),
    };

    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut instances = Matrix::new(feature_names.len());
    let mut labels: Vec<LabelId> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut row_buf: Vec<f64> = Vec::with_capacity(feature_names.len());

    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != arity {
            return Err(Error::RaggedRow {
                row: row_no + 1,
                found: record.len(),
                expected: arity,
            });
        }
        row_buf.clear();
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_idx {
                let name = cell.trim().to_string();
                let id = match label_names.iter().position(|n| *n == name) {
                    Some(i) => i as LabelId,
                    None => {
                        label_names.push(name);
                        (label_names.len() - 1) as LabelId
                    }
                };
                labels.push(id);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumericCell {
                    row: row_no + 1,
                    column: header[col].clone(),
                    value: cell.to_string(),
                })?;
                row_buf.push(v);
            }
        }
        instances.push_row(&row_buf);
    }

    if instances.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let labels = if label_idx.is_some() { Some(labels) } else { None };
    Dataset::from_parts(instances, labels, feature_names, label_names)
}

/// Rescales every feature column linearly to [0, 1]. Constant columns map
/// to 0. Idempotent bit-exactly on already-normalized data.
pub fn minmax_normalize(data: &Dataset) -> Dataset {
    let n = data.n();
    let d = data.d();
    let m = data.instances();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for row in m.iter_rows() {
        for (j, &v) in row.iter().enumerate() {
            if v < mins[j] {
                mins[j] = v;
            }
            if v > maxs[j] {
                maxs[j] = v;
            }
        }
    }
    let mut out = Matrix::with_capacity(d, n);
    let mut buf = vec![0.0; d];
    for row in m.iter_rows() {
        for j in 0..d {
            let range = maxs[j] - mins[j];
            buf[j] = if range > 0.0 {
                (row[j] - mins[j]) / range
            } else {
                0.0
            };
        }
        out.push_row(&buf);
    }
    Dataset {
        instances: out,
        labels: data.labels.clone(),
        feature_names: data.feature_names.clone(),
        label_names: data.label_names.clone(),
    }
}

/// Which classes are known initially and which arrive in each stream period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSchedule {
    pub version: u32,
    /// Class ids in presentation order (initial classes first).
    pub class_order: Vec<LabelId>,
    pub initial_classes: Vec<LabelId>,
    pub periods: Vec<Vec<LabelId>>,
    pub init_fraction: f64,
    pub inc_fraction: f64,
    pub seed: u64,
}

impl ScenarioSchedule {
    /// Initial class count followed by each period's class count.
    pub fn class_count_sequence(&self) -> Vec<usize> {
        let mut seq = vec![self.initial_classes.len()];
        seq.extend(self.periods.iter().map(|p| p.len()));
        seq
    }

    /// All classes the schedule mentions, ascending.
    pub fn all_classes(&self) -> BTreeSet<LabelId> {
        let mut set: BTreeSet<LabelId> = self.initial_classes.iter().copied().collect();
        for p in &self.periods {
            set.extend(p.iter().copied());
        }
        set
    }

    /// Checks pairwise disjointness and exact coverage of the dataset's
    /// class ids.
    pub fn validate_against(&self, data: &Dataset) -> Result<()> {
        let mut seen: BTreeSet<LabelId> = BTreeSet::new();
        let mut total = 0usize;
        for class in self
            .initial_classes
            .iter()
            .chain(self.periods.iter().flatten())
        {
            seen.insert(*class);
            total += 1;
        }
        if seen.len() != total {
            return Err(Error::ScenarioMismatch(
                "class sets are not pairwise disjoint".into(),
            ));
        }
        if seen != data.class_ids() {
            return Err(Error::ScenarioMismatch(
                "schedule classes do not match the dataset's class ids".into(),
            ));
        }
        Ok(())
    }
}

fn quantize_fraction(f: f64, what: &str) -> Result<u64> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "{what} must lie in (0, 1), got {f}"
        )));
    }
    Ok((f * FRACTION_DENOM as f64).round() as u64)
}

fn schedule_from_order(
    order: Vec<LabelId>,
    init_fraction: f64,
    inc_fraction: f64,
    seed: u64,
) -> Result<ScenarioSchedule> {
    let l = order.len() as u64;
    let init_m = quantize_fraction(init_fraction, "init_fraction")?;
    let inc_m = quantize_fraction(inc_fraction, "inc_fraction")?;
    // floor for the initial share, ceil for the per-period share.
    let n_init = (init_m * l / FRACTION_DENOM) as usize;
    let per_period = ((inc_m * l).div_ceil(FRACTION_DENOM)) as usize;
    if n_init == 0 {
        return Err(Error::InvalidConfig(format!(
            "init_fraction {init_fraction} yields zero initial classes for {l} classes"
        )));
    }
    let initial_classes = order[..n_init].to_vec();
    let periods: Vec<Vec<LabelId>> = order[n_init..]
        .chunks(per_period.max(1))
        .map(|c| c.to_vec())
        .collect();
    Ok(ScenarioSchedule {
        version: SCENARIO_FORMAT_VERSION,
        class_order: order,
        initial_classes,
        periods,
        init_fraction,
        inc_fraction,
        seed,
    })
}

/// Builds a schedule from a seeded Fisher-Yates shuffle of the sorted class
/// ids: the first floor(init_fraction * L) classes are known initially, the
/// rest arrive in periods of ceil(inc_fraction * L) classes (the last period
/// may be smaller).
pub fn make_scenario(
    data: &Dataset,
    init_fraction: f64,
    inc_fraction: f64,
    seed: u64,
) -> Result<ScenarioSchedule> {
    if data.labels().is_none() {
        return Err(Error::UnlabeledDataset);
    }
    let mut order: Vec<LabelId> = data.class_ids().into_iter().collect();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut order);
    schedule_from_order(order, init_fraction, inc_fraction, seed)
}

/// Like [`make_scenario`] but keeps the classes in id order (ids are
/// assigned by first appearance, so this is the dataset's own order).
pub fn make_scenario_ordered(
    data: &Dataset,
    init_fraction: f64,
    inc_fraction: f64,
) -> Result<ScenarioSchedule> {
    if data.labels().is_none() {
        return Err(Error::UnlabeledDataset);
    }
    let order: Vec<LabelId> = data.class_ids().into_iter().collect();
    schedule_from_order(order, init_fraction, inc_fraction, 0)
}

/// One unlabeled stream period. `truth` carries the hidden per-row labels
/// for evaluation only; `data` has no labels, so the engine cannot read them.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamPeriod {
    pub data: Dataset,
    pub truth: Vec<LabelId>,
}

/// Partitions the dataset's rows by the schedule: a labeled initial dataset
/// plus one unlabeled period per schedule entry. Every source row appears in
/// exactly one output, in source order.
pub fn split_periods(
    data: &Dataset,
    schedule: &ScenarioSchedule,
) -> Result<(Dataset, Vec<StreamPeriod>)> {
    let labels = data.labels().ok_or(Error::UnlabeledDataset)?;
    schedule.validate_against(data)?;

    let initial_set: BTreeSet<LabelId> = schedule.initial_classes.iter().copied().collect();
    let initial_rows: Vec<usize> = (0..data.n())
        .filter(|&i| initial_set.contains(&labels[i]))
        .collect();
    let initial = data.subset(&initial_rows)?;

    let mut streams = Vec::with_capacity(schedule.periods.len());
    for period in &schedule.periods {
        let period_set: BTreeSet<LabelId> = period.iter().copied().collect();
        let rows: Vec<usize> = (0..data.n())
            .filter(|&i| period_set.contains(&labels[i]))
            .collect();
        let truth: Vec<LabelId> = rows.iter().map(|&i| labels[i]).collect();
        let labeled = data.subset(&rows)?;
        streams.push(StreamPeriod {
            data: labeled.without_labels(),
            truth,
        });
    }
    Ok((initial, streams))
}
