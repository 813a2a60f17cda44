//! Deterministic synthetic datasets for tests and benchmarks.
//!
//! [`table_shaped`] builds a labeled discrete-valued dataset in the mold of
//! the UCI attribute tables (boolean/ordinal features, duplicate rows within
//! a class) with a feature structure that makes feature selection
//! non-trivial:
//!
//! * classes come in sibling pairs whose centers differ only in one private
//!   dimension, so that dimension is necessary once both siblings are present;
//! * pair positions are spread by a distance-2 binary code over separator
//!   dimensions, so separators become necessary one by one as others are
//!   eliminated;
//! * instances perturb at most two dimensions of their class center by one
//!   grid step, so projecting away a class's separating dimensions makes its
//!   rows coincide with the other class's rows (and ball purity collapse);
//! * optional padding dimensions are exact duplicates of informative columns
//!   or constants, and stay redundant forever.
//!
//! All sampling is driven by [`SplitMix64`], so a given parameter set always
//! produces the same dataset.

use crate::dataset::{Dataset, LabelId};
use crate::matrix::Matrix;
use crate::rng::SplitMix64;

const BASE: f64 = 0.15;
const PRIVATE_OFFSET: f64 = 0.7;
const SEPARATOR_OFFSET: f64 = 0.65;
/// Grid step of the per-instance perturbations.
const GRID: f64 = 0.05;

/// Standard normal via Box-Muller.
fn gaussian(rng: &mut SplitMix64) -> f64 {
    let u1 = (rng.next_f64()).max(f64::MIN_POSITIVE);
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Class centers over `informative` dimensions for the pair construction.
fn class_centers(classes: usize, informative: usize) -> Vec<Vec<f64>> {
    let positions = classes.div_ceil(2);
    // Give every pair its own private dimension when there is room for the
    // separator code next to them; otherwise fall back to sharing private
    // dims at reduced heights.
    let needed_separators = if positions == 1 {
        0
    } else {
        (usize::BITS - (positions - 1).leading_zeros()) as usize + 1
    };
    let private_dims = if informative > needed_separators {
        positions.min(informative - needed_separators)
    } else {
        (informative / 2).max(1)
    }
    .min(informative);
    let separator_dims = informative - private_dims;
    let code_capacity = if separator_dims == 0 {
        1
    } else {
        1usize << (separator_dims - 1)
    };
    assert!(
        positions <= code_capacity,
        "not enough separator dimensions for {positions} pair positions"
    );

    let mut centers = Vec::with_capacity(classes);
    for c in 0..classes {
        let position = c / 2;
        let sibling = c % 2;
        let mut center = vec![BASE; informative];
        // Distance-2 code: position bits plus a parity bit.
        if separator_dims > 0 {
            let mut parity = 0usize;
            for s in 0..separator_dims - 1 {
                let bit = (position >> s) & 1;
                parity ^= bit;
                if bit == 1 {
                    center[private_dims + s] = BASE + SEPARATOR_OFFSET;
                }
            }
            if parity == 1 {
                center[private_dims + separator_dims - 1] = BASE + SEPARATOR_OFFSET;
            }
        }
        if sibling == 1 {
            // Siblings differ only in their pair's private dimension; pairs
            // beyond the private dims reuse them at a different height.
            let dim = position % private_dims;
            let step = 1 + position / private_dims;
            center[dim] = BASE + PRIVATE_OFFSET / step as f64;
        }
        centers.push(center);
    }
    centers
}

/// Labeled discrete dataset with `n` rows, `d` features, and `classes`
/// classes. The first `informative` features carry the class structure; the
/// rest alternate exact duplicates of informative columns and constants.
/// Each instance equals its class center with at most two dimensions nudged
/// by one grid step, so rows repeat within a class the way attribute-table
/// data does.
pub fn table_shaped(n: usize, d: usize, classes: usize, informative: usize, seed: u64) -> Dataset {
    assert!(classes >= 1 && n >= classes);
    let informative = informative.min(d).max(1);
    let centers = class_centers(classes, informative);

    // Flip noise only touches dimensions where class centers actually
    // differ; the rest stay exactly constant (min-max maps them to zero),
    // like the inert attributes of real tables.
    let live_dims: Vec<usize> = (0..informative)
        .filter(|&j| centers.iter().any(|c| c[j] != centers[0][j]))
        .collect();

    let mut rng = SplitMix64::new(seed);
    let mut instances = Matrix::with_capacity(d, n);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for i in 0..n {
        let class = i % classes;
        row[..informative].copy_from_slice(&centers[class]);
        let flips = match rng.next_f64() {
            r if r < 0.5 => 0,
            r if r < 0.85 => 1,
            _ => 2,
        };
        for _ in 0..flips.min(live_dims.len()) {
            let dim = live_dims[rng.next_below(live_dims.len())];
            let sign = if rng.next_below(2) == 0 { 1.0 } else { -1.0 };
            row[dim] = clamp01(centers[class][dim] + sign * GRID);
        }
        for j in informative..d {
            let pad = j - informative;
            row[j] = if pad.is_multiple_of(2) {
                row[pad / 2 % informative]
            } else {
                0.37
            };
        }
        instances.push_row(&row);
        labels.push(class as LabelId);
    }

    let feature_names = (0..d).map(|j| format!("f{j}")).collect();
    let label_names = (0..classes).map(|c| format!("c{c}")).collect();
    Dataset::from_parts(instances, Some(labels), feature_names, label_names).unwrap()
}

/// A single Gaussian blob around `center`.
pub fn gaussian_matrix(n: usize, center: &[f64], sigma: f64, seed: u64) -> Matrix {
    let mut rng = SplitMix64::new(seed);
    let mut m = Matrix::with_capacity(center.len(), n);
    let mut row = vec![0.0; center.len()];
    for _ in 0..n {
        for (j, &c) in center.iter().enumerate() {
            row[j] = c + sigma * gaussian(&mut rng);
        }
        m.push_row(&row);
    }
    m
}

/// Uniform-random features with round-robin labels; no structure at all.
pub fn random_labeled(n: usize, d: usize, classes: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let mut instances = Matrix::with_capacity(d, n);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for i in 0..n {
        for v in row.iter_mut() {
            *v = rng.next_f64();
        }
        instances.push_row(&row);
        labels.push((i % classes) as LabelId);
    }
    let feature_names = (0..d).map(|j| format!("f{j}")).collect();
    let label_names = (0..classes).map(|c| format!("c{c}")).collect();
    Dataset::from_parts(instances, Some(labels), feature_names, label_names).unwrap()
}

/// Random discrete features on an even grid with random labels. Coincident
/// rows across classes appear by construction, so positive-region coverage
/// genuinely varies between feature subsets.
pub fn random_discrete(
    n: usize,
    d: usize,
    classes: usize,
    levels: usize,
    seed: u64,
) -> Dataset {
    assert!(levels >= 2);
    let mut rng = SplitMix64::new(seed);
    let mut instances = Matrix::with_capacity(d, n);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = rng.next_below(levels) as f64 / (levels - 1) as f64;
        }
        instances.push_row(&row);
        labels.push(rng.next_below(classes) as LabelId);
    }
    let feature_names = (0..d).map(|j| format!("f{j}")).collect();
    let label_names = (0..classes).map(|c| format!("c{c}")).collect();
    Dataset::from_parts(instances, Some(labels), feature_names, label_names).unwrap()
}

/// Renders a dataset as CSV with a trailing label column (omitted when the
/// dataset is unlabeled). Floats use Rust's shortest round-trip formatting.
pub fn to_csv(data: &Dataset, label_col: &str) -> String {
    let mut out = String::new();
    out.push_str(&data.feature_names().join(","));
    if data.labels().is_some() {
        out.push(',');
        out.push_str(label_col);
    }
    out.push('\n');
    for (i, row) in data.instances().iter_rows().enumerate() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&v.to_string());
            first = false;
        }
        if let Some(labels) = data.labels() {
            out.push(',');
            out.push_str(&data.label_name(labels[i]));
        }
        out.push('\n');
    }
    out
}
