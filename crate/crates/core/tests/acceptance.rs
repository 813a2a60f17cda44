//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS line with the measured numbers. Run with
//! `cargo test --test acceptance -- --nocapture` to see them.
//!
//! Dataset shapes mirror the usual UCI benchmarks (rows x features x
//! classes): zoo 101x16x7, glass 214x9x7, derm 366x34x6, letter 20000x15x16.
//! The contents are synthesized deterministically; every check here is
//! relative or property-based, so it does not depend on the original files.

use std::time::Instant;

use gbcfs::ball::generate_balls;
use gbcfs::continual::{Identification, KnowledgeBase};
use gbcfs::dataset::{
    make_scenario, minmax_normalize, split_periods, Dataset, LabelId,
};
use gbcfs::eval::{bench_continual_vs_scratch, stratified_tenfold, unknown_detection_metrics, BenchParams};
use gbcfs::matrix::Matrix;
use gbcfs::rough_set::{select_features_initial, FeatureSubset};
use gbcfs::synth;

const PURITY_SWEEP: [f64; 5] = [0.65, 0.75, 0.85, 0.95, 1.0];
const EPS: f64 = 0.3;
const MIN_PTS: usize = 10;
const KNN_K: usize = 3;

fn zoo_shaped() -> Dataset {
    minmax_normalize(&synth::table_shaped(101, 16, 7, 11, 42))
}

fn glass_shaped() -> Dataset {
    minmax_normalize(&synth::table_shaped(214, 9, 7, 9, 43))
}

fn derm_shaped() -> Dataset {
    minmax_normalize(&synth::table_shaped(366, 34, 6, 12, 44))
}

fn letter_shaped() -> Dataset {
    minmax_normalize(&synth::table_shaped(20000, 15, 16, 15, 42))
}

/// Criterion 1: a 7-class dataset with (init 0.30, inc 0.10) yields 2
/// initial classes and five 1-class periods, i.e. the class-count sequence
/// (2, 1, 1, 1, 1, 1) exhausting all 7 classes.
#[test]
fn criterion_1_scenario_fidelity() {
    let start = Instant::now();
    let data = zoo_shaped();
    let schedule = make_scenario(&data, 0.30, 0.10, 7).unwrap();
    assert_eq!(schedule.class_count_sequence(), vec![2, 1, 1, 1, 1, 1]);
    assert_eq!(
        schedule.class_count_sequence().iter().sum::<usize>(),
        data.class_ids().len()
    );
    let (initial, streams) = split_periods(&data, &schedule).unwrap();
    assert_eq!(
        initial.n() + streams.iter().map(|s| s.data.n()).sum::<usize>(),
        101
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS criterion 1: scenario fidelity, sequence {:?} in {:.0} ms",
        schedule.class_count_sequence(),
        elapsed.as_secs_f64() * 1000.0
    );
}

fn run_scenario(
    data: &Dataset,
    purity: f64,
    scenario_seed: u64,
) -> (KnowledgeBase, Vec<Vec<usize>>) {
    let schedule = make_scenario(data, 0.30, 0.10, scenario_seed).unwrap();
    let (initial, streams) = split_periods(data, &schedule).unwrap();
    let (mut kb, _) = KnowledgeBase::build(&initial, purity, scenario_seed).unwrap();
    let mut subsets = vec![kb.selected().indices().to_vec()];
    for period in &streams {
        let report = kb.process_period(&period.data, EPS, MIN_PTS).unwrap();
        subsets.push(report.subset_after);
    }
    (kb, subsets)
}

/// Criterion 2: on the zoo/glass/derm shapes, ten-fold 3-NN accuracy with
/// the final continual subset stays within 5 points of the all-features
/// accuracy under the purity sweep envelope.
#[test]
fn criterion_2_subset_validity() {
    for (name, data, budget_s) in [
        ("zoo", zoo_shaped(), 120.0),
        ("glass", glass_shaped(), 120.0),
        ("derm", derm_shaped(), 120.0),
    ] {
        let start = Instant::now();
        let all_features = FeatureSubset::full(data.d());
        let all_cv = stratified_tenfold(&data, &all_features, KNN_K, 5).unwrap();

        let mut best_acc = f64::NEG_INFINITY;
        let mut best_subset = Vec::new();
        for purity in PURITY_SWEEP {
            let (kb, _) = run_scenario(&data, purity, 7);
            let cv = stratified_tenfold(&data, kb.selected(), KNN_K, 5).unwrap();
            if cv.mean_accuracy > best_acc {
                best_acc = cv.mean_accuracy;
                best_subset = kb.selected().indices().to_vec();
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        assert!(
            best_acc >= all_cv.mean_accuracy - 0.05,
            "{name}: subset envelope {best_acc:.4} vs all-features {:.4}",
            all_cv.mean_accuracy
        );
        assert!(elapsed < budget_s, "{name} took {elapsed:.1} s");
        println!(
            "PASS criterion 2 ({name}): subset {:?} acc {:.4} vs all-features {:.4} in {:.1} s",
            best_subset, best_acc, all_cv.mean_accuracy, elapsed
        );
    }
}

/// Criterion 3: the selected subset only ever grows across periods, for
/// every replayed scenario.
#[test]
fn criterion_3_subset_monotonicity() {
    let mut replays = 0;
    for (data, seeds) in [
        (zoo_shaped(), vec![1, 7, 13]),
        (glass_shaped(), vec![2, 9]),
        (derm_shaped(), vec![3, 11]),
    ] {
        for seed in seeds {
            for purity in [0.65, 1.0] {
                let (_, subsets) = run_scenario(&data, purity, seed);
                for w in subsets.windows(2) {
                    assert!(
                        w[0].iter().all(|f| w[1].contains(f)),
                        "subset shrank: {:?} -> {:?}",
                        w[0],
                        w[1]
                    );
                }
                replays += 1;
            }
        }
    }
    println!("PASS criterion 3: subset monotonicity held across {replays} replays");
}

/// Criterion 4: the two-feature motivating fixture. Dogs and birds are
/// separable by the mammal flag alone; the swan period forces swimming
/// ability into the subset, exactly.
#[test]
fn criterion_4_motivating_example() {
    // Columns: wing, jump, swimming_ability, mammal.
    let names: Vec<String> = ["wing", "jump", "swimming_ability", "mammal"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let dog = [1.0, 1.0, 1.0, 1.0];
    let bird = [0.0, 1.0, 0.0, 0.0];
    let swan = [0.0, 1.0, 1.0, 0.0];

    let mut initial_m = Matrix::new(4);
    for _ in 0..12 {
        initial_m.push_row(&dog);
    }
    for _ in 0..12 {
        initial_m.push_row(&bird);
    }
    let labels: Vec<LabelId> = [vec![0; 12], vec![1; 12]].concat();
    let initial = Dataset::from_parts(
        initial_m,
        Some(labels),
        names.clone(),
        vec!["dog".into(), "bird".into()],
    )
    .unwrap();

    let (mut kb, _) = KnowledgeBase::build(&initial, 0.65, 7).unwrap();
    let selected_names: Vec<&str> = kb
        .selected()
        .indices()
        .iter()
        .map(|&f| names[f].as_str())
        .collect();
    assert_eq!(selected_names, vec!["mammal"], "initial subset");

    let mut swan_m = Matrix::new(4);
    for _ in 0..12 {
        swan_m.push_row(&swan);
    }
    let batch = Dataset::from_parts(
        swan_m,
        None,
        names.clone(),
        vec![],
    )
    .unwrap();
    let report = kb.process_period(&batch, EPS, MIN_PTS).unwrap();
    assert_eq!(report.unknown_count, 12);
    assert_eq!(report.new_pseudo_labels.len(), 1);

    let after_names: Vec<&str> = kb
        .selected()
        .indices()
        .iter()
        .map(|&f| names[f].as_str())
        .collect();
    assert_eq!(
        after_names,
        vec!["swimming_ability", "mammal"],
        "subset after the swan period"
    );
    println!("PASS criterion 4: {{mammal}} -> {{mammal, swimming_ability}} exactly");
}

/// Criterion 5: on 20 randomized discrete fixtures (n <= 30, d <= 6), the
/// selected subset preserves the full-set positive-region coverage computed
/// by an exhaustive oracle over all 2^d - 1 subsets, and the audit trail is
/// sound (kept candidates strictly reduce coverage at decision time).
#[test]
fn criterion_5_reduct_oracle_equivalence() {
    // Independent oracle: coverage of a subspace = members of single-labeled
    // balls, counted directly.
    fn oracle_coverage(
        store: &Matrix,
        labels: &[LabelId],
        subset: &FeatureSubset,
        seed: u64,
    ) -> usize {
        let balls = generate_balls(store, labels, subset, 1.0, seed).unwrap();
        balls
            .iter()
            .filter(|b| {
                let first = labels[b.members[0]];
                b.members.iter().all(|&m| labels[m] == first)
            })
            .map(|b| b.members.len())
            .sum()
    }

    let mut fixtures = 0;
    for seed in 0..20u64 {
        let n = 12 + (seed as usize * 7) % 19; // 12..=30
        let d = 3 + (seed as usize) % 4; // 3..=6
        let classes = 2 + (seed as usize) % 2;
        let data = synth::random_discrete(n, d, classes, 3, 1000 + seed);
        let store = data.instances();
        let labels = data.labels().unwrap();

        let (selected, audit) = select_features_initial(store, labels, 1.0, seed).unwrap();

        // Exhaustive sweep over every non-empty subset.
        let full_coverage = oracle_coverage(store, labels, &FeatureSubset::full(d), seed);
        let mut oracle: Vec<(Vec<usize>, usize)> = Vec::new();
        for mask in 1u32..(1 << d) {
            let subset =
                FeatureSubset::new((0..d).filter(|&f| mask >> f & 1 == 1).collect());
            let cov = oracle_coverage(store, labels, &subset, seed);
            oracle.push((subset.indices().to_vec(), cov));
        }
        let selected_coverage = oracle
            .iter()
            .find(|(s, _)| s == selected.indices())
            .map(|(_, c)| *c)
            .unwrap();
        assert!(
            selected_coverage >= full_coverage,
            "seed {seed}: selected {:?} covers {selected_coverage} < full {full_coverage}",
            selected.indices()
        );

        for decision in &audit {
            if decision.removed {
                assert!(decision.trial.covered_instances >= decision.baseline.covered_instances);
            } else {
                assert!(
                    decision.trial.covered_instances < decision.baseline.covered_instances,
                    "seed {seed}: kept feature {} without a strict coverage drop",
                    decision.feature
                );
            }
        }
        fixtures += 1;
    }
    assert!(fixtures >= 20);
    println!("PASS criterion 5: reduct oracle equivalence on {fixtures} fixtures");
}

/// Criterion 6: a held-out Gaussian blob far from every ball is recalled as
/// unknown (recall >= 0.95) without flagging fresh known-class samples
/// (precision >= 0.90).
#[test]
fn criterion_6_unknown_detection() {
    let start = Instant::now();
    let centers = [vec![0.2, 0.2], vec![0.8, 0.2], vec![0.5, 0.8]];
    let sigma = 0.02;

    let mut m = Matrix::new(2);
    let mut labels: Vec<LabelId> = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        let blob = synth::gaussian_matrix(100, center, sigma, 10 + c as u64);
        for row in blob.iter_rows() {
            m.push_row(row);
            labels.push(c as LabelId);
        }
    }
    let initial = Dataset::from_parts(
        m,
        Some(labels),
        vec!["x".into(), "y".into()],
        vec![],
    )
    .unwrap();
    let (kb, _) = KnowledgeBase::build(&initial, 0.65, 7).unwrap();

    // Held-out blob center at >= 3x the maximum ball radius from every
    // ball center.
    let max_radius = kb
        .balls()
        .iter()
        .map(|b| b.radius)
        .fold(0.0f64, f64::max);
    let held_out_center = vec![2.0, 2.0];
    for ball in kb.balls() {
        assert!(ball.distance_to(&held_out_center) >= 3.0 * max_radius);
    }

    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        let fresh = synth::gaussian_matrix(50, center, sigma, 100 + c as u64);
        for row in fresh.iter_rows() {
            truth.push(false);
            predicted.push(matches!(kb.identify(row), Identification::Unknown));
        }
    }
    let blob = synth::gaussian_matrix(60, &held_out_center, sigma, 200);
    for row in blob.iter_rows() {
        truth.push(true);
        predicted.push(matches!(kb.identify(row), Identification::Unknown));
    }

    let (precision, recall, f1) = unknown_detection_metrics(&truth, &predicted).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(recall >= 0.95, "recall {recall:.3}");
    assert!(precision >= 0.90, "precision {precision:.3}");
    assert!(elapsed < 30.0);
    println!(
        "PASS criterion 6: unknown detection precision {precision:.3} recall {recall:.3} f1 {f1:.3} in {elapsed:.1} s"
    );
}

/// Criterion 7: on the letter shape replayed over 6 periods, cumulative
/// continual wall time is at most half the cumulative from-scratch time
/// (median of 5 repeats).
#[test]
fn criterion_7_speedup() {
    let start = Instant::now();
    let data = letter_shaped();
    let schedule = make_scenario(&data, 0.30, 0.10, 7).unwrap();
    assert!(schedule.periods.len() >= 6, "need >= 6 periods");

    let params = BenchParams {
        purity_threshold: 0.65,
        eps: EPS,
        min_pts: MIN_PTS,
        seed: 7,
        repeats: 5,
    };
    let result = bench_continual_vs_scratch(&data, &schedule, &params).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(result.continual_config_hash, result.scratch_config_hash);
    assert!(
        result.cumulative_speedup >= 2.0,
        "speedup {:.2}",
        result.cumulative_speedup
    );
    assert!(elapsed < 1800.0, "took {elapsed:.0} s");
    println!(
        "PASS criterion 7: cumulative speedup {:.2}x over {} periods (median of {} repeats) in {:.0} s",
        result.cumulative_speedup,
        schedule.periods.len(),
        result.repeats,
        elapsed
    );
}

/// Criterion 8: identical seeds give byte-identical KB files, and the
/// save/load round trip is field-exact.
#[test]
fn criterion_8_determinism_and_persistence() {
    let data = zoo_shaped();
    let dir = tempfile::tempdir().unwrap();

    let mut files = Vec::new();
    for run in 0..2 {
        let (kb, _) = run_scenario(&data, 0.65, 7);
        let path = dir.path().join(format!("kb{run}.json"));
        kb.save(&path).unwrap();
        files.push(std::fs::read(&path).unwrap());

        let loaded = KnowledgeBase::load(&path).unwrap();
        assert_eq!(kb, loaded, "save/load must be field-exact");
    }
    assert_eq!(files[0], files[1], "replays must serialize byte-identically");
    println!(
        "PASS criterion 8: byte-identical KB files ({} bytes) and field-exact round trip",
        files[0].len()
    );
}
