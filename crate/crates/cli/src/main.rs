//! Command-line front end for granular-ball continual feature selection.
//!
//! Subcommands: `scenario` (split a labeled CSV into an open-world class
//! stream), `init` (build the initial knowledge base), `step` (process one
//! stream period), `eval` (ten-fold k-NN comparison of the selected subset
//! against all features), `bench` (continual vs from-scratch timing), and
//! `sweep` (replay the purity grid and report the envelope).
//!
//! Exit codes: 0 ok, 2 usage error, 3 data error, 4 knowledge-base format
//! error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gbcfs::continual::{KnowledgeBase, PeriodReport};
use gbcfs::dataset::{
    load_csv, make_scenario, make_scenario_ordered, minmax_normalize, split_periods, Dataset,
    LabelColumn,
};
use gbcfs::eval::{bench_continual_vs_scratch, stratified_tenfold, BenchParams, CvResult};
use gbcfs::rough_set::FeatureSubset;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_KB_FORMAT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "gbcfs",
    about = "Open-world continual feature selection on granular-ball neighborhood rough sets",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Input CSV (UTF-8, first row header).
    #[arg(long)]
    data: PathBuf,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    label_col: Option<String>,
    /// CSV field delimiter.
    #[arg(long, default_value = ",", env = "GBCFS_DELIMITER")]
    delimiter: char,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, gbcfs::Error> {
        if !self.delimiter.is_ascii() {
            return Err(gbcfs::Error::InvalidConfig(format!(
                "--delimiter must be a single ASCII character, got {:?}",
                self.delimiter
            )));
        }
        let label = self.label_col.as_deref().map(LabelColumn::parse);
        load_csv(&self.data, label.as_ref(), self.delimiter as u8)
    }
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Granular-ball purity threshold in (0.5, 1].
    #[arg(long, default_value_t = 0.65, env = "GBCFS_PURITY")]
    purity: f64,
    /// DBSCAN neighborhood radius.
    #[arg(long, default_value_t = 0.3, env = "GBCFS_EPS")]
    eps: f64,
    /// DBSCAN minimum core neighborhood size (the point itself counts).
    #[arg(long, default_value_t = 10, env = "GBCFS_MIN_PTS")]
    min_pts: usize,
    /// Seed for ball generation and class shuffles.
    #[arg(long, default_value_t = 0, env = "GBCFS_SEED")]
    seed: u64,
}

impl EngineArgs {
    fn validate(&self) -> Result<(), String> {
        if !(self.purity > 0.5 && self.purity <= 1.0) {
            return Err(format!(
                "--purity must lie in (0.5, 1], got {}",
                self.purity
            ));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(format!("--eps must be positive, got {}", self.eps));
        }
        if self.min_pts == 0 {
            return Err("--min-pts must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split a labeled dataset into an initial part plus per-period CSVs.
    Scenario {
        #[command(flatten)]
        data: DataArgs,
        /// Fraction of classes known initially (floor rounding).
        #[arg(long)]
        init: f64,
        /// Fraction of classes arriving per period (ceil rounding).
        #[arg(long)]
        inc: f64,
        #[arg(long, default_value_t = 0, env = "GBCFS_SEED")]
        seed: u64,
        /// Keep classes in dataset order instead of shuffling by seed.
        #[arg(long)]
        keep_class_order: bool,
        /// Output directory for schedule.json, initial.csv, period_NN.csv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build the initial knowledge base from labeled data.
    Init {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Min-max normalize before building (scenario output is already
        /// normalized; use this for raw standalone data).
        #[arg(long)]
        normalize: bool,
        /// Knowledge-base output path.
        #[arg(long)]
        out: PathBuf,
        /// Where to write the selection audit trail (JSON).
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Process one unlabeled stream period against a knowledge base.
    Step {
        #[command(flatten)]
        data: DataArgs,
        /// Knowledge-base file, rewritten atomically on success.
        #[arg(long)]
        kb: PathBuf,
        #[arg(long, default_value_t = 0.3, env = "GBCFS_EPS")]
        eps: f64,
        #[arg(long, default_value_t = 10, env = "GBCFS_MIN_PTS")]
        min_pts: usize,
        /// Append the period report to this JSON-lines file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Ten-fold k-NN comparison: selected subset vs all features.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        kb: PathBuf,
        /// Neighbor count (odd).
        #[arg(long, default_value_t = 3, env = "GBCFS_K")]
        k: usize,
        #[arg(long, default_value_t = 0, env = "GBCFS_SEED")]
        seed: u64,
        /// Skip min-max normalization of the input.
        #[arg(long)]
        no_normalize: bool,
        /// Also write the results as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Continual vs from-scratch wall-time comparison on a replayed stream.
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        init: f64,
        #[arg(long)]
        inc: f64,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Write per-period times as CSV for external plotting.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the results as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Replay the purity grid 0.65..1.0 and report the accuracy envelope.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        init: f64,
        #[arg(long)]
        inc: f64,
        #[arg(long, default_value_t = 3, env = "GBCFS_K")]
        k: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = err.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<gbcfs::Error>() {
        Some(e) if e.is_kb_format() => EXIT_KB_FORMAT,
        Some(e) if e.is_usage() => EXIT_USAGE,
        Some(_) => EXIT_DATA,
        None => EXIT_USAGE,
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Scenario {
            data,
            init,
            inc,
            seed,
            keep_class_order,
            out_dir,
        } => cmd_scenario(data, init, inc, seed, keep_class_order, out_dir),
        Command::Init {
            data,
            engine,
            normalize,
            out,
            audit,
        } => cmd_init(data, engine, normalize, out, audit),
        Command::Step {
            data,
            kb,
            eps,
            min_pts,
            report,
        } => cmd_step(data, kb, eps, min_pts, report),
        Command::Eval {
            data,
            kb,
            k,
            seed,
            no_normalize,
            json,
        } => cmd_eval(data, kb, k, seed, no_normalize, json),
        Command::Bench {
            data,
            engine,
            init,
            inc,
            repeats,
            csv,
            json,
        } => cmd_bench(data, engine, init, inc, repeats, csv, json),
        Command::Sweep {
            data,
            engine,
            init,
            inc,
            k,
        } => cmd_sweep(data, engine, init, inc, k),
    }
}

fn usage_error(msg: String) -> anyhow::Error {
    anyhow::Error::new(gbcfs::Error::InvalidConfig(msg))
}

/// Writes a stream-period CSV with the source header and original label
/// strings; floats use shortest round-trip formatting so reruns are
/// byte-identical.
fn write_period_csv(
    path: &Path,
    data: &Dataset,
    truth: Option<&[gbcfs::dataset::LabelId]>,
    label_header: &str,
) -> anyhow::Result<()> {
    let mut out = String::new();
    out.push_str(&data.feature_names().join(","));
    let labels = truth.or_else(|| data.labels());
    if labels.is_some() {
        out.push(',');
        out.push_str(label_header);
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
        if let Some(ls) = labels {
            out.push(',');
            out.push_str(&data.label_name(ls[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_scenario(
    data_args: DataArgs,
    init: f64,
    inc: f64,
    seed: u64,
    keep_class_order: bool,
    out_dir: PathBuf,
) -> anyhow::Result<()> {
    if data_args.label_col.is_none() {
        return Err(usage_error("scenario requires --label-col".into()));
    }
    let raw = data_args.load()?;
    let data = minmax_normalize(&raw);
    let schedule = if keep_class_order {
        make_scenario_ordered(&data, init, inc)?
    } else {
        make_scenario(&data, init, inc, seed)?
    };
    let (initial, streams) = split_periods(&data, &schedule)?;

    std::fs::create_dir_all(&out_dir)?;
    let schedule_path = out_dir.join("schedule.json");
    std::fs::write(&schedule_path, serde_json::to_string_pretty(&schedule)?)?;

    let label_header = data_args.label_col.as_deref().unwrap_or("label");
    write_period_csv(&out_dir.join("initial.csv"), &initial, None, label_header)?;
    for (i, period) in streams.iter().enumerate() {
        write_period_csv(
            &out_dir.join(format!("period_{:02}.csv", i + 1)),
            &period.data,
            Some(&period.truth),
            label_header,
        )?;
    }

    println!(
        "scenario: {} classes -> initial {:?} + {} periods",
        data.class_ids().len(),
        schedule.initial_classes,
        schedule.periods.len()
    );
    for (i, p) in schedule.periods.iter().enumerate() {
        println!("  period {:02}: classes {:?}", i + 1, p);
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn cmd_init(
    data_args: DataArgs,
    engine: EngineArgs,
    normalize: bool,
    out: PathBuf,
    audit_path: Option<PathBuf>,
) -> anyhow::Result<()> {
    engine.validate().map_err(usage_error)?;
    if data_args.label_col.is_none() {
        return Err(usage_error("init requires --label-col".into()));
    }
    let mut data = data_args.load()?;
    if normalize {
        data = minmax_normalize(&data);
    }
    let (kb, audit) = KnowledgeBase::build(&data, engine.purity, engine.seed)?;
    kb.save(&out)?;
    if let Some(path) = &audit_path {
        std::fs::write(path, serde_json::to_string_pretty(&audit)?)?;
    }

    let names: Vec<&str> = kb
        .selected()
        .indices()
        .iter()
        .map(|&f| data.feature_names()[f].as_str())
        .collect();
    println!(
        "knowledge base: {} balls over {} instances, {} known classes",
        kb.balls().len(),
        kb.store().rows(),
        kb.known_labels().len()
    );
    println!(
        "selected subset ({} of {}): {:?} = {:?}",
        kb.selected().len(),
        data.d(),
        kb.selected().indices(),
        names
    );
    println!("wrote {}", out.display());
    if let Some(path) = audit_path {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_step(
    data_args: DataArgs,
    kb_path: PathBuf,
    eps: f64,
    min_pts: usize,
    report_path: Option<PathBuf>,
) -> anyhow::Result<()> {
    let kb_loaded = KnowledgeBase::load(&kb_path)?;
    let batch = data_args.load()?;

    let mut kb = kb_loaded;
    let report = kb.process_period(&batch, eps, min_pts)?;
    kb.save(&kb_path)?;

    if let Some(path) = &report_path {
        let mut line = serde_json::to_string(&report)?;
        line.push('\n');
        use std::io::Write;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        file.write_all(line.as_bytes())?;
    }

    print_report(&report);
    println!("rewrote {}", kb_path.display());
    Ok(())
}

fn print_report(report: &PeriodReport) {
    println!(
        "period {}: {} known, {} unknown ({} noise buffered), {} new pseudo-labels",
        report.period_index,
        report.known_count,
        report.unknown_count,
        report.noise_count,
        report.new_pseudo_labels.len()
    );
    if report.added_features.is_empty() {
        println!("subset unchanged: {:?}", report.subset_after);
    } else {
        println!(
            "subset grew by {:?} -> {:?}",
            report.added_features, report.subset_after
        );
    }
    println!(
        "timings: identify {:.1} ms, cluster {:.1} ms, granulate {:.1} ms, enhance {:.1} ms",
        report.timings.identify_ms,
        report.timings.cluster_ms,
        report.timings.granulate_ms,
        report.timings.enhance_ms
    );
}

fn print_cv_table(rows: &[(&str, &CvResult)]) {
    println!(
        "{:<14} {:>8} {:>18} {:>10}",
        "features", "count", "accuracy", "macro-F1"
    );
    for (name, cv) in rows {
        println!(
            "{:<14} {:>8} {:>10.2} ± {:>5.2} {:>10.2}",
            name,
            cv.subset_used.len(),
            cv.mean_accuracy * 100.0,
            cv.std_accuracy * 100.0,
            cv.macro_f1_mean * 100.0
        );
    }
}

fn cmd_eval(
    data_args: DataArgs,
    kb_path: PathBuf,
    k: usize,
    seed: u64,
    no_normalize: bool,
    json: Option<PathBuf>,
) -> anyhow::Result<()> {
    if data_args.label_col.is_none() {
        return Err(usage_error("eval requires --label-col".into()));
    }
    let kb = KnowledgeBase::load(&kb_path)?;
    let mut data = data_args.load()?;
    if !no_normalize {
        data = minmax_normalize(&data);
    }
    if data.d() != kb.d() {
        return Err(gbcfs::Error::DimensionMismatch {
            expected: kb.d(),
            found: data.d(),
        }
        .into());
    }

    let selected_cv = stratified_tenfold(&data, kb.selected(), k, seed)?;
    let all_cv = stratified_tenfold(&data, &FeatureSubset::full(data.d()), k, seed)?;
    print_cv_table(&[("selected", &selected_cv), ("all-features", &all_cv)]);

    if let Some(path) = json {
        let payload = serde_json::json!({
            "selected": selected_cv,
            "all_features": all_cv,
        });
        std::fs::write(&path, serde_json::to_string_pretty(&payload)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_bench(
    data_args: DataArgs,
    engine: EngineArgs,
    init: f64,
    inc: f64,
    repeats: usize,
    csv: Option<PathBuf>,
    json: Option<PathBuf>,
) -> anyhow::Result<()> {
    engine.validate().map_err(usage_error)?;
    if data_args.label_col.is_none() {
        return Err(usage_error("bench requires --label-col".into()));
    }
    let data = minmax_normalize(&data_args.load()?);
    let schedule = make_scenario(&data, init, inc, engine.seed)?;
    let params = BenchParams {
        purity_threshold: engine.purity,
        eps: engine.eps,
        min_pts: engine.min_pts,
        seed: engine.seed,
        repeats,
    };
    let result = bench_continual_vs_scratch(&data, &schedule, &params)?;

    println!(
        "{:<10} {:>14} {:>14}",
        "entry", "continual(ms)", "scratch(ms)"
    );
    for (i, (c, s)) in result
        .per_period_continual_ms
        .iter()
        .zip(&result.per_period_scratch_ms)
        .enumerate()
    {
        let name = if i == 0 {
            "initial".to_string()
        } else {
            format!("period {i:02}")
        };
        println!("{name:<10} {c:>14.1} {s:>14.1}");
    }
    println!(
        "cumulative speedup: {:.2}x (median of {} repeats)",
        result.cumulative_speedup, result.repeats
    );

    if let Some(path) = csv {
        let mut out = String::from("entry,continual_ms,scratch_ms\n");
        for (i, (c, s)) in result
            .per_period_continual_ms
            .iter()
            .zip(&result.per_period_scratch_ms)
            .enumerate()
        {
            out.push_str(&format!("{i},{c},{s}\n"));
        }
        std::fs::write(&path, out)?;
        println!("wrote {}", path.display());
    }
    if let Some(path) = json {
        std::fs::write(&path, serde_json::to_string_pretty(&result)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(
    data_args: DataArgs,
    engine: EngineArgs,
    init: f64,
    inc: f64,
    k: usize,
) -> anyhow::Result<()> {
    if data_args.label_col.is_none() {
        return Err(usage_error("sweep requires --label-col".into()));
    }
    let data = minmax_normalize(&data_args.load()?);
    let schedule = make_scenario(&data, init, inc, engine.seed)?;
    let (initial, streams) = split_periods(&data, &schedule)?;

    println!(
        "{:<8} {:>8} {:>18} {:>10}",
        "purity", "subset", "accuracy", "macro-F1"
    );
    let mut best: Option<(f64, CvResult)> = None;
    for purity in [0.65, 0.75, 0.85, 0.95, 1.0] {
        let (mut kb, _) = KnowledgeBase::build(&initial, purity, engine.seed)?;
        for period in &streams {
            kb.process_period(&period.data, engine.eps, engine.min_pts)?;
        }
        let cv = stratified_tenfold(&data, kb.selected(), k, engine.seed)?;
        println!(
            "{:<8.2} {:>8} {:>10.2} ± {:>5.2} {:>10.2}",
            purity,
            cv.subset_used.len(),
            cv.mean_accuracy * 100.0,
            cv.std_accuracy * 100.0,
            cv.macro_f1_mean * 100.0
        );
        let better = match &best {
            None => true,
            Some((_, b)) => cv.mean_accuracy > b.mean_accuracy,
        };
        if better {
            best = Some((purity, cv));
        }
    }
    let (purity, cv) = best.expect("non-empty grid");
    println!(
        "envelope: purity {:.2}, subset {:?}, accuracy {:.2} ± {:.2}",
        purity,
        cv.subset_used,
        cv.mean_accuracy * 100.0,
        cv.std_accuracy * 100.0
    );
    Ok(())
}
