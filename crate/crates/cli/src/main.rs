//! `ppgcnn`: preprocess subjects, train and evaluate models, check gradients
//! and run configuration grids.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use manifest::RunManifest;
use ppgcnn::dataset::{load_subject, split_40_60, write_subject};
use ppgcnn::dsp::preprocess_pipeline;
use ppgcnn::experiment::{build_frames, load_subjects, parse_subjects, run_on_records, subject_dir};
use ppgcnn::metrics::{evaluate, parse_rows, run_grid};
use ppgcnn::train::{gradcheck, toy_config};
use ppgcnn::{ClassMode, Error, ExperimentConfig, Network};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "ppgcnn", version, about = "Adaptive 1D CNN stress classification from wrist PPG")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Root holding one directory per subject (S2, S3, ...).
    #[arg(long, env = "PPGCNN_DATA")]
    data: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Condition one subject's PPG and write it as a subject directory.
    Preprocess {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        subject: u32,
        /// Only normalize; skip moving average and band-pass.
        #[arg(long)]
        no_filter: bool,
        /// Extra KEY=VAL settings (ma_window, order, band, atten_db, fs).
        #[arg(long = "config", value_name = "KEY=VAL")]
        config: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Train on the 40% split and score the 60% split.
    Train {
        #[command(flatten)]
        data: DataArgs,
        /// `all`, or ids and ranges such as `2` or `8,15` or `2-6`.
        #[arg(long)]
        subjects: String,
        #[arg(long, default_value = "2")]
        classes: String,
        #[arg(long = "config", value_name = "KEY=VAL")]
        config: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Score a saved model on the test split of the given subjects.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        /// Defaults to the subjects the model was trained on.
        #[arg(long)]
        subjects: Option<String>,
        /// Expected class count; must match the model.
        #[arg(long)]
        classes: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare analytic and finite-difference gradients on toy networks.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every row of a rows file and print the results table.
    Grid {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        rows: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(Exit(code, _)) = cause.downcast_ref::<Exit>() {
            return *code;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return if err.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE };
        }
    }
    EXIT_USAGE
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Preprocess {
            data,
            subject,
            no_filter,
            config,
            out,
        } => cmd_preprocess(&data.data, subject, no_filter, &config, &out),
        Command::Train {
            data,
            subjects,
            classes,
            config,
            seed,
            out,
        } => cmd_train(&data.data, &subjects, &classes, &config, seed, &out),
        Command::Evaluate {
            data,
            model,
            subjects,
            classes,
            out,
        } => cmd_evaluate(&data.data, &model, subjects.as_deref(), classes.as_deref(), &out),
        Command::Gradcheck { seed, tolerance, out } => cmd_gradcheck(seed, tolerance, &out),
        Command::Grid { data, rows, out } => cmd_grid(&data.data, &rows, &out),
    }
}

fn create_out(out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn apply_all(cfg: &mut ExperimentConfig, assignments: &[String]) -> anyhow::Result<()> {
    for a in assignments {
        cfg.apply(a)?;
    }
    Ok(())
}

fn cmd_preprocess(data: &Path, subject: u32, no_filter: bool, config: &[String], out: &Path) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::default();
    apply_all(&mut cfg, config)?;
    if no_filter {
        cfg.preprocess.filtered = false;
    }
    let dir = subject_dir(data, subject);
    let record = load_subject(&dir)?;
    let conditioned = preprocess_pipeline(&record, &cfg.preprocess)?;
    create_out(out)?;
    let target = out.join(format!("S{subject}"));
    write_subject(&target, &conditioned)?;

    let keep = ["filtered", "ma_window", "order", "band", "atten_db", "fs"];
    let mut m = RunManifest::new("preprocess").with_config(
        cfg.to_pairs()
            .into_iter()
            .filter(|(k, _)| keep.contains(&k.as_str()))
            .collect(),
    );
    m.config.insert("subject".into(), subject.to_string());
    m.input(&dir);
    m.output(&target);
    m.write(out)?;
    println!(
        "subject {subject}: {} samples conditioned ({}) -> {}",
        conditioned.ppg.len(),
        if cfg.preprocess.filtered { "filtered" } else { "normalized only" },
        target.display()
    );
    Ok(())
}

fn cmd_train(
    data: &Path,
    subjects: &str,
    classes: &str,
    config: &[String],
    seed: Option<u64>,
    out: &Path,
) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig {
        classes: classes.parse()?,
        ..ExperimentConfig::default()
    };
    apply_all(&mut cfg, config)?;
    cfg.subjects = parse_subjects(subjects)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let records = load_subjects(data, &cfg.subjects)?;
    create_out(out)?;
    let mut m = RunManifest::new("train").with_config(cfg.to_pairs());
    m.seeds.insert("init".into(), cfg.seed);
    m.seeds.insert("shuffle".into(), cfg.train_config().shuffle_seed);
    for &id in &cfg.subjects {
        m.input(&subject_dir(data, id));
    }
    let outcome = match run_on_records(&records, &cfg) {
        Ok(o) => o,
        Err(e) => {
            m.status = format!("failed: {e}");
            m.write(out)?;
            return Err(e.into());
        }
    };
    let model_path = out.join("model.txt");
    let report_path = out.join("report.tsv");
    write(&model_path, &outcome.model_text(&cfg))?;
    write(&report_path, &outcome.report.to_text())?;
    m.output(&model_path);
    m.output(&report_path);
    m.write(out)?;

    let r = &outcome.report;
    println!(
        "frames train={} test={}  epochs={} stop={}",
        outcome.n_train,
        outcome.n_test,
        r.epochs.len(),
        r.stop_reason
    );
    println!(
        "train accuracy {:.4}  test accuracy {:.4}",
        r.train_accuracy(),
        r.test_accuracy()
    );
    print!("{}", r.test_confusion.render(&cfg.class_map()));
    Ok(())
}

fn cmd_evaluate(
    data: &Path,
    model: &Path,
    subjects: Option<&str>,
    classes: Option<&str>,
    out: &Path,
) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    let (network, meta) = Network::from_model_text(&text)?;
    let mut cfg = ExperimentConfig::from_pairs(meta.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    if let Some(s) = subjects {
        cfg.subjects = parse_subjects(s)?;
    }
    if let Some(c) = classes {
        let mode: ClassMode = c.parse()?;
        if mode != cfg.classes {
            bail!(Exit(
                EXIT_USAGE,
                format!(
                    "model has {} outputs but {} classes were requested",
                    network.n_classes(),
                    mode.n_classes()
                )
            ));
        }
    }
    if network.n_classes() != cfg.classes.n_classes() {
        bail!(Exit(
            EXIT_USAGE,
            format!(
                "model has {} outputs but its metadata says {} classes",
                network.n_classes(),
                cfg.classes.n_classes()
            )
        ));
    }
    let records = load_subjects(data, &cfg.subjects)?;
    let frames = build_frames(&records, &cfg)?;
    let split = split_40_60(&frames)?;
    let cm = evaluate(&network, &split.test)?;

    create_out(out)?;
    let path = out.join("evaluation.txt");
    let rendered = cm.render(&cfg.class_map());
    write(&path, &format!("{rendered}# confusion={}\n", cm.to_compact()))?;
    let mut m = RunManifest::new("evaluate").with_config(cfg.to_pairs());
    m.input(model);
    for &id in &cfg.subjects {
        m.input(&subject_dir(data, id));
    }
    m.output(&path);
    m.write(out)?;
    print!("{rendered}");
    Ok(())
}

fn cmd_gradcheck(seed: u64, tolerance: f64, out: &Path) -> anyhow::Result<()> {
    if tolerance.is_nan() || tolerance < 0.0 {
        bail!(Exit(EXIT_USAGE, format!("tolerance must be >= 0, got {tolerance}")));
    }
    let mut lines = String::new();
    let mut failed = 0;
    for (n_conv, n_mlp) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        let cfg = toy_config(n_conv, n_mlp, seed);
        let report = gradcheck(&cfg, seed, tolerance)?;
        failed += usize::from(!report.passed);
        let line = format!("conv={n_conv} mlp={n_mlp} {}\n", report.summary());
        print!("{line}");
        lines.push_str(&line);
    }
    create_out(out)?;
    let path = out.join("gradcheck.txt");
    write(&path, &lines)?;
    let mut m = RunManifest::new("gradcheck");
    m.config.insert("tolerance".into(), format!("{tolerance:e}"));
    m.seeds.insert("seed".into(), seed);
    m.output(&path);
    if failed > 0 {
        m.status = format!("{failed} network(s) above tolerance");
    }
    m.write(out)?;
    if failed > 0 {
        bail!(Exit(EXIT_NUMERICAL, format!("{failed} of 4 gradient checks failed")));
    }
    Ok(())
}

fn cmd_grid(data: &Path, rows: &Path, out: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(rows).with_context(|| format!("reading {}", rows.display()))?;
    let templates = parse_rows(&text)?;
    let report = run_grid(data, &templates);
    create_out(out)?;
    let table = report.to_table();
    let table_path = out.join("grid.txt");
    let tsv_path = out.join("grid.tsv");
    write(&table_path, &table)?;
    write(&tsv_path, &report.to_tsv())?;
    let mut m = RunManifest::new("grid");
    for (i, t) in templates.iter().enumerate() {
        for (k, v) in t.config.to_pairs() {
            m.config.insert(format!("row{:02}.{k}", i + 1), v);
        }
    }
    m.input(rows);
    m.input(data);
    m.output(&table_path);
    m.output(&tsv_path);
    let failed = report.n_failed();
    if failed > 0 {
        m.status = format!("{failed} row(s) failed");
    }
    m.write(out)?;
    print!("{table}");
    if failed > 0 {
        bail!(Exit(EXIT_USAGE, format!("{failed} of {} rows failed", templates.len())));
    }
    Ok(())
}
