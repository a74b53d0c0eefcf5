//! The `memlab` command line: one subcommand per experiment, each writing its
//! artifacts (metrics CSV, checkpoint, resolved config, SVG curves) under `--out`.

mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use svg::{emit_svg, render_svg, Series, SvgPlot};

use crate::data::{assign_random_labels_with_classes, Dataset};
use crate::persist::{
    load_checkpoint, parse_config, read_metrics_csv, render_report_csv, save_checkpoint, write_metrics_csv, PersistError,
    RunConfig,
};
use crate::protocol::{
    baseline, compare_transfer, epochs_to_threshold, finetune, pretrain_relabeled, reshuffle_experiment_with_classes,
    MetricsLog, ProtocolError, Split, TrainRun, TransferReport,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

#[derive(Debug, Parser)]
#[command(name = "memlab", about = "Random-label memorization pre-training experiments", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Run configuration file (`key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the run's artifacts
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Memorize random labels on the source dataset
    Pretrain {
        #[command(flatten)]
        common: Common,
    },
    /// Train a pre-trained checkpoint on the target dataset with a fresh head
    Finetune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train on the target dataset from a random initialization
    Baseline {
        #[command(flatten)]
        common: Common,
    },
    /// Memorize successive independent random labelings with one network
    Reshuffle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rounds: Option<u32>,
        /// Train accuracy that counts as memorized
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Paired baseline vs pre-trained runs over several seeds
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seeds
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Draw the learning curves of a metrics CSV
    #[command(group = clap::ArgGroup::new("input").required(true).multiple(true).args(["config", "metrics"]))]
    Plot {
        /// Run configuration naming the CSV under `metrics`
        #[arg(long)]
        config: Option<PathBuf>,
        /// Metrics CSV to draw (overrides the config's `metrics` key)
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Directory receiving plot.svg (default: next to the CSV)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs one command. Returns 0 on success, 1 on a usage error and 2 when
/// the command itself fails.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let _ = write!(std::io::stderr(), "{}", e.render());
                    1
                }
            };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Pretrain { common } => {
            let (mut cfg, out) = setup(&common)?;
            let source = cfg.require_source()?.load()?;
            let labeled = random_labeled(&source, &cfg)?;
            cfg.arch = Some(cfg.resolve_arch(source.sample_shape()));
            let run = pretrain_relabeled(&labeled, cfg.arch.as_ref().expect("resolved"), &cfg.pretrain_config())?;
            write_run(&out, &cfg, &run)?;
            summarize("pretrain", &run.log);
        }
        Command::Finetune { common, checkpoint } => {
            let (cfg, out) = setup(&common)?;
            let (train_d, val_d) = cfg.require_target()?.load_split()?;
            let ckpt = load_checkpoint(&checkpoint)?;
            let run = finetune(&ckpt, &train_d, &val_d, &cfg.finetune_config())?;
            write_run(&out, &cfg, &run)?;
            summarize("finetune", &run.log);
        }
        Command::Baseline { common } => {
            let (mut cfg, out) = setup(&common)?;
            let (train_d, val_d) = cfg.require_target()?.load_split()?;
            cfg.arch = Some(cfg.resolve_arch(train_d.sample_shape()));
            // body drawn exactly as a pre-training run with the same config would draw it
            let body_seed = cfg.pretrain_config().seed;
            let run = baseline(cfg.arch.as_ref().expect("resolved"), &train_d, &val_d, &cfg.finetune_config(), body_seed)?;
            write_run(&out, &cfg, &run)?;
            summarize("baseline", &run.log);
        }
        Command::Reshuffle { common, rounds, threshold } => {
            let (mut cfg, out) = setup(&common)?;
            cfg.rounds = rounds.unwrap_or(cfg.rounds);
            cfg.threshold = threshold.unwrap_or(cfg.threshold);
            if cfg.rounds == 0 || !(cfg.threshold > 0.0 && cfg.threshold <= 1.0) {
                return Err(CliError::Invalid("--rounds must be positive and --threshold in (0, 1]".into()));
            }
            let source = cfg.require_source()?.load()?;
            cfg.arch = Some(cfg.resolve_arch(source.sample_shape()));
            let pre = cfg.pretrain_config();
            let classes = cfg.random_classes.unwrap_or(source.num_classes());
            let epochs = cfg.epochs_per_round.unwrap_or(pre.epochs);
            let run = reshuffle_experiment_with_classes(
                &source,
                cfg.arch.as_ref().expect("resolved"),
                &pre,
                cfg.rounds,
                epochs,
                cfg.label_seed,
                classes,
            )?;
            write_common(&out, &cfg, &run.log)?;
            save_checkpoint(&run.checkpoint, out.join("final.ckpt"))?;
            let mut table = String::from("round,start_accuracy,epochs_to_threshold\n");
            println!("round  start acc  epochs to {:.2}", cfg.threshold);
            for start in &run.round_starts {
                let reached = epochs_to_threshold(&run.log, start.round, cfg.threshold)?;
                let shown = reached.map_or("-".to_string(), |e| e.to_string());
                println!("{:>5}  {:>9.4}  {:>12}", start.round, start.accuracy, shown);
                table.push_str(&format!("{},{:.9},{}\n", start.round, start.accuracy, reached.map_or(String::new(), |e| e.to_string())));
            }
            write_file(&out.join("rounds.csv"), &table)?;
        }
        Command::Compare { common, seeds } => {
            let (mut cfg, out) = setup(&common)?;
            if let Some(s) = seeds {
                if s.is_empty() {
                    return Err(CliError::Invalid("--seeds needs at least one seed".into()));
                }
                cfg.seeds = Some(s);
            }
            let source = cfg.require_source()?.load()?;
            let (train_d, val_d) = cfg.require_target()?.load_split()?;
            let source = random_labeled(&source, &cfg)?;
            cfg.arch = Some(cfg.resolve_arch(source.sample_shape()));
            let report = compare_transfer(
                &source,
                &train_d,
                &val_d,
                cfg.arch.as_ref().expect("resolved"),
                &cfg.pretrain_config(),
                &cfg.finetune_config(),
                &cfg.seeds(),
                threads(),
            )?;
            write_file(&out.join("config.echo"), &cfg.echo())?;
            write_compare(&out, &report)?;
            print!("{}", report.table());
        }
        Command::Plot { config, metrics, out } => {
            let metrics = match (metrics, config) {
                (Some(m), _) => m,
                (None, Some(config)) => parse_config(&config)?.require_metrics()?.to_path_buf(),
                (None, None) => return Err(CliError::Invalid("plot needs --metrics or --config".into())),
            };
            let log = read_metrics_csv(&metrics)?;
            let target = match &out {
                Some(dir) => {
                    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                    dir.join("plot.svg")
                }
                None => metrics.with_file_name("plot.svg"),
            };
            emit_svg(&log, &target)?;
            println!("wrote {}", target.display());
        }
    }
    Ok(())
}

fn setup(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let cfg = parse_config(&common.config)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    Ok((cfg, out))
}

/// Source labels replaced by fixed random ones drawn from `label_seed`.
fn random_labeled(source: &Dataset, cfg: &RunConfig) -> Result<Dataset, CliError> {
    let classes = cfg.random_classes.unwrap_or(source.num_classes());
    Ok(assign_random_labels_with_classes(source, cfg.label_seed, classes)?)
}

/// Worker count: MEMLAB_THREADS if set, else the available cores.
fn threads() -> usize {
    std::env::var("MEMLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_common(out: &Path, cfg: &RunConfig, log: &MetricsLog) -> Result<(), CliError> {
    write_metrics_csv(log, out.join("metrics.csv"))?;
    write_file(&out.join("config.echo"), &cfg.echo())?;
    if !log.is_empty() {
        emit_svg(log, out.join("plot.svg"))?;
    }
    Ok(())
}

fn write_run(out: &Path, cfg: &RunConfig, run: &TrainRun) -> Result<(), CliError> {
    write_common(out, cfg, &run.log)?;
    save_checkpoint(&run.checkpoint, out.join("final.ckpt"))?;
    Ok(())
}

fn write_compare(out: &Path, report: &TransferReport) -> Result<(), CliError> {
    let mut plot = SvgPlot { title: "validation accuracy, baseline vs pre-trained".into(), ..Default::default() };
    for pair in &report.pairs {
        let dir = out.join(format!("seed-{}", pair.seed));
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        write_metrics_csv(&pair.baseline.log, dir.join("baseline.csv"))?;
        write_metrics_csv(&pair.pretraining.log, dir.join("pretrain.csv"))?;
        write_metrics_csv(&pair.pretrained.log, dir.join("finetune.csv"))?;
        for (name, log) in [("baseline", &pair.baseline.log), ("pre-trained", &pair.pretrained.log)] {
            let points: Vec<(f64, f64)> = log.split_records(1, Split::Val).map(|r| (r.epoch as f64, r.accuracy)).collect();
            plot.series.push(Series { label: format!("seed {} {name}", pair.seed), class: "val".into(), points });
        }
    }
    write_file(&out.join("report.csv"), &render_report_csv(report)?)?;
    write_file(&out.join("plot.svg"), &plot.render()?)?;
    Ok(())
}

fn summarize(what: &str, log: &MetricsLog) {
    let train = log.final_accuracy(Split::Train);
    let val = log.final_accuracy(Split::Val);
    let fmt = |a: Option<f64>| a.map_or("-".to_string(), |a| format!("{a:.4}"));
    println!("{what}: final train accuracy {}, validation accuracy {}", fmt(train), fmt(val));
}
