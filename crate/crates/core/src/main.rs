#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use wii_core::datagen::{read_dataset, write_dataset, Split};
use wii_core::error::{Error, Result, StageExt};
use wii_core::eval::{compare_reports, emit_report};
use wii_core::experiment::{
    evaluate_split, generate, history_csv, parse_rate, preset, reduce_features, train_on_features,
    Compression, ExperimentConfig, Reduction, CONFIG_KEYS, PRESETS,
};
use wii_core::nn::{read_model, write_model, ArchKind, EpochStats};
use wii_core::reduction::{BandSpec, SubsampleMethod};
use wii_core::transform::{read_features, write_features, FeatureSet, Representation};

#[derive(Parser)]
#[command(name = "wii", version, about = "Wireless interference identification experiments")]
struct Cli {
    /// Fix every reduction order so repeated runs give identical reports.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Suppress per-epoch progress on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// key = value config file (keys listed below).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the root seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self, base: ExperimentConfig) -> Result<ExperimentConfig> {
        let mut cfg = base;
        if let Some(path) = &self.config {
            cfg.apply_text(&std::fs::read_to_string(path)?)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a labelled I/Q dataset.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        vectors_per_cell: Option<usize>,
        /// Comma-separated SNRs in dB, or "all".
        #[arg(long)]
        snr_list: Option<String>,
        /// 715 vectors per cell (225,225 records).
        #[arg(long, conflicts_with = "vectors_per_cell")]
        paper_scale: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Convert a dataset into feature matrices.
    Preprocess {
        #[arg(long, default_value = "freq-iq")]
        repr: Representation,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Band selection, training-SNR selection and compression, in that order.
    Reduce {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// MHz ranges, e.g. "2429-2431" or "2422-2424,2429-2431".
        #[arg(long)]
        band: Option<BandSpec>,
        #[arg(long, allow_negative_numbers = true)]
        train_snr: Option<i8>,
        #[arg(long, conflicts_with = "subsample")]
        pca_rate: Option<String>,
        #[arg(long, requires = "rate")]
        subsample: Option<SubsampleMethod>,
        /// Subsampling rate, e.g. 1/4.
        #[arg(long)]
        rate: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a network on a (reduced) feature file.
    Train {
        #[arg(long, default_value = "proposed")]
        arch: ArchKind,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-epoch history to this CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Evaluate a model and write the report CSVs.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Records to score: val, train or all.
        #[arg(long, default_value = "val")]
        split: String,
    },
    /// Run a named preset end to end.
    Run {
        /// Preset name; see --list.
        #[arg(long, required_unless_present_any = ["list", "config"])]
        preset: Option<String>,
        /// Dataset file; generated from the preset scale when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, required_unless_present = "list")]
        out: Option<PathBuf>,
        /// Print the preset names and exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Tabulate accuracy and timing of report directories against the first.
    Compare {
        #[arg(required = true, num_args = 2..)]
        dirs: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_help() -> String {
    let mut s = String::from("Config file keys (one `key = value` per line, # comments):\n");
    for (k, doc) in CONFIG_KEYS {
        s.push_str(&format!("  {k:<18} {doc}\n"));
    }
    s.push_str("\nPresets: ");
    s.push_str(&PRESETS.join(", "));
    s.push_str("\n\nEnvironment: WII_THREADS caps worker threads.\nExit codes: 0 ok, 1 usage, 2 data/format, 3 numeric failure.");
    s
}

fn progress(quiet: bool) -> impl FnMut(&EpochStats) {
    move |s: &EpochStats| {
        if !quiet {
            eprintln!(
                "epoch {:>3}  train_loss {:.4}  val_loss {:.4}  val_acc {:.4}  {:.1}s",
                s.epoch, s.train_loss, s.val_loss, s.val_accuracy, s.seconds
            );
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let quiet = cli.quiet;
    let deterministic = cli.deterministic;
    match cli.cmd {
        Cmd::Generate { out, vectors_per_cell, snr_list, paper_scale, cfg } => {
            let mut c = cfg.resolve(ExperimentConfig::default())?;
            if let Some(n) = vectors_per_cell {
                c.vectors_per_cell = n;
            }
            if paper_scale {
                c.vectors_per_cell = 715;
            }
            if let Some(list) = snr_list {
                c.set("snr_list", &list)?;
            }
            let d = generate(&c)?;
            write_dataset(&d, &out).stage("generate")?;
            eprintln!("wrote {} records to {}", d.len(), out.display());
        }
        Cmd::Preprocess { repr, input, out } => {
            let d = read_dataset(&input).stage("preprocess")?;
            let f = FeatureSet::from_dataset(&d, repr).stage("preprocess")?;
            write_features(&f, &out).stage("preprocess")?;
        }
        Cmd::Reduce { input, out, band, train_snr, pca_rate, subsample, rate, seed } => {
            let compression = match (pca_rate, subsample) {
                (Some(r), _) => Compression::Pca(parse_rate(&r)?),
                (None, Some(m)) => Compression::Subsample(m, parse_rate(rate.as_deref().unwrap_or("1"))?),
                (None, None) => Compression::None,
            };
            let r = Reduction { band, train_snr, compression };
            let f = read_features(&input).stage("reduce")?;
            let (reduced, _) = reduce_features(&f, &r, seed).stage("reduce")?;
            write_features(&reduced, &out).stage("reduce")?;
            eprintln!("{} rows, classes {:?}", reduced.rows, reduced.class_ids());
        }
        Cmd::Train { arch, data, out, history, cfg } => {
            let mut c = cfg.resolve(ExperimentConfig::default())?;
            if cfg.config.is_none() {
                c.arch = arch;
            }
            let f = read_features(&data).stage("train")?;
            let (model, report) = train_on_features(&f, &c, progress(quiet)).stage("train")?;
            write_model(&model, &out).stage("train")?;
            if let Some(h) = history {
                std::fs::write(h, history_csv(&report)).stage("train")?;
            }
            eprintln!(
                "{} epochs, {:.2}s/epoch, best val accuracy {:.4}",
                report.epochs_run, report.seconds_per_epoch, report.best_val_accuracy
            );
        }
        Cmd::Evaluate { model, data, out, split } => {
            let m = read_model(&model).stage("evaluate")?;
            let mut f = read_features(&data).stage("evaluate")?;
            let split = match split.as_str() {
                "val" => Split::Val,
                "train" => Split::Train,
                "all" => {
                    f.records.iter_mut().for_each(|r| r.split = Split::Val);
                    Split::Val
                }
                s => return Err(Error::Config(format!("unknown split '{s}'"))),
            };
            let metrics = evaluate_split(&m, &f, split).stage("evaluate")?;
            emit_report(&metrics, &out).stage("evaluate")?;
            println!("overall accuracy {:.4}", metrics.overall_accuracy());
        }
        Cmd::Run { preset: name, data, out, list, cfg } => {
            if list {
                PRESETS.iter().for_each(|p| println!("{p}"));
                return Ok(());
            }
            let base = match &name {
                Some(n) => preset(n)?,
                None => ExperimentConfig::default(),
            };
            let c = cfg.resolve(base)?;
            let d = match data {
                Some(p) => read_dataset(&p).stage("generate")?,
                None => generate(&c)?,
            };
            let out = out.expect("required by clap");
            let o = wii_core::experiment::run_experiment(&c, &d, &out, progress(quiet))?;
            let manifest = out.join("manifest.txt");
            let mut text = std::fs::read_to_string(&manifest)?;
            text.push_str(&format!("# deterministic = {deterministic}\n"));
            std::fs::write(&manifest, text)?;
            println!(
                "{}: accuracy {:.4}, high-SNR accuracy {:.4}, {} epochs, {:.2}s/epoch",
                c.name,
                o.metrics.overall_accuracy(),
                o.metrics.accuracy_at_or_above(10).unwrap_or(f64::NAN),
                o.report.epochs_run,
                o.report.seconds_per_epoch
            );
        }
        Cmd::Compare { dirs, out } => {
            let table = compare_reports(&dirs)?;
            match out {
                Some(p) => std::fs::write(p, table)?,
                None => print!("{table}"),
            }
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let threads = match std::env::var("WII_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Config(format!("WII_THREADS must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => None,
    };
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build_global().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let matches = match Cli::command().after_help(config_help()).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = init_threads().and_then(|_| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
