use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use chronoqa::config::{RunConfigFile, NOW_YEAR_ENV};
use chronoqa::corpus::{self, Corpus, Split};
use chronoqa::gradcheck::{run_gradcheck, GradcheckConfig};
use chronoqa::harness::{self, compare_runs, load_run, run_experiment, RunOptions, RunSnapshot};
use chronoqa::losses::Fault;
use chronoqa::model::{Checkpoint, EncodingCache, Predictor};
use chronoqa::transform::{build_triplets, write_triplets};
use chronoqa::{Error, Result};

#[derive(Parser)]
#[command(name = "chronoqa", version, about = "Continual learning for temporal-sensitive question answering")]
struct Cli {
    /// Base directory for every relative path
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a corpus with its triplets and statistics
    Build {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "data")]
        out: PathBuf,
        #[command(flatten)]
        keys: RunConfigFile,
    },
    /// Train every stage and write checkpoints and reports
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        /// Reuse completed stages of an interrupted run
        #[arg(long)]
        resume: bool,
        /// Stop after this stage
        #[arg(long, hide = true)]
        stop_after: Option<usize>,
        #[command(flatten)]
        keys: RunConfigFile,
    },
    /// Evaluate one checkpoint
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        /// Subsets to evaluate [default: all up to the checkpoint's stage]
        #[arg(long, value_delimiter = ',')]
        subsets: Vec<usize>,
        #[arg(long, value_enum, default_value_t = SplitArg::Both)]
        split: SplitArg,
        /// Also write the rows as CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare finished runs side by side
    Report {
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        /// Also write the tables here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check analytic gradients against finite differences
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Pin the representation width
        #[arg(long)]
        dim: Option<usize>,
        /// Pin the number of candidates
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Dev,
    Test,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    SignFlip,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn resolve(workdir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        workdir.join(p)
    }
}

fn settings(workdir: &Path, config: &Option<PathBuf>, keys: &RunConfigFile) -> Result<RunConfigFile> {
    let env = std::env::var(NOW_YEAR_ENV).ok();
    let file = config.as_ref().map(|p| resolve(workdir, p));
    RunConfigFile::resolve(file.as_deref(), env.as_deref(), keys)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_corpus(data: &Path, boundaries: &[chronoqa::temporal_text::TimeRange]) -> Result<Corpus> {
    corpus::ingest_corpus(&data.join("contexts.jsonl"), &data.join("questions.jsonl"), boundaries)
}

fn run(cli: Cli) -> Result<u8> {
    let wd = cli.workdir;
    match cli.command {
        Command::Build { config, out, keys } => {
            let spec = settings(&wd, &config, &keys)?.experiment()?.corpus;
            let corpus = corpus::synthesize_corpus(&spec)?;
            let out = resolve(&wd, &out);
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            corpus::write_contexts(&out.join("contexts.jsonl"), &corpus.contexts)?;
            corpus::write_questions(&out.join("questions.jsonl"), &corpus.questions)?;
            let train: Vec<_> = corpus.questions.iter().filter(|q| q.split == Split::Train).collect();
            let triplets = build_triplets(&corpus, &train, spec.earliest_year(), spec.now_year, spec.seed)?;
            write_triplets(&out.join("triplets.jsonl"), &triplets)?;
            let stats = corpus.stats(spec.k()).render(&spec.boundaries);
            write(&out.join("stats.md"), &stats)?;
            println!("{stats}");
            println!("corpus digest {}", corpus::corpus_digest(&corpus));
            Ok(0)
        }
        Command::Train { config, data, runs, resume, stop_after, keys } => {
            let settings = settings(&wd, &config, &keys)?;
            let cfg = settings.experiment()?;
            let corpus = load_corpus(&resolve(&wd, &data), &cfg.corpus.boundaries)?;
            let outcome =
                run_experiment(&cfg, &corpus, &resolve(&wd, &runs), RunOptions { resume, stop_after }, &mut |line| {
                    eprintln!("{line}")
                })?;
            print!("{}", outcome.report.to_markdown());
            println!("run directory {}", outcome.run_dir.display());
            Ok(0)
        }
        Command::Eval { checkpoint, data, subsets, split, csv } => {
            let path = resolve(&wd, &checkpoint);
            let ckpt = Checkpoint::load(&path)?;
            let snapshot: Option<RunSnapshot> = path
                .parent()
                .map(|d| d.join("config.json"))
                .and_then(|p| fs::read_to_string(p).ok())
                .and_then(|t| serde_json::from_str(&t).ok());
            let boundaries = snapshot
                .as_ref()
                .map(|s| s.config.corpus.boundaries.clone())
                .unwrap_or_else(corpus::default_boundaries);
            let corpus = load_corpus(&resolve(&wd, &data), &boundaries)?;
            let subsets = if subsets.is_empty() { (1..=ckpt.stage).collect() } else { subsets };
            if let Some(&j) = subsets.iter().find(|&&j| j == 0 || j > ckpt.stage) {
                return Err(Error::validation(format!(
                    "checkpoint is stage {}; it cannot be evaluated on subset {j}",
                    ckpt.stage
                )));
            }
            let cache = EncodingCache::new(&corpus.contexts, &ckpt.vocab);
            let predictor = Predictor { vocab: &ckpt.vocab, params: &ckpt.params, cache: &cache };
            let arm = snapshot.map(|s| s.config.arm.to_string()).unwrap_or_else(|| "eval".into());
            let splits = match split {
                SplitArg::Dev => vec![Split::Dev],
                SplitArg::Test => vec![Split::Test],
                SplitArg::Both => vec![Split::Dev, Split::Test],
            };
            let mut report = harness::StageReport::default();
            println!("| subset | split | EM | F1 |\n|---:|---|---:|---:|");
            for s in splits {
                for &j in &subsets {
                    let (em, f1) = harness::score_questions(corpus.questions_in(j, s), |q| {
                        predictor.answer(q).map(str::to_string)
                    })?;
                    println!("| {j} | {s} | {em:.2} | {f1:.2} |");
                    report.rows.push(harness::ReportRow {
                        arm: arm.clone(),
                        stage: ckpt.stage,
                        subset: j,
                        split: s,
                        em,
                        f1,
                    });
                }
            }
            if let Some(p) = csv {
                write(&resolve(&wd, &p), &report.to_csv())?;
            }
            Ok(0)
        }
        Command::Report { run_dirs, out } => {
            let runs = run_dirs.iter().map(|d| load_run(&resolve(&wd, d))).collect::<Result<Vec<_>>>()?;
            let table = compare_runs(&runs)?;
            print!("{table}");
            if let Some(p) = out {
                write(&resolve(&wd, &p), &table)?;
            }
            Ok(0)
        }
        Command::Gradcheck { seed, instances, dim, candidates, inject_fault } => {
            let cfg = GradcheckConfig {
                seed,
                instances,
                dim,
                candidates,
                fault: match inject_fault {
                    Some(FaultArg::SignFlip) => Fault::SignFlip,
                    None => Fault::None,
                },
                ..GradcheckConfig::default()
            };
            let r = run_gradcheck(&cfg)?;
            println!(
                "gradcheck: {} instances, {} coordinates, max relative error {:.3e} (instance {}, coordinate {}) -> {}",
                r.instances,
                r.coordinates,
                r.max_rel_error,
                r.worst_instance,
                r.worst_coordinate,
                if r.passed { "pass" } else { "FAIL" }
            );
            if r.passed {
                Ok(0)
            } else {
                Err(Error::numerical(format!(
                    "max relative error {:.3e} exceeds {:.0e}",
                    r.max_rel_error, cfg.tolerance
                )))
            }
        }
    }
}
