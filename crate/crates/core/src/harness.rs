//! Sequential train/evaluate protocol.
//!
//! Stage `k` loads the model left by stage `k - 1`, trains on subset `k`
//! (plus whatever the arm replays), then is evaluated on subsets `1..=k`.
//! Every stage leaves a checkpoint under `runs/<config-hash>/stage_<k>`, so an
//! interrupted experiment resumes from the last completed stage.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{corpus_digest, Corpus, CorpusSpec, Question, Split};
use crate::error::{Error, Result};
use crate::losses::{tcl_step_grad, LossBreakdown, LossConfig, StepInputs};
use crate::metrics::{exact_match, token_f1};
use crate::model::{
    apply_update, AdamWConfig, Checkpoint, EncodingCache, ModelParams, OptimizerState, Predictor, Vocab, DEFAULT_DIM,
    DEFAULT_OOV_BUCKETS, INIT_SCALE,
};
use crate::replay::{build_stage_training_set, ReplayConfig};
use crate::rng;
use crate::transform::{build_triplets, QuestionTriplet};

string_enum!(
    /// Which of the two techniques an experiment uses.
    Arm {
        Baseline => "baseline",
        TmrOnly => "tmr_only",
        TclOnly => "tcl_only",
        Full => "full",
        PlainMr => "plain_mr",
        TmrNoHarddrop => "tmr_no_harddrop",
    }
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub arm: Arm,
    pub corpus: CorpusSpec,
    pub loss: LossConfig,
    pub replay: ReplayConfig,
    pub optimizer: AdamWConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub dim: usize,
    pub oov_buckets: usize,
    /// Distractors get the similar/contrastive terms too, not only prediction.
    pub distractor_tcl: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            arm: Arm::Full,
            corpus: CorpusSpec::default(),
            loss: LossConfig::default(),
            replay: ReplayConfig::default(),
            optimizer: AdamWConfig::default(),
            epochs: 8,
            batch_size: 1,
            dim: DEFAULT_DIM,
            oov_buckets: DEFAULT_OOV_BUCKETS,
            distractor_tcl: true,
            seed: 0,
        }
    }
}

const NO_REPLAY: ReplayConfig = ReplayConfig {
    mu: 0.0,
    nu: 0.0,
    retain_rate: 0.0,
    hardness_metric: crate::metrics::HardnessMetric::F1,
    per_subset: false,
};

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.loss.validate()?;
        self.replay.validate()?;
        self.optimizer.validate()?;
        if self.batch_size == 0 || self.dim == 0 || self.oov_buckets == 0 {
            return Err(Error::validation("batch_size, dim and oov_buckets must be positive"));
        }
        Ok(())
    }

    /// Loss weights after the arm switches the contrastive terms on or off.
    pub fn effective_loss(&self) -> LossConfig {
        match self.arm {
            Arm::TclOnly | Arm::Full => self.loss,
            _ => LossConfig { beta: 0.0, gamma: 0.0, ..self.loss },
        }
    }

    pub fn effective_replay(&self) -> ReplayConfig {
        let r = self.replay;
        match self.arm {
            Arm::Baseline | Arm::TclOnly => ReplayConfig { hardness_metric: r.hardness_metric, ..NO_REPLAY },
            Arm::TmrOnly | Arm::Full => r,
            Arm::PlainMr => ReplayConfig { mu: 0.0, nu: 0.0, per_subset: true, ..r },
            Arm::TmrNoHarddrop => ReplayConfig { mu: 0.0, ..r },
        }
    }

    /// Digest of the canonical JSON of the configuration and the corpus
    /// digest it runs on.
    pub fn hash(&self, corpus_digest: &str) -> String {
        let canonical: serde_json::Value = serde_json::to_value(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&canonical).expect("value serializes"));
        h.update(b"\0");
        h.update(corpus_digest.as_bytes());
        hex::encode(h.finalize())[..16].to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub arm: String,
    pub stage: usize,
    pub subset: usize,
    pub split: Split,
    /// Percentages in 0..=100, unrounded.
    pub em: f64,
    pub f1: f64,
}

/// EM/F1 of every stage on every subset it has seen.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageReport {
    pub rows: Vec<ReportRow>,
}

const CSV_HEADER: &str = "arm,stage,subset,split,em,f1";

impl StageReport {
    pub fn k(&self) -> usize {
        self.rows.iter().map(|r| r.stage).max().unwrap_or(0)
    }

    pub fn get(&self, stage: usize, subset: usize, split: Split) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.stage == stage && r.subset == subset && r.split == split)
    }

    pub fn arm(&self) -> &str {
        self.rows.first().map(|r| r.arm.as_str()).unwrap_or("")
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            s += &format!("{},{},{},{},{},{}\n", r.arm, r.stage, r.subset, r.split, r.em, r.f1);
        }
        s
    }

    pub fn from_csv(text: &str, origin: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse { path: origin.to_path_buf(), line, message };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            _ => return Err(parse_err(1, format!("expected header '{CSV_HEADER}'"))),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(parse_err(i + 1, format!("expected 6 fields, found {}", f.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(i + 1, e.to_string()));
            let int = |s: &str| s.parse::<usize>().map_err(|e| parse_err(i + 1, e.to_string()));
            rows.push(ReportRow {
                arm: f[0].to_string(),
                stage: int(f[1])?,
                subset: int(f[2])?,
                split: f[3].parse().map_err(|e: Error| parse_err(i + 1, e.to_string()))?,
                em: num(f[4])?,
                f1: num(f[5])?,
            });
        }
        Ok(StageReport { rows })
    }

    /// Lower-triangular tables, one per split: rows are stages, columns are
    /// subsets.
    pub fn to_markdown(&self) -> String {
        let k = self.k();
        let mut s = String::new();
        for split in [Split::Dev, Split::Test] {
            s += &format!("### {} ({split})\n\n| Model |", self.arm());
            for j in 1..=k {
                s += &format!(" Subset{j} EM | Subset{j} F1 |");
            }
            s += "\n|---|";
            s += &"---:|".repeat(2 * k);
            s += "\n";
            for i in 1..=k {
                s += &format!("| M{i} |");
                for j in 1..=k {
                    match self.get(i, j, split) {
                        Some(r) => s += &format!(" {:.2} | {:.2} |", r.em, r.f1),
                        None => s += " | |",
                    }
                }
                s += "\n";
            }
            s += "\n";
            let traj = forgetting_trajectory(self, split);
            if !traj.is_empty() {
                s += "| Subset | F1 by stage | Forgetting |\n|---|---|---:|\n";
                for t in traj {
                    let series: Vec<String> = t.series.iter().map(|x| format!("{x:.2}")).collect();
                    s += &format!("| Subset{} | {} | {:.2} |\n", t.subset, series.join(" → "), t.forgetting);
                }
                s += "\n";
            }
        }
        s
    }
}

/// Largest drop from the peak to the final value.
pub fn forgetting(series: &[f64]) -> f64 {
    let Some(last) = series.last() else { return 0.0 };
    let peak = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    peak - last
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetForgetting {
    pub subset: usize,
    /// F1 of stages `subset..=K` on this subset.
    pub series: Vec<f64>,
    pub forgetting: f64,
}

pub fn forgetting_trajectory(report: &StageReport, split: Split) -> Vec<SubsetForgetting> {
    let k = report.k();
    (1..=k)
        .filter_map(|j| {
            let series: Vec<f64> = (j..=k).map(|i| report.get(i, j, split).map(|r| r.f1)).collect::<Option<_>>()?;
            Some(SubsetForgetting { subset: j, forgetting: forgetting(&series), series })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochTrace {
    pub stage: usize,
    pub epoch: usize,
    pub steps: usize,
    pub l_predict: f64,
    pub l_similar: f64,
    pub l_triple: f64,
    pub total: f64,
    pub transform_unavailable: usize,
}

impl EpochTrace {
    const CSV_HEADER: &'static str = "stage,epoch,steps,l_predict,l_similar,l_triple,total,transform_unavailable";

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}\n",
            self.stage,
            self.epoch,
            self.steps,
            self.l_predict,
            self.l_similar,
            self.l_triple,
            self.total,
            self.transform_unavailable
        )
    }
}

impl fmt::Display for EpochTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stage {} epoch {}: steps={} l_predict={:.4} l_similar={:.4} l_triple={:.4} total={:.4}",
            self.stage, self.epoch, self.steps, self.l_predict, self.l_similar, self.l_triple, self.total
        )
    }
}

/// Mean EM and F1 (as percentages) of `answer` over `questions`.
pub fn score_questions<'q>(
    questions: impl IntoIterator<Item = &'q Question>,
    mut answer: impl FnMut(&Question) -> Result<String>,
) -> Result<(f64, f64)> {
    let (mut em, mut f1, mut n) = (0.0, 0.0, 0usize);
    for q in questions {
        let pred = answer(q)?;
        em += exact_match(&pred, &q.answer);
        f1 += token_f1(&pred, &q.answer);
        n += 1;
    }
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    Ok((100.0 * em / n as f64, 100.0 * f1 / n as f64))
}

/// Report rows for stage `k` on subsets `1..=k`.
pub fn evaluate_stage(
    predictor: &Predictor,
    corpus: &Corpus,
    k: usize,
    split: Split,
    arm: &str,
) -> Result<Vec<ReportRow>> {
    (1..=k)
        .map(|j| {
            let (em, f1) = score_questions(corpus.questions_in(j, split), |q| predictor.answer(q).map(str::to_string))?;
            Ok(ReportRow { arm: arm.to_string(), stage: k, subset: j, split, em, f1 })
        })
        .collect()
}

/// Everything a run needs that is derived once from (config, corpus).
pub struct Experiment<'c> {
    pub cfg: ExperimentConfig,
    pub corpus: &'c Corpus,
    pub vocab: Vocab,
    pub cache: EncodingCache,
    pub triplets: BTreeMap<String, Option<QuestionTriplet>>,
    pub config_hash: String,
    pub corpus_digest: String,
}

impl<'c> Experiment<'c> {
    pub fn new(cfg: ExperimentConfig, corpus: &'c Corpus) -> Result<Self> {
        cfg.validate()?;
        let train: Vec<&Question> = corpus.questions.iter().filter(|q| q.split == Split::Train).collect();
        let triplets = build_triplets(corpus, &train, cfg.corpus.earliest_year(), cfg.corpus.now_year, cfg.seed)?;
        let texts = corpus
            .contexts
            .iter()
            .flat_map(|c| c.paragraphs.iter().map(String::as_str))
            .chain(train.iter().map(|q| q.text.as_str()))
            .chain(triplets.values().flatten().flat_map(|t| [t.similar_text.as_str(), t.contrastive_text.as_str()]));
        let vocab = Vocab::build(texts, cfg.oov_buckets)?;
        let cache = EncodingCache::new(&corpus.contexts, &vocab);
        let digest = corpus_digest(corpus);
        Ok(Experiment { config_hash: cfg.hash(&digest), corpus_digest: digest, cfg, corpus, vocab, cache, triplets })
    }

    pub fn k(&self) -> usize {
        self.cfg.corpus.k()
    }

    /// M_0: seeded initial parameters.
    pub fn initial_checkpoint(&self) -> Checkpoint {
        let mut r = rng::stream(self.cfg.seed, rng::INIT, &[]);
        let params = ModelParams::init(self.vocab.len(), self.cfg.dim, INIT_SCALE, &mut r);
        let n = params.data.len();
        Checkpoint {
            stage: 0,
            config_hash: self.config_hash.clone(),
            seed: self.cfg.seed,
            vocab: self.vocab.clone(),
            params,
            optimizer: OptimizerState::new(n),
        }
    }

    pub fn predictor<'a>(&'a self, ckpt: &'a Checkpoint) -> Predictor<'a> {
        Predictor { vocab: &self.vocab, params: &ckpt.params, cache: &self.cache }
    }

    fn previous_train(&self, k: usize) -> Vec<&'c Question> {
        self.corpus.questions.iter().filter(|q| q.split == Split::Train && q.subset < k).collect()
    }

    /// Train stage `k` starting from `prev`. Returns the new checkpoint, the
    /// per-epoch loss trace and the replay manifest.
    pub fn run_stage(
        &self,
        k: usize,
        prev: &Checkpoint,
        progress: &mut dyn FnMut(&str),
    ) -> Result<(Checkpoint, Vec<EpochTrace>, String)> {
        if prev.stage + 1 != k {
            return Err(Error::Checkpoint {
                path: PathBuf::from(format!("stage_{}", prev.stage)),
                message: format!("stage {k} needs the checkpoint of stage {}", k - 1),
            });
        }
        let current = self.corpus.questions_in(k, Split::Train);
        let prev_q = self.previous_train(k);
        let replay = self.cfg.effective_replay();
        let loss = self.cfg.effective_loss();
        let predictor = self.predictor(prev);
        let set = build_stage_training_set(
            k,
            &current,
            &prev_q,
            |q| predictor.answer(q).map(str::to_string),
            &replay,
            self.cfg.seed,
        )?;

        let mut params = prev.params.clone();
        let mut opt = prev.optimizer.clone();
        let mut grads = ModelParams::zeros(params.vocab_size, params.dim);
        let mut trace = Vec::new();
        let use_tcl = loss.beta != 0.0 || loss.gamma != 0.0;
        for epoch in 1..=self.cfg.epochs {
            let mut order = set.questions.clone();
            order.sort_by(|a, b| a.question_id.cmp(&b.question_id));
            order.shuffle(&mut rng::stream(self.cfg.seed, rng::SHUFFLE, &[k as u64, epoch as u64]));
            let mut sum = LossBreakdown::default();
            let mut unavailable = 0;
            for (b, batch) in order.chunks(self.cfg.batch_size).enumerate() {
                grads.clear();
                for q in batch {
                    let enc = self.cache.get(&q.context_id)?;
                    let triplet = (use_tcl && (self.cfg.distractor_tcl || !set.distractors.contains(&q.question_id)))
                        .then(|| self.triplets.get(&q.question_id).and_then(Option::as_ref))
                        .flatten();
                    let inputs = StepInputs::new(&q.text, &q.answer, triplet, &self.vocab, enc)?;
                    let br = tcl_step_grad(&inputs, &params, &loss, &mut grads)?;
                    if !br.total.is_finite() {
                        return Err(Error::numerical(format!(
                            "stage {k} epoch {epoch} batch {}: non-finite loss on {} ({br:?})",
                            b + 1,
                            q.question_id
                        )));
                    }
                    sum.l_predict += br.l_predict;
                    sum.l_similar += br.l_similar;
                    sum.l_triple += br.l_triple;
                    sum.total += br.total;
                    unavailable += (use_tcl && br.transform_unavailable) as usize;
                }
                if batch.len() > 1 {
                    let scale = 1.0 / batch.len() as f64;
                    grads.data.iter_mut().for_each(|g| *g *= scale);
                }
                apply_update(&mut params, &grads, &mut opt, &self.cfg.optimizer).map_err(|e| match e {
                    Error::Numerical(m) => Error::numerical(format!("stage {k} epoch {epoch} batch {}: {m}", b + 1)),
                    other => other,
                })?;
            }
            let n = order.len().max(1) as f64;
            let t = EpochTrace {
                stage: k,
                epoch,
                steps: order.len(),
                l_predict: sum.l_predict / n,
                l_similar: sum.l_similar / n,
                l_triple: sum.l_triple / n,
                total: sum.total / n,
                transform_unavailable: unavailable,
            };
            progress(&t.to_string());
            trace.push(t);
        }
        let ckpt = Checkpoint {
            stage: k,
            config_hash: self.config_hash.clone(),
            seed: self.cfg.seed,
            vocab: self.vocab.clone(),
            params,
            optimizer: opt,
        };
        Ok((ckpt, trace, set.manifest_jsonl()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Reuse completed stage checkpoints found in the run directory.
    pub resume: bool,
    /// Stop after this stage, as if interrupted.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub run_dir: PathBuf,
    pub config_hash: String,
    pub report: StageReport,
    pub completed_stages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSnapshot {
    pub config_hash: String,
    pub corpus_digest: String,
    pub config: ExperimentConfig,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn stage_path(run_dir: &Path, k: usize) -> PathBuf {
    run_dir.join(format!("stage_{k}"))
}

/// Run stages `1..=K` under `runs_root/<config-hash>/`, evaluating each on
/// the dev and test splits of every subset seen so far.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    corpus: &Corpus,
    runs_root: &Path,
    opts: RunOptions,
    progress: &mut dyn FnMut(&str),
) -> Result<ExperimentOutcome> {
    let exp = Experiment::new(cfg.clone(), corpus)?;
    let run_dir = runs_root.join(&exp.config_hash);
    fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
    let snapshot = RunSnapshot {
        config_hash: exp.config_hash.clone(),
        corpus_digest: exp.corpus_digest.clone(),
        config: cfg.clone(),
    };
    write(&run_dir.join("config.json"), &(serde_json::to_string_pretty(&snapshot).expect("serialize") + "\n"))?;

    let arm = cfg.arm.as_str();
    let last = opts.stop_after.unwrap_or(exp.k()).min(exp.k());
    let mut ckpt = exp.initial_checkpoint();
    let mut report = StageReport::default();
    for k in 1..=last {
        let path = stage_path(&run_dir, k);
        let trace_path = run_dir.join(format!("stage_{k}.loss.csv"));
        let reusable = opts.resume && path.exists() && trace_path.exists();
        ckpt = match reusable.then(|| Checkpoint::load(&path)).transpose()? {
            Some(saved) if saved.config_hash == exp.config_hash && saved.stage == k && saved.vocab == exp.vocab => {
                progress(&format!("stage {k}: resumed from {}", path.display()));
                saved
            }
            _ => {
                let (next, trace, manifest) = exp.run_stage(k, &ckpt, progress)?;
                let mut csv = format!("{}\n", EpochTrace::CSV_HEADER);
                trace.iter().for_each(|t| csv += &t.csv_line());
                write(&trace_path, &csv)?;
                write(&run_dir.join(format!("replay_stage_{k}.jsonl")), &manifest)?;
                next.save(&path)?;
                next
            }
        };
        let predictor = exp.predictor(&ckpt);
        for split in [Split::Dev, Split::Test] {
            report.rows.extend(evaluate_stage(&predictor, corpus, k, split, arm)?);
        }
        if let Some(r) = report.get(k, k, Split::Test) {
            progress(&format!("stage {k}: test subset{k} EM={:.2} F1={:.2}", r.em, r.f1));
        }
    }

    if last == exp.k() {
        let mut trace = format!("{}\n", EpochTrace::CSV_HEADER);
        for k in 1..=last {
            let body = read(&run_dir.join(format!("stage_{k}.loss.csv")))?;
            trace.extend(body.lines().skip(1).map(|l| format!("{l}\n")));
        }
        write(&run_dir.join("loss_trace.csv"), &trace)?;
        write(&run_dir.join("report.csv"), &report.to_csv())?;
        write(&run_dir.join("report.md"), &report.to_markdown())?;
    }
    Ok(ExperimentOutcome { run_dir, config_hash: exp.config_hash, report, completed_stages: last })
}

/// A completed run read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRun {
    pub dir: PathBuf,
    pub snapshot: RunSnapshot,
    pub report: StageReport,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let cfg_path = dir.join("config.json");
    let snapshot: RunSnapshot = serde_json::from_str(&read(&cfg_path)?).map_err(|e| Error::Parse {
        path: cfg_path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let report_path = dir.join("report.csv");
    let report = StageReport::from_csv(&read(&report_path)?, &report_path)?;
    Ok(LoadedRun { dir: dir.to_path_buf(), snapshot, report })
}

/// Side-by-side final-stage comparison of runs over the same corpus.
pub fn compare_runs(runs: &[LoadedRun]) -> Result<String> {
    let first = runs.first().ok_or_else(|| Error::Usage("at least one run directory is required".into()))?;
    for r in runs {
        if r.snapshot.corpus_digest != first.snapshot.corpus_digest {
            return Err(Error::validation(format!(
                "{} and {} were trained on different corpora",
                first.dir.display(),
                r.dir.display()
            )));
        }
    }
    let k = first.report.k();
    if runs.iter().any(|r| r.report.k() != k) {
        return Err(Error::validation("runs have different numbers of stages"));
    }
    let label = |r: &LoadedRun| format!("{} ({})", r.snapshot.config.arm, r.snapshot.config_hash);
    let mut s = String::new();
    for split in [Split::Test, Split::Dev] {
        s += &format!("### Final model M{k} ({split})\n\n| Model |");
        for j in 1..=k {
            s += &format!(" Subset{j} EM | Subset{j} F1 |");
        }
        s += " Mean EM | Mean F1 |\n|---|";
        s += &"---:|".repeat(2 * k + 2);
        s += "\n";
        for r in runs {
            s += &format!("| {} |", label(r));
            let (mut em, mut f1) = (0.0, 0.0);
            for j in 1..=k {
                let row = r
                    .report
                    .get(k, j, split)
                    .ok_or_else(|| Error::validation(format!("{} lacks stage {k}", r.dir.display())))?;
                s += &format!(" {:.2} | {:.2} |", row.em, row.f1);
                em += row.em;
                f1 += row.f1;
            }
            s += &format!(" {:.2} | {:.2} |\n", em / k as f64, f1 / k as f64);
        }
        if runs.len() > 1 {
            for r in &runs[1..] {
                s += &format!("| Δ {} vs {} |", r.snapshot.config.arm, first.snapshot.config.arm);
                let (mut dem, mut df1) = (0.0, 0.0);
                for j in 1..=k {
                    let a = first.report.get(k, j, split).expect("checked");
                    let b = r.report.get(k, j, split).expect("checked");
                    s += &format!(" {:+.2} | {:+.2} |", b.em - a.em, b.f1 - a.f1);
                    dem += b.em - a.em;
                    df1 += b.f1 - a.f1;
                }
                s += &format!(" {:+.2} | {:+.2} |\n", dem / k as f64, df1 / k as f64);
            }
        }
        s += "\n";
    }
    s += "### Forgetting (test F1, peak minus final)\n\n| Model |";
    for j in 1..=k {
        s += &format!(" Subset{j} |");
    }
    s += "\n|---|";
    s += &"---:|".repeat(k);
    s += "\n";
    for r in runs {
        s += &format!("| {} |", label(r));
        for t in forgetting_trajectory(&r.report, Split::Test) {
            s += &format!(" {:.2} |", t.forgetting);
        }
        s += "\n";
    }
    Ok(s)
}
