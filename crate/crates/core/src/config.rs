//! Flat run configuration: one TOML table whose keys double as CLI flags.
//!
//! Values are layered file < `CHRONOQA_NOW_YEAR` < flags; anything left
//! unset takes the built-in default.

use std::path::Path;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSpec;
use crate::error::{Error, Result};
use crate::harness::{Arm, ExperimentConfig};
use crate::losses::LossConfig;
use crate::metrics::HardnessMetric;
use crate::model::AdamWConfig;
use crate::replay::ReplayConfig;
use crate::temporal_text::TimeRange;

pub const NOW_YEAR_ENV: &str = "CHRONOQA_NOW_YEAR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Root seed; every random stream is derived from it [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,

    /// Subset year ranges, e.g. "190-1939,1940-1976,1977-1998,1999-2009,2010-now"
    #[arg(long)]
    pub boundaries: Option<String>,
    /// Question-type proportions: easy, commonsense, multi_description, multi_paragraph, unanswerable
    #[arg(long, value_delimiter = ',')]
    pub type_mix: Option<Vec<f64>>,
    /// Train, dev, test proportions
    #[arg(long, value_delimiter = ',')]
    pub split_mix: Option<Vec<f64>>,
    /// [default: 300]
    #[arg(long)]
    pub n_contexts: Option<usize>,
    /// [default: 3750]
    #[arg(long)]
    pub n_questions: Option<usize>,
    /// [default: 4]
    #[arg(long)]
    pub max_paragraphs: Option<usize>,
    /// Year that open ranges ("since 2004") run up to [default: 2023]
    #[arg(long)]
    pub now_year: Option<i32>,

    /// Prediction loss weight [default: 1.0]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Similar-question loss weight [default: 0.5]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Triplet loss weight [default: 0.5]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Triplet margin [default: 1.0]
    #[arg(long)]
    pub margin: Option<f64>,
    /// Norm order of the triplet distance [default: 2.0]
    #[arg(long)]
    pub norm_p: Option<f64>,

    /// Fraction of previous samples dropped as hardest [default: 0.1]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Fraction of eligible distractors injected [default: 0.1]
    #[arg(long)]
    pub nu: Option<f64>,
    /// Fraction of surviving previous samples replayed [default: 0.1]
    #[arg(long)]
    pub retain_rate: Option<f64>,
    /// f1 or em [default: f1]
    #[arg(long)]
    pub hardness_metric: Option<HardnessMetric>,
    /// Drop and sample within each previous subset [default: false]
    #[arg(long)]
    pub per_subset: Option<bool>,

    /// [default: 5e-5]
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 0.9]
    #[arg(long)]
    pub beta1: Option<f64>,
    /// [default: 0.999]
    #[arg(long)]
    pub beta2: Option<f64>,
    /// [default: 1e-8]
    #[arg(long)]
    pub eps: Option<f64>,
    /// [default: 0.01]
    #[arg(long)]
    pub weight_decay: Option<f64>,

    /// baseline, tmr_only, tcl_only, full, plain_mr or tmr_no_harddrop [default: full]
    #[arg(long)]
    pub arm: Option<Arm>,
    /// [default: 8]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 1]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Representation width [default: 32]
    #[arg(long)]
    pub dim: Option<usize>,
    /// [default: 256]
    #[arg(long)]
    pub oov_buckets: Option<usize>,
    /// Train distractors with the contrastive terms as well [default: true]
    #[arg(long)]
    pub distractor_tcl: Option<bool>,
}

pub fn parse_boundaries(s: &str) -> Result<Vec<TimeRange>> {
    s.split(',')
        .map(|part| {
            let part = part.trim();
            let (a, b) = part
                .split_once('-')
                .ok_or_else(|| Error::validation(format!("boundary '{part}' is not of the form start-end")))?;
            let start = a.trim().parse().map_err(|_| Error::validation(format!("bad boundary start in '{part}'")))?;
            let end = match b.trim() {
                "now" => None,
                e => Some(e.parse().map_err(|_| Error::validation(format!("bad boundary end in '{part}'")))?),
            };
            TimeRange::new(start, end)
        })
        .collect()
}

fn to_array<const N: usize>(name: &str, v: &[f64]) -> Result<[f64; N]> {
    v.try_into().map_err(|_| Error::validation(format!("{name} needs {N} values, got {}", v.len())))
}

impl RunConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
            Error::Parse { path: origin.to_path_buf(), line, message: e.message().to_string() }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn overlay(&self, over: &RunConfigFile) -> RunConfigFile {
        let mut base = serde_json::to_value(self).expect("serialize");
        let top = serde_json::to_value(over).expect("serialize");
        if let (Some(b), Some(t)) = (base.as_object_mut(), top.as_object()) {
            for (k, v) in t {
                if !v.is_null() {
                    b.insert(k.clone(), v.clone());
                }
            }
        }
        serde_json::from_value(base).expect("same shape")
    }

    /// Precedence is file < environment < flags.
    pub fn resolve(file: Option<&Path>, env_now_year: Option<&str>, flags: &RunConfigFile) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => RunConfigFile::default(),
        };
        if let Some(raw) = env_now_year {
            let year =
                raw.trim().parse().map_err(|_| Error::validation(format!("{NOW_YEAR_ENV}='{raw}' is not a year")))?;
            cfg.now_year = Some(year);
        }
        Ok(cfg.overlay(flags))
    }

    pub fn corpus_spec(&self) -> Result<CorpusSpec> {
        let d = CorpusSpec::default();
        let spec = CorpusSpec {
            boundaries: self.boundaries.as_deref().map(parse_boundaries).transpose()?.unwrap_or(d.boundaries),
            type_mix: self.type_mix.as_deref().map(|v| to_array("type_mix", v)).transpose()?.unwrap_or(d.type_mix),
            split_mix: self.split_mix.as_deref().map(|v| to_array("split_mix", v)).transpose()?.unwrap_or(d.split_mix),
            n_contexts: self.n_contexts.unwrap_or(d.n_contexts),
            n_questions: self.n_questions.unwrap_or(d.n_questions),
            max_paragraphs: self.max_paragraphs.unwrap_or(d.max_paragraphs),
            now_year: self.now_year.unwrap_or(d.now_year),
            seed: self.seed.unwrap_or(d.seed),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let d = ExperimentConfig::default();
        let (l, r, o) = (d.loss, d.replay, d.optimizer);
        let cfg = ExperimentConfig {
            arm: self.arm.unwrap_or(d.arm),
            corpus: self.corpus_spec()?,
            loss: LossConfig {
                alpha: self.alpha.unwrap_or(l.alpha),
                beta: self.beta.unwrap_or(l.beta),
                gamma: self.gamma.unwrap_or(l.gamma),
                margin: self.margin.unwrap_or(l.margin),
                p: self.norm_p.unwrap_or(l.p),
            },
            replay: ReplayConfig {
                mu: self.mu.unwrap_or(r.mu),
                nu: self.nu.unwrap_or(r.nu),
                retain_rate: self.retain_rate.unwrap_or(r.retain_rate),
                hardness_metric: self.hardness_metric.unwrap_or(r.hardness_metric),
                per_subset: self.per_subset.unwrap_or(r.per_subset),
            },
            optimizer: AdamWConfig {
                lr: self.lr.unwrap_or(o.lr),
                beta1: self.beta1.unwrap_or(o.beta1),
                beta2: self.beta2.unwrap_or(o.beta2),
                eps: self.eps.unwrap_or(o.eps),
                weight_decay: self.weight_decay.unwrap_or(o.weight_decay),
            },
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            dim: self.dim.unwrap_or(d.dim),
            oov_buckets: self.oov_buckets.unwrap_or(d.oov_buckets),
            distractor_tcl: self.distractor_tcl.unwrap_or(d.distractor_tcl),
            seed: self.seed.unwrap_or(d.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
