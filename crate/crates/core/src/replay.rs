//! Temporal memory replay: the rehearsal set for a stage is drawn from the
//! earlier subsets after discarding the samples the current model finds
//! hardest, and is topped up with distractors (earlier questions about a
//! context the new subset also asks about, with a different answer).

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::Question;
use crate::error::{Error, Result};
use crate::metrics::HardnessMetric;
use crate::rng::{self, fraction_count, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    /// Fraction of previous samples removed as too hard.
    pub mu: f64,
    /// Fraction of eligible distractors injected.
    pub nu: f64,
    /// Fraction of the surviving previous samples replayed.
    pub retain_rate: f64,
    pub hardness_metric: HardnessMetric,
    /// Apply removal and sampling within each previous subset separately.
    pub per_subset: bool,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig { mu: 0.1, nu: 0.1, retain_rate: 0.1, hardness_metric: HardnessMetric::F1, per_subset: false }
    }
}

impl ReplayConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.mu) || !(0.0..1.0).contains(&self.nu) || !(0.0..=1.0).contains(&self.retain_rate)
        {
            return Err(Error::validation(format!(
                "replay needs 0 <= mu < 1, 0 <= nu < 1, 0 <= retain_rate <= 1; got mu={}, nu={}, retain_rate={}",
                self.mu, self.nu, self.retain_rate
            )));
        }
        Ok(())
    }

    /// No previous data reaches the stage.
    pub fn is_disabled(&self) -> bool {
        self.retain_rate == 0.0 && self.nu == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub question_id: String,
    pub score: f64,
    pub source_subset: usize,
}

/// Score each previous question by the model's answer quality.
pub fn score_previous<'q>(
    mut answer: impl FnMut(&Question) -> Result<String>,
    prev: impl IntoIterator<Item = &'q Question>,
    metric: HardnessMetric,
) -> Result<Vec<ScoredSample>> {
    prev.into_iter()
        .map(|q| {
            Ok(ScoredSample {
                question_id: q.question_id.clone(),
                score: metric.score(&answer(q)?, &q.answer),
                source_subset: q.subset,
            })
        })
        .collect()
}

/// Split into `(retained, dropped)`: the `ceil(mu * N)` lowest scores go,
/// lowest question id first among equal scores.
pub fn drop_hard(mut scored: Vec<ScoredSample>, mu: f64) -> (Vec<ScoredSample>, Vec<ScoredSample>) {
    scored.sort_by(|a, b| a.score.total_cmp(&b.score).then_with(|| a.question_id.cmp(&b.question_id)));
    let n_drop = fraction_count(mu, scored.len());
    let mut retained = scored.split_off(n_drop);
    retained.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    scored.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    (retained, scored)
}

fn sample_sorted<T: Clone>(items: &[T], k: usize, rng: &mut StreamRng) -> Vec<T> {
    let mut picked: Vec<usize> = index::sample(rng, items.len(), k.min(items.len())).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

/// Earlier questions on a context the current subset asks about, whose
/// answer differs from a current question's on that context.
pub fn eligible_distractors<'q>(prev: &[&'q Question], current: &[&Question]) -> Vec<&'q Question> {
    let mut answers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for q in current {
        answers.entry(&q.context_id).or_default().insert(&q.answer);
    }
    let mut out: Vec<&Question> = prev
        .iter()
        .copied()
        .filter(|p| answers.get(p.context_id.as_str()).is_some_and(|a| a.iter().any(|x| *x != p.answer)))
        .collect();
    out.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    out
}

pub fn select_distractors<'q>(
    prev: &[&'q Question],
    current: &[&Question],
    nu: f64,
    rng: &mut StreamRng,
) -> Vec<&'q Question> {
    let eligible = eligible_distractors(prev, current);
    sample_sorted(&eligible, fraction_count(nu, eligible.len()), rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Current,
    Dropped,
    /// Survived removal but was not sampled.
    Retained,
    Replayed,
    Distractor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub question_id: String,
    pub role: Role,
    pub score: Option<f64>,
    pub source_subset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSet<'q> {
    /// Training questions in seeded order, no duplicate ids.
    pub questions: Vec<&'q Question>,
    /// Ids that entered as distractors.
    pub distractors: BTreeSet<String>,
    pub manifest: Vec<ManifestEntry>,
}

impl StageSet<'_> {
    pub fn manifest_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.manifest {
            out += &serde_json::to_string(e).expect("serialize");
            out.push('\n');
        }
        out
    }
}

/// Assemble the training set of stage `stage` (1-based).
///
/// `answer` is the model trained through the previous stage. It is called
/// only when previous data can be replayed.
pub fn build_stage_training_set<'q>(
    stage: usize,
    current: &[&'q Question],
    prev: &[&'q Question],
    answer: impl FnMut(&Question) -> Result<String>,
    cfg: &ReplayConfig,
    seed: u64,
) -> Result<StageSet<'q>> {
    let mut by_id: BTreeMap<&str, &'q Question> = current.iter().map(|q| (q.question_id.as_str(), *q)).collect();
    let mut manifest: Vec<ManifestEntry> = current
        .iter()
        .map(|q| ManifestEntry {
            question_id: q.question_id.clone(),
            role: Role::Current,
            score: None,
            source_subset: q.subset,
        })
        .collect();
    let mut distractors = BTreeSet::new();

    if stage > 1 && !prev.is_empty() && !cfg.is_disabled() {
        let prev_by_id: BTreeMap<&str, &'q Question> = prev.iter().map(|q| (q.question_id.as_str(), *q)).collect();
        let mut replayed = Vec::new();
        if cfg.retain_rate > 0.0 {
            let scored = score_previous(answer, prev.iter().copied(), cfg.hardness_metric)?;
            let groups: Vec<Vec<ScoredSample>> = if cfg.per_subset {
                let mut g: BTreeMap<usize, Vec<ScoredSample>> = BTreeMap::new();
                for s in scored {
                    g.entry(s.source_subset).or_default().push(s);
                }
                g.into_values().collect()
            } else {
                vec![scored]
            };
            for (gi, group) in groups.into_iter().enumerate() {
                let (retained, dropped) = drop_hard(group, cfg.mu);
                let mut r = rng::stream(seed, rng::REPLAY, &[stage as u64, 0, gi as u64]);
                let picked = sample_sorted(&retained, fraction_count(cfg.retain_rate, retained.len()), &mut r);
                let picked_ids: BTreeSet<&str> = picked.iter().map(|s| s.question_id.as_str()).collect();
                for (s, role) in dropped.iter().map(|s| (s, Role::Dropped)).chain(retained.iter().map(|s| {
                    (s, if picked_ids.contains(s.question_id.as_str()) { Role::Replayed } else { Role::Retained })
                })) {
                    manifest.push(ManifestEntry {
                        question_id: s.question_id.clone(),
                        role,
                        score: Some(s.score),
                        source_subset: s.source_subset,
                    });
                }
                replayed.extend(picked);
            }
        }
        for s in &replayed {
            by_id.insert(prev_by_id[s.question_id.as_str()].question_id.as_str(), prev_by_id[s.question_id.as_str()]);
        }
        let mut r = rng::stream(seed, rng::REPLAY, &[stage as u64, 1]);
        for q in select_distractors(prev, current, cfg.nu, &mut r) {
            manifest.push(ManifestEntry {
                question_id: q.question_id.clone(),
                role: Role::Distractor,
                score: None,
                source_subset: q.subset,
            });
            distractors.insert(q.question_id.clone());
            by_id.insert(&q.question_id, q);
        }
    }

    let mut questions: Vec<&'q Question> = by_id.into_values().collect();
    questions.shuffle(&mut rng::stream(seed, rng::REPLAY, &[stage as u64, 2]));
    manifest.sort_by(|a, b| (a.role, &a.question_id).cmp(&(b.role, &b.question_id)));
    Ok(StageSet { questions, distractors, manifest })
}
