//! Similar and contrastive question generation.
//!
//! A *contrastive* question replaces the temporal anchor so that the gold
//! answer changes. A *similar* question keeps the anchor and the answer but
//! changes the wording: another phrasing already used in the corpus when one
//! exists, otherwise a shuffle of the non-temporal tokens.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::templates::{self, match_template};
use crate::corpus::{Context, Corpus, Question, Relation};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::temporal_text::extract_years;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarMethod {
    DatasetParaphrase,
    TokenShuffle,
}

impl SimilarMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SimilarMethod::DatasetParaphrase => "dataset_paraphrase",
            SimilarMethod::TokenShuffle => "token_shuffle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionTriplet {
    pub original: Question,
    pub similar_text: String,
    pub similar_method: SimilarMethod,
    pub contrastive_text: String,
    pub contrastive_anchor: i32,
}

/// Phrasings observed in a corpus, keyed by context.
///
/// A question has a dataset paraphrase when another question about the same
/// context was asked with a different template of the same relation.
#[derive(Debug, Clone, Default)]
pub struct TemplateCatalog {
    used: BTreeMap<String, BTreeSet<(Relation, usize)>>,
}

impl TemplateCatalog {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut used: BTreeMap<String, BTreeSet<(Relation, usize)>> = BTreeMap::new();
        for q in &corpus.questions {
            let Some(ctx) = corpus.context(&q.context_id) else { continue };
            if let Some(hit) = match_template(&q.text, &ctx.entity, q.anchor_year) {
                used.entry(q.context_id.clone()).or_default().insert(hit);
            }
        }
        TemplateCatalog { used }
    }

    pub fn alternatives(&self, q: &Question, ctx: &Context) -> Vec<usize> {
        let Some((rel, own)) = match_template(&q.text, &ctx.entity, q.anchor_year) else {
            return Vec::new();
        };
        self.used
            .get(&q.context_id)
            .map(|set| set.iter().filter(|(r, id)| *r == rel && *id != own).map(|(_, id)| *id).collect())
            .unwrap_or_default()
    }
}

/// Byte span of the anchor year inside the question text (last mention).
fn anchor_span(q: &Question) -> Option<(usize, usize)> {
    extract_years(&q.text).into_iter().rev().find(|m| m.value == q.anchor_year).map(|m| m.span)
}

/// Swap the anchor year for one where the gold answer differs.
pub fn make_contrastive(
    q: &Question,
    ctx: &Context,
    earliest: i32,
    now_year: i32,
    rng: &mut StreamRng,
) -> Result<(String, i32)> {
    let relation = ctx.question_relation(q).ok_or_else(|| Error::TransformUnavailable(q.question_id.clone()))?;
    let span = anchor_span(q)
        .ok_or_else(|| Error::validation(format!("question {} does not mention its anchor year", q.question_id)))?;
    let candidates: Vec<i32> =
        (earliest..=now_year).filter(|&y| y != q.anchor_year && ctx.answer_at(relation, y) != q.answer).collect();
    let anchor = *candidates.choose(rng).ok_or_else(|| Error::TransformUnavailable(q.question_id.clone()))?;
    let mut text = String::with_capacity(q.text.len());
    text.push_str(&q.text[..span.0]);
    text.push_str(&anchor.to_string());
    text.push_str(&q.text[span.1..]);
    Ok((text, anchor))
}

fn is_temporal_token(tok: &str) -> bool {
    !extract_years(tok).is_empty()
}

/// Permute the non-temporal whitespace tokens, leaving temporal ones in place.
///
/// The identity permutation is rejected whenever a different arrangement of
/// the movable tokens exists.
pub fn shuffle_tokens(text: &str, rng: &mut StreamRng) -> String {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let movable: Vec<usize> = (0..tokens.len()).filter(|&i| !is_temporal_token(tokens[i])).collect();
    let originals: Vec<&str> = movable.iter().map(|&i| tokens[i]).collect();
    let distinct = originals.iter().collect::<BTreeSet<_>>().len();
    let mut perm = originals.clone();
    if distinct >= 2 {
        loop {
            perm.shuffle(rng);
            if perm != originals {
                break;
            }
        }
    }
    let mut out = tokens.clone();
    for (slot, tok) in movable.iter().zip(perm) {
        out[*slot] = tok;
    }
    out.join(" ")
}

pub fn make_similar(
    q: &Question,
    ctx: &Context,
    catalog: &TemplateCatalog,
    rng: &mut StreamRng,
) -> Result<(String, SimilarMethod)> {
    if q.text.split_whitespace().count() < 2 {
        return Err(Error::validation(format!("question {} has fewer than two tokens", q.question_id)));
    }
    let alts = catalog.alternatives(q, ctx);
    if let Some(&id) = alts.choose(rng) {
        let (rel, _) = match_template(&q.text, &ctx.entity, q.anchor_year).expect("matched above");
        let text = templates::realize(rel, id, &ctx.entity, q.anchor_year)?;
        return Ok((text, SimilarMethod::DatasetParaphrase));
    }
    Ok((shuffle_tokens(&q.text, rng), SimilarMethod::TokenShuffle))
}

/// Triplets for every training question, fixed per (corpus, seed).
///
/// Questions without a contrastive year map to `None`; the trainer falls
/// back to the prediction loss alone for them.
pub fn build_triplets(
    corpus: &Corpus,
    questions: &[&Question],
    earliest: i32,
    now_year: i32,
    seed: u64,
) -> Result<BTreeMap<String, Option<QuestionTriplet>>> {
    let catalog = TemplateCatalog::from_corpus(corpus);
    let mut out = BTreeMap::new();
    for q in questions {
        let ctx = corpus
            .context(&q.context_id)
            .ok_or_else(|| Error::validation(format!("unknown context '{}'", q.context_id)))?;
        // per-question stream: the triplet does not depend on which other
        // questions are being transformed
        let mut rng = rng::stream(seed, rng::TRANSFORM, &[rng::fnv1a(&q.question_id)]);
        let triplet = match make_contrastive(q, ctx, earliest, now_year, &mut rng) {
            Ok((contrastive_text, contrastive_anchor)) => {
                let (similar_text, similar_method) = make_similar(q, ctx, &catalog, &mut rng)?;
                Some(QuestionTriplet {
                    original: (*q).clone(),
                    similar_text,
                    similar_method,
                    contrastive_text,
                    contrastive_anchor,
                })
            }
            Err(Error::TransformUnavailable(_)) => None,
            Err(e) => return Err(e),
        };
        out.insert(q.question_id.clone(), triplet);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub question_id: String,
    pub similar: String,
    pub contrastive: String,
    pub contrastive_anchor: i32,
    pub method: String,
}

impl From<&QuestionTriplet> for TripletRecord {
    fn from(t: &QuestionTriplet) -> Self {
        TripletRecord {
            question_id: t.original.question_id.clone(),
            similar: t.similar_text.clone(),
            contrastive: t.contrastive_text.clone(),
            contrastive_anchor: t.contrastive_anchor,
            method: t.similar_method.as_str().into(),
        }
    }
}

pub fn write_triplets(path: &std::path::Path, triplets: &BTreeMap<String, Option<QuestionTriplet>>) -> Result<()> {
    let mut out = String::new();
    for t in triplets.values().flatten() {
        out += &serde_json::to_string(&TripletRecord::from(t)).expect("serialize");
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{QuestionType, Split, SurfaceForm, TimelineFact};
    use crate::temporal_text::TimeRange;

    fn obama() -> Context {
        let fact = |v: &str, s, e| TimelineFact {
            relation: Relation::Position,
            value: v.into(),
            valid: TimeRange { start: s, end: Some(e) },
            paragraph_index: 0,
            surface_form: SurfaceForm::DurationCommonsense,
        };
        Context {
            context_id: "c0".into(),
            entity: "Barack Hussein Obama".into(),
            paragraphs: vec!["...".into()],
            facts: vec![
                fact("Civil Rights Attorney", 1993, 2004),
                fact("Federal Senator", 2005, 2008),
                fact("President of the United States", 2009, 2017),
            ],
        }
    }

    fn question(text: &str, year: i32, answer: &str) -> Question {
        Question {
            question_id: "q0".into(),
            context_id: "c0".into(),
            text: text.into(),
            anchor_year: year,
            qtype: QuestionType::Commonsense,
            answer: answer.into(),
            subset: 5,
            split: Split::Train,
        }
    }

    #[test]
    fn contrastive_changes_answer() {
        let ctx = obama();
        let q =
            question("What position did Barack Hussein Obama hold in 2010?", 2010, "President of the United States");
        for seed in 0..50 {
            let mut rng = rng::stream(seed, rng::TRANSFORM, &[]);
            let (text, year) = make_contrastive(&q, &ctx, 190, 2023, &mut rng).unwrap();
            assert_eq!(text, format!("What position did Barack Hussein Obama hold in {year}?"));
            assert_ne!(ctx.answer_at(Relation::Position, year), q.answer);
        }
    }

    #[test]
    fn contrastive_enumeration_on_two_fact_timeline() {
        let mut ctx = obama();
        ctx.facts = vec![
            TimelineFact {
                value: "A".into(),
                valid: TimeRange { start: 2000, end: Some(2005) },
                ..ctx.facts[0].clone()
            },
            TimelineFact {
                value: "B".into(),
                valid: TimeRange { start: 2006, end: Some(2010) },
                ..ctx.facts[0].clone()
            },
        ];
        let q = question("What position did Barack Hussein Obama hold in 2003?", 2003, "A");
        // brute force: every year in 2006..=2010 resolves to B
        for y in 2006..=2010 {
            assert_eq!(ctx.answer_at(Relation::Position, y), "B");
        }
        for seed in 0..30 {
            let mut rng = rng::stream(seed, rng::TRANSFORM, &[]);
            let (_, year) = make_contrastive(&q, &ctx, 1990, 2023, &mut rng).unwrap();
            assert!(!(2000..=2005).contains(&year));
        }
    }

    #[test]
    fn contrastive_unavailable_for_single_open_fact() {
        let mut ctx = obama();
        ctx.facts = vec![TimelineFact { valid: TimeRange::open(100), ..ctx.facts[0].clone() }];
        let q = question("What position did Barack Hussein Obama hold in 2003?", 2003, "Civil Rights Attorney");
        let mut rng = rng::stream(0, rng::TRANSFORM, &[]);
        assert!(matches!(make_contrastive(&q, &ctx, 190, 2023, &mut rng), Err(Error::TransformUnavailable(_))));
    }

    #[test]
    fn paraphrase_when_available() {
        let ctx = obama();
        let q =
            question("What position did Barack Hussein Obama hold in 2010?", 2010, "President of the United States");
        let corpus = Corpus {
            contexts: vec![ctx.clone()],
            questions: vec![
                q.clone(),
                Question {
                    question_id: "q1".into(),
                    text: "Barack Hussein Obama took which position in 1995?".into(),
                    anchor_year: 1995,
                    ..q.clone()
                },
            ],
        };
        let catalog = TemplateCatalog::from_corpus(&corpus);
        let mut rng = rng::stream(1, rng::TRANSFORM, &[]);
        let (text, method) = make_similar(&q, &ctx, &catalog, &mut rng).unwrap();
        assert_eq!(text, "Barack Hussein Obama took which position in 2010?");
        assert_eq!(method, SimilarMethod::DatasetParaphrase);
    }

    #[test]
    fn shuffle_without_paraphrase() {
        let ctx = obama();
        let q = question("What position did Barack Hussein Obama hold in 2010?", 2010, "x");
        let catalog = TemplateCatalog::default();
        let mut rng = rng::stream(2, rng::TRANSFORM, &[]);
        let (text, method) = make_similar(&q, &ctx, &catalog, &mut rng).unwrap();
        assert_eq!(method, SimilarMethod::TokenShuffle);
        assert_ne!(text, q.text);
        assert!(text.ends_with(" 2010?"));
        let mut a: Vec<&str> = text.split_whitespace().collect();
        let mut b: Vec<&str> = q.text.split_whitespace().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn single_movable_token_keeps_identity() {
        let mut rng = rng::stream(0, rng::TRANSFORM, &[]);
        assert_eq!(shuffle_tokens("Who 2010?", &mut rng), "Who 2010?");
        let q = question("Who 2010?", 2010, "");
        let (text, method) = make_similar(&q, &obama(), &TemplateCatalog::default(), &mut rng).unwrap();
        assert_eq!((text.as_str(), method), ("Who 2010?", SimilarMethod::TokenShuffle));
        let q1 = question("2010?", 2010, "");
        assert!(make_similar(&q1, &obama(), &TemplateCatalog::default(), &mut rng).is_err());
    }
}
