//! Brute-force reference implementations for cross-checking the pipeline.
//!
//! Nothing here calls into the code it checks. Answers come from a linear
//! scan of the fact list and gradients from central differences.

use crate::corpus::{Context, Corpus, Relation};
use crate::error::{Error, Result};
use crate::transform::QuestionTriplet;

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub id: String,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleReport {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }

    fn record(&mut self, id: &str, expected: impl ToString, actual: impl ToString, ok: bool) {
        self.checked += 1;
        if !ok {
            self.mismatches.push(Mismatch {
                id: id.into(),
                expected: expected.to_string(),
                actual: actual.to_string(),
            });
        }
    }
}

/// Value of the single fact of `relation` covering `year`, `""` if none.
pub fn oracle_answer(ctx: &Context, relation: Relation, year: i32) -> Result<String> {
    let mut hits = Vec::new();
    for f in &ctx.facts {
        if f.relation != relation {
            continue;
        }
        let after_start = year >= f.valid.start;
        let before_end = match f.valid.end {
            None => true,
            Some(e) => year <= e,
        };
        if after_start && before_end {
            hits.push(f.value.clone());
        }
    }
    match hits.len() {
        0 => Ok(String::new()),
        1 => Ok(hits.remove(0)),
        n => Err(Error::validation(format!("{n} {relation} facts of context {} cover {year}", ctx.context_id))),
    }
}

/// Recompute every stored answer by scanning the facts.
pub fn check_corpus_answers(corpus: &Corpus) -> Result<OracleReport> {
    let mut report = OracleReport::default();
    for q in &corpus.questions {
        let ctx = corpus
            .context(&q.context_id)
            .ok_or_else(|| Error::validation(format!("unknown context {}", q.context_id)))?;
        let Some(rel) = ctx.question_relation(q) else {
            report.record(&q.question_id, "a resolvable relation", "none", false);
            continue;
        };
        let expected = oracle_answer(ctx, rel, q.anchor_year)?;
        report.record(&q.question_id, &expected, &q.answer, expected == q.answer);
    }
    Ok(report)
}

fn naive_tokens(s: &str) -> Vec<String> {
    let mut cleaned = String::new();
    for c in s.chars() {
        if c.is_alphanumeric() {
            cleaned.extend(c.to_lowercase());
        } else if c.is_whitespace() {
            cleaned.push(' ');
        }
    }
    let mut out = Vec::new();
    for w in cleaned.split(' ') {
        if !w.is_empty() && w != "a" && w != "an" && w != "the" {
            out.push(w.to_string());
        }
    }
    out
}

pub fn naive_exact_match(pred: &str, gold: &str) -> f64 {
    if naive_tokens(pred) == naive_tokens(gold) {
        1.0
    } else {
        0.0
    }
}

pub fn naive_token_f1(pred: &str, gold: &str) -> f64 {
    let p = naive_tokens(pred);
    let mut g = naive_tokens(gold);
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let (np, ng) = (p.len() as f64, g.len() as f64);
    let mut same = 0.0;
    for t in &p {
        if let Some(i) = g.iter().position(|x| x == t) {
            g.remove(i);
            same += 1.0;
        }
    }
    if same == 0.0 {
        return 0.0;
    }
    let precision = same / np;
    let recall = same / ng;
    2.0 * precision * recall / (precision + recall)
}

/// Central-difference gradient of `f` at `x`.
pub fn fd_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        out.push((up - down) / (2.0 * h));
    }
    out
}

fn year_multiset(text: &str) -> Vec<i32> {
    let mut years = Vec::new();
    for w in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        let ok = (w.len() == 3 || w.len() == 4) && !w.starts_with('0') && w.chars().all(|c| c.is_ascii_digit());
        if let Some(y) = ok.then(|| w.parse::<i32>().unwrap()).filter(|y| (100..=2100).contains(y)) {
            years.push(y);
        }
    }
    years.sort();
    years
}

fn non_temporal_tokens(text: &str) -> Vec<String> {
    let mut toks: Vec<String> =
        text.split_whitespace().filter(|t| year_multiset(t).is_empty()).map(str::to_string).collect();
    toks.sort();
    toks
}

/// Check generated triplets against the soundness properties of each transform.
pub fn check_triplets<'a>(
    corpus: &Corpus,
    triplets: impl IntoIterator<Item = &'a QuestionTriplet>,
) -> Result<OracleReport> {
    let mut report = OracleReport::default();
    for t in triplets {
        let q = &t.original;
        let ctx = corpus
            .context(&q.context_id)
            .ok_or_else(|| Error::validation(format!("unknown context {}", q.context_id)))?;
        let id = &q.question_id;
        let rel = ctx.question_relation(q);
        let contrastive = match rel {
            Some(r) => oracle_answer(ctx, r, t.contrastive_anchor)?,
            None => String::from("<no relation>"),
        };
        report.record(
            &format!("{id}:contrastive"),
            format!("answer other than '{}'", q.answer),
            &contrastive,
            rel.is_some() && contrastive != q.answer,
        );
        let (ys, yo) = (year_multiset(&t.similar_text), year_multiset(&q.text));
        report.record(&format!("{id}:years"), format!("{yo:?}"), format!("{ys:?}"), ys == yo);
        if t.similar_method == crate::transform::SimilarMethod::TokenShuffle {
            let (a, b) = (non_temporal_tokens(&t.similar_text), non_temporal_tokens(&q.text));
            report.record(&format!("{id}:tokens"), b.join(" "), a.join(" "), a == b);
        }
    }
    Ok(report)
}
