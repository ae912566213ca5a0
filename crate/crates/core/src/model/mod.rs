//! Candidate-selection QA model.
//!
//! The representation of a (question, context) pair is the mean of its token
//! embeddings. Each candidate answer is scored by
//! `(W·rep + b)·embed(candidate) + w_tau·tau`, where `embed` is the mean of
//! the candidate's token embeddings and `tau` flags whether the question's
//! anchor year falls in the period the context text states for that
//! candidate.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::corpus::{Context, Question};
use crate::error::{Error, Result};
use crate::rng::{fnv1a, StreamRng};
use crate::temporal_text::{extract_years, is_valid_year, parse_range, sentences, year_in_range, TimeRange};

pub mod checkpoint;
pub mod optim;

pub use checkpoint::Checkpoint;
pub use optim::{apply_update, AdamWConfig, OptimizerState};

pub const DEFAULT_DIM: usize = 32;
pub const DEFAULT_OOV_BUCKETS: usize = 256;
pub const INIT_SCALE: f64 = 0.1;
/// Token standing for the empty ("no answer") candidate. Always id 0.
pub const NONE_TOKEN: &str = "<none>";

/// Lowercased alphanumeric runs. A year additionally yields its decade
/// ("1963" -> "1963", "1960s") so nearby years share a feature.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        let word = word.to_lowercase();
        let year = (3..=4).contains(&word.len()) && !word.starts_with('0') && word.bytes().all(|b| b.is_ascii_digit());
        let decade = year
            .then(|| word.parse::<i32>().ok())
            .flatten()
            .filter(|y| is_valid_year(*y))
            .map(|y| format!("{}0s", y / 10));
        out.push(word);
        out.extend(decade);
    }
    out
}

/// Known tokens plus a band of hash buckets for everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    oov_buckets: usize,
}

impl Vocab {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, oov_buckets: usize) -> Result<Self> {
        let mut seen: Vec<String> = texts.into_iter().flat_map(tokenize).collect();
        seen.sort();
        seen.dedup();
        let mut tokens = vec![NONE_TOKEN.to_string()];
        tokens.extend(seen.into_iter().filter(|t| t != NONE_TOKEN));
        Self::from_tokens(tokens, oov_buckets)
    }

    /// Rebuild from a stored token list; index 0 must be [`NONE_TOKEN`].
    pub fn from_tokens(tokens: Vec<String>, oov_buckets: usize) -> Result<Self> {
        if oov_buckets == 0 {
            return Err(Error::validation("oov_buckets must be at least 1"));
        }
        if tokens.first().map(String::as_str) != Some(NONE_TOKEN) {
            return Err(Error::validation(format!("vocabulary must start with {NONE_TOKEN}")));
        }
        let index: HashMap<String, usize> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if index.len() != tokens.len() {
            return Err(Error::validation("vocabulary has duplicate tokens"));
        }
        Ok(Vocab { tokens, index, oov_buckets })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn oov_buckets(&self) -> usize {
        self.oov_buckets
    }

    /// Rows of the embedding table.
    pub fn len(&self) -> usize {
        self.tokens.len() + self.oov_buckets
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        match self.index.get(token) {
            Some(&i) => i,
            None => self.tokens.len() + (fnv1a(token) % self.oov_buckets as u64) as usize,
        }
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        tokenize(text).iter().map(|t| self.id(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub text: String,
    pub tokens: Vec<usize>,
    /// Validity period read off the first sentence mentioning the candidate.
    pub evidence: Option<TimeRange>,
}

/// Per-context part of the model input, shared by every question on it.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextEncoding {
    pub context_tokens: Vec<usize>,
    /// Fact values in document order, then `""`.
    pub candidates: Vec<Candidate>,
}

fn evidence_range(ctx: &Context, value: &str) -> Option<TimeRange> {
    let sentence = ctx.paragraphs.iter().flat_map(|p| sentences(p)).find(|s| s.contains(value))?;
    parse_range(sentence).or_else(|| {
        let years: Vec<i32> = extract_years(sentence).iter().map(|m| m.value).collect();
        let (lo, hi) = (*years.iter().min()?, *years.iter().max()?);
        Some(TimeRange { start: lo, end: Some(hi) })
    })
}

impl ContextEncoding {
    pub fn new(ctx: &Context, vocab: &Vocab) -> Self {
        let text = ctx.paragraphs.join("\n");
        let mut values: Vec<(usize, &str)> = Vec::new();
        for f in &ctx.facts {
            if values.iter().any(|(_, v)| *v == f.value) {
                continue;
            }
            values.push((text.find(&f.value).unwrap_or(usize::MAX), &f.value));
        }
        values.sort_by_key(|(pos, _)| *pos);
        let mut candidates: Vec<Candidate> = values
            .into_iter()
            .map(|(_, v)| {
                let mut tokens = vocab.encode(v);
                if tokens.is_empty() {
                    tokens.push(0);
                }
                Candidate { text: v.to_string(), tokens, evidence: evidence_range(ctx, v) }
            })
            .collect();
        candidates.push(Candidate { text: String::new(), tokens: vec![0], evidence: None });
        ContextEncoding { context_tokens: vocab.encode(&text), candidates }
    }

    pub fn gold_index(&self, answer: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c.text == answer)
    }
}

/// Encodings of every context of a corpus, keyed by context id.
#[derive(Debug, Clone, Default)]
pub struct EncodingCache(BTreeMap<String, ContextEncoding>);

impl EncodingCache {
    pub fn new<'a>(contexts: impl IntoIterator<Item = &'a Context>, vocab: &Vocab) -> Self {
        EncodingCache(contexts.into_iter().map(|c| (c.context_id.clone(), ContextEncoding::new(c, vocab))).collect())
    }

    pub fn get(&self, context_id: &str) -> Result<&ContextEncoding> {
        self.0.get(context_id).ok_or_else(|| Error::validation(format!("unknown context '{context_id}'")))
    }
}

/// Read-only bundle for answering corpus questions.
#[derive(Debug, Clone, Copy)]
pub struct Predictor<'a> {
    pub vocab: &'a Vocab,
    pub params: &'a ModelParams,
    pub cache: &'a EncodingCache,
}

impl<'a> Predictor<'a> {
    pub fn answer(&self, question: &Question) -> Result<&'a str> {
        let enc = self.cache.get(&question.context_id)?;
        predict(&EncodedInput::new(&question.text, self.vocab, enc), self.params)
    }
}

/// One model input: a question against a context's candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInput<'a> {
    pub question_tokens: Vec<usize>,
    pub anchor_year: Option<i32>,
    pub context_tokens: &'a [usize],
    pub candidates: &'a [Candidate],
}

impl<'a> EncodedInput<'a> {
    pub fn new(question: &str, vocab: &Vocab, ctx: &'a ContextEncoding) -> Self {
        EncodedInput {
            question_tokens: vocab.encode(question),
            anchor_year: extract_years(question).first().map(|m| m.value),
            context_tokens: &ctx.context_tokens,
            candidates: &ctx.candidates,
        }
    }

    pub fn tau(&self) -> Vec<f64> {
        self.candidates
            .iter()
            .map(|c| match (self.anchor_year, c.evidence) {
                (Some(y), Some(r)) if !c.text.is_empty() && year_in_range(y, &r) => 1.0,
                _ => 0.0,
            })
            .collect()
    }

    fn all_tokens(&self) -> impl Iterator<Item = usize> + '_ {
        self.question_tokens.iter().chain(self.context_tokens).copied()
    }
}

/// Flat parameter vector: embeddings (V×d), W (d×d, row-major), b (d), w_tau.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub vocab_size: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

impl ModelParams {
    pub fn n_params(vocab_size: usize, dim: usize) -> usize {
        vocab_size * dim + dim * dim + dim + 1
    }

    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        ModelParams { vocab_size, dim, data: vec![0.0; Self::n_params(vocab_size, dim)] }
    }

    /// Every entry uniform in `(-scale, scale)`.
    pub fn init(vocab_size: usize, dim: usize, scale: f64, rng: &mut StreamRng) -> Self {
        let mut p = Self::zeros(vocab_size, dim);
        for x in &mut p.data {
            *x = rng.gen_range(-scale..scale);
        }
        p
    }

    pub fn from_data(vocab_size: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != Self::n_params(vocab_size, dim) {
            return Err(Error::Dimension(format!(
                "{} values for V={vocab_size}, d={dim} (need {})",
                data.len(),
                Self::n_params(vocab_size, dim)
            )));
        }
        Ok(ModelParams { vocab_size, dim, data })
    }

    pub fn emb(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn emb_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    fn w_offset(&self) -> usize {
        self.vocab_size * self.dim
    }

    pub fn w(&self) -> &[f64] {
        let o = self.w_offset();
        &self.data[o..o + self.dim * self.dim]
    }

    pub fn w_mut(&mut self) -> &mut [f64] {
        let o = self.w_offset();
        &mut self.data[o..o + self.dim * self.dim]
    }

    pub fn b(&self) -> &[f64] {
        let o = self.w_offset() + self.dim * self.dim;
        &self.data[o..o + self.dim]
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        let o = self.w_offset() + self.dim * self.dim;
        &mut self.data[o..o + self.dim]
    }

    pub fn w_tau(&self) -> f64 {
        self.data[self.data.len() - 1]
    }

    pub fn w_tau_mut(&mut self) -> &mut f64 {
        self.data.last_mut().expect("non-empty")
    }

    pub fn clear(&mut self) {
        self.data.fill(0.0);
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|x| !x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representation(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScores {
    pub logits: Vec<f64>,
}

fn check_tokens(input: &EncodedInput, params: &ModelParams) -> Result<()> {
    if input.question_tokens.is_empty() || input.context_tokens.is_empty() {
        return Err(Error::validation("empty token sequence"));
    }
    let too_big = input
        .all_tokens()
        .chain(input.candidates.iter().flat_map(|c| c.tokens.iter().copied()))
        .find(|&t| t >= params.vocab_size);
    if let Some(t) = too_big {
        return Err(Error::Dimension(format!("token id {t} outside table of {}", params.vocab_size)));
    }
    if input.candidates.iter().any(|c| c.tokens.is_empty()) {
        return Err(Error::validation("candidate without tokens"));
    }
    Ok(())
}

pub fn encode(input: &EncodedInput, params: &ModelParams) -> Result<Representation> {
    check_tokens(input, params)?;
    let mut v = vec![0.0; params.dim];
    let mut n = 0usize;
    for t in input.all_tokens() {
        for (a, e) in v.iter_mut().zip(params.emb(t)) {
            *a += e;
        }
        n += 1;
    }
    for a in &mut v {
        *a /= n as f64;
    }
    Ok(Representation(v))
}

fn candidate_embedding(c: &Candidate, params: &ModelParams) -> Vec<f64> {
    let mut v = vec![0.0; params.dim];
    for &t in &c.tokens {
        for (a, e) in v.iter_mut().zip(params.emb(t)) {
            *a += e;
        }
    }
    let n = c.tokens.len() as f64;
    v.iter_mut().for_each(|a| *a /= n);
    v
}

fn project(rep: &Representation, params: &ModelParams) -> Vec<f64> {
    let d = params.dim;
    let w = params.w();
    (0..d).map(|i| params.b()[i] + w[i * d..(i + 1) * d].iter().zip(&rep.0).map(|(a, b)| a * b).sum::<f64>()).collect()
}

pub fn score_candidates(rep: &Representation, input: &EncodedInput, params: &ModelParams) -> CandidateScores {
    let h = project(rep, params);
    let tau = input.tau();
    let logits = input
        .candidates
        .iter()
        .zip(tau)
        .map(|(c, t)| {
            let e = candidate_embedding(c, params);
            h.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() + params.w_tau() * t
        })
        .collect();
    CandidateScores { logits }
}

/// Index of the largest logit; the lowest index wins ties.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate() {
        if l > logits[best] {
            best = i;
        }
    }
    best
}

pub fn predict<'a>(input: &EncodedInput<'a>, params: &ModelParams) -> Result<&'a str> {
    let rep = encode(input, params)?;
    let scores = score_candidates(&rep, input, params);
    Ok(&input.candidates[argmax(&scores.logits)].text)
}

/// Accumulate the gradient of the logits into `grads`; returns d(loss)/d(rep).
pub fn score_backward(
    rep: &Representation,
    input: &EncodedInput,
    params: &ModelParams,
    d_logits: &[f64],
    grads: &mut Gradients,
) -> Vec<f64> {
    let d = params.dim;
    let h = project(rep, params);
    let tau = input.tau();
    let mut dh = vec![0.0; d];
    for ((c, &g), t) in input.candidates.iter().zip(d_logits).zip(tau) {
        if g == 0.0 {
            continue;
        }
        let e = candidate_embedding(c, params);
        for (a, x) in dh.iter_mut().zip(&e) {
            *a += g * x;
        }
        let scale = g / c.tokens.len() as f64;
        for &tok in &c.tokens {
            for (a, x) in grads.emb_mut(tok).iter_mut().zip(&h) {
                *a += scale * x;
            }
        }
        *grads.w_tau_mut() += g * t;
    }
    {
        let gw = grads.w_mut();
        for i in 0..d {
            for k in 0..d {
                gw[i * d + k] += dh[i] * rep.0[k];
            }
        }
    }
    for (a, x) in grads.b_mut().iter_mut().zip(&dh) {
        *a += x;
    }
    let w = params.w();
    (0..d).map(|k| (0..d).map(|i| w[i * d + k] * dh[i]).sum()).collect()
}

/// Spread d(loss)/d(rep) back onto the pooled token embeddings.
pub fn encode_backward(input: &EncodedInput, d_rep: &[f64], grads: &mut Gradients) {
    let n = (input.question_tokens.len() + input.context_tokens.len()) as f64;
    for t in input.all_tokens() {
        for (a, x) in grads.emb_mut(t).iter_mut().zip(d_rep) {
            *a += x / n;
        }
    }
}
