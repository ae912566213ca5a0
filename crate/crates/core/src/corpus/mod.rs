//! Temporally annotated contexts and the questions asked about them.
//!
//! A corpus is a set of [`Context`]s, each describing one entity through a
//! timeline of [`TimelineFact`]s, and a set of [`Question`]s partitioned into
//! `K` chronological subsets with train/dev/test splits.

mod io;
mod synth;
pub mod templates;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal_text::{year_in_range, TimeRange};

pub use io::{
    corpus_digest, ingest_corpus, read_contexts, read_questions, validate_corpus, write_contexts, write_questions,
    ContextRecord, FactRecord, QuestionRecord,
};
pub use synth::{generate_question, synthesize_corpus};

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $s:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $s),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($name::$variant),)+
                    other => Err(Error::validation(format!(
                        "unknown {} '{}'", stringify!($name), other
                    ))),
                }
            }
        }
    };
}

string_enum!(Relation {
    Position => "position",
    Team => "team",
    Employer => "employer",
    Residence => "residence",
    Title => "title",
});

string_enum!(
    /// How a fact's validity range is expressed in the context text.
    SurfaceForm {
        ExplicitYear => "explicit_year",
        DurationCommonsense => "duration_commonsense",
        SplitAcrossSentences => "split_across_sentences",
        SplitAcrossParagraphs => "split_across_paragraphs",
    }
);

string_enum!(QuestionType {
    Easy => "easy",
    Commonsense => "commonsense",
    MultiDescription => "multi_description",
    MultiParagraph => "multi_paragraph",
    Unanswerable => "unanswerable",
});

string_enum!(Split {
    Train => "train",
    Dev => "dev",
    Test => "test",
});

impl QuestionType {
    /// Index into a `type_mix` vector.
    pub fn index(self) -> usize {
        QuestionType::ALL.iter().position(|t| *t == self).unwrap()
    }

    /// Type of an answerable question about a fact with this surface form.
    pub fn for_surface(form: SurfaceForm) -> Self {
        match form {
            SurfaceForm::ExplicitYear => QuestionType::Easy,
            SurfaceForm::DurationCommonsense => QuestionType::Commonsense,
            SurfaceForm::SplitAcrossSentences => QuestionType::MultiDescription,
            SurfaceForm::SplitAcrossParagraphs => QuestionType::MultiParagraph,
        }
    }
}

impl Split {
    pub fn index(self) -> usize {
        Split::ALL.iter().position(|t| *t == self).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimelineFact {
    pub relation: Relation,
    pub value: String,
    pub valid: TimeRange,
    pub paragraph_index: usize,
    pub surface_form: SurfaceForm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub context_id: String,
    pub entity: String,
    pub paragraphs: Vec<String>,
    pub facts: Vec<TimelineFact>,
}

impl Context {
    /// Value of the fact of `relation` covering `year`, or `""` when none does.
    pub fn answer_at(&self, relation: Relation, year: i32) -> &str {
        self.facts
            .iter()
            .find(|f| f.relation == relation && year_in_range(year, &f.valid))
            .map(|f| f.value.as_str())
            .unwrap_or("")
    }

    pub fn relations(&self) -> Vec<Relation> {
        let mut r: Vec<Relation> = self.facts.iter().map(|f| f.relation).collect();
        r.sort();
        r.dedup();
        r
    }

    /// Relation a question about this context asks for.
    ///
    /// Taken from the question's phrasing when it matches a built-in template,
    /// else from the fact carrying the answer, else from a single-relation
    /// context.
    pub fn question_relation(&self, q: &Question) -> Option<Relation> {
        if let Some((rel, _)) = templates::match_template(&q.text, &self.entity, q.anchor_year) {
            return Some(rel);
        }
        if !q.answer.is_empty() {
            if let Some(f) = self.facts.iter().find(|f| f.value == q.answer) {
                return Some(f.relation);
            }
        }
        match self.relations().as_slice() {
            [only] => Some(*only),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub question_id: String,
    pub context_id: String,
    pub text: String,
    pub anchor_year: i32,
    pub qtype: QuestionType,
    /// Empty for unanswerable questions.
    pub answer: String,
    /// 1-based subset index.
    pub subset: usize,
    pub split: Split,
}

impl Question {
    pub fn is_answerable(&self) -> bool {
        !self.answer.is_empty()
    }
}

/// Default subset boundaries: 190-1939, 1940-1976, 1977-1998, 1999-2009, 2010-now.
pub fn default_boundaries() -> Vec<TimeRange> {
    vec![
        TimeRange { start: 190, end: Some(1939) },
        TimeRange { start: 1940, end: Some(1976) },
        TimeRange { start: 1977, end: Some(1998) },
        TimeRange { start: 1999, end: Some(2009) },
        TimeRange { start: 2010, end: None },
    ]
}

/// Question-type proportions from the reference train counts
/// 4068/3252/6128/15265/6301 of 35014, in [`QuestionType::ALL`] order.
pub const DEFAULT_TYPE_COUNTS: [f64; 5] = [4068.0, 3252.0, 6128.0, 15265.0, 6301.0];
/// Split proportions from the reference totals 35014/7424/7408.
pub const DEFAULT_SPLIT_COUNTS: [f64; 3] = [35014.0, 7424.0, 7408.0];

fn normalized<const N: usize>(counts: [f64; N]) -> [f64; N] {
    let total: f64 = counts.iter().sum();
    counts.map(|c| c / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub boundaries: Vec<TimeRange>,
    pub type_mix: [f64; 5],
    pub split_mix: [f64; 3],
    pub n_contexts: usize,
    pub n_questions: usize,
    /// Upper bound on paragraphs per synthesized context.
    pub max_paragraphs: usize,
    pub now_year: i32,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            boundaries: default_boundaries(),
            type_mix: normalized(DEFAULT_TYPE_COUNTS),
            split_mix: normalized(DEFAULT_SPLIT_COUNTS),
            n_contexts: 300,
            n_questions: 3750,
            max_paragraphs: 4,
            now_year: 2023,
            seed: 0,
        }
    }
}

impl CorpusSpec {
    pub fn k(&self) -> usize {
        self.boundaries.len()
    }

    pub fn earliest_year(&self) -> i32 {
        self.boundaries.first().map(|b| b.start).unwrap_or(crate::temporal_text::MIN_YEAR)
    }

    pub fn validate(&self) -> Result<()> {
        validate_boundaries(&self.boundaries, self.now_year)?;
        check_mix("type_mix", &self.type_mix)?;
        check_mix("split_mix", &self.split_mix)?;
        if self.n_questions > 0 && self.n_contexts == 0 {
            return Err(Error::Infeasible("n_questions > 0 requires at least one context".into()));
        }
        if self.max_paragraphs == 0 {
            return Err(Error::validation("max_paragraphs must be at least 1"));
        }
        Ok(())
    }
}

fn check_mix(name: &str, mix: &[f64]) -> Result<()> {
    if mix.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::validation(format!("{name} entries must be finite and non-negative")));
    }
    let sum: f64 = mix.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("{name} sums to {sum}, expected 1")));
    }
    Ok(())
}

pub fn validate_boundaries(boundaries: &[TimeRange], now_year: i32) -> Result<()> {
    if boundaries.is_empty() {
        return Err(Error::validation("at least one subset boundary is required"));
    }
    for (i, b) in boundaries.iter().enumerate() {
        let last = i + 1 == boundaries.len();
        match b.end {
            None if !last => {
                return Err(Error::validation(format!("only the last boundary may be open (subset {})", i + 1)))
            }
            Some(e) if e < b.start => return Err(Error::validation(format!("boundary {b} is reversed"))),
            _ => {}
        }
        if let Some(next) = boundaries.get(i + 1) {
            if b.end.map(|e| e + 1) != Some(next.start) {
                return Err(Error::validation(format!("boundaries {b} and {next} are not contiguous")));
            }
        }
    }
    let last = boundaries.last().unwrap();
    if last.end.is_some_and(|e| e < now_year) {
        return Err(Error::validation(format!(
            "boundaries end at {} and do not reach now ({now_year})",
            last.end.unwrap()
        )));
    }
    if last.start > now_year {
        return Err(Error::validation("last subset starts after now"));
    }
    Ok(())
}

/// 1-based subset holding year `y`. Years below the first bound clamp to 1,
/// years past the last bounded end clamp to K.
pub fn assign_subset(y: i32, boundaries: &[TimeRange]) -> usize {
    if let Some(i) = boundaries.iter().position(|b| year_in_range(y, b)) {
        return i + 1;
    }
    match boundaries.first() {
        Some(first) if y < first.start => 1,
        _ => boundaries.len().max(1),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub contexts: Vec<Context>,
    pub questions: Vec<Question>,
}

impl Corpus {
    pub fn context(&self, id: &str) -> Option<&Context> {
        self.contexts.binary_search_by(|c| c.context_id.as_str().cmp(id)).ok().map(|i| &self.contexts[i])
    }

    pub fn sort(&mut self) {
        self.contexts.sort_by(|a, b| a.context_id.cmp(&b.context_id));
        self.questions.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    }

    pub fn questions_in(&self, subset: usize, split: Split) -> Vec<&Question> {
        self.questions.iter().filter(|q| q.subset == subset && q.split == split).collect()
    }

    pub fn stats(&self, k: usize) -> CorpusStats {
        let mut by_subset = vec![[0usize; 3]; k];
        let mut by_type = [[0usize; 3]; 5];
        for q in &self.questions {
            if (1..=k).contains(&q.subset) {
                by_subset[q.subset - 1][q.split.index()] += 1;
            }
            by_type[q.qtype.index()][q.split.index()] += 1;
        }
        CorpusStats { by_subset, by_type }
    }
}

/// Question counts per subset and per type, broken down by split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    pub by_subset: Vec<[usize; 3]>,
    pub by_type: [[usize; 3]; 5],
}

impl CorpusStats {
    pub fn render(&self, boundaries: &[TimeRange]) -> String {
        let mut s = String::from("| | Train | Dev | Test |\n|---|---:|---:|---:|\n");
        for (i, row) in self.by_subset.iter().enumerate() {
            let label = boundaries
                .get(i)
                .map(|b| format!("Subset{} ({b})", i + 1))
                .unwrap_or_else(|| format!("Subset{}", i + 1));
            s += &format!("| {label} | {} | {} | {} |\n", row[0], row[1], row[2]);
        }
        for (t, row) in QuestionType::ALL.iter().zip(self.by_type.iter()) {
            s += &format!("| {t} | {} | {} | {} |\n", row[0], row[1], row[2]);
        }
        let mut total = [0usize; 3];
        for row in &self.by_type {
            for j in 0..3 {
                total[j] += row[j];
            }
        }
        s += &format!("| total | {} | {} | {} |\n", total[0], total[1], total[2]);
        s
    }

    pub fn per_subset_totals(&self) -> Vec<usize> {
        self.by_subset.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn type_totals(&self) -> [usize; 5] {
        self.by_type.map(|r| r.iter().sum())
    }
}

/// Questions grouped by subset, in id order.
pub fn group_by_subset<'a>(qs: impl IntoIterator<Item = &'a Question>) -> BTreeMap<usize, Vec<&'a Question>> {
    let mut m: BTreeMap<usize, Vec<&Question>> = BTreeMap::new();
    for q in qs {
        m.entry(q.subset).or_default().push(q);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_follow_default_boundaries() {
        let b = default_boundaries();
        assert_eq!(assign_subset(1963, &b), 2);
        assert_eq!(assign_subset(1995, &b), 3);
        assert_eq!(assign_subset(2010, &b), 5);
        assert_eq!(assign_subset(190, &b), 1);
        assert_eq!(assign_subset(1939, &b), 1);
        assert_eq!(assign_subset(1940, &b), 2);
        assert_eq!(assign_subset(150, &b), 1);
        assert_eq!(assign_subset(2099, &b), 5);
    }

    #[test]
    fn clamps_above_bounded_end() {
        let b = vec![TimeRange { start: 100, end: Some(200) }, TimeRange { start: 201, end: Some(300) }];
        assert_eq!(assign_subset(999, &b), 2);
    }

    #[test]
    fn default_mix_matches_reference_counts() {
        let spec = CorpusSpec::default();
        let rounded: Vec<f64> = spec.type_mix.iter().map(|p| (p * 1000.0).round() / 1000.0).collect();
        assert_eq!(rounded, vec![0.116, 0.093, 0.175, 0.436, 0.180]);
        spec.validate().unwrap();
    }

    #[test]
    fn boundary_validation() {
        let mut b = default_boundaries();
        validate_boundaries(&b, 2023).unwrap();
        b[1].start = 1941;
        assert!(validate_boundaries(&b, 2023).is_err());
        let mut b = default_boundaries();
        b[4].end = Some(2015);
        assert!(validate_boundaries(&b, 2023).is_err());
        let mut b = default_boundaries();
        b[0].end = None;
        assert!(validate_boundaries(&b, 2023).is_err());
    }

    #[test]
    fn mix_must_sum_to_one() {
        let spec = CorpusSpec { type_mix: [0.2; 5], ..CorpusSpec::default() };
        spec.validate().unwrap();
        let spec = CorpusSpec { type_mix: [0.3; 5], ..CorpusSpec::default() };
        assert!(spec.validate().is_err());
    }
}
