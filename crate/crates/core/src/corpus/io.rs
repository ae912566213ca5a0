//! JSON-lines persistence and validation for contexts and questions.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{assign_subset, Context, Corpus, Question, QuestionType, TimelineFact};
use crate::error::{Error, Result};
use crate::temporal_text::{extract_years, year_in_range, TimeRange};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactRecord {
    pub relation: String,
    pub value: String,
    pub start_year: i32,
    pub end_year: Option<i32>,
    pub paragraph_index: usize,
    pub surface_form: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextRecord {
    pub context_id: String,
    pub entity: String,
    pub paragraphs: Vec<String>,
    pub facts: Vec<FactRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionRecord {
    pub question_id: String,
    pub context_id: String,
    pub text: String,
    pub anchor_year: i32,
    pub qtype: String,
    pub answer: String,
    pub subset: usize,
    pub split: String,
}

impl From<&Context> for ContextRecord {
    fn from(c: &Context) -> Self {
        ContextRecord {
            context_id: c.context_id.clone(),
            entity: c.entity.clone(),
            paragraphs: c.paragraphs.clone(),
            facts: c
                .facts
                .iter()
                .map(|f| FactRecord {
                    relation: f.relation.as_str().into(),
                    value: f.value.clone(),
                    start_year: f.valid.start,
                    end_year: f.valid.end,
                    paragraph_index: f.paragraph_index,
                    surface_form: f.surface_form.as_str().into(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ContextRecord> for Context {
    type Error = Error;
    fn try_from(r: ContextRecord) -> Result<Self> {
        let facts = r
            .facts
            .into_iter()
            .map(|f| {
                Ok(TimelineFact {
                    relation: f.relation.parse()?,
                    value: f.value,
                    valid: TimeRange::new(f.start_year, f.end_year)?,
                    paragraph_index: f.paragraph_index,
                    surface_form: f.surface_form.parse()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Context { context_id: r.context_id, entity: r.entity, paragraphs: r.paragraphs, facts })
    }
}

impl From<&Question> for QuestionRecord {
    fn from(q: &Question) -> Self {
        QuestionRecord {
            question_id: q.question_id.clone(),
            context_id: q.context_id.clone(),
            text: q.text.clone(),
            anchor_year: q.anchor_year,
            qtype: q.qtype.as_str().into(),
            answer: q.answer.clone(),
            subset: q.subset,
            split: q.split.as_str().into(),
        }
    }
}

impl TryFrom<QuestionRecord> for Question {
    type Error = Error;
    fn try_from(r: QuestionRecord) -> Result<Self> {
        Ok(Question {
            question_id: r.question_id,
            context_id: r.context_id,
            text: r.text,
            anchor_year: r.anchor_year,
            qtype: r.qtype.parse()?,
            answer: r.answer,
            subset: r.subset,
            split: r.split.parse()?,
        })
    }
}

fn jsonl<T: Serialize>(items: impl Iterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out += &serde_json::to_string(&item).expect("records serialize");
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_contexts(path: &Path, contexts: &[Context]) -> Result<()> {
    let mut sorted: Vec<&Context> = contexts.iter().collect();
    sorted.sort_by(|a, b| a.context_id.cmp(&b.context_id));
    write_file(path, &jsonl(sorted.into_iter().map(ContextRecord::from)))
}

pub fn write_questions(path: &Path, questions: &[Question]) -> Result<()> {
    let mut sorted: Vec<&Question> = questions.iter().collect();
    sorted.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    write_file(path, &jsonl(sorted.into_iter().map(QuestionRecord::from)))
}

/// SHA-256 over the canonical serialisation of both files.
pub fn corpus_digest(corpus: &Corpus) -> String {
    let mut h = Sha256::new();
    h.update(jsonl(corpus.contexts.iter().map(ContextRecord::from)));
    h.update(b"\0");
    h.update(jsonl(corpus.questions.iter().map(QuestionRecord::from)));
    hex::encode(h.finalize())
}

fn read_records<R, T>(path: &Path) -> Result<Vec<(usize, T)>>
where
    R: for<'de> Deserialize<'de>,
    T: TryFrom<R, Error = Error>,
{
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), line: i + 1, message };
        let rec: R = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let item = T::try_from(rec).map_err(|e| parse_err(e.to_string()))?;
        out.push((i + 1, item));
    }
    Ok(out)
}

pub fn read_contexts(path: &Path) -> Result<Vec<Context>> {
    Ok(read_records::<ContextRecord, Context>(path)?.into_iter().map(|(_, c)| c).collect())
}

pub fn read_questions(path: &Path) -> Result<Vec<Question>> {
    Ok(read_records::<QuestionRecord, Question>(path)?.into_iter().map(|(_, q)| q).collect())
}

fn context_violations(ctx: &Context) -> Vec<String> {
    let mut v = Vec::new();
    if ctx.paragraphs.is_empty() {
        v.push("context has no paragraphs".to_string());
    }
    for (i, f) in ctx.facts.iter().enumerate() {
        if f.value.is_empty() {
            v.push(format!("fact {i} has an empty value"));
        }
        match ctx.paragraphs.get(f.paragraph_index) {
            None => v.push(format!(
                "fact {i} paragraph_index {} out of range ({} paragraphs)",
                f.paragraph_index,
                ctx.paragraphs.len()
            )),
            Some(p) if !f.value.is_empty() && !p.contains(&f.value) => {
                v.push(format!("fact {i} value '{}' not realised in paragraph {}", f.value, f.paragraph_index))
            }
            _ => {}
        }
        for (j, g) in ctx.facts.iter().enumerate().skip(i + 1) {
            if f.relation == g.relation && f.valid.overlaps(&g.valid) {
                v.push(format!("facts {i} and {j} ({}) have overlapping validity", f.relation));
            }
        }
    }
    v
}

fn question_violations(q: &Question, ctx: Option<&Context>, boundaries: &[TimeRange]) -> Vec<String> {
    let mut v = Vec::new();
    if !extract_years(&q.text).iter().any(|m| m.value == q.anchor_year) {
        v.push(format!("anchor_year {} does not appear in the question text", q.anchor_year));
    }
    if q.qtype == QuestionType::Unanswerable && !q.answer.is_empty() {
        v.push("unanswerable question carries a non-empty answer".into());
    }
    if q.qtype != QuestionType::Unanswerable && q.answer.is_empty() {
        v.push(format!("{} question has an empty answer", q.qtype));
    }
    if !boundaries.is_empty() {
        if !(1..=boundaries.len()).contains(&q.subset) {
            v.push(format!("subset {} outside 1..={}", q.subset, boundaries.len()));
        } else if assign_subset(q.anchor_year, boundaries) != q.subset {
            v.push(format!(
                "anchor_year {} belongs to subset {}, not {}",
                q.anchor_year,
                assign_subset(q.anchor_year, boundaries),
                q.subset
            ));
        }
    }
    let Some(ctx) = ctx else {
        v.push(format!("unknown context_id '{}'", q.context_id));
        return v;
    };
    let relation = ctx.question_relation(q);
    let covering: Vec<&TimelineFact> = ctx
        .facts
        .iter()
        .filter(|f| relation.is_none_or(|r| f.relation == r) && year_in_range(q.anchor_year, &f.valid))
        .collect();
    if q.answer.is_empty() {
        if let Some(f) = covering.first() {
            v.push(format!("unanswerable question but fact '{}' covers {}", f.value, q.anchor_year));
        }
    } else {
        match covering.as_slice() {
            [f] if f.value == q.answer => {}
            [f] => v.push(format!("answer '{}' does not match covering fact '{}'", q.answer, f.value)),
            [] => v.push(format!("no fact covers anchor_year {} for answer '{}'", q.anchor_year, q.answer)),
            _ => v.push(format!("{} facts cover anchor_year {}", covering.len(), q.anchor_year)),
        }
    }
    v
}

fn summarize(problems: Vec<String>) -> Result<()> {
    if problems.is_empty() {
        return Ok(());
    }
    let n = problems.len();
    let mut msg = problems.into_iter().take(20).collect::<Vec<_>>().join("; ");
    if n > 20 {
        msg += &format!("; ... {} more", n - 20);
    }
    Err(Error::Validation(msg))
}

/// Check every type invariant of an in-memory corpus.
pub fn validate_corpus(corpus: &Corpus, boundaries: &[TimeRange]) -> Result<()> {
    let mut problems = Vec::new();
    for c in &corpus.contexts {
        for p in context_violations(c) {
            problems.push(format!("context {}: {p}", c.context_id));
        }
    }
    for q in &corpus.questions {
        for p in question_violations(q, corpus.context(&q.context_id), boundaries) {
            problems.push(format!("question {}: {p}", q.question_id));
        }
    }
    summarize(problems)
}

/// Load and validate a corpus from its two JSON-lines files.
///
/// Malformed lines surface as [`Error::Parse`]; invariant violations as
/// [`Error::Validation`] naming the file line of the failed invariant.
pub fn ingest_corpus(context_path: &Path, question_path: &Path, boundaries: &[TimeRange]) -> Result<Corpus> {
    let ctx_rows = read_records::<ContextRecord, Context>(context_path)?;
    let q_rows = read_records::<QuestionRecord, Question>(question_path)?;

    let mut problems = Vec::new();
    for (line, c) in &ctx_rows {
        for p in context_violations(c) {
            problems.push(format!("{}:{line}: {p}", context_path.display()));
        }
    }
    let mut corpus = Corpus { contexts: ctx_rows.into_iter().map(|(_, c)| c).collect(), questions: Vec::new() };
    corpus.sort();
    for w in corpus.contexts.windows(2) {
        if w[0].context_id == w[1].context_id {
            problems.push(format!("duplicate context_id '{}'", w[0].context_id));
        }
    }
    for (line, q) in &q_rows {
        for p in question_violations(q, corpus.context(&q.context_id), boundaries) {
            problems.push(format!("{}:{line}: {p}", question_path.display()));
        }
    }
    summarize(problems)?;
    corpus.questions = q_rows.into_iter().map(|(_, q)| q).collect();
    corpus.sort();
    for w in corpus.questions.windows(2) {
        if w[0].question_id == w[1].question_id {
            return Err(Error::validation(format!("duplicate question_id '{}'", w[0].question_id)));
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{default_boundaries, synthesize_corpus, CorpusSpec};

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    const CTX: &str = r#"{"context_id":"c1","entity":"Ada Verin","paragraphs":["Ada Verin served as Mayor of Tol from 1990 to 1995."],"facts":[{"relation":"position","value":"Mayor of Tol","start_year":1990,"end_year":1995,"paragraph_index":0,"surface_form":"duration_commonsense"}]}
{"context_id":"c2","entity":"Bram Oss","paragraphs":["Bram Oss has lived in Kelby since 2001."],"facts":[{"relation":"residence","value":"Kelby","start_year":2001,"end_year":null,"paragraph_index":0,"surface_form":"duration_commonsense"}]}
"#;

    #[test]
    fn two_line_context_file() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(dir.path(), "contexts.jsonl", CTX);
        let q = write(dir.path(), "questions.jsonl", "");
        let corpus = ingest_corpus(&c, &q, &default_boundaries()).unwrap();
        assert_eq!(corpus.contexts.len(), 2);
        assert_eq!(corpus.contexts[1].facts[0].valid.end, None);
    }

    #[test]
    fn anchor_missing_from_text() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(dir.path(), "contexts.jsonl", CTX);
        let q = write(
            dir.path(),
            "questions.jsonl",
            r#"{"question_id":"q1","context_id":"c1","text":"What position did Ada Verin hold in 1991?","anchor_year":1991,"qtype":"commonsense","answer":"Mayor of Tol","subset":3,"split":"train"}
{"question_id":"q2","context_id":"c1","text":"What position did Ada Verin hold then?","anchor_year":1992,"qtype":"commonsense","answer":"Mayor of Tol","subset":3,"split":"train"}
"#,
        );
        let err = ingest_corpus(&c, &q, &default_boundaries()).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Validation(_)));
        assert!(msg.contains(":2:") && msg.contains("anchor_year 1992"), "{msg}");
    }

    #[test]
    fn schema_violation_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(dir.path(), "contexts.jsonl", &format!("{CTX}{{\"context_id\": 3}}\n"));
        let q = write(dir.path(), "questions.jsonl", "");
        match ingest_corpus(&c, &q, &default_boundaries()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mutated_answer_is_caught() {
        let spec = CorpusSpec { n_contexts: 40, n_questions: 200, seed: 11, ..CorpusSpec::default() };
        let mut corpus = synthesize_corpus(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (c, q) = (dir.path().join("contexts.jsonl"), dir.path().join("questions.jsonl"));
        write_contexts(&c, &corpus.contexts).unwrap();
        write_questions(&q, &corpus.questions).unwrap();
        let back = ingest_corpus(&c, &q, &spec.boundaries).unwrap();
        assert_eq!(back, corpus);

        let idx = corpus.questions.iter().position(|q| q.is_answerable()).unwrap();
        corpus.questions[idx].answer = "Somebody Else".into();
        write_questions(&q, &corpus.questions).unwrap();
        let err = ingest_corpus(&c, &q, &spec.boundaries).unwrap_err().to_string();
        assert!(err.contains("does not match covering fact"), "{err}");
        assert!(err.contains(&format!(":{}:", idx + 1)), "{err}");
    }

    #[test]
    fn overlapping_facts_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(
            dir.path(),
            "contexts.jsonl",
            r#"{"context_id":"c1","entity":"A","paragraphs":["X 1990 Y 1992"],"facts":[{"relation":"team","value":"X","start_year":1990,"end_year":1993,"paragraph_index":0,"surface_form":"explicit_year"},{"relation":"team","value":"Y","start_year":1992,"end_year":1994,"paragraph_index":0,"surface_form":"explicit_year"}]}
"#,
        );
        let q = write(dir.path(), "questions.jsonl", "");
        let err = ingest_corpus(&c, &q, &default_boundaries()).unwrap_err().to_string();
        assert!(err.contains("overlapping"), "{err}");
    }
}
