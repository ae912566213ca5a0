//! C ABI over `chronoqa`.
//!
//! Every function returns a [`CqaStatus`]. On failure the message is kept per thread and can be
//! read with [`cqa_last_error`]. Handles are opaque and must be released with their `_free`
//! function. Strings handed out by the library are released with [`cqa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use chronoqa::corpus::{self, Corpus, Split};
use chronoqa::harness::score_questions;
use chronoqa::losses::{triplet_margin_loss, LossConfig};
use chronoqa::metrics::{exact_match, token_f1};
use chronoqa::model::{Checkpoint, EncodingCache, Predictor};
use chronoqa::temporal_text::extract_years;
use chronoqa::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    Io = 4,
    Numerical = 5,
    Checkpoint = 6,
    NotFound = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqaSplit {
    Train = 0,
    Dev = 1,
    Test = 2,
}

impl From<CqaSplit> for Split {
    fn from(s: CqaSplit) -> Self {
        match s {
            CqaSplit::Train => Split::Train,
            CqaSplit::Dev => Split::Dev,
            CqaSplit::Test => Split::Test,
        }
    }
}

/// A loaded and validated corpus.
pub struct CqaCorpus {
    corpus: Corpus,
}

/// A trained checkpoint with its context encodings for one corpus.
pub struct CqaModel {
    ckpt: Checkpoint,
    cache: EncodingCache,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CqaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => CqaStatus::Io,
            Error::Numerical(_) => CqaStatus::Numerical,
            Error::Checkpoint { .. } => CqaStatus::Checkpoint,
            _ => CqaStatus::Validation,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CqaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CqaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside chronoqa");
            CqaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CqaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(CqaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn cqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cqa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn cqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads `contexts.jsonl` and `questions.jsonl` from `data_dir` with the default subset boundaries.
///
/// # Safety
/// `data_dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqa_corpus_load(data_dir: *const c_char, out: *mut *mut CqaCorpus) -> CqaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let dir = Path::new(str_arg(data_dir, "data_dir")?);
        let corpus = corpus::ingest_corpus(
            &dir.join("contexts.jsonl"),
            &dir.join("questions.jsonl"),
            &corpus::default_boundaries(),
        )?;
        *out = Box::into_raw(Box::new(CqaCorpus { corpus }));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle from [`cqa_corpus_load`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn cqa_corpus_free(corpus: *mut CqaCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Number of questions in `subset` (1-based) and `split`.
///
/// # Safety
/// `corpus` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqa_corpus_count(
    corpus: *const CqaCorpus,
    subset: usize,
    split: CqaSplit,
    out: *mut usize,
) -> CqaStatus {
    guard(|| {
        let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        *out_arg(out, "out")? = c.corpus.questions_in(subset, split.into()).len();
        Ok(())
    })
}

/// Loads a checkpoint and encodes the corpus contexts for it.
///
/// # Safety
/// `path` must be a NUL-terminated string, `corpus` a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqa_model_load(
    path: *const c_char,
    corpus: *const CqaCorpus,
    out: *mut *mut CqaModel,
) -> CqaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let ckpt = Checkpoint::load(Path::new(path))?;
        let cache = EncodingCache::new(&c.corpus.contexts, &ckpt.vocab);
        *out = Box::into_raw(Box::new(CqaModel { ckpt, cache }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`cqa_model_load`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn cqa_model_free(model: *mut CqaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Stage the checkpoint was trained through.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqa_model_stage(model: *const CqaModel, out: *mut usize) -> CqaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *out_arg(out, "out")? = m.ckpt.stage;
        Ok(())
    })
}

impl CqaModel {
    fn predictor(&self) -> Predictor<'_> {
        Predictor { vocab: &self.ckpt.vocab, params: &self.ckpt.params, cache: &self.cache }
    }
}

/// Predicted answer for the question with id `question_id`. Empty means "no answer".
/// The string in `out` is released with [`cqa_string_free`].
///
/// # Safety
/// Handles must be live, `question_id` NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqa_model_predict(
    model: *const CqaModel,
    corpus: *const CqaCorpus,
    question_id: *const c_char,
    out: *mut *mut c_char,
) -> CqaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let id = str_arg(question_id, "question_id")?;
        let q = c
            .corpus
            .questions
            .binary_search_by(|q| q.question_id.as_str().cmp(id))
            .map(|i| &c.corpus.questions[i])
            .map_err(|_| Failure(CqaStatus::NotFound, format!("no question {id}")))?;
        let answer = m.predictor().answer(q)?;
        *out = CString::new(answer).map_err(|e| Failure(CqaStatus::Validation, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Mean EM and F1 (0 to 100) of the model on one subset and split.
///
/// # Safety
/// Handles must be live and the output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn cqa_model_evaluate(
    model: *const CqaModel,
    corpus: *const CqaCorpus,
    subset: usize,
    split: CqaSplit,
    out_em: *mut f64,
    out_f1: *mut f64,
) -> CqaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let c = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let (em_out, f1_out) = (out_arg(out_em, "out_em")?, out_arg(out_f1, "out_f1")?);
        if subset == 0 || subset > m.ckpt.stage {
            return Err(Failure(
                CqaStatus::Validation,
                format!("checkpoint is stage {}; it cannot be evaluated on subset {subset}", m.ckpt.stage),
            ));
        }
        let p = m.predictor();
        let (em, f1) =
            score_questions(c.corpus.questions_in(subset, split.into()), |q| p.answer(q).map(str::to_string))?;
        *em_out = em;
        *f1_out = f1;
        Ok(())
    })
}

/// Exact match of two answers after normalization, 0 or 1.
///
/// # Safety
/// Both strings must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqa_exact_match(pred: *const c_char, gold: *const c_char, out: *mut f64) -> CqaStatus {
    guard(|| {
        let v = exact_match(str_arg(pred, "pred")?, str_arg(gold, "gold")?);
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// Token-level F1 of two answers after normalization, in [0, 1].
///
/// # Safety
/// Both strings must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cqa_token_f1(pred: *const c_char, gold: *const c_char, out: *mut f64) -> CqaStatus {
    guard(|| {
        let v = token_f1(str_arg(pred, "pred")?, str_arg(gold, "gold")?);
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// `max(d(s, pos) - d(s, neg) + margin, 0)` with the `p`-norm distance over `len` values.
///
/// # Safety
/// Each vector must point to `len` readable doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cqa_triplet_margin_loss(
    s: *const f64,
    pos: *const f64,
    neg: *const f64,
    len: usize,
    margin: f64,
    p: f64,
    out: *mut f64,
) -> CqaStatus {
    guard(|| {
        let cfg = LossConfig { margin, p, ..LossConfig::default() };
        cfg.validate()?;
        let v = triplet_margin_loss(
            slice_arg(s, len, "s")?,
            slice_arg(pos, len, "pos")?,
            slice_arg(neg, len, "neg")?,
            &cfg,
        )?;
        *out_arg(out, "out")? = v;
        Ok(())
    })
}

/// Writes the years mentioned in `text` to `years`, in order of appearance.
/// `out_len` always receives the number found; if it exceeds `cap` nothing is written
/// and `BufferTooSmall` is returned.
///
/// # Safety
/// `text` must be NUL-terminated, `years` must hold `cap` ints (may be null when `cap` is 0)
/// and `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cqa_extract_years(
    text: *const c_char,
    years: *mut i32,
    cap: usize,
    out_len: *mut usize,
) -> CqaStatus {
    guard(|| {
        let found = extract_years(str_arg(text, "text")?);
        *out_arg(out_len, "out_len")? = found.len();
        if found.len() > cap {
            return Err(Failure(CqaStatus::BufferTooSmall, format!("{} years found, buffer holds {cap}", found.len())));
        }
        if !found.is_empty() {
            if years.is_null() {
                return Err(null("years"));
            }
            let dst = std::slice::from_raw_parts_mut(years, cap);
            for (d, m) in dst.iter_mut().zip(&found) {
                *d = m.value;
            }
        }
        Ok(())
    })
}
