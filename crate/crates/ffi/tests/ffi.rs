use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use chronoqa::corpus::{self, CorpusSpec, Split};
use chronoqa::harness::{score_questions, Experiment, ExperimentConfig};
use chronoqa::model::{EncodingCache, Predictor};
use chronoqa_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = cqa_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Fixture {
    _dir: tempfile::TempDir,
    data: PathBuf,
    checkpoint: PathBuf,
    corpus: corpus::Corpus,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec { n_contexts: 100, n_questions: 500, seed: 5, ..CorpusSpec::default() };
    let corpus = corpus::synthesize_corpus(&spec).unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    corpus::write_contexts(&data.join("contexts.jsonl"), &corpus.contexts).unwrap();
    corpus::write_questions(&data.join("questions.jsonl"), &corpus.questions).unwrap();
    let cfg = ExperimentConfig { corpus: spec, epochs: 1, seed: 5, ..ExperimentConfig::default() };
    let exp = Experiment::new(cfg, &corpus).unwrap();
    let (ckpt, _, _) = exp.run_stage(1, &exp.initial_checkpoint(), &mut |_| {}).unwrap();
    let checkpoint = dir.path().join("stage_1");
    ckpt.save(&checkpoint).unwrap();
    Fixture { _dir: dir, data, checkpoint, corpus }
}

unsafe fn load(f: &Fixture) -> (*mut CqaCorpus, *mut CqaModel) {
    let mut corpus = ptr::null_mut();
    assert_eq!(cqa_corpus_load(c(f.data.to_str().unwrap()).as_ptr(), &mut corpus), CqaStatus::Ok);
    let mut model = ptr::null_mut();
    assert_eq!(cqa_model_load(c(f.checkpoint.to_str().unwrap()).as_ptr(), corpus, &mut model), CqaStatus::Ok);
    (corpus, model)
}

#[test]
fn evaluate_matches_library() {
    let f = fixture();
    unsafe {
        let (corpus, model) = load(&f);
        let mut stage = 0;
        assert_eq!(cqa_model_stage(model, &mut stage), CqaStatus::Ok);
        assert_eq!(stage, 1);

        let (mut em, mut f1) = (0.0, 0.0);
        assert_eq!(cqa_model_evaluate(model, corpus, 1, CqaSplit::Test, &mut em, &mut f1), CqaStatus::Ok);

        let ckpt = chronoqa::model::Checkpoint::load(&f.checkpoint).unwrap();
        let cache = EncodingCache::new(&f.corpus.contexts, &ckpt.vocab);
        let p = Predictor { vocab: &ckpt.vocab, params: &ckpt.params, cache: &cache };
        let (em2, f12) =
            score_questions(f.corpus.questions_in(1, Split::Test), |q| p.answer(q).map(str::to_string)).unwrap();
        assert_eq!((em, f1), (em2, f12));

        let mut n = 0;
        assert_eq!(cqa_corpus_count(corpus, 1, CqaSplit::Test, &mut n), CqaStatus::Ok);
        assert_eq!(n, f.corpus.questions_in(1, Split::Test).len());

        let q = f.corpus.questions_in(1, Split::Test)[0];
        let mut out = ptr::null_mut();
        assert_eq!(cqa_model_predict(model, corpus, c(&q.question_id).as_ptr(), &mut out), CqaStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_str().unwrap(), p.answer(q).unwrap());
        cqa_string_free(out);

        cqa_model_free(model);
        cqa_corpus_free(corpus);
    }
}

#[test]
fn evaluate_rejects_future_subset() {
    let f = fixture();
    unsafe {
        let (corpus, model) = load(&f);
        let (mut em, mut f1) = (0.0, 0.0);
        assert_eq!(cqa_model_evaluate(model, corpus, 2, CqaSplit::Dev, &mut em, &mut f1), CqaStatus::Validation);
        assert!(last_error().contains("subset 2"));
        let mut out = ptr::null_mut();
        assert_eq!(cqa_model_predict(model, corpus, c("nope").as_ptr(), &mut out), CqaStatus::NotFound);
        assert!(out.is_null());
        cqa_model_free(model);
        cqa_corpus_free(corpus);
    }
}

#[test]
fn load_errors() {
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(cqa_corpus_load(ptr::null(), &mut corpus), CqaStatus::NullPointer);
        assert_eq!(cqa_corpus_load(c("/nonexistent/dir").as_ptr(), &mut corpus), CqaStatus::Io);
        assert!(corpus.is_null());
        assert!(last_error().contains("/nonexistent/dir"));

        let bad = [0xffu8, 0];
        assert_eq!(cqa_corpus_load(bad.as_ptr().cast(), &mut corpus), CqaStatus::InvalidUtf8);

        let dir = tempfile::tempdir().unwrap();
        let junk = dir.path().join("junk");
        std::fs::write(&junk, b"not a checkpoint").unwrap();
        let f = fixture();
        let (corpus, _) = load(&f);
        let mut model = ptr::null_mut();
        assert_eq!(cqa_model_load(c(junk.to_str().unwrap()).as_ptr(), corpus, &mut model), CqaStatus::Checkpoint);
        assert!(model.is_null());
        cqa_corpus_free(corpus);
        cqa_corpus_free(ptr::null_mut());
        cqa_model_free(ptr::null_mut());
    }
}

#[test]
fn metrics() {
    unsafe {
        let mut v = -1.0;
        assert_eq!(
            cqa_token_f1(c("University Hall").as_ptr(), c("St Andrews University").as_ptr(), &mut v),
            CqaStatus::Ok
        );
        assert_eq!(v, 0.4);
        assert_eq!(cqa_exact_match(c("The Beatles").as_ptr(), c("beatles").as_ptr(), &mut v), CqaStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(cqa_exact_match(c("x").as_ptr(), ptr::null(), &mut v), CqaStatus::NullPointer);
    }
}

#[test]
fn triplet_loss() {
    let s = [0.0, 0.0];
    let pos = [3.0, 4.0];
    let neg = [1.0, 0.0];
    let mut v = 0.0;
    unsafe {
        assert_eq!(cqa_triplet_margin_loss(s.as_ptr(), pos.as_ptr(), neg.as_ptr(), 2, 1.0, 2.0, &mut v), CqaStatus::Ok);
        assert!((v - 5.0).abs() < 1e-12);
        assert_eq!(
            cqa_triplet_margin_loss(s.as_ptr(), pos.as_ptr(), neg.as_ptr(), 2, 1.0, 0.5, &mut v),
            CqaStatus::Validation
        );
        assert_eq!(
            cqa_triplet_margin_loss(ptr::null(), pos.as_ptr(), neg.as_ptr(), 2, 1.0, 2.0, &mut v),
            CqaStatus::NullPointer
        );
    }
}

#[test]
fn years() {
    let text = c("Born in 1961, moved in 2004 and again in 2016.");
    let mut buf = [0i32; 3];
    let mut n = 0;
    unsafe {
        assert_eq!(cqa_extract_years(text.as_ptr(), buf.as_mut_ptr(), 3, &mut n), CqaStatus::Ok);
        assert_eq!((n, buf), (3, [1961, 2004, 2016]));
        assert_eq!(cqa_extract_years(text.as_ptr(), ptr::null_mut(), 0, &mut n), CqaStatus::BufferTooSmall);
        assert_eq!(n, 3);
        assert_eq!(cqa_extract_years(c("no dates").as_ptr(), ptr::null_mut(), 0, &mut n), CqaStatus::Ok);
        assert_eq!(n, 0);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/chronoqa.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "cqa_last_error",
        "cqa_version",
        "cqa_string_free",
        "cqa_corpus_load",
        "cqa_corpus_free",
        "cqa_corpus_count",
        "cqa_model_load",
        "cqa_model_free",
        "cqa_model_stage",
        "cqa_model_predict",
        "cqa_model_evaluate",
        "cqa_exact_match",
        "cqa_token_f1",
        "cqa_triplet_margin_loss",
        "cqa_extract_years",
        "typedef struct CqaCorpus CqaCorpus",
        "typedef struct CqaModel CqaModel",
        "CQA_STATUS_BUFFER_TOO_SMALL = 8",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

/// Compiles and runs a C program against the header and the static library when a C compiler is present.
#[test]
fn c_program_links() {
    let target_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target_dir.join("libchronoqa_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "chronoqa.h"
int main(void) {
    double f1 = 0;
    if (cqa_token_f1("University Hall", "St Andrews University", &f1) != CQA_STATUS_OK || f1 != 0.4) return 1;
    int years[4]; size_t n = 0;
    if (cqa_extract_years("from 1999 to 2003", years, 4, &n) != CQA_STATUS_OK || n != 2 || years[1] != 2003) return 2;
    CqaCorpus *c = NULL;
    if (cqa_corpus_load("/nonexistent", &c) != CQA_STATUS_IO || c != NULL) return 3;
    if (strlen(cqa_last_error()) == 0) return 4;
    printf("ok %s\n", cqa_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok 0.1.0"));
}
