use std::collections::BTreeMap;

use chronoqa::corpus::{self, Corpus, CorpusSpec, Question, Split};
use chronoqa::harness::{
    evaluate_stage, run_experiment, score_questions, Arm, Experiment, ExperimentConfig, RunOptions,
};
use chronoqa::model::AdamWConfig;
use chronoqa::oracle::{check_corpus_answers, naive_exact_match, naive_token_f1};
use chronoqa::temporal_text::TimeRange;

fn small_spec(seed: u64) -> CorpusSpec {
    CorpusSpec { n_contexts: 100, n_questions: 500, seed, ..CorpusSpec::default() }
}

fn small(seed: u64) -> (CorpusSpec, Corpus) {
    let spec = small_spec(seed);
    let corpus = corpus::synthesize_corpus(&spec).unwrap();
    (spec, corpus)
}

#[test]
fn every_gold_answer_agrees_with_the_timeline_oracle() {
    for seed in [0, 1] {
        let corpus = corpus::synthesize_corpus(&CorpusSpec { seed, ..CorpusSpec::default() }).unwrap();
        let r = check_corpus_answers(&corpus).unwrap();
        assert_eq!(r.checked, corpus.questions.len());
        assert!(r.passed(), "{:?}", r.mismatches.first());
    }
}

#[test]
fn scoring_matches_brute_force_on_fixed_predictions() {
    let (_, corpus) = small(2);
    let qs: Vec<&Question> = corpus.questions_in(1, Split::Dev);
    let preds: BTreeMap<&str, String> = qs
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let p = match i % 4 {
                0 => q.answer.clone(),
                1 => format!("the {}", q.answer.to_uppercase()),
                2 => q.answer.split_whitespace().next().unwrap_or("").to_string(),
                _ => "Lord Advocate".to_string(),
            };
            (q.question_id.as_str(), p)
        })
        .collect();
    let (em, f1) = score_questions(qs.iter().copied(), |q| Ok(preds[q.question_id.as_str()].clone())).unwrap();
    let n = qs.len() as f64;
    let em2 = 100.0 * qs.iter().map(|q| naive_exact_match(&preds[q.question_id.as_str()], &q.answer)).sum::<f64>() / n;
    let f12 = 100.0 * qs.iter().map(|q| naive_token_f1(&preds[q.question_id.as_str()], &q.answer)).sum::<f64>() / n;
    assert!((em - em2).abs() < 1e-9 && (f1 - f12).abs() < 1e-9, "{em} {em2} {f1} {f12}");
}

#[test]
fn tiny_corpus_is_memorized() {
    let (spec, corpus) = small(6);
    let cfg = ExperimentConfig {
        arm: Arm::Baseline,
        corpus: spec,
        epochs: 150,
        optimizer: AdamWConfig { lr: 1e-2, weight_decay: 0.0, ..AdamWConfig::default() },
        seed: 6,
        ..ExperimentConfig::default()
    };
    let exp = Experiment::new(cfg, &corpus).unwrap();
    let (ckpt, trace, _) = exp.run_stage(1, &exp.initial_checkpoint(), &mut |_| {}).unwrap();
    assert!(trace.last().unwrap().l_predict < trace[0].l_predict);
    let rows = evaluate_stage(&exp.predictor(&ckpt), &corpus, 1, Split::Train, "baseline").unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].em, rows[0].f1), (100.0, 100.0));
}

#[test]
fn zero_epochs_leave_the_initial_model() {
    let (spec, corpus) = small(3);
    let cfg = ExperimentConfig { corpus: spec, epochs: 0, seed: 3, ..ExperimentConfig::default() };
    let exp = Experiment::new(cfg.clone(), &corpus).unwrap();
    let init = exp.initial_checkpoint();
    let (ckpt, _, _) = exp.run_stage(1, &init, &mut |_| {}).unwrap();
    assert_eq!(ckpt.params, init.params);

    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&cfg, &corpus, dir.path(), RunOptions::default(), &mut |_| {}).unwrap();
    let p = exp.predictor(&init);
    for k in 1..=5 {
        for split in [Split::Dev, Split::Test] {
            for row in evaluate_stage(&p, &corpus, k, split, "full").unwrap() {
                let got = out.report.get(k, row.subset, split).unwrap();
                assert_eq!((got.em, got.f1), (row.em, row.f1));
            }
        }
    }
}

#[test]
fn report_is_lower_triangular_and_bounded() {
    let (spec, corpus) = small(4);
    let cfg = ExperimentConfig { corpus: spec, epochs: 1, seed: 4, ..ExperimentConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&cfg, &corpus, dir.path(), RunOptions::default(), &mut |_| {}).unwrap();
    for split in [Split::Dev, Split::Test] {
        let cells: Vec<_> = out.report.rows.iter().filter(|r| r.split == split).map(|r| (r.stage, r.subset)).collect();
        assert_eq!(cells.len(), 15);
        assert!(cells.iter().all(|&(k, j)| 1 <= j && j <= k && k <= 5));
    }
    for r in &out.report.rows {
        assert!((0.0..=100.0).contains(&r.em) && (0.0..=100.0).contains(&r.f1));
        assert!(r.em <= r.f1 + 1e-9);
        if r.em == 100.0 {
            assert_eq!(r.f1, 100.0);
        }
    }
}

#[test]
fn evaluation_does_not_touch_the_checkpoint() {
    let (spec, corpus) = small(5);
    let cfg = ExperimentConfig { corpus: spec, epochs: 1, seed: 5, ..ExperimentConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&cfg, &corpus, dir.path(), RunOptions::default(), &mut |_| {}).unwrap();
    let path = out.run_dir.join("stage_3");
    let before = std::fs::read(&path).unwrap();
    let ckpt = chronoqa::model::Checkpoint::load(&path).unwrap();
    let exp = Experiment::new(cfg, &corpus).unwrap();
    let a = evaluate_stage(&exp.predictor(&ckpt), &corpus, 3, Split::Test, "full").unwrap();
    let b = evaluate_stage(&exp.predictor(&ckpt), &corpus, 3, Split::Test, "full").unwrap();
    assert_eq!(a, b);
    for r in &a {
        assert_eq!(r, out.report.get(3, r.subset, Split::Test).unwrap());
    }
    assert_eq!(std::fs::read(&path).unwrap(), before);
}

#[test]
fn single_stage_run_never_replays() {
    let spec = CorpusSpec {
        boundaries: vec![TimeRange::open(1900)],
        n_contexts: 60,
        n_questions: 200,
        seed: 8,
        ..CorpusSpec::default()
    };
    let corpus = corpus::synthesize_corpus(&spec).unwrap();
    let cfg = ExperimentConfig { corpus: spec, epochs: 1, seed: 8, ..ExperimentConfig::default() };
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&cfg, &corpus, dir.path(), RunOptions::default(), &mut |_| {}).unwrap();
    assert_eq!(out.completed_stages, 1);
    assert_eq!(out.report.rows.len(), 2);
    let manifest = std::fs::read_to_string(out.run_dir.join("replay_stage_1.jsonl")).unwrap();
    assert!(manifest.lines().all(|l| l.contains("\"current\"")), "{manifest}");
}

#[test]
fn baseline_and_full_differ_only_where_expected() {
    let (spec, corpus) = small(7);
    let dir = tempfile::tempdir().unwrap();
    let run = |arm| {
        let cfg = ExperimentConfig { arm, corpus: spec.clone(), epochs: 1, seed: 7, ..ExperimentConfig::default() };
        run_experiment(&cfg, &corpus, dir.path(), RunOptions::default(), &mut |_| {}).unwrap()
    };
    let (b, f) = (run(Arm::Baseline), run(Arm::Full));
    assert_ne!(b.run_dir, f.run_dir);
    let stage1 = |o: &chronoqa::harness::ExperimentOutcome| {
        std::fs::read_to_string(o.run_dir.join("replay_stage_1.jsonl")).unwrap()
    };
    assert_eq!(stage1(&b), stage1(&f));
    let s2b = std::fs::read_to_string(b.run_dir.join("replay_stage_2.jsonl")).unwrap();
    let s2f = std::fs::read_to_string(f.run_dir.join("replay_stage_2.jsonl")).unwrap();
    assert!(!s2b.contains("\"replayed\"") && !s2b.contains("\"distractor\""));
    assert!(s2f.contains("\"replayed\"") && s2f.contains("\"dropped\""));
}
