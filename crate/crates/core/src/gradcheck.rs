//! Finite-difference verification of the step-loss gradient on random tiny
//! models.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::losses::{lp_distance, tcl_step_grad_with_fault, tcl_step_loss, Fault, LossConfig, StepInputs};
use crate::model::{encode, Candidate, EncodedInput, ModelParams};
use crate::oracle::fd_gradient;
use crate::rng;
use crate::temporal_text::TimeRange;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckConfig {
    pub seed: u64,
    pub instances: usize,
    pub h: f64,
    pub tolerance: f64,
    pub max_vocab: usize,
    pub max_dim: usize,
    pub max_candidates: usize,
    /// Pin the shape instead of drawing it.
    pub dim: Option<usize>,
    pub candidates: Option<usize>,
    pub fault: Fault,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            seed: 0,
            instances: 100,
            h: 1e-5,
            tolerance: 1e-4,
            max_vocab: 20,
            max_dim: 8,
            max_candidates: 4,
            dim: None,
            candidates: None,
            fault: Fault::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub instances: usize,
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub worst_instance: usize,
    pub worst_coordinate: usize,
    pub passed: bool,
}

/// `|a - n| / max(|a|, |n|, 1e-6)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

struct Instance {
    params: ModelParams,
    candidates: Vec<Candidate>,
    context: Vec<usize>,
    question: [Vec<usize>; 3],
    anchors: [i32; 3],
    target: usize,
    cfg: LossConfig,
}

impl Instance {
    fn inputs(&self) -> StepInputs<'_> {
        let mk = |k: usize| EncodedInput {
            question_tokens: self.question[k].clone(),
            anchor_year: Some(self.anchors[k]),
            context_tokens: &self.context,
            candidates: &self.candidates,
        };
        StepInputs { original: mk(0), transformed: Some((mk(1), mk(2))), target: self.target }
    }

    /// Away from the non-differentiable points of the triplet term.
    fn smooth(&self) -> bool {
        let inputs = self.inputs();
        let (sim, con) = inputs.transformed.as_ref().unwrap();
        let (Ok(a), Ok(s), Ok(c)) =
            (encode(&inputs.original, &self.params), encode(sim, &self.params), encode(con, &self.params))
        else {
            return false;
        };
        let kink = (lp_distance(&a.0, &s.0, self.cfg.p) - lp_distance(&a.0, &c.0, self.cfg.p) + self.cfg.margin).abs();
        let coords_clear = a.0.iter().zip(&s.0).chain(a.0.iter().zip(&c.0)).all(|(x, y)| (x - y).abs() > 1e-3);
        kink > 1e-4 && coords_clear
    }
}

fn draw_instance(cfg: &GradcheckConfig, index: usize, r: &mut rng::StreamRng) -> Instance {
    let dim = cfg.dim.unwrap_or_else(|| r.gen_range(1..=cfg.max_dim));
    let vocab = r.gen_range(2..=cfg.max_vocab);
    let n_cand = cfg.candidates.unwrap_or_else(|| r.gen_range(1..=cfg.max_candidates));
    let mut params = ModelParams::init(vocab, dim, 1.0, r);
    *params.w_tau_mut() = r.gen_range(-2.0..2.0);
    let toks = |r: &mut rng::StreamRng, lo: usize, hi: usize| -> Vec<usize> {
        (0..r.gen_range(lo..=hi)).map(|_| r.gen_range(0..vocab)).collect()
    };
    let mut candidates: Vec<Candidate> = (0..n_cand.saturating_sub(1))
        .map(|i| {
            let start = r.gen_range(1990..2010);
            Candidate {
                text: format!("v{i}"),
                tokens: toks(r, 1, 3),
                evidence: r.gen_bool(0.8).then(|| TimeRange { start, end: Some(start + r.gen_range(0..6)) }),
            }
        })
        .collect();
    candidates.push(Candidate { text: String::new(), tokens: vec![0], evidence: None });
    let context = toks(r, 1, 8);
    let question = [toks(r, 1, 5), toks(r, 1, 5), toks(r, 1, 5)];
    let anchors = [r.gen_range(1990..2015), r.gen_range(1990..2015), r.gen_range(1990..2015)];
    let target = r.gen_range(0..candidates.len());
    let loss_cfg = if index == 0 {
        LossConfig::default()
    } else {
        LossConfig {
            alpha: r.gen_range(0.1..2.0),
            beta: if r.gen_bool(0.1) { 0.0 } else { r.gen_range(0.0..2.0) },
            gamma: if r.gen_bool(0.1) { 0.0 } else { r.gen_range(0.0..2.0) },
            margin: r.gen_range(0.0..2.0),
            p: if r.gen_bool(0.5) { 2.0 } else { r.gen_range(1.0..4.0) },
        }
    };
    Instance { params, candidates, context, question, anchors, target, cfg: loss_cfg }
}

pub fn run_gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    if cfg.h <= 0.0 || cfg.instances == 0 || cfg.max_vocab < 2 || cfg.max_dim == 0 || cfg.max_candidates == 0 {
        return Err(Error::validation("gradcheck needs h > 0, instances >= 1, vocab >= 2, dim >= 1, candidates >= 1"));
    }
    if cfg.dim == Some(0) || cfg.candidates == Some(0) {
        return Err(Error::validation("pinned dim and candidate count must be positive"));
    }
    let mut report = GradcheckReport {
        instances: cfg.instances,
        coordinates: 0,
        max_rel_error: 0.0,
        worst_instance: 0,
        worst_coordinate: 0,
        passed: true,
    };
    for index in 0..cfg.instances {
        let mut r = rng::stream(cfg.seed, "gradcheck", &[index as u64]);
        let inst = (0..1000)
            .map(|_| draw_instance(cfg, index, &mut r))
            .find(Instance::smooth)
            .ok_or_else(|| Error::numerical(format!("instance {index}: no smooth draw in 1000 tries")))?;
        let inputs = inst.inputs();
        let mut analytic = ModelParams::zeros(inst.params.vocab_size, inst.params.dim);
        tcl_step_grad_with_fault(&inputs, &inst.params, &inst.cfg, &mut analytic, cfg.fault)?;
        let mut probe = inst.params.clone();
        let numeric = fd_gradient(
            |x| {
                probe.data.copy_from_slice(x);
                tcl_step_loss(&inputs, &probe, &inst.cfg).map(|b| b.total).unwrap_or(f64::NAN)
            },
            &inst.params.data,
            cfg.h,
        );
        for (i, (a, n)) in analytic.data.iter().zip(&numeric).enumerate() {
            let e = relative_error(*a, *n);
            if e.is_nan() || e > report.max_rel_error {
                report.max_rel_error = e;
                report.worst_instance = index;
                report.worst_coordinate = i;
            }
        }
        report.coordinates += numeric.len();
    }
    report.passed = report.max_rel_error < cfg.tolerance;
    Ok(report)
}
