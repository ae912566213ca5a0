//! Training objective: prediction and similar-question cross-entropy plus a
//! triplet margin loss pulling the similar representation towards the
//! original and pushing the contrastive one away.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    encode, encode_backward, score_backward, score_candidates, ContextEncoding, EncodedInput, Gradients, ModelParams,
    Representation, Vocab,
};
use crate::transform::QuestionTriplet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub margin: f64,
    /// Norm order of the triplet distance.
    pub p: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { alpha: 1.0, beta: 0.5, gamma: 0.5, margin: 1.0, p: 2.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha, self.beta, self.gamma, self.margin, self.p].iter().all(|x| x.is_finite());
        if !finite || self.alpha <= 0.0 || self.beta < 0.0 || self.gamma < 0.0 || self.margin < 0.0 || self.p < 1.0 {
            return Err(Error::validation(format!(
                "loss config needs alpha > 0, beta/gamma/margin >= 0 and p >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_predict: f64,
    pub l_similar: f64,
    pub l_triple: f64,
    pub total: f64,
    /// The sample had no triplet and trained on the prediction loss alone.
    pub transform_unavailable: bool,
}

pub fn lp_distance(x: &[f64], y: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    }
    x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// d‖u‖_p/du, taken as zero at u = 0.
fn lp_distance_grad(x: &[f64], y: &[f64], p: f64) -> Vec<f64> {
    let norm = lp_distance(x, y, p);
    if norm == 0.0 {
        return vec![0.0; x.len()];
    }
    let denom = norm.powf(p - 1.0);
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let u = a - b;
            u.signum() * u.abs().powf(p - 1.0) / denom * (u != 0.0) as u8 as f64
        })
        .collect()
}

pub fn triplet_margin_loss(s: &[f64], pos: &[f64], neg: &[f64], cfg: &LossConfig) -> Result<f64> {
    if s.len() != pos.len() || s.len() != neg.len() {
        return Err(Error::Dimension(format!("triplet dimensions {}, {}, {}", s.len(), pos.len(), neg.len())));
    }
    Ok((lp_distance(s, pos, cfg.p) - lp_distance(s, neg, cfg.p) + cfg.margin).max(0.0))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

pub fn cross_entropy(logits: &[f64], target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::validation(format!("target index {target} outside {} logits", logits.len())));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(lse - logits[target])
}

pub fn combined_loss(l_predict: f64, l_similar: f64, l_triple: f64, cfg: &LossConfig) -> f64 {
    cfg.alpha * l_predict + cfg.beta * l_similar + cfg.gamma * l_triple
}

/// The three model inputs of one training step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInputs<'a> {
    pub original: EncodedInput<'a>,
    /// `(similar, contrastive)`; `None` when no triplet could be built.
    pub transformed: Option<(EncodedInput<'a>, EncodedInput<'a>)>,
    pub target: usize,
}

impl<'a> StepInputs<'a> {
    pub fn new(
        question: &str,
        answer: &str,
        triplet: Option<&QuestionTriplet>,
        vocab: &Vocab,
        ctx: &'a ContextEncoding,
    ) -> Result<Self> {
        let target = ctx
            .gold_index(answer)
            .ok_or_else(|| Error::validation(format!("gold answer '{answer}' is not a candidate")))?;
        Ok(StepInputs {
            original: EncodedInput::new(question, vocab, ctx),
            transformed: triplet.map(|t| {
                (EncodedInput::new(&t.similar_text, vocab, ctx), EncodedInput::new(&t.contrastive_text, vocab, ctx))
            }),
            target,
        })
    }

    /// Weights actually applied: a missing triplet zeroes beta and gamma.
    pub fn effective(&self, cfg: &LossConfig) -> LossConfig {
        match self.transformed {
            Some(_) => *cfg,
            None => LossConfig { beta: 0.0, gamma: 0.0, ..*cfg },
        }
    }
}

/// Forward value of the step objective.
pub fn tcl_step_loss(inputs: &StepInputs, params: &ModelParams, cfg: &LossConfig) -> Result<LossBreakdown> {
    let eff = inputs.effective(cfg);
    let a_ori = encode(&inputs.original, params)?;
    let l_predict = cross_entropy(&score_candidates(&a_ori, &inputs.original, params).logits, inputs.target)?;
    let mut out =
        LossBreakdown { l_predict, transform_unavailable: inputs.transformed.is_none(), ..Default::default() };
    if let Some((sim, con)) = &inputs.transformed {
        if eff.beta != 0.0 || eff.gamma != 0.0 {
            let a_sim = encode(sim, params)?;
            if eff.beta != 0.0 {
                out.l_similar = cross_entropy(&score_candidates(&a_sim, sim, params).logits, inputs.target)?;
            }
            if eff.gamma != 0.0 {
                let a_con = encode(con, params)?;
                out.l_triple = triplet_margin_loss(&a_ori.0, &a_sim.0, &a_con.0, &eff)?;
            }
        }
    }
    out.total = combined_loss(out.l_predict, out.l_similar, out.l_triple, &eff);
    Ok(out)
}

/// Deliberate gradient bugs, used to prove the gradient check can fail.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Negate the triplet term's gradient.
    SignFlip,
}

fn ce_grad(logits: &[f64], target: usize, weight: f64) -> Vec<f64> {
    let mut g = softmax(logits);
    g[target] -= 1.0;
    g.iter_mut().for_each(|x| *x *= weight);
    g
}

/// Loss value and its gradient, accumulated into `grads`.
pub fn tcl_step_grad(
    inputs: &StepInputs,
    params: &ModelParams,
    cfg: &LossConfig,
    grads: &mut Gradients,
) -> Result<LossBreakdown> {
    tcl_step_grad_with_fault(inputs, params, cfg, grads, Fault::None)
}

#[doc(hidden)]
pub fn tcl_step_grad_with_fault(
    inputs: &StepInputs,
    params: &ModelParams,
    cfg: &LossConfig,
    grads: &mut Gradients,
    fault: Fault,
) -> Result<LossBreakdown> {
    let eff = inputs.effective(cfg);
    let a_ori = encode(&inputs.original, params)?;
    let logits = score_candidates(&a_ori, &inputs.original, params).logits;
    let mut out = LossBreakdown {
        l_predict: cross_entropy(&logits, inputs.target)?,
        transform_unavailable: inputs.transformed.is_none(),
        ..Default::default()
    };
    let mut d_ori =
        score_backward(&a_ori, &inputs.original, params, &ce_grad(&logits, inputs.target, eff.alpha), grads);

    if let Some((sim, con)) = &inputs.transformed {
        if eff.beta != 0.0 || eff.gamma != 0.0 {
            let a_sim = encode(sim, params)?;
            let mut d_sim = vec![0.0; params.dim];
            if eff.beta != 0.0 {
                let logits = score_candidates(&a_sim, sim, params).logits;
                out.l_similar = cross_entropy(&logits, inputs.target)?;
                d_sim = score_backward(&a_sim, sim, params, &ce_grad(&logits, inputs.target, eff.beta), grads);
            }
            if eff.gamma != 0.0 {
                let a_con = encode(con, params)?;
                out.l_triple = triplet_margin_loss(&a_ori.0, &a_sim.0, &a_con.0, &eff)?;
                if out.l_triple > 0.0 {
                    let (d_ori_t, d_sim_t, d_con) = triplet_grads(&a_ori, &a_sim, &a_con, &eff, fault);
                    d_ori.iter_mut().zip(&d_ori_t).for_each(|(a, b)| *a += b);
                    d_sim.iter_mut().zip(&d_sim_t).for_each(|(a, b)| *a += b);
                    encode_backward(con, &d_con, grads);
                }
            }
            encode_backward(sim, &d_sim, grads);
        }
    }
    encode_backward(&inputs.original, &d_ori, grads);
    out.total = combined_loss(out.l_predict, out.l_similar, out.l_triple, &eff);
    Ok(out)
}

fn triplet_grads(
    a: &Representation,
    pos: &Representation,
    neg: &Representation,
    cfg: &LossConfig,
    fault: Fault,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let sign = if fault == Fault::SignFlip { -cfg.gamma } else { cfg.gamma };
    let gp = lp_distance_grad(&a.0, &pos.0, cfg.p);
    let gn = lp_distance_grad(&a.0, &neg.0, cfg.p);
    let da = gp.iter().zip(&gn).map(|(p, n)| sign * (p - n)).collect();
    let dp = gp.iter().map(|p| -sign * p).collect();
    let dn = gn.iter().map(|n| sign * n).collect();
    (da, dp, dn)
}
