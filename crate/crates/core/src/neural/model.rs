//! Forward pass and reverse-mode gradients of the sentence classifier.
//!
//! ```text
//! x_i   = e(w_i)                         (NNSC, INSTANCE)
//! x_i   = [e(w_i); v^1_i; ...; v^p_i]    (WORD)
//! H     = BLSTM(x_1..x_n),  h_i = [→h_i; ←h_i]
//! α_i   = softmax_i(h_iᵀ A h_n),  f = Σ α_i h_i
//! z     = f  or  [f; u^1; ...; u^p]      (INSTANCE)
//! y     = softmax(W2 tanh(W1 z + b1) + b2)
//! ```

use std::borrow::Borrow;

use super::params::{Lstm, ModelParams, Variant, Weights};
use super::tensor::{axpy, dot, sigmoid, softmax};
use crate::encoder::SentenceFeatures;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::matcher::Sentence;

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    /// n rows of width 2h.
    pub h: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub f: Vec<f64>,
    pub logits: Vec<f64>,
    pub y: Vec<f64>,
}

/// A labelled sentence with its rule features.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub sentence: Sentence,
    pub features: SentenceFeatures,
    pub label: usize,
}

/// Rule features handed to the forward pass.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureView<'a> {
    pub instance: Option<&'a [crate::encoder::InstanceFeature]>,
    pub tags: Option<&'a [crate::encoder::WordTagSeq]>,
}

impl<'a> FeatureView<'a> {
    pub fn none() -> Self {
        Self::default()
    }

    /// Only the features `variant` reads.
    pub fn for_variant(variant: Variant, features: &'a SentenceFeatures) -> Self {
        match variant {
            Variant::Nnsc => Self::none(),
            Variant::Instance => FeatureView {
                instance: Some(&features.instance),
                tags: None,
            },
            Variant::Word => FeatureView {
                instance: None,
                tags: Some(&features.tags),
            },
        }
    }
}

struct LstmTape {
    x: Vec<Vec<f64>>,
    /// Gate activations `[i; f; g; o]` per time step.
    gates: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

struct Tape {
    word_ids: Vec<usize>,
    fwd: LstmTape,
    bwd: LstmTape,
    z: Vec<f64>,
    hidden: Vec<f64>,
}

/// Runs one direction. Outputs are indexed by sentence position regardless
/// of processing order.
fn lstm_run(cell: &Lstm, xs: &[Vec<f64>], reverse: bool) -> LstmTape {
    let n = xs.len();
    let hd = cell.hidden();
    let mut tape = LstmTape {
        x: xs.to_vec(),
        gates: vec![Vec::new(); n],
        c: vec![Vec::new(); n],
        tanh_c: vec![Vec::new(); n],
        h: vec![Vec::new(); n],
    };
    let zero = vec![0.0; hd];
    let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
    let mut prev: Option<usize> = None;
    for &t in &order {
        let (h_prev, c_prev) = match prev {
            Some(p) => (&tape.h[p], &tape.c[p]),
            None => (&zero, &zero),
        };
        let mut z = cell.b.clone();
        cell.w_x.matvec_add(&xs[t], &mut z);
        cell.w_h.matvec_add(h_prev, &mut z);
        for (k, v) in z.iter_mut().enumerate() {
            *v = if (2 * hd..3 * hd).contains(&k) { v.tanh() } else { sigmoid(*v) };
        }
        let c: Vec<f64> = (0..hd)
            .map(|j| z[hd + j] * c_prev[j] + z[j] * z[2 * hd + j])
            .collect();
        let tc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..hd).map(|j| z[3 * hd + j] * tc[j]).collect();
        tape.gates[t] = z;
        tape.c[t] = c;
        tape.tanh_c[t] = tc;
        tape.h[t] = h;
        prev = Some(t);
    }
    tape
}

/// Backpropagates `dh[t]` (gradient w.r.t. this direction's outputs) and
/// accumulates weight gradients into `grad`. Returns the input gradients.
fn lstm_backward(cell: &Lstm, tape: &LstmTape, dh_out: &[Vec<f64>], reverse: bool, grad: &mut Lstm) -> Vec<Vec<f64>> {
    let n = tape.x.len();
    let hd = cell.hidden();
    let mut dx = vec![vec![0.0; cell.w_x.cols]; n];
    let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
    let mut dh_carry = vec![0.0; hd];
    let mut dc_carry = vec![0.0; hd];
    let zero = vec![0.0; hd];
    for (pos, &t) in order.iter().enumerate().rev() {
        let prev = pos.checked_sub(1).map(|p| order[p]);
        let (h_prev, c_prev) = match prev {
            Some(p) => (&tape.h[p], &tape.c[p]),
            None => (&zero, &zero),
        };
        let g = &tape.gates[t];
        let tc = &tape.tanh_c[t];
        let mut dz = vec![0.0; 4 * hd];
        for j in 0..hd {
            let (i_g, f_g, c_g, o_g) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
            let dh = dh_out[t][j] + dh_carry[j];
            let dc = dh * o_g * (1.0 - tc[j] * tc[j]) + dc_carry[j];
            dz[j] = dc * c_g * i_g * (1.0 - i_g);
            dz[hd + j] = dc * c_prev[j] * f_g * (1.0 - f_g);
            dz[2 * hd + j] = dc * i_g * (1.0 - c_g * c_g);
            dz[3 * hd + j] = dh * tc[j] * o_g * (1.0 - o_g);
            dc_carry[j] = dc * f_g;
        }
        grad.w_x.add_outer(1.0, &dz, &tape.x[t]);
        grad.w_h.add_outer(1.0, &dz, h_prev);
        axpy(1.0, &dz, &mut grad.b);
        cell.w_x.matvec_t_add(&dz, &mut dx[t]);
        dh_carry = cell.w_h.matvec_t(&dz);
    }
    dx
}

fn check_features(params: &ModelParams, sentence: &Sentence, feats: &FeatureView) -> Result<()> {
    let dims = &params.dims;
    if sentence.is_empty() {
        return Err(Error::DimensionMismatch("empty sentence".into()));
    }
    match params.variant {
        Variant::Nnsc => {}
        Variant::Instance => {
            let inst = match feats.instance {
                Some(i) => i,
                None if dims.rules == 0 => &[],
                None => return Err(Error::MissingFeatures("INSTANCE needs instance vectors".into())),
            };
            let width: usize = inst.iter().map(|u| u.values.len()).sum();
            if inst.len() != dims.rules || width != dims.instance_width {
                return Err(Error::DimensionMismatch(format!(
                    "expected {} instance vectors of total width {}, got {} of width {}",
                    dims.rules,
                    dims.instance_width,
                    inst.len(),
                    width
                )));
            }
        }
        Variant::Word => {
            let tags = match feats.tags {
                Some(t) => t,
                None if dims.rules == 0 => &[],
                None => return Err(Error::MissingFeatures("WORD needs word tags".into())),
            };
            if tags.len() != dims.rules {
                return Err(Error::DimensionMismatch(format!(
                    "expected {} tag sequences, got {}",
                    dims.rules,
                    tags.len()
                )));
            }
            if let Some(bad) = tags.iter().find(|t| t.tags.len() != sentence.len()) {
                return Err(Error::DimensionMismatch(format!(
                    "rule {} has {} tags for a {}-word sentence",
                    bad.rule_id,
                    bad.tags.len(),
                    sentence.len()
                )));
            }
        }
    }
    Ok(())
}

fn forward_tape(params: &ModelParams, sentence: &Sentence, feats: &FeatureView) -> Result<(ActivationRecord, Tape)> {
    check_features(params, sentence, feats)?;
    let w = &params.weights;
    let n = sentence.len();
    let hd = params.dims.hidden;

    let word_ids: Vec<usize> = sentence.words().iter().map(|t| params.vocab.get(t)).collect();
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut x = w.embeddings.row(word_ids[i]).to_vec();
            if params.variant == Variant::Word {
                if let Some(tags) = feats.tags {
                    x.extend(tags.iter().map(|v| v.tags[i] as f64));
                }
            }
            x
        })
        .collect();

    let fwd = lstm_run(&w.fwd, &xs, false);
    let bwd = lstm_run(&w.bwd, &xs, true);
    let h: Vec<Vec<f64>> = (0..n)
        .map(|i| [fwd.h[i].as_slice(), bwd.h[i].as_slice()].concat())
        .collect();

    let query_proj = w.attention.matvec(&h[n - 1]);
    let scores: Vec<f64> = h.iter().map(|hi| dot(hi, &query_proj)).collect();
    let alpha = softmax(&scores);
    let mut f = vec![0.0; 2 * hd];
    for (a, hi) in alpha.iter().zip(&h) {
        axpy(*a, hi, &mut f);
    }

    let mut z = f.clone();
    if params.variant == Variant::Instance {
        if let Some(inst) = feats.instance {
            z.extend(inst.iter().flat_map(|u| u.values.iter().copied()));
        }
    }
    let mut hidden = w.layers[0].b.clone();
    w.layers[0].w.matvec_add(&z, &mut hidden);
    hidden.iter_mut().for_each(|v| *v = v.tanh());
    let mut logits = w.layers[1].b.clone();
    w.layers[1].w.matvec_add(&hidden, &mut logits);
    let y = softmax(&logits);

    let record = ActivationRecord {
        h,
        alpha,
        f,
        logits,
        y,
    };
    let tape = Tape {
        word_ids,
        fwd,
        bwd,
        z,
        hidden,
    };
    Ok((record, tape))
}

pub fn forward(params: &ModelParams, sentence: &Sentence, feats: FeatureView) -> Result<ActivationRecord> {
    forward_tape(params, sentence, &feats).map(|(r, _)| r)
}

/// Cross-entropy of one example and its gradient.
pub fn example_grad(params: &ModelParams, sentence: &Sentence, feats: FeatureView, label: usize) -> Result<(f64, Weights)> {
    if label >= params.dims.classes {
        return Err(Error::DimensionMismatch(format!(
            "label {label} with {} classes",
            params.dims.classes
        )));
    }
    let (rec, tape) = forward_tape(params, sentence, &feats)?;
    let w = &params.weights;
    let mut g = w.zeros_like();
    let n = sentence.len();
    let hd = params.dims.hidden;
    let loss = -rec.y[label].ln();
    if !loss.is_finite() {
        return Err(Error::Numerical(format!("loss is {loss}")));
    }

    // softmax + cross-entropy
    let mut dlogits = rec.y.clone();
    dlogits[label] -= 1.0;
    g.layers[1].w.add_outer(1.0, &dlogits, &tape.hidden);
    axpy(1.0, &dlogits, &mut g.layers[1].b);
    let dhidden = w.layers[1].w.matvec_t(&dlogits);
    let dpre: Vec<f64> = dhidden
        .iter()
        .zip(&tape.hidden)
        .map(|(d, a)| d * (1.0 - a * a))
        .collect();
    g.layers[0].w.add_outer(1.0, &dpre, &tape.z);
    axpy(1.0, &dpre, &mut g.layers[0].b);
    let dz = w.layers[0].w.matvec_t(&dpre);
    let df = &dz[..2 * hd];

    // attention pooling
    let mut dh: Vec<Vec<f64>> = rec.alpha.iter().map(|a| df.iter().map(|d| a * d).collect()).collect();
    let dalpha: Vec<f64> = rec.h.iter().map(|hi| dot(df, hi)).collect();
    let mean = dot(&rec.alpha, &dalpha);
    let dscore: Vec<f64> = rec.alpha.iter().zip(&dalpha).map(|(a, d)| a * (d - mean)).collect();
    let query = &rec.h[n - 1];
    let query_proj = w.attention.matvec(query);
    let mut dquery = vec![0.0; 2 * hd];
    for (i, hi) in rec.h.iter().enumerate() {
        if dscore[i] == 0.0 {
            continue;
        }
        g.attention.add_outer(dscore[i], hi, query);
        axpy(dscore[i], &query_proj, &mut dh[i]);
        axpy(dscore[i], &w.attention.matvec_t(hi), &mut dquery);
    }
    axpy(1.0, &dquery, &mut dh[n - 1]);

    // recurrent layers
    let dh_fwd: Vec<Vec<f64>> = dh.iter().map(|r| r[..hd].to_vec()).collect();
    let dh_bwd: Vec<Vec<f64>> = dh.iter().map(|r| r[hd..].to_vec()).collect();
    let dx_f = lstm_backward(&w.fwd, &tape.fwd, &dh_fwd, false, &mut g.fwd);
    let dx_b = lstm_backward(&w.bwd, &tape.bwd, &dh_bwd, true, &mut g.bwd);
    let d = params.dims.embed;
    for (t, &id) in tape.word_ids.iter().enumerate() {
        let row = g.embeddings.row_mut(id);
        axpy(1.0, &dx_f[t][..d], row);
        axpy(1.0, &dx_b[t][..d], row);
    }
    Ok((loss, g))
}

/// Mean cross-entropy over `batch` and its gradient. Per-example gradients
/// may be computed in parallel; they are summed in batch order.
pub fn loss_and_grads<E>(params: &ModelParams, batch: &[E], exec: Exec) -> Result<(f64, Weights)>
where
    E: Borrow<Example> + Sync,
{
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let parts = exec.try_map(batch, |e| {
        let e = e.borrow();
        example_grad(
            params,
            &e.sentence,
            FeatureView::for_variant(params.variant, &e.features),
            e.label,
        )
    })?;
    let inv = 1.0 / batch.len() as f64;
    let mut total = params.weights.zeros_like();
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        total.add_scaled(1.0, g);
    }
    total.scale(inv);
    let loss = loss * inv;
    if !loss.is_finite() {
        return Err(Error::Numerical(format!("batch loss is {loss}")));
    }
    Ok((loss, total))
}

/// Argmax with ties going to the lowest index.
pub fn argmax(y: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in y.iter().enumerate() {
        if v > y[best] {
            best = i;
        }
    }
    best
}

pub fn predict(params: &ModelParams, sentence: &Sentence, feats: FeatureView) -> Result<usize> {
    forward(params, sentence, feats).map(|r| argmax(&r.y))
}

pub fn accuracy<E>(params: &ModelParams, examples: &[E], exec: Exec) -> Result<f64>
where
    E: Borrow<Example> + Sync,
{
    if examples.is_empty() {
        return Ok(0.0);
    }
    let hits = exec.try_map(examples, |e| {
        let e = e.borrow();
        predict(params, &e.sentence, FeatureView::for_variant(params.variant, &e.features))
            .map(|p| (p == e.label) as usize)
    })?;
    Ok(hits.iter().sum::<usize>() as f64 / examples.len() as f64)
}
