use ndarray::{Array2, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};

use super::model::{clip_forward, normalize_rows, text_forward, GateCache};
use super::params::{JointEmbeddingParams, Tensor};
use crate::datamodel::{ClipFeatureRecord, ModalityMask};
use crate::error::{Error, Result};

/// Bidirectional max-margin ranking loss over an in-batch score matrix.
///
/// `scores[[i, j]]` is the similarity of clip `i` with transcript `j`; the
/// diagonal holds the aligned pairs. Returns the loss
/// `Σ_i Σ_{j≠i} [δ + s_ij − s_ii]₊ + [δ + s_ji − s_ii]₊` and its gradient
/// with respect to the scores. A hinge exactly at zero is inactive.
pub fn ranking_loss(scores: ArrayView2<f64>, margin: f64) -> (f64, Array2<f64>) {
    let n = scores.nrows();
    debug_assert_eq!(n, scores.ncols());
    let mut loss = 0.0;
    let mut grad = Array2::zeros((n, n));
    for i in 0..n {
        let pos = scores[[i, i]];
        for j in (0..n).filter(|&j| j != i) {
            let clip_to_text = margin + scores[[i, j]] - pos;
            if clip_to_text > 0.0 {
                loss += clip_to_text;
                grad[[i, j]] += 1.0;
                grad[[i, i]] -= 1.0;
            }
            let text_to_clip = margin + scores[[j, i]] - pos;
            if text_to_clip > 0.0 {
                loss += text_to_clip;
                grad[[j, i]] += 1.0;
                grad[[i, i]] -= 1.0;
            }
        }
    }
    (loss, grad)
}

fn check_batch(batch: &[&ClipFeatureRecord]) -> Result<()> {
    if batch.len() < 2 {
        return Err(Error::validation(format!(
            "batch of {} pairs has no negatives",
            batch.len()
        )));
    }
    Ok(())
}

/// Cosine score matrix between every clip and every transcript of a batch.
pub fn similarity_matrix(
    params: &JointEmbeddingParams,
    batch: &[&ClipFeatureRecord],
    mask: ModalityMask,
) -> Result<Array2<f64>> {
    let clips = clip_forward(params, batch, mask)?;
    let texts = text_forward(params, batch)?;
    let (fu, _) = normalize_rows(&clips.gate.out)?;
    let (gu, _) = normalize_rows(&texts.gate.out)?;
    Ok(fu.dot(&gu.t()))
}

/// Back through `x ↦ unit(x)`: projects out the radial component.
fn unnormalize_grad(
    d_unit: &Array2<f64>,
    unit: &Array2<f64>,
    norms: &ndarray::Array1<f64>,
) -> Array2<f64> {
    let radial = (d_unit * unit).sum_axis(Axis(1)).insert_axis(Axis(1));
    (d_unit - &(unit * &radial)) / norms.view().insert_axis(Axis(1))
}

fn add_outer(mut dst: ArrayViewMut2<f64>, d_out: &Array2<f64>, input: ArrayView2<f64>) {
    dst += &d_out.t().dot(&input);
}

fn add_rows(mut dst: ArrayViewMut1<f64>, d_out: &Array2<f64>) {
    dst += &d_out.sum_axis(Axis(0));
}

/// Backprop through one gated projection; returns the gradient w.r.t. its input.
fn gate_backward(
    params: &JointEmbeddingParams,
    grads: &mut JointEmbeddingParams,
    cache: &GateCache,
    d_out: &Array2<f64>,
    [w1, b1, w2, b2]: [Tensor; 4],
) -> Array2<f64> {
    let sig_prime = cache.gate.mapv(|g| g * (1.0 - g));
    let d_a = d_out * &cache.h * &sig_prime;
    let mut d_h = d_out * &cache.gate;
    add_outer(grads.matrix_mut(w2), &d_a, cache.h.view());
    add_rows(grads.vector_mut(b2), &d_a);
    d_h += &d_a.dot(&params.matrix(w2));
    add_outer(grads.matrix_mut(w1), &d_h, cache.input.view());
    add_rows(grads.vector_mut(b1), &d_h);
    d_h.dot(&params.matrix(w1))
}

/// Loss of one batch of aligned (clip, transcript) pairs and its exact gradient.
///
/// Every other pair in the batch is a negative for pair `i`, so the batch
/// composition decides how many negatives come from the same lecture.
pub fn batch_loss(
    params: &JointEmbeddingParams,
    batch: &[&ClipFeatureRecord],
    margin: f64,
    mask: ModalityMask,
) -> Result<(f64, JointEmbeddingParams)> {
    check_batch(batch)?;
    let clips = clip_forward(params, batch, mask)?;
    let texts = text_forward(params, batch)?;
    let (fu, f_norm) = normalize_rows(&clips.gate.out)?;
    let (gu, g_norm) = normalize_rows(&texts.gate.out)?;
    let scores = fu.dot(&gu.t());
    let (loss, d_scores) = ranking_loss(scores.view(), margin);

    let mut grads = JointEmbeddingParams::zeros(params.dims())?;
    if loss == 0.0 {
        return Ok((loss, grads));
    }

    let d_f = unnormalize_grad(&d_scores.dot(&gu), &fu, &f_norm);
    let d_g = unnormalize_grad(&d_scores.t().dot(&fu), &gu, &g_norm);

    let d_c = gate_backward(
        params,
        &mut grads,
        &clips.gate,
        &d_f,
        [
            Tensor::W1Clip,
            Tensor::B1Clip,
            Tensor::W2Clip,
            Tensor::B2Clip,
        ],
    );
    if mask.ocr {
        let d_o = d_c
            .slice(ndarray::s![.., 0..params.dims().ocr_proj()])
            .to_owned();
        add_outer(grads.matrix_mut(Tensor::WOcr), &d_o, clips.ocr_in.view());
        add_rows(grads.vector_mut(Tensor::BOcr), &d_o);
    }

    let d_t = gate_backward(
        params,
        &mut grads,
        &texts.gate,
        &d_g,
        [
            Tensor::W1Text,
            Tensor::B1Text,
            Tensor::W2Text,
            Tensor::B2Text,
        ],
    );
    add_outer(grads.matrix_mut(Tensor::WText), &d_t, texts.text_in.view());
    add_rows(grads.vector_mut(Tensor::BText), &d_t);

    Ok((loss, grads))
}
