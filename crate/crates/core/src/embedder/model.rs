use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::params::{JointEmbeddingParams, Tensor};
use crate::datamodel::{ClipFeatureRecord, ModalityMask};
use crate::error::{Error, Result};

/// Identifies a clip within a corpus; orders by lecture, then index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClipId {
    pub lecture_id: String,
    pub clip_index: usize,
}

impl ClipId {
    pub fn of(record: &ClipFeatureRecord) -> Self {
        Self {
            lecture_id: record.lecture_id.clone(),
            clip_index: record.clip_index,
        }
    }
}

/// `f(c)` for one clip. Not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipEmbedding {
    pub id: ClipId,
    pub vector: Vec<f64>,
}

/// `g(t)` for one transcript. Not normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbedding {
    pub id: ClipId,
    pub vector: Vec<f64>,
}

pub(crate) fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Intermediate values of one gated projection over a batch of rows.
pub(crate) struct GateCache {
    pub input: Array2<f64>,
    pub h: Array2<f64>,
    pub gate: Array2<f64>,
    pub out: Array2<f64>,
}

fn affine(x: ArrayView2<f64>, w: ArrayView2<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    x.dot(&w.t()) + b
}

fn gate_forward(
    input: Array2<f64>,
    params: &JointEmbeddingParams,
    w1: Tensor,
    b1: Tensor,
    w2: Tensor,
    b2: Tensor,
) -> GateCache {
    let h = affine(input.view(), params.matrix(w1), params.vector(b1));
    let gate = affine(h.view(), params.matrix(w2), params.vector(b2)).mapv(sigmoid);
    let out = &h * &gate;
    GateCache {
        input,
        h,
        gate,
        out,
    }
}

fn stack(
    rows: impl ExactSizeIterator<Item = impl Iterator<Item = f64>>,
    width: usize,
) -> Array2<f64> {
    let n = rows.len();
    let flat: Vec<f64> = rows.flatten().collect();
    Array2::from_shape_vec((n, width), flat).expect("rows of equal width")
}

/// Clip tower forward state for a batch.
pub(crate) struct ClipForward {
    pub ocr_in: Array2<f64>,
    pub gate: GateCache,
}

pub(crate) fn clip_forward(
    params: &JointEmbeddingParams,
    records: &[&ClipFeatureRecord],
    mask: ModalityMask,
) -> Result<ClipForward> {
    if mask.is_empty() {
        return Err(Error::validation(
            "modality mask selects no visual modality",
        ));
    }
    for r in records {
        params.check_features(r.dims())?;
    }
    let f = params.dims().features;
    let widen = |v: &[f32]| v.iter().map(|&x| x as f64).collect::<Vec<_>>().into_iter();
    let ocr_in = stack(records.iter().map(|r| widen(&r.ocr)), f.ocr);
    let v2d = stack(records.iter().map(|r| widen(&r.v2d)), f.v2d);
    let v3d = stack(records.iter().map(|r| widen(&r.v3d)), f.v3d);

    let n = records.len();
    let o = if mask.ocr {
        affine(
            ocr_in.view(),
            params.matrix(Tensor::WOcr),
            params.vector(Tensor::BOcr),
        )
    } else {
        Array2::zeros((n, f.v2d))
    };
    let v2d = if mask.v2d {
        v2d
    } else {
        Array2::zeros((n, f.v2d))
    };
    let v3d = if mask.v3d {
        v3d
    } else {
        Array2::zeros((n, f.v3d))
    };
    let c = concatenate(Axis(1), &[o.view(), v2d.view(), v3d.view()]).expect("same row count");
    let gate = gate_forward(
        c,
        params,
        Tensor::W1Clip,
        Tensor::B1Clip,
        Tensor::W2Clip,
        Tensor::B2Clip,
    );
    Ok(ClipForward { ocr_in, gate })
}

/// Text tower forward state for a batch.
pub(crate) struct TextForward {
    pub text_in: Array2<f64>,
    pub gate: GateCache,
}

pub(crate) fn text_forward(
    params: &JointEmbeddingParams,
    records: &[&ClipFeatureRecord],
) -> Result<TextForward> {
    for r in records {
        params.check_features(r.dims())?;
    }
    let f = params.dims().features;
    let text_in = stack(
        records.iter().map(|r| r.text.iter().map(|&x| x as f64)),
        f.text,
    );
    let t = affine(
        text_in.view(),
        params.matrix(Tensor::WText),
        params.vector(Tensor::BText),
    );
    let gate = gate_forward(
        t,
        params,
        Tensor::W1Text,
        Tensor::B1Text,
        Tensor::W2Text,
        Tensor::B2Text,
    );
    Ok(TextForward { text_in, gate })
}

const EMBED_CHUNK: usize = 256;

pub fn embed_clip(
    params: &JointEmbeddingParams,
    record: &ClipFeatureRecord,
    mask: ModalityMask,
) -> Result<ClipEmbedding> {
    Ok(embed_clips(params, &[record], mask)?.remove(0))
}

pub fn embed_clips(
    params: &JointEmbeddingParams,
    records: &[&ClipFeatureRecord],
    mask: ModalityMask,
) -> Result<Vec<ClipEmbedding>> {
    let mut out = Vec::with_capacity(records.len());
    for chunk in records.chunks(EMBED_CHUNK) {
        let fwd = clip_forward(params, chunk, mask)?;
        out.extend(
            chunk
                .iter()
                .zip(fwd.gate.out.rows())
                .map(|(r, row)| ClipEmbedding {
                    id: ClipId::of(r),
                    vector: row.to_vec(),
                }),
        );
    }
    Ok(out)
}

pub fn embed_text(
    params: &JointEmbeddingParams,
    record: &ClipFeatureRecord,
) -> Result<TextEmbedding> {
    Ok(embed_texts(params, &[record])?.remove(0))
}

pub fn embed_texts(
    params: &JointEmbeddingParams,
    records: &[&ClipFeatureRecord],
) -> Result<Vec<TextEmbedding>> {
    let mut out = Vec::with_capacity(records.len());
    for chunk in records.chunks(EMBED_CHUNK) {
        let fwd = text_forward(params, chunk)?;
        out.extend(
            chunk
                .iter()
                .zip(fwd.gate.out.rows())
                .map(|(r, row)| TextEmbedding {
                    id: ClipId::of(r),
                    vector: row.to_vec(),
                }),
        );
    }
    Ok(out)
}

/// `g(t)` for a bare transcript feature vector, e.g. a retrieval query.
pub fn embed_query(params: &JointEmbeddingParams, text: &[f32]) -> Result<Vec<f64>> {
    let f = params.dims().features;
    if text.len() != f.text {
        return Err(Error::DimMismatch(format!(
            "query has {} values, model expects {}",
            text.len(),
            f.text
        )));
    }
    let t_in = Array2::from_shape_fn((1, f.text), |(_, j)| text[j] as f64);
    let t = affine(
        t_in.view(),
        params.matrix(Tensor::WText),
        params.vector(Tensor::BText),
    );
    let gate = gate_forward(
        t,
        params,
        Tensor::W1Text,
        Tensor::B1Text,
        Tensor::W2Text,
        Tensor::B2Text,
    );
    Ok(gate.out.row(0).to_vec())
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(format!("{} vs {}", a.len(), b.len())));
    }
    let a = ArrayView1::from(a);
    let b = ArrayView1::from(b);
    let na = a.dot(&a);
    let nb = b.dot(&b);
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(Error::DegenerateEmbedding);
    }
    Ok((a.dot(&b) / (na * nb).sqrt()).clamp(-1.0, 1.0))
}

/// Cosine similarity between a clip and a transcript embedding.
pub fn similarity(clip: &ClipEmbedding, text: &TextEmbedding) -> Result<f64> {
    cosine(&clip.vector, &text.vector)
}

/// Row-normalized copy plus the row norms; errors on a zero row.
pub(crate) fn normalize_rows(m: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let norms: Array1<f64> = m.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    if norms.iter().any(|n| !n.is_finite()) {
        return Err(Error::Numerical("non-finite embedding".into()));
    }
    if norms.iter().any(|&n| n == 0.0) {
        return Err(Error::DegenerateEmbedding);
    }
    let unit = m / &norms.view().insert_axis(Axis(1));
    Ok((unit, norms))
}

#[cfg(test)]
pub(crate) fn clip_slices(params: &JointEmbeddingParams) -> [(usize, usize); 3] {
    let f = params.dims().features;
    [
        (0, f.v2d),
        (f.v2d, 2 * f.v2d),
        (2 * f.v2d, 2 * f.v2d + f.v3d),
    ]
}
