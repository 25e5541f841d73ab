use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{ByteReader, ByteWriter, FeatureDims};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"AVLE";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Input feature widths plus the embedding width.
///
/// The OCR projection maps to the width of the 2D visual feature, so the
/// clip tower input is `2 * v2d + v3d` wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub features: FeatureDims,
    pub embed: usize,
}

impl ModelDims {
    pub fn new(features: FeatureDims, embed: usize) -> Self {
        Self { features, embed }
    }

    pub fn ocr_proj(&self) -> usize {
        self.features.v2d
    }

    pub fn clip_input(&self) -> usize {
        self.ocr_proj() + self.features.v2d + self.features.v3d
    }

    fn validate(&self) -> Result<()> {
        self.features.validate()?;
        if self.embed == 0 {
            return Err(Error::validation("embedding dim must be positive"));
        }
        Ok(())
    }
}

/// The twelve learnable tensors, in checkpoint order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensor {
    WOcr,
    BOcr,
    W1Clip,
    B1Clip,
    W2Clip,
    B2Clip,
    WText,
    BText,
    W1Text,
    B1Text,
    W2Text,
    B2Text,
}

impl Tensor {
    pub const ALL: [Tensor; 12] = [
        Tensor::WOcr,
        Tensor::BOcr,
        Tensor::W1Clip,
        Tensor::B1Clip,
        Tensor::W2Clip,
        Tensor::B2Clip,
        Tensor::WText,
        Tensor::BText,
        Tensor::W1Text,
        Tensor::B1Text,
        Tensor::W2Text,
        Tensor::B2Text,
    ];

    /// `(rows, cols)`; biases have `cols == 0`.
    fn shape(self, d: &ModelDims) -> (usize, usize) {
        let e = d.embed;
        match self {
            Tensor::WOcr => (d.ocr_proj(), d.features.ocr),
            Tensor::BOcr => (d.ocr_proj(), 0),
            Tensor::W1Clip => (e, d.clip_input()),
            Tensor::W2Clip | Tensor::W1Text | Tensor::W2Text => (e, e),
            Tensor::WText => (e, d.features.text),
            Tensor::B1Clip | Tensor::B2Clip | Tensor::BText | Tensor::B1Text | Tensor::B2Text => {
                (e, 0)
            }
        }
    }

    fn len(self, d: &ModelDims) -> usize {
        let (r, c) = self.shape(d);
        r * c.max(1)
    }

    pub fn is_bias(self) -> bool {
        matches!(
            self,
            Tensor::BOcr
                | Tensor::B1Clip
                | Tensor::B2Clip
                | Tensor::BText
                | Tensor::B1Text
                | Tensor::B2Text
        )
    }
}

/// All parameters of both towers in one flat buffer.
///
/// Tensors are stored row-major, back to back, in [`Tensor::ALL`] order.
/// The same type doubles as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct JointEmbeddingParams {
    dims: ModelDims,
    offsets: [usize; 13],
    data: Vec<f64>,
}

impl JointEmbeddingParams {
    pub fn zeros(dims: ModelDims) -> Result<Self> {
        dims.validate()?;
        let mut offsets = [0usize; 13];
        for (i, t) in Tensor::ALL.iter().enumerate() {
            offsets[i + 1] = offsets[i] + t.len(&dims);
        }
        Ok(Self {
            dims,
            offsets,
            data: vec![0.0; offsets[12]],
        })
    }

    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn init(dims: ModelDims, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in Tensor::ALL {
            if t.is_bias() {
                continue;
            }
            let bound = 1.0 / (t.shape(&dims).1 as f64).sqrt();
            for x in p.slice_mut(t) {
                *x = rng.random_range(-bound..bound);
            }
        }
        Ok(p)
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn n_params(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn range(&self, t: Tensor) -> std::ops::Range<usize> {
        let i = t as usize;
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn slice(&self, t: Tensor) -> &[f64] {
        &self.data[self.range(t)]
    }

    pub fn slice_mut(&mut self, t: Tensor) -> &mut [f64] {
        let r = self.range(t);
        &mut self.data[r]
    }

    pub fn matrix(&self, t: Tensor) -> ArrayView2<'_, f64> {
        debug_assert!(!t.is_bias());
        ArrayView2::from_shape(t.shape(&self.dims), self.slice(t)).expect("layout")
    }

    pub fn matrix_mut(&mut self, t: Tensor) -> ArrayViewMut2<'_, f64> {
        debug_assert!(!t.is_bias());
        let shape = t.shape(&self.dims);
        ArrayViewMut2::from_shape(shape, self.slice_mut(t)).expect("layout")
    }

    pub fn vector(&self, t: Tensor) -> ArrayView1<'_, f64> {
        debug_assert!(t.is_bias());
        ArrayView1::from(self.slice(t))
    }

    pub fn vector_mut(&mut self, t: Tensor) -> ArrayViewMut1<'_, f64> {
        debug_assert!(t.is_bias());
        ArrayViewMut1::from(self.slice_mut(t))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Checks that a record's feature widths match the model.
    pub fn check_features(&self, dims: FeatureDims) -> Result<()> {
        if dims != self.dims.features {
            return Err(Error::DimMismatch(format!(
                "record dims {dims:?} vs model dims {:?}",
                self.dims.features
            )));
        }
        Ok(())
    }
}

/// Checkpoint layout (little-endian): magic `AVLE`, version `u32 = 1`,
/// dims `ocr text v2d v3d embed` as 5×`u32`, then every tensor in
/// [`Tensor::ALL`] order as row-major `f64`.
pub fn write_params<W: Write>(params: &JointEmbeddingParams, sink: W) -> Result<W> {
    let d = params.dims;
    let mut w = ByteWriter::new(sink);
    w.bytes(&CHECKPOINT_MAGIC)?;
    w.u32(CHECKPOINT_VERSION)?;
    for v in [
        d.features.ocr,
        d.features.text,
        d.features.v2d,
        d.features.v3d,
        d.embed,
    ] {
        w.u32(v as u32)?;
    }
    w.f64_slice(&params.data)?;
    Ok(w.into_inner())
}

pub fn read_params<R: Read>(source: R) -> Result<JointEmbeddingParams> {
    let mut r = ByteReader::new(source, "checkpoint");
    r.magic(CHECKPOINT_MAGIC)?;
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let ocr = r.u32()? as usize;
    let text = r.u32()? as usize;
    let v2d = r.u32()? as usize;
    let v3d = r.u32()? as usize;
    let embed = r.u32()? as usize;
    let dims = ModelDims::new(
        FeatureDims {
            v2d,
            v3d,
            ocr,
            text,
        },
        embed,
    );
    let mut p = JointEmbeddingParams::zeros(dims)?;
    p.data = r.f64_vec(p.data.len())?;
    r.finish()?;
    Ok(p)
}

pub fn save_params(params: &JointEmbeddingParams, path: impl AsRef<Path>) -> Result<()> {
    let mut w = write_params(params, BufWriter::new(File::create(path)?))?;
    w.flush()?;
    Ok(())
}

pub fn load_params(path: impl AsRef<Path>) -> Result<JointEmbeddingParams> {
    read_params(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> ModelDims {
        ModelDims::new(
            FeatureDims {
                v2d: 3,
                v3d: 2,
                ocr: 4,
                text: 5,
            },
            6,
        )
    }

    #[test]
    fn layout_sizes() {
        let p = JointEmbeddingParams::zeros(dims()).unwrap();
        assert_eq!(p.matrix(Tensor::WOcr).dim(), (3, 4));
        assert_eq!(p.matrix(Tensor::W1Clip).dim(), (6, 8));
        assert_eq!(p.matrix(Tensor::WText).dim(), (6, 5));
        assert_eq!(p.vector(Tensor::BOcr).len(), 3);
        let expected = 3 * 4 + 3 + 6 * 8 + 6 + 36 + 6 + 30 + 6 + 36 + 6 + 36 + 6;
        assert_eq!(p.n_params(), expected);
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let p = JointEmbeddingParams::init(dims(), 3).unwrap();
        let bound = 1.0 / 8f64.sqrt();
        assert!(p.slice(Tensor::W1Clip).iter().all(|x| x.abs() <= bound));
        assert!(p.slice(Tensor::B1Clip).iter().all(|&x| x == 0.0));
        assert_eq!(p, JointEmbeddingParams::init(dims(), 3).unwrap());
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = JointEmbeddingParams::init(dims(), 11).unwrap();
        let bytes = write_params(&p, Vec::new()).unwrap();
        let back = read_params(bytes.as_slice()).unwrap();
        assert_eq!(back, p);
        assert_eq!(write_params(&back, Vec::new()).unwrap(), bytes);
    }

    #[test]
    fn checkpoint_errors() {
        let p = JointEmbeddingParams::init(dims(), 11).unwrap();
        let bytes = write_params(&p, Vec::new()).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'Z';
        assert!(matches!(
            read_params(bad.as_slice()),
            Err(Error::BadMagic { .. })
        ));

        let mut v2 = bytes.clone();
        v2[4..8].copy_from_slice(&2u32.to_le_bytes());
        let err = read_params(v2.as_slice()).unwrap_err();
        assert_eq!(err.to_string(), "unsupported version 2");

        let short = &bytes[..bytes.len() - 8];
        assert!(matches!(read_params(short), Err(Error::Truncated(_))));
    }
}
