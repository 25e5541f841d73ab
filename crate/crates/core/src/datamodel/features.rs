//! The `AVLF` per-lecture feature file.
//!
//! Layout (little-endian): magic `AVLF`, version `u32 = 1`, lecture id as
//! `u32` byte length + UTF-8, total duration `f64`, clip count `u32`, dims
//! `v2d v3d ocr text` as 4×`u32`, then per clip `start_s f64`, `end_s f64`
//! and the four vectors as consecutive `f32` arrays.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ByteReader, ByteWriter, ClipFeatureRecord, FeatureDims, Lecture, Modality};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: [u8; 4] = *b"AVLF";
pub const FEATURE_VERSION: u32 = 1;

pub fn encode_features<W: Write>(lecture: &Lecture, sink: W) -> Result<W> {
    lecture.validate()?;
    let dims = lecture.dims().unwrap_or(FeatureDims {
        v2d: 0,
        v3d: 0,
        ocr: 0,
        text: 0,
    });
    let n_clips = u32::try_from(lecture.n_clips())
        .map_err(|_| Error::validation("too many clips for a u32 count"))?;
    let mut w = ByteWriter::new(sink);
    w.bytes(&FEATURE_MAGIC)?;
    w.u32(FEATURE_VERSION)?;
    w.u32(lecture.lecture_id.len() as u32)?;
    w.bytes(lecture.lecture_id.as_bytes())?;
    w.f64(lecture.total_duration_s)?;
    w.u32(n_clips)?;
    for m in Modality::ALL {
        w.u32(dims.of(m) as u32)?;
    }
    for clip in &lecture.clips {
        w.f64(clip.start_s)?;
        w.f64(clip.end_s)?;
        for m in Modality::ALL {
            w.f32_slice(clip.feature(m))?;
        }
    }
    Ok(w.into_inner())
}

/// Decodes one lecture. Ground truth is not part of the feature file.
pub fn decode_features<R: Read>(source: R) -> Result<Lecture> {
    let mut r = ByteReader::new(source, "feature file");
    r.magic(FEATURE_MAGIC)?;
    let version = r.u32()?;
    if version != FEATURE_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let lecture_id = r.string()?;
    let total_duration_s = r.f64()?;
    let n_clips = r.u32()? as usize;
    let dims = FeatureDims {
        v2d: r.u32()? as usize,
        v3d: r.u32()? as usize,
        ocr: r.u32()? as usize,
        text: r.u32()? as usize,
    };
    let mut clips = Vec::with_capacity(n_clips.min(1 << 16));
    for clip_index in 0..n_clips {
        let start_s = r.f64()?;
        let end_s = r.f64()?;
        clips.push(ClipFeatureRecord {
            lecture_id: lecture_id.clone(),
            clip_index,
            start_s,
            end_s,
            v2d: r.f32_vec(dims.v2d)?,
            v3d: r.f32_vec(dims.v3d)?,
            ocr: r.f32_vec(dims.ocr)?,
            text: r.f32_vec(dims.text)?,
        });
    }
    r.finish()?;
    let lecture = Lecture {
        lecture_id,
        total_duration_s,
        clips,
        gt: None,
    };
    lecture.validate()?;
    Ok(lecture)
}

pub fn write_features(lecture: &Lecture, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = encode_features(lecture, BufWriter::new(file))?;
    w.flush()?;
    Ok(())
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Lecture> {
    decode_features(BufReader::new(File::open(path)?))
}

/// Reads a lecture and checks its dims against the corpus-wide `expected`.
pub fn read_features_with_dims(path: impl AsRef<Path>, expected: FeatureDims) -> Result<Lecture> {
    let lecture = read_features(path)?;
    match lecture.dims() {
        Some(d) if d != expected => Err(Error::DimMismatch(format!(
            "{}: file has {d:?}, corpus expects {expected:?}",
            lecture.lecture_id
        ))),
        _ => Ok(lecture),
    }
}
