use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Segmentation;
use crate::error::{Error, Result};

/// Per-modality feature dimensions shared by every record of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureDims {
    pub v2d: usize,
    pub v3d: usize,
    pub ocr: usize,
    pub text: usize,
}

impl Default for FeatureDims {
    fn default() -> Self {
        Self {
            v2d: 2048,
            v3d: 2048,
            ocr: 768,
            text: 768,
        }
    }
}

impl FeatureDims {
    pub fn uniform(d: usize) -> Self {
        Self {
            v2d: d,
            v3d: d,
            ocr: d,
            text: d,
        }
    }

    pub fn of(&self, m: Modality) -> usize {
        match m {
            Modality::V2d => self.v2d,
            Modality::V3d => self.v3d,
            Modality::Ocr => self.ocr,
            Modality::Text => self.text,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if Modality::ALL.iter().any(|&m| self.of(m) == 0) {
            return Err(Error::validation(format!(
                "feature dims must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// The four precomputed feature streams of a clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    V2d,
    V3d,
    Ocr,
    Text,
}

impl Modality {
    pub const ALL: [Modality; 4] = [Modality::V2d, Modality::V3d, Modality::Ocr, Modality::Text];

    pub fn name(self) -> &'static str {
        match self {
            Modality::V2d => "v2d",
            Modality::V3d => "v3d",
            Modality::Ocr => "ocr",
            Modality::Text => "text",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v2d" | "2d" => Ok(Modality::V2d),
            "v3d" | "3d" => Ok(Modality::V3d),
            "ocr" => Ok(Modality::Ocr),
            "text" | "txt" => Ok(Modality::Text),
            other => Err(Error::validation(format!("unknown modality {other:?}"))),
        }
    }
}

/// Which visual-side modalities feed the clip tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalityMask {
    pub v2d: bool,
    pub v3d: bool,
    pub ocr: bool,
}

impl Default for ModalityMask {
    fn default() -> Self {
        Self::ALL
    }
}

impl ModalityMask {
    pub const ALL: ModalityMask = ModalityMask {
        v2d: true,
        v3d: true,
        ocr: true,
    };

    pub fn is_empty(&self) -> bool {
        !(self.v2d || self.v3d || self.ocr)
    }

    pub fn from_modalities(ms: &[Modality]) -> Self {
        Self {
            v2d: ms.contains(&Modality::V2d),
            v3d: ms.contains(&Modality::V3d),
            ocr: ms.contains(&Modality::Ocr),
        }
    }
}

/// One subtitle cue. Only its timing is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitleCue {
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipFeatureRecord {
    pub lecture_id: String,
    pub clip_index: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub v2d: Vec<f32>,
    pub v3d: Vec<f32>,
    pub ocr: Vec<f32>,
    pub text: Vec<f32>,
}

impl ClipFeatureRecord {
    pub fn dims(&self) -> FeatureDims {
        FeatureDims {
            v2d: self.v2d.len(),
            v3d: self.v3d.len(),
            ocr: self.ocr.len(),
            text: self.text.len(),
        }
    }

    pub fn feature(&self, m: Modality) -> &[f32] {
        match m {
            Modality::V2d => &self.v2d,
            Modality::V3d => &self.v3d,
            Modality::Ocr => &self.ocr,
            Modality::Text => &self.text,
        }
    }

    /// Timestamp used for temporal distances: the interval midpoint.
    pub fn midpoint_s(&self) -> f64 {
        0.5 * (self.start_s + self.end_s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_s.is_finite() && self.end_s.is_finite() && self.end_s > self.start_s) {
            return Err(Error::validation(format!(
                "clip {} of {}: invalid interval [{}, {}]",
                self.clip_index, self.lecture_id, self.start_s, self.end_s
            )));
        }
        for m in Modality::ALL {
            if self.feature(m).iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!(
                    "clip {} of {}: non-finite {m} feature",
                    self.clip_index, self.lecture_id
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lecture {
    pub lecture_id: String,
    pub total_duration_s: f64,
    pub clips: Vec<ClipFeatureRecord>,
    pub gt: Option<Segmentation>,
}

impl Lecture {
    pub fn n_clips(&self) -> usize {
        self.clips.len()
    }

    /// Dims of the first clip, or `None` for an empty lecture.
    pub fn dims(&self) -> Option<FeatureDims> {
        self.clips.first().map(|c| c.dims())
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.clips.iter().map(|c| c.midpoint_s()).collect()
    }

    pub fn starts(&self) -> Vec<f64> {
        self.clips.iter().map(|c| c.start_s).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_duration_s.is_finite() && self.total_duration_s > 0.0) {
            return Err(Error::validation(format!(
                "{}: total duration must be positive",
                self.lecture_id
            )));
        }
        let dims = self.dims();
        let mut prev: Option<&ClipFeatureRecord> = None;
        for clip in &self.clips {
            clip.validate()?;
            if clip.lecture_id != self.lecture_id {
                return Err(Error::validation(format!(
                    "clip {} belongs to {}, not {}",
                    clip.clip_index, clip.lecture_id, self.lecture_id
                )));
            }
            if Some(clip.dims()) != dims {
                return Err(Error::DimMismatch(format!(
                    "{} clip {}: {:?} vs {:?}",
                    self.lecture_id,
                    clip.clip_index,
                    clip.dims(),
                    dims
                )));
            }
            if let Some(p) = prev {
                if clip.clip_index <= p.clip_index || clip.start_s < p.end_s {
                    return Err(Error::validation(format!(
                        "{}: clips {} and {} are out of order or overlap",
                        self.lecture_id, p.clip_index, clip.clip_index
                    )));
                }
            }
            prev = Some(clip);
        }
        if let Some(last) = self.clips.last() {
            if last.end_s > self.total_duration_s {
                return Err(Error::validation(format!(
                    "{}: clip ends at {} past total duration {}",
                    self.lecture_id, last.end_s, self.total_duration_s
                )));
            }
        }
        if let Some(gt) = &self.gt {
            if gt.len() != self.clips.len() {
                return Err(Error::validation(format!(
                    "{}: ground truth labels {} clips, lecture has {}",
                    self.lecture_id,
                    gt.len(),
                    self.clips.len()
                )));
            }
            if !gt.is_contiguous() {
                return Err(Error::validation(format!(
                    "{}: ground truth is not temporally contiguous",
                    self.lecture_id
                )));
            }
        }
        Ok(())
    }
}
