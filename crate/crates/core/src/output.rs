//! Per-lecture segmentation output document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::{Lecture, Segmentation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationOutput {
    pub lecture_id: String,
    pub method: String,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_used: Option<f64>,
    pub contiguous: bool,
    pub labels: Vec<usize>,
    /// Start time of every non-initial segment.
    pub boundaries_s: Vec<f64>,
}

impl SegmentationOutput {
    pub fn new(
        lecture: &Lecture,
        method: &str,
        seg: &Segmentation,
        alpha_used: Option<f64>,
    ) -> Result<Self> {
        if seg.len() != lecture.n_clips() {
            return Err(Error::validation(format!(
                "{}: segmentation covers {} clips, lecture has {}",
                lecture.lecture_id,
                seg.len(),
                lecture.n_clips()
            )));
        }
        Ok(Self {
            lecture_id: lecture.lecture_id.clone(),
            method: method.to_string(),
            k: seg.k(),
            alpha_used,
            contiguous: seg.is_contiguous(),
            labels: seg.labels().to_vec(),
            boundaries_s: seg.boundaries_s(&lecture.starts()),
        })
    }

    pub fn segmentation(&self) -> Segmentation {
        Segmentation::from_labels(&self.labels)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}
