use serde::{Deserialize, Serialize};

use super::SubtitleCue;
use crate::error::{Error, Result};

/// A clip built from whole consecutive cues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipSpan {
    pub start_s: f64,
    pub end_s: f64,
    pub cue_indices: Vec<usize>,
}

impl ClipSpan {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Groups subtitle cues into clips of roughly `min_len..=max_len` seconds
/// without splitting a cue.
///
/// Cues are accumulated until the running span reaches `min_len`, at which
/// point the clip closes. A cue that alone overshoots `max_len` still forms
/// a clip. A tail shorter than `min_len` is folded into the previous clip.
/// Gaps between cues belong to the clip before the gap, so the clips tile
/// `[first cue start, last cue end]` exactly.
pub fn clipify(cues: &[SubtitleCue], min_len: f64, max_len: f64) -> Result<Vec<ClipSpan>> {
    if cues.is_empty() {
        return Err(Error::NoCues);
    }
    if !(min_len > 0.0 && min_len <= max_len) {
        return Err(Error::validation(format!(
            "need 0 < min_len <= max_len, got {min_len}, {max_len}"
        )));
    }
    for (i, c) in cues.iter().enumerate() {
        if !(c.start_s.is_finite() && c.end_s.is_finite() && c.end_s > c.start_s) {
            return Err(Error::validation(format!("cue {i}: invalid interval")));
        }
        if i > 0 && c.start_s < cues[i - 1].end_s {
            return Err(Error::validation(format!(
                "cue {i} overlaps or precedes cue {}",
                i - 1
            )));
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for (i, cue) in cues.iter().enumerate() {
        current.push(i);
        let span = cue.end_s - cues[current[0]].start_s;
        if span >= min_len {
            groups.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        match groups.last_mut() {
            Some(prev) => prev.extend(current),
            None => groups.push(current),
        }
    }

    let last_end = cues[cues.len() - 1].end_s;
    let starts: Vec<f64> = groups.iter().map(|g| cues[g[0]].start_s).collect();
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(i, cue_indices)| ClipSpan {
            start_s: starts[i],
            end_s: starts.get(i + 1).copied().unwrap_or(last_end),
            cue_indices,
        })
        .collect())
}
