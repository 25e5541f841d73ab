use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cluster membership of a lecture's clips.
///
/// Labels are always canonical: `0..k`, numbered in order of first
/// occurrence along the clip sequence, so a segmentation `[0, 0, 1, 1, 2]`
/// and its relabelings `[2, 2, 0, 0, 1]` compare equal after construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", from = "Vec<usize>")]
pub struct Segmentation {
    labels: Vec<usize>,
    k: usize,
    contiguous: bool,
}

impl From<Segmentation> for Vec<usize> {
    fn from(s: Segmentation) -> Self {
        s.labels
    }
}

impl From<Vec<usize>> for Segmentation {
    fn from(v: Vec<usize>) -> Self {
        Segmentation::from_labels(&v)
    }
}

impl Segmentation {
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map: HashMap<usize, usize> = HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        let k = map.len();
        let runs = 1 + labels.windows(2).filter(|w| w[0] != w[1]).count();
        let contiguous = labels.is_empty() || runs == k;
        Self {
            labels,
            k,
            contiguous,
        }
    }

    /// Every clip in its own segment.
    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    /// Labels clips by counting the boundaries at or before each timestamp.
    ///
    /// `boundaries_s` are internal boundaries only; a clip whose timestamp
    /// equals a boundary belongs to the segment that starts there.
    pub fn from_boundaries(timestamps: &[f64], boundaries_s: &[f64]) -> Result<Self> {
        if boundaries_s.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::validation("boundaries must be sorted"));
        }
        let raw: Vec<usize> = timestamps
            .iter()
            .map(|&t| boundaries_s.partition_point(|&b| b <= t))
            .collect();
        Ok(Self::from_labels(&raw))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_contiguous(&self) -> bool {
        self.contiguous
    }

    /// Start time of every clip that begins a new run of labels.
    pub fn boundaries_s(&self, clip_starts: &[f64]) -> Vec<f64> {
        debug_assert_eq!(clip_starts.len(), self.labels.len());
        self.labels
            .windows(2)
            .zip(clip_starts.iter().skip(1))
            .filter(|(w, _)| w[0] != w[1])
            .map(|(_, &t)| t)
            .collect()
    }

    /// Member clip indices of each cluster, in label order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// True when every cluster of `finer` lies inside a single cluster of `self`.
    pub fn coarsens(&self, finer: &Segmentation) -> bool {
        if finer.len() != self.len() {
            return false;
        }
        let mut parent = vec![None; finer.k];
        for (&f, &c) in finer.labels.iter().zip(&self.labels) {
            match parent[f] {
                None => parent[f] = Some(c),
                Some(p) if p != c => return false,
                _ => {}
            }
        }
        true
    }

    /// Composes a partition of this segmentation's clusters into a partition of clips.
    pub(crate) fn compose(&self, cluster_labels: &[usize]) -> Segmentation {
        debug_assert_eq!(cluster_labels.len(), self.k);
        let raw: Vec<usize> = self.labels.iter().map(|&l| cluster_labels[l]).collect();
        Segmentation::from_labels(&raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_in_first_occurrence_order() {
        let s = Segmentation::from_labels(&[7, 7, 3, 3, 3, 9, 9]);
        assert_eq!(s.labels(), &[0, 0, 1, 1, 1, 2, 2]);
        assert_eq!(s.k(), 3);
        assert!(s.is_contiguous());
    }

    #[test]
    fn detects_non_contiguous() {
        let s = Segmentation::from_labels(&[0, 1, 0]);
        assert_eq!(s.k(), 2);
        assert!(!s.is_contiguous());
        assert_eq!(s.boundaries_s(&[0.0, 10.0, 20.0]), vec![10.0, 20.0]);
    }

    #[test]
    fn boundaries_round_trip() {
        let starts = [0.0, 10.0, 20.0, 30.0, 40.0];
        let mids: Vec<f64> = starts.iter().map(|s| s + 5.0).collect();
        let s = Segmentation::from_boundaries(&mids, &[20.0, 40.0]).unwrap();
        assert_eq!(s.labels(), &[0, 0, 1, 1, 2]);
        assert_eq!(s.boundaries_s(&starts), vec![20.0, 40.0]);
    }

    #[test]
    fn unsorted_boundaries_rejected() {
        assert!(Segmentation::from_boundaries(&[1.0], &[5.0, 2.0]).is_err());
    }

    #[test]
    fn coarsening_relation() {
        let fine = Segmentation::from_labels(&[0, 0, 1, 1, 2, 2]);
        let coarse = Segmentation::from_labels(&[0, 0, 0, 0, 1, 1]);
        assert!(coarse.coarsens(&fine));
        assert!(!fine.coarsens(&coarse));
        let crossing = Segmentation::from_labels(&[0, 1, 1, 1, 1, 1]);
        assert!(!crossing.coarsens(&fine));
    }

    #[test]
    fn empty_is_contiguous() {
        let s = Segmentation::from_labels(&[]);
        assert_eq!(s.k(), 0);
        assert!(s.is_contiguous());
    }
}
