//! Loading a corpus from its manifest.

use std::path::Path;

use anyhow::{bail, Context};
use lecseg_core::datamodel::{read_features, read_manifest, ManifestEntry};
use lecseg_core::{Lecture, Segmentation};

use crate::exit::require;

pub struct CorpusLecture {
    pub entry: ManifestEntry,
    pub lecture: Lecture,
}

/// Reads every lecture of a manifest; ground truth from the manifest is
/// attached to the lecture.
pub fn load(manifest: &Path) -> anyhow::Result<Vec<CorpusLecture>> {
    let entries = read_manifest(require(manifest)?)
        .with_context(|| format!("reading {}", manifest.display()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    entries
        .into_iter()
        .map(|entry| {
            let path = base.join(&entry.path);
            let mut lecture = read_features(require(&path)?)
                .with_context(|| format!("reading {}", path.display()))?;
            if lecture.lecture_id != entry.id || lecture.n_clips() != entry.n_clips {
                bail!(
                    "{}: manifest says {} with {} clips, file holds {} with {}",
                    path.display(),
                    entry.id,
                    entry.n_clips,
                    lecture.lecture_id,
                    lecture.n_clips()
                );
            }
            if let Some(b) = &entry.gt_boundaries_s {
                lecture.gt = Some(Segmentation::from_boundaries(&lecture.midpoints(), b)?);
            }
            lecture.validate()?;
            Ok(CorpusLecture { entry, lecture })
        })
        .collect()
}

pub fn lectures(corpus: &[CorpusLecture]) -> Vec<Lecture> {
    corpus.iter().map(|c| c.lecture.clone()).collect()
}
