use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of the corpus manifest (JSON Lines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Feature file path, relative to the manifest's directory.
    pub path: String,
    pub n_clips: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_boundaries_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub course: Option<String>,
}

/// Ground-truth segmentation file: internal boundaries only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub lecture_id: String,
    pub boundaries_s: Vec<f64>,
}

pub fn write_manifest(entries: &[ManifestEntry], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line)
            .map_err(|e| Error::validation(format!("manifest line {}: {e}", n + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

pub fn write_gt_file(gt: &GroundTruthFile, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(gt)?)?;
    Ok(())
}

pub fn read_gt_file(path: impl AsRef<Path>) -> Result<GroundTruthFile> {
    let gt: GroundTruthFile = serde_json::from_slice(&fs::read(path)?)?;
    if gt.boundaries_s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation(format!(
            "{}: ground-truth boundaries must be strictly increasing",
            gt.lecture_id
        )));
    }
    Ok(gt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.jsonl");
        let entries = vec![
            ManifestEntry {
                id: "a".into(),
                path: "lectures/a.avlf".into(),
                n_clips: 3,
                gt_boundaries_s: Some(vec![10.0]),
                course: Some("c0".into()),
            },
            ManifestEntry {
                id: "b".into(),
                path: "lectures/b.avlf".into(),
                n_clips: 7,
                gt_boundaries_s: None,
                course: None,
            },
        ];
        write_manifest(&entries, &p).unwrap();
        assert_eq!(read_manifest(&p).unwrap(), entries);
    }

    #[test]
    fn gt_file_rejects_unsorted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gt.json");
        fs::write(&p, r#"{"lecture_id":"x","boundaries_s":[30.0,20.0]}"#).unwrap();
        assert!(read_gt_file(&p).is_err());
    }
}
