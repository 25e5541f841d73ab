//! The `AVLZ` embedding dump: magic, clip count `u32`, width `u32`, then per
//! clip `f(c)` followed by `g(t)` as little-endian `f64` arrays.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::datamodel::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: [u8; 4] = *b"AVLZ";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDump {
    pub clip: Vec<Vec<f64>>,
    pub text: Vec<Vec<f64>>,
}

impl EmbeddingDump {
    pub fn width(&self) -> usize {
        self.clip.first().map_or(0, Vec::len)
    }

    /// `[f(c), g(t)]` per clip.
    pub fn concatenated(&self) -> Vec<Vec<f64>> {
        self.clip
            .iter()
            .zip(&self.text)
            .map(|(f, g)| f.iter().chain(g).copied().collect())
            .collect()
    }
}

pub fn write_embeddings(dump: &EmbeddingDump, path: impl AsRef<Path>) -> Result<()> {
    let e = dump.width();
    if dump.clip.len() != dump.text.len()
        || dump.clip.iter().chain(&dump.text).any(|v| v.len() != e)
    {
        return Err(Error::DimMismatch("embedding rows differ in width".into()));
    }
    let mut w = ByteWriter::new(BufWriter::new(File::create(path)?));
    w.bytes(&EMBEDDING_MAGIC)?;
    w.u32(dump.clip.len() as u32)?;
    w.u32(e as u32)?;
    for (f, g) in dump.clip.iter().zip(&dump.text) {
        w.f64_slice(f)?;
        w.f64_slice(g)?;
    }
    w.into_inner().flush()?;
    Ok(())
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingDump> {
    let mut r = ByteReader::new(BufReader::new(File::open(path)?), "embedding dump");
    r.magic(EMBEDDING_MAGIC)?;
    let n = r.u32()? as usize;
    let e = r.u32()? as usize;
    let mut clip = Vec::with_capacity(n);
    let mut text = Vec::with_capacity(n);
    for _ in 0..n {
        clip.push(r.f64_vec(e)?);
        text.push(r.f64_vec(e)?);
    }
    r.finish()?;
    Ok(EmbeddingDump { clip, text })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.avlz");
        let d = EmbeddingDump {
            clip: vec![vec![1.0, -2.0], vec![0.5, 0.25]],
            text: vec![vec![3.0, 4.0], vec![-0.0, 1e-300]],
        };
        write_embeddings(&d, &p).unwrap();
        assert_eq!(read_embeddings(&p).unwrap(), d);
        assert_eq!(d.concatenated()[0], vec![1.0, -2.0, 3.0, 4.0]);
    }

    #[test]
    fn rejects_ragged() {
        let dir = tempfile::tempdir().unwrap();
        let d = EmbeddingDump {
            clip: vec![vec![1.0, 2.0]],
            text: vec![vec![3.0]],
        };
        assert!(write_embeddings(&d, dir.path().join("x")).is_err());
    }
}
