use std::io::{self, Read, Write};

use crate::error::{Error, Result};

/// Little-endian writer over any sink.
pub(crate) struct ByteWriter<W: Write> {
    inner: W,
}

impl<W: Write> ByteWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b)?;
        Ok(())
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f32_slice(&mut self, v: &[f32]) -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 4);
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.bytes(&buf)
    }

    pub fn f64_slice(&mut self, v: &[f64]) -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 8);
        for x in v {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        self.bytes(&buf)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

/// Little-endian reader; running out of input maps to [`Error::Truncated`].
pub(crate) struct ByteReader<R: Read> {
    inner: R,
    what: &'static str,
}

impl<R: Read> ByteReader<R> {
    pub fn new(inner: R, what: &'static str) -> Self {
        Self { inner, what }
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => Error::Truncated(self.what.to_string()),
            _ => Error::Io(e),
        })
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let mut found = [0u8; 4];
        self.fill(&mut found)?;
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let mut b = vec![0u8; len];
        self.fill(&mut b)?;
        String::from_utf8(b).map_err(|_| Error::validation("string is not valid UTF-8"))
    }

    pub fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let mut b = vec![0u8; n * 4];
        self.fill(&mut b)?;
        Ok(b.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut b = vec![0u8; n * 8];
        self.fill(&mut b)?;
        Ok(b.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    /// Errors unless the input is exhausted.
    pub fn finish(mut self) -> Result<()> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b)? {
            0 => Ok(()),
            _ => Err(Error::validation(format!(
                "trailing bytes after {}",
                self.what
            ))),
        }
    }
}
