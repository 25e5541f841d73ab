//! Process exit codes and error classification.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

pub const VALIDATION: u8 = 1;
pub const MISSING_ARTIFACT: u8 = 2;
pub const NUMERICAL: u8 = 3;

/// A required input file or directory does not exist.
#[derive(Debug)]
pub struct MissingArtifact(pub PathBuf);

impl fmt::Display for MissingArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing artifact: {}", self.0.display())
    }
}

impl std::error::Error for MissingArtifact {}

/// Fails with [`MissingArtifact`] unless `path` exists.
pub fn require(path: &Path) -> anyhow::Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(MissingArtifact(path.to_path_buf()).into())
    }
}

pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<MissingArtifact>() {
            return MISSING_ARTIFACT;
        }
        if let Some(e) = cause.downcast_ref::<lecseg_core::Error>() {
            return match e {
                lecseg_core::Error::Numerical(_) | lecseg_core::Error::DegenerateEmbedding => {
                    NUMERICAL
                }
                lecseg_core::Error::Io(io) if io.kind() == io::ErrorKind::NotFound => {
                    MISSING_ARTIFACT
                }
                _ => VALIDATION,
            };
        }
        if let Some(io) = cause.downcast_ref::<io::Error>() {
            if io.kind() == io::ErrorKind::NotFound {
                return MISSING_ARTIFACT;
            }
        }
    }
    VALIDATION
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        let missing: anyhow::Error = MissingArtifact("x".into()).into();
        assert_eq!(code(&missing.context("loading")), MISSING_ARTIFACT);
        let nan: anyhow::Error = lecseg_core::Error::Numerical("nan".into()).into();
        assert_eq!(code(&nan), NUMERICAL);
        let bad: anyhow::Error = lecseg_core::Error::Validation("k".into()).into();
        assert_eq!(code(&bad), VALIDATION);
        let io: anyhow::Error = io::Error::from(io::ErrorKind::NotFound).into();
        assert_eq!(code(&io), MISSING_ARTIFACT);
        assert_eq!(code(&anyhow::anyhow!("other")), VALIDATION);
    }
}
