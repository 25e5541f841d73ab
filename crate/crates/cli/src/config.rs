//! The JSON run configuration. Values come from flags, then the file, then
//! defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use lecseg_core::baselines::{CteConfig, KMeansConfig};
use lecseg_core::{Modality, ModalityMask, SynthConfig, TrainConfig, TwfinchConfig};
use serde::{Deserialize, Serialize};

use crate::exit::require;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Corpus manifest.
    pub corpus: Option<PathBuf>,
    /// Manifest of the pretraining corpus for two-stage training.
    pub pretrain_corpus: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub paths: Paths,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub embed_dim: usize,
    /// Seed of the initial model weights.
    pub init_seed: u64,
    /// Save a checkpoint every this many epochs.
    pub checkpoint_every: usize,
    pub twfinch: TwfinchConfig,
    pub kmeans: KMeansConfig,
    pub cte: CteConfig,
    pub clip_min_s: f64,
    pub clip_max_s: f64,
    pub modalities: Vec<Modality>,
    /// Boundary score tolerances in seconds.
    pub k_list: Vec<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            paths: Paths::default(),
            synth: SynthConfig::default(),
            train: TrainConfig::default(),
            embed_dim: 256,
            init_seed: 0,
            checkpoint_every: 1,
            twfinch: TwfinchConfig::default(),
            kmeans: KMeansConfig::default(),
            cte: CteConfig::default(),
            clip_min_s: 10.0,
            clip_max_s: 15.0,
            modalities: Modality::ALL.to_vec(),
            k_list: vec![30],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes =
            std::fs::read(require(path)?).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!(
                "config schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            );
        }
        Ok(cfg)
    }

    /// Sets every seed to `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.synth.rng_seed = seed;
        self.train.rng_seed = seed;
        self.init_seed = seed;
        self.kmeans.rng_seed = seed;
        self.cte.kmeans.rng_seed = seed;
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.modalities.is_empty() {
            bail!("at least one modality must be selected");
        }
        if self.k_list.is_empty() {
            bail!("k_list must not be empty");
        }
        if self.embed_dim == 0 {
            bail!("embed_dim must be positive");
        }
        self.twfinch.validate()?;
        Ok(())
    }
}

/// Visual-side mask for a modality selection.
pub fn visual_mask(modalities: &[Modality]) -> anyhow::Result<ModalityMask> {
    let mask = ModalityMask::from_modalities(modalities);
    if mask.is_empty() {
        bail!("the clip tower needs at least one of v2d, v3d, ocr");
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.paths.corpus = Some("corpus/manifest.jsonl".into());
        cfg.train.lr = 3e-4;
        cfg.k_list = vec![5, 30];
        cfg.modalities = vec![Modality::Text];
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), json);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"schema_version": 1, "embed_dim": 16}"#).unwrap();
        assert_eq!(cfg.embed_dim, 16);
        assert_eq!(cfg.k_list, vec![30]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"embed_dims": 16}"#).is_err());
    }

    #[test]
    fn wrong_schema_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"schema_version": 9}"#).unwrap();
        assert!(RunConfig::load(&p).is_err());
    }
}
