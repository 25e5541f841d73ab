//! Unsupervised segmentation of lecture videos into topic segments.
//!
//! The pipeline works on precomputed per-clip feature vectors:
//!
//! * [`datamodel`] holds lectures, clips and segmentations, the binary
//!   feature format, subtitle-aligned clip construction and a seeded
//!   synthetic corpus generator.
//! * [`embedder`] learns joint clip/transcript embeddings with context
//!   gating and a max-margin ranking loss.
//! * [`twfinch`] clusters a lecture with temporally weighted first-neighbor
//!   merging.
//! * [`baselines`] provides equal splits, K-Means and a time-infused
//!   K-Means.
//! * [`metrics`] scores segmentations (NMI, MoF, IoU, F1, BS@k).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod datamodel;
pub mod embedder;
mod error;
pub mod metrics;
pub mod output;
pub mod twfinch;

pub use datamodel::{
    ClipFeatureRecord, FeatureDims, Lecture, Modality, ModalityMask, Segmentation, SubtitleCue,
    SynthConfig, TopicSignal,
};
pub use embedder::{JointEmbeddingParams, ModelDims, TrainConfig};
pub use error::{Error, Result};
pub use metrics::MetricReport;
pub use twfinch::{ClipPoint, PartitionHierarchy, TwfinchConfig};
