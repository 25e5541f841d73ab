//! Lectures, clips, features and segmentations.

mod binio;
mod clipify;
mod features;
mod manifest;
mod segmentation;
mod synth;
mod types;

pub(crate) use binio::{ByteReader, ByteWriter};
pub use clipify::{clipify, ClipSpan};
pub use features::{
    decode_features, encode_features, read_features, read_features_with_dims, write_features,
    FEATURE_MAGIC, FEATURE_VERSION,
};
pub use manifest::{
    read_gt_file, read_manifest, write_gt_file, write_manifest, GroundTruthFile, ManifestEntry,
};
pub use segmentation::Segmentation;
pub use synth::{generate_synthetic, lecture_course, SynthConfig, TopicSignal, TopicSignals};
pub use types::{ClipFeatureRecord, FeatureDims, Lecture, Modality, ModalityMask, SubtitleCue};
