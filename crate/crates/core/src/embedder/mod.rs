//! Joint clip/transcript embeddings with context gating.
//!
//! The clip tower projects the OCR feature to the width of the 2D visual
//! feature, concatenates it with the 2D and 3D visual features and applies
//! a gated projection `f(c) = h ⊙ σ(W₂h + b₂)` with `h = W₁c + b₁`. The text
//! tower projects the transcript feature to the embedding width and applies
//! the same gating with its own weights. Pairs are scored by cosine
//! similarity and trained with a bidirectional max-margin ranking loss.

mod dump;
mod loss;
mod model;
mod params;
mod retrieve;
mod train;

pub use dump::{read_embeddings, write_embeddings, EmbeddingDump, EMBEDDING_MAGIC};
pub use loss::{batch_loss, ranking_loss, similarity_matrix};
pub use model::{
    embed_clip, embed_clips, embed_query, embed_text, embed_texts, similarity, ClipEmbedding,
    ClipId, TextEmbedding,
};
pub use params::{
    load_params, read_params, save_params, write_params, JointEmbeddingParams, ModelDims, Tensor,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use retrieve::{retrieve, RetrievalHit};
pub use train::{
    in_batch_median_rank, load_train_state, save_train_state, train, BatchSampler, TrainConfig,
    TrainState, Trainer,
};
