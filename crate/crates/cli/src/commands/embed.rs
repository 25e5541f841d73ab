use lecseg_core::embedder::{
    embed_clips, embed_texts, load_params, write_embeddings, EmbeddingDump,
};
use lecseg_core::ClipFeatureRecord;
use rayon::prelude::*;

use super::Ctx;
use crate::cli::EmbedArgs;
use crate::config::visual_mask;
use crate::corpus;
use crate::exit::require;

pub fn run(ctx: Ctx, args: EmbedArgs) -> anyhow::Result<()> {
    let params = load_params(require(&ctx.checkpoint_path(&args.checkpoint)?)?)?;
    let mask = visual_mask(args.modalities.as_deref().unwrap_or(&ctx.cfg.modalities))?;
    let corpus = corpus::load(&ctx.corpus_path(&args.corpus)?)?;
    let dir = ctx.out_dir(&["embeddings"])?;
    ctx.pool.install(|| {
        corpus.par_iter().try_for_each(|c| -> anyhow::Result<()> {
            let recs: Vec<&ClipFeatureRecord> = c.lecture.clips.iter().collect();
            let dump = EmbeddingDump {
                clip: embed_clips(&params, &recs, mask)?
                    .into_iter()
                    .map(|e| e.vector)
                    .collect(),
                text: embed_texts(&params, &recs)?
                    .into_iter()
                    .map(|e| e.vector)
                    .collect(),
            };
            write_embeddings(&dump, dir.join(format!("{}.avlz", c.lecture.lecture_id)))?;
            Ok(())
        })
    })
}
