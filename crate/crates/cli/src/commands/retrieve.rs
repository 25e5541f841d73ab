use anyhow::Context;
use lecseg_core::embedder::{
    embed_clips, embed_query, load_params, retrieve, ClipId, TextEmbedding,
};
use lecseg_core::ClipFeatureRecord;
use serde::Serialize;

use super::{write_json, Ctx};
use crate::cli::RetrieveArgs;
use crate::config::visual_mask;
use crate::corpus;
use crate::exit::require;

#[derive(Serialize)]
struct Row {
    rank: usize,
    lecture_id: String,
    clip_index: usize,
    score: f64,
}

pub fn run(ctx: Ctx, args: RetrieveArgs) -> anyhow::Result<()> {
    let params = load_params(require(&ctx.checkpoint_path(&args.checkpoint)?)?)?;
    let bytes = std::fs::read(require(&args.query)?)?;
    let query: Vec<f32> = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing query {}", args.query.display()))?;
    let mask = visual_mask(args.modalities.as_deref().unwrap_or(&ctx.cfg.modalities))?;
    let corpus = corpus::load(&ctx.corpus_path(&args.corpus)?)?;

    let recs: Vec<&ClipFeatureRecord> = corpus.iter().flat_map(|c| &c.lecture.clips).collect();
    let clips = embed_clips(&params, &recs, mask)?;
    let query = TextEmbedding {
        id: ClipId {
            lecture_id: "query".into(),
            clip_index: 0,
        },
        vector: embed_query(&params, &query)?,
    };
    let rows: Vec<Row> = retrieve(&query, &clips, args.top_k)?
        .into_iter()
        .enumerate()
        .map(|(i, h)| Row {
            rank: i + 1,
            lecture_id: h.id.lecture_id,
            clip_index: h.id.clip_index,
            score: h.score,
        })
        .collect();
    for r in &rows {
        println!(
            "{}\t{}\t{}\t{:.6}",
            r.rank, r.lecture_id, r.clip_index, r.score
        );
    }
    ctx.out_dir(&[])?;
    write_json(&ctx.out.join("retrieval.json"), &rows)
}
