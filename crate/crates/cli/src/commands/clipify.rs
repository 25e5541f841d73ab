use anyhow::Context;
use lecseg_core::datamodel::clipify;
use lecseg_core::SubtitleCue;

use super::{write_json, Ctx};
use crate::cli::ClipifyArgs;
use crate::exit::require;

pub fn run(ctx: Ctx, args: ClipifyArgs) -> anyhow::Result<()> {
    let bytes = std::fs::read(require(&args.cues)?)?;
    let cues: Vec<SubtitleCue> = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing cues {}", args.cues.display()))?;
    let min = args.min_len.unwrap_or(ctx.cfg.clip_min_s);
    let max = args.max_len.unwrap_or(ctx.cfg.clip_max_s);
    let clips = clipify(&cues, min, max)?;
    ctx.out_dir(&[])?;
    write_json(&ctx.out.join("clips.json"), &clips)?;
    log::info!("{} cues -> {} clips", cues.len(), clips.len());
    Ok(())
}
