use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use lecseg_core::embedder::{load_params, load_train_state, save_params, Trainer};
use lecseg_core::{JointEmbeddingParams, Lecture, ModelDims, TrainConfig};

use super::Ctx;
use crate::cli::TrainArgs;
use crate::config::visual_mask;
use crate::corpus;

pub fn run(ctx: Ctx, args: TrainArgs) -> anyhow::Result<()> {
    let mut cfg = ctx.cfg.train.clone();
    if let Some(e) = args.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = args.lr {
        cfg.lr = lr;
    }
    if let Some(b) = args.batch_size {
        cfg.batch_size = b;
    }
    let modalities = args
        .modalities
        .clone()
        .unwrap_or_else(|| ctx.cfg.modalities.clone());
    cfg.modality_mask = visual_mask(&modalities)?;
    cfg.validate()?;
    let embed_dim = args.embed_dim.unwrap_or(ctx.cfg.embed_dim);

    let main = corpus::lectures(&corpus::load(&ctx.corpus_path(&args.corpus)?)?);
    let pretrain = match args
        .pretrain_corpus
        .clone()
        .or_else(|| ctx.cfg.paths.pretrain_corpus.clone())
    {
        Some(p) => Some(corpus::lectures(&corpus::load(&p)?)),
        None => None,
    };
    let stages: Vec<(&str, &[Lecture])> = match &pretrain {
        Some(pre) => vec![("pretrain", pre), ("finetune", &main)],
        None => vec![("train", &main)],
    };

    let dims = main
        .iter()
        .find_map(Lecture::dims)
        .context("training corpus has no clips")?;
    let mut params =
        JointEmbeddingParams::init(ModelDims::new(dims, embed_dim), ctx.cfg.init_seed)?;
    for (tag, lectures) in stages {
        params = run_stage(&ctx, tag, lectures, params, &cfg, args.resume)?;
    }
    Ok(())
}

fn run_stage(
    ctx: &Ctx,
    tag: &str,
    lectures: &[Lecture],
    params: JointEmbeddingParams,
    cfg: &TrainConfig,
    resume: bool,
) -> anyhow::Result<JointEmbeddingParams> {
    let dir = ctx.out_dir(&["checkpoints", tag])?;
    let state_path = dir.join("state.avlt");
    let mut trainer = if resume && state_path.exists() {
        let state = load_train_state(&state_path)?;
        let done = state.epochs_done;
        let saved = load_params(dir.join(format!("epoch-{done:03}.avle")))
            .with_context(|| format!("resuming {tag} after epoch {done}"))?;
        log::info!("{tag}: resuming after epoch {done}");
        Trainer::resume(saved, state, lectures, cfg)?
    } else {
        Trainer::new(params, lectures, cfg)?
    };
    if trainer.epochs_done() > cfg.epochs {
        bail!(
            "{tag}: checkpoint already has {} epochs, more than the {} requested",
            trainer.epochs_done(),
            cfg.epochs
        );
    }
    trainer.run(Some(&dir), ctx.cfg.checkpoint_every)?;
    let (params, state) = trainer.into_parts();
    save_params(&params, ctx.out.join(format!("model.{tag}.avle")))?;
    write_loss_csv(&ctx.out.join(format!("loss.{tag}.csv")), &state.loss_trace)?;
    Ok(params)
}

fn write_loss_csv(path: &Path, trace: &[f64]) -> anyhow::Result<()> {
    let mut csv = String::from("epoch,mean_loss\n");
    for (e, loss) in trace.iter().enumerate() {
        writeln!(csv, "{},{loss}", e + 1)?;
    }
    std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))
}
