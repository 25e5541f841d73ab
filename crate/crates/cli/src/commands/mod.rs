mod clipify;
mod embed;
mod eval;
mod report;
mod retrieve;
mod segment;
mod synth;
mod train;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;

use crate::cli::{Cli, Command, CorpusArg};
use crate::config::RunConfig;

/// Resolved configuration plus process-wide settings.
pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub pool: rayon::ThreadPool,
}

impl Ctx {
    /// Creates `out/<parts>` and returns it.
    pub fn out_dir(&self, parts: &[&str]) -> anyhow::Result<PathBuf> {
        let dir = parts.iter().fold(self.out.clone(), |d, p| d.join(p));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    pub fn corpus_path(&self, arg: &CorpusArg) -> anyhow::Result<PathBuf> {
        arg.corpus
            .clone()
            .or_else(|| self.cfg.paths.corpus.clone())
            .ok_or_else(|| anyhow!("no corpus given (--corpus or paths.corpus)"))
    }

    pub fn checkpoint_path(&self, arg: &Option<PathBuf>) -> anyhow::Result<PathBuf> {
        arg.clone()
            .or_else(|| self.cfg.paths.checkpoint.clone())
            .ok_or_else(|| anyhow!("no checkpoint given (--checkpoint or paths.checkpoint)"))
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn run(args: Cli) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.override_seed(seed);
    }
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.paths.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .context("starting worker threads")?;
    let ctx = Ctx { cfg, out, pool };

    match args.command {
        Command::Synth(a) => synth::run(ctx, a),
        Command::Clipify(a) => clipify::run(ctx, a),
        Command::Train(a) => train::run(ctx, a),
        Command::Embed(a) => embed::run(ctx, a),
        Command::Segment(a) => segment::run(ctx, a.method, a.options),
        Command::Baseline(a) => segment::run(ctx, a.method.into(), a.options),
        Command::Eval(a) => eval::run(ctx, a),
        Command::Retrieve(a) => retrieve::run(ctx, a),
        Command::Report(a) => report::run(ctx, a),
    }
}
