use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{batch_loss, similarity_matrix};
use super::params::{save_params, JointEmbeddingParams};
use crate::datamodel::{ByteReader, ByteWriter, ClipFeatureRecord, Lecture, ModalityMask};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub margin: f64,
    pub lr: f64,
    /// Multiplies the learning rate once per completed epoch.
    pub lr_decay: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Share of each batch drawn from the anchor lecture.
    pub intra_lecture_fraction: f64,
    /// Batches per epoch; `None` means one pass worth of pairs.
    pub batches_per_epoch: Option<usize>,
    pub rng_seed: u64,
    pub modality_mask: ModalityMask,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            margin: 0.1,
            lr: 1e-4,
            lr_decay: 0.9,
            epochs: 10,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            intra_lecture_fraction: 0.5,
            batches_per_epoch: None,
            rng_seed: 0,
            modality_mask: ModalityMask::ALL,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 || !self.batch_size.is_multiple_of(2) {
            return Err(Error::validation(format!(
                "batch_size must be even and >= 2, got {}",
                self.batch_size
            )));
        }
        if !(self.intra_lecture_fraction > 0.0 && self.intra_lecture_fraction < 1.0) {
            return Err(Error::validation(
                "intra_lecture_fraction must lie in (0, 1)",
            ));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) || !(self.lr_decay > 0.0) {
            return Err(Error::validation("lr must be >= 0 and lr_decay > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.eps <= 0.0
        {
            return Err(Error::validation("invalid Adam hyperparameters"));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::validation("margin must be >= 0"));
        }
        if self.modality_mask.is_empty() {
            return Err(Error::validation(
                "modality mask selects no visual modality",
            ));
        }
        Ok(())
    }
}

/// Draws batches where a fixed share of pairs comes from one anchor
/// lecture (hard negatives for each other) and the rest from other lectures.
pub struct BatchSampler<'a> {
    corpus: &'a [Lecture],
    batch_size: usize,
    n_intra: usize,
}

impl<'a> BatchSampler<'a> {
    pub fn new(corpus: &'a [Lecture], cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if corpus.len() < 2 {
            return Err(Error::validation(
                "training needs at least two lectures for inter-lecture negatives",
            ));
        }
        if corpus.iter().any(|l| l.clips.is_empty()) {
            return Err(Error::validation("corpus contains a lecture without clips"));
        }
        let n_intra = ((cfg.batch_size as f64 * cfg.intra_lecture_fraction).round() as usize)
            .clamp(1, cfg.batch_size - 1);
        Ok(Self {
            corpus,
            batch_size: cfg.batch_size,
            n_intra,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.corpus.iter().map(|l| l.clips.len()).sum()
    }

    /// `(lecture, clip)` indices of one batch, without repeats.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
        let n_lectures = self.corpus.len();
        let anchor = rng.random_range(0..n_lectures);
        let anchor_len = self.corpus[anchor].clips.len();
        let n_intra = self.n_intra.min(anchor_len);
        let mut out: Vec<(usize, usize)> = index::sample(rng, anchor_len, n_intra)
            .into_iter()
            .map(|c| (anchor, c))
            .collect();

        let others_total = self.n_pairs() - anchor_len;
        let n_inter = (self.batch_size - n_intra).min(others_total);
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        while seen.len() < n_inter {
            let mut lecture = rng.random_range(0..n_lectures - 1);
            if lecture >= anchor {
                lecture += 1;
            }
            let clip = rng.random_range(0..self.corpus[lecture].clips.len());
            if seen.insert((lecture, clip)) {
                out.push((lecture, clip));
            }
        }
        out
    }

    pub fn records(&self, picks: &[(usize, usize)]) -> Vec<&'a ClipFeatureRecord> {
        picks
            .iter()
            .map(|&(l, c)| &self.corpus[l].clips[c])
            .collect()
    }
}

/// Optimizer state needed to resume training at an epoch boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub epochs_done: usize,
    pub step: u64,
    pub loss_trace: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

const STATE_MAGIC: [u8; 4] = *b"AVLT";
const STATE_VERSION: u32 = 1;

pub fn save_train_state(state: &TrainState, path: impl AsRef<Path>) -> Result<()> {
    let mut w = ByteWriter::new(BufWriter::new(File::create(path)?));
    w.bytes(&STATE_MAGIC)?;
    w.u32(STATE_VERSION)?;
    w.u64(state.epochs_done as u64)?;
    w.u64(state.step)?;
    w.u64(state.loss_trace.len() as u64)?;
    w.f64_slice(&state.loss_trace)?;
    w.u64(state.m.len() as u64)?;
    w.f64_slice(&state.m)?;
    w.f64_slice(&state.v)?;
    w.into_inner().flush()?;
    Ok(())
}

pub fn load_train_state(path: impl AsRef<Path>) -> Result<TrainState> {
    let file: Box<dyn Read> = Box::new(BufReader::new(File::open(path)?));
    let mut r = ByteReader::new(file, "training state");
    r.magic(STATE_MAGIC)?;
    let version = r.u32()?;
    if version != STATE_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let epochs_done = r.u64()? as usize;
    let step = r.u64()?;
    let n_trace = r.u64()? as usize;
    let loss_trace = r.f64_vec(n_trace)?;
    let n = r.u64()? as usize;
    let m = r.f64_vec(n)?;
    let v = r.f64_vec(n)?;
    r.finish()?;
    Ok(TrainState {
        epochs_done,
        step,
        loss_trace,
        m,
        v,
    })
}

/// Adam over the flat parameter buffer, one epoch at a time.
///
/// Epoch `e` draws its batches from ChaCha8 stream `e` of `rng_seed`, so a
/// run resumed from a saved [`TrainState`] reproduces an uninterrupted run.
pub struct Trainer<'a> {
    cfg: TrainConfig,
    sampler: BatchSampler<'a>,
    params: JointEmbeddingParams,
    state: TrainState,
}

impl<'a> Trainer<'a> {
    pub fn new(
        params: JointEmbeddingParams,
        corpus: &'a [Lecture],
        cfg: &TrainConfig,
    ) -> Result<Self> {
        let n = params.n_params();
        Self::resume(
            params,
            TrainState {
                epochs_done: 0,
                step: 0,
                loss_trace: Vec::new(),
                m: vec![0.0; n],
                v: vec![0.0; n],
            },
            corpus,
            cfg,
        )
    }

    pub fn resume(
        params: JointEmbeddingParams,
        state: TrainState,
        corpus: &'a [Lecture],
        cfg: &TrainConfig,
    ) -> Result<Self> {
        let sampler = BatchSampler::new(corpus, cfg)?;
        if state.m.len() != params.n_params() || state.v.len() != params.n_params() {
            return Err(Error::DimMismatch(format!(
                "optimizer state holds {} values, model has {}",
                state.m.len(),
                params.n_params()
            )));
        }
        for l in corpus {
            if let Some(d) = l.dims() {
                params.check_features(d)?;
            }
        }
        Ok(Self {
            cfg: cfg.clone(),
            sampler,
            params,
            state,
        })
    }

    pub fn params(&self) -> &JointEmbeddingParams {
        &self.params
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn into_parts(self) -> (JointEmbeddingParams, TrainState) {
        (self.params, self.state)
    }

    pub fn epochs_done(&self) -> usize {
        self.state.epochs_done
    }

    fn batches_per_epoch(&self) -> usize {
        self.cfg
            .batches_per_epoch
            .unwrap_or_else(|| self.sampler.n_pairs().div_ceil(self.cfg.batch_size))
            .max(1)
    }

    fn adam_step(&mut self, grads: &JointEmbeddingParams, lr: f64) {
        let TrainConfig {
            beta1, beta2, eps, ..
        } = self.cfg;
        self.state.step += 1;
        let t = self.state.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let theta = self.params.as_mut_slice();
        for (((p, &g), m), v) in theta
            .iter_mut()
            .zip(grads.as_slice())
            .zip(self.state.m.iter_mut())
            .zip(self.state.v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }

    /// Runs one epoch and returns its mean batch loss.
    pub fn run_epoch(&mut self) -> Result<f64> {
        let epoch = self.state.epochs_done;
        let lr = self.cfg.lr * self.cfg.lr_decay.powi(epoch as i32);
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.rng_seed);
        rng.set_stream(epoch as u64);
        let n_batches = self.batches_per_epoch();
        let mut total = 0.0;
        for b in 0..n_batches {
            let picks = self.sampler.sample(&mut rng);
            let batch = self.sampler.records(&picks);
            let (loss, grads) = batch_loss(
                &self.params,
                &batch,
                self.cfg.margin,
                self.cfg.modality_mask,
            )?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss or gradient at epoch {epoch}, batch {b} (loss = {loss})"
                )));
            }
            total += loss;
            self.adam_step(&grads, lr);
        }
        if !self.params.is_finite() {
            return Err(Error::Numerical(format!(
                "parameters diverged in epoch {epoch}"
            )));
        }
        let mean = total / n_batches as f64;
        self.state.loss_trace.push(mean);
        self.state.epochs_done += 1;
        log::info!("epoch {epoch}: mean batch loss {mean:.6} (lr {lr:e})");
        Ok(mean)
    }

    /// Trains until `cfg.epochs` epochs are done, writing `epoch-NNN.avle`
    /// and `state.avlt` into `checkpoint_dir` every `every` epochs.
    pub fn run(&mut self, checkpoint_dir: Option<&Path>, every: usize) -> Result<()> {
        while self.state.epochs_done < self.cfg.epochs {
            self.run_epoch()?;
            if let Some(dir) = checkpoint_dir {
                let done = self.state.epochs_done;
                if every > 0 && (done.is_multiple_of(every) || done == self.cfg.epochs) {
                    save_params(&self.params, dir.join(format!("epoch-{done:03}.avle")))?;
                    save_train_state(&self.state, dir.join("state.avlt"))?;
                }
            }
        }
        Ok(())
    }
}

/// Trains for `cfg.epochs` epochs; returns final parameters and the
/// per-epoch mean loss trace.
pub fn train(
    params_init: JointEmbeddingParams,
    corpus: &[Lecture],
    cfg: &TrainConfig,
) -> Result<(JointEmbeddingParams, Vec<f64>)> {
    if corpus.is_empty() {
        return Err(Error::Empty("training corpus".into()));
    }
    let mut trainer = Trainer::new(params_init, corpus, cfg)?;
    trainer.run(None, 0)?;
    let (params, state) = trainer.into_parts();
    Ok((params, state.loss_trace))
}

/// Median (1-based) rank of each clip's own transcript among the
/// transcripts of its batch, over `n_batches` batches drawn with `seed`.
pub fn in_batch_median_rank(
    params: &JointEmbeddingParams,
    corpus: &[Lecture],
    cfg: &TrainConfig,
    n_batches: usize,
    seed: u64,
) -> Result<f64> {
    let sampler = BatchSampler::new(corpus, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks = Vec::new();
    for _ in 0..n_batches {
        let picks = sampler.sample(&mut rng);
        let s = similarity_matrix(params, &sampler.records(&picks), cfg.modality_mask)?;
        for (i, row) in s.rows().into_iter().enumerate() {
            let own = row[i];
            ranks.push(1 + row.iter().filter(|&&x| x > own).count());
        }
    }
    if ranks.is_empty() {
        return Err(Error::Empty("no batches to rank".into()));
    }
    ranks.sort_unstable();
    let n = ranks.len();
    Ok(if n % 2 == 1 {
        ranks[n / 2] as f64
    } else {
        0.5 * (ranks[n / 2 - 1] + ranks[n / 2]) as f64
    })
}
