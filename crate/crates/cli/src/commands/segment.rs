use anyhow::anyhow;
use lecseg_core::baselines::{
    cte_segment, kmeans_segment, naive_equal_splits, CteConfig, KMeansConfig,
};
use lecseg_core::embedder::{embed_clips, embed_texts, load_params};
use lecseg_core::output::SegmentationOutput;
use lecseg_core::twfinch::{auto_k, auto_k_count, segment_exact_k, AutoKLevel};
use lecseg_core::{
    ClipFeatureRecord, ClipPoint, JointEmbeddingParams, Lecture, Modality, ModalityMask,
};
use rayon::prelude::*;

use super::{write_json, Ctx};
use crate::cli::{FeatureSource, KSource, Method, SegmentOptions};
use crate::corpus::{self, CorpusLecture};
use crate::exit::require;

pub fn run(ctx: Ctx, method: Method, opts: SegmentOptions) -> anyhow::Result<()> {
    let corpus = corpus::load(&ctx.corpus_path(&opts.corpus)?)?;
    let modalities = opts
        .modalities
        .clone()
        .unwrap_or_else(|| ctx.cfg.modalities.clone());
    if modalities.is_empty() {
        return Err(anyhow!("at least one modality must be selected"));
    }
    let auto = match opts.k_source {
        KSource::SecondLast => Some(AutoKLevel::SecondLast),
        KSource::ThirdLast => Some(AutoKLevel::ThirdLast),
        KSource::Gt | KSource::Fixed(_) => None,
    };
    // the naive split only looks at features when it has to estimate K
    let needs_features = method != Method::Naive || auto.is_some();
    let params = match (needs_features, opts.features) {
        (true, FeatureSource::Learned) => Some(load_params(require(
            &ctx.checkpoint_path(&opts.checkpoint)?,
        )?)?),
        _ => None,
    };
    let job = Job {
        ctx: &ctx,
        method,
        k_source: opts.k_source,
        auto,
        needs_features,
        modalities: &modalities,
        params: params.as_ref(),
    };
    let outputs = ctx.pool.install(|| {
        corpus
            .par_iter()
            .map(|c| job.segment(c))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    let dir = ctx.out_dir(&["segments", method.name()])?;
    for o in &outputs {
        write_json(&dir.join(format!("{}.json", o.lecture_id)), o)?;
    }
    log::info!("wrote {} segmentations to {}", outputs.len(), dir.display());
    Ok(())
}

struct Job<'a> {
    ctx: &'a Ctx,
    method: Method,
    k_source: KSource,
    auto: Option<AutoKLevel>,
    needs_features: bool,
    modalities: &'a [Modality],
    params: Option<&'a JointEmbeddingParams>,
}

impl Job<'_> {
    fn segment(&self, c: &CorpusLecture) -> anyhow::Result<SegmentationOutput> {
        let lec = &c.lecture;
        let cfg = &self.ctx.cfg;
        let t = lec.total_duration_s;
        let mids = lec.midpoints();
        let rows = if self.needs_features {
            features(lec, self.modalities, self.params)?
        } else {
            Vec::new()
        };
        let points: Vec<ClipPoint> = rows
            .iter()
            .zip(&mids)
            .map(|(r, &m)| ClipPoint::new(r.clone(), m))
            .collect();
        let k = match self.k_source {
            KSource::Gt => Some(
                lec.gt
                    .as_ref()
                    .ok_or_else(|| anyhow!("{}: --k-source gt needs ground truth", lec.lecture_id))?
                    .k(),
            ),
            KSource::Fixed(k) => Some(k),
            KSource::SecondLast | KSource::ThirdLast => None,
        };

        if self.method == Method::Twfinch {
            let res = match (k, self.auto) {
                (Some(k), _) => segment_exact_k(&points, t, k, &cfg.twfinch)?,
                (None, Some(which)) => auto_k(&points, t, &cfg.twfinch, which)?,
                (None, None) => unreachable!("k_source yields a count or an auto level"),
            };
            if res.exhausted {
                log::warn!(
                    "{}: no contiguous segmentation up to alpha {}",
                    lec.lecture_id,
                    cfg.twfinch.alpha_max
                );
            }
            if res.fallback {
                log::warn!(
                    "{}: hierarchy too shallow, used its coarsest level",
                    lec.lecture_id
                );
            }
            return Ok(SegmentationOutput::new(
                lec,
                self.method.name(),
                &res.segmentation,
                Some(res.alpha_used),
            )?);
        }

        let k = match (k, self.auto) {
            (Some(k), _) => k,
            (None, Some(which)) => auto_k_count(&points, t, &cfg.twfinch, which)?.0,
            (None, None) => unreachable!("k_source yields a count or an auto level"),
        };
        let seg = match self.method {
            Method::Naive => naive_equal_splits(&mids, t, k)?,
            Method::Kmeans => kmeans_segment(
                &rows,
                &KMeansConfig {
                    k,
                    ..cfg.kmeans.clone()
                },
            )?,
            Method::Cte => cte_segment(
                &rows,
                &mids,
                t,
                &CteConfig {
                    kmeans: KMeansConfig {
                        k,
                        ..cfg.cte.kmeans.clone()
                    },
                    ..cfg.cte.clone()
                },
            )?,
            Method::Twfinch => unreachable!("handled above"),
        };
        Ok(SegmentationOutput::new(
            lec,
            self.method.name(),
            &seg,
            None,
        )?)
    }
}

/// Per-clip vectors: the selected raw modalities, or `[f(c), g(t)]` where
/// `f` sees the selected visual modalities and `g` is kept when text is
/// selected.
fn features(
    lec: &Lecture,
    modalities: &[Modality],
    params: Option<&JointEmbeddingParams>,
) -> anyhow::Result<Vec<Vec<f64>>> {
    let selected: Vec<Modality> = Modality::ALL
        .into_iter()
        .filter(|m| modalities.contains(m))
        .collect();
    let Some(params) = params else {
        return Ok(lec
            .clips
            .iter()
            .map(|c| {
                selected
                    .iter()
                    .flat_map(|&m| c.feature(m).iter().map(|&x| x as f64))
                    .collect()
            })
            .collect());
    };
    let recs: Vec<&ClipFeatureRecord> = lec.clips.iter().collect();
    let mut rows = vec![Vec::new(); recs.len()];
    let mask = ModalityMask::from_modalities(&selected);
    if !mask.is_empty() {
        for (row, e) in rows.iter_mut().zip(embed_clips(params, &recs, mask)?) {
            row.extend(e.vector);
        }
    }
    if selected.contains(&Modality::Text) {
        for (row, e) in rows.iter_mut().zip(embed_texts(params, &recs)?) {
            row.extend(e.vector);
        }
    }
    Ok(rows)
}
