use lecseg_core::datamodel::{
    generate_synthetic, lecture_course, write_features, write_gt_file, write_manifest,
    GroundTruthFile, ManifestEntry, TopicSignals,
};
use lecseg_core::FeatureDims;

use super::Ctx;
use crate::cli::SynthArgs;

pub fn run(ctx: Ctx, args: SynthArgs) -> anyhow::Result<()> {
    let mut cfg = ctx.cfg.synth.clone();
    if let Some(n) = args.n_lectures {
        cfg.n_lectures = n;
    }
    if let Some(n) = args.clips_per_lecture {
        cfg.clips_per_lecture = n;
    }
    if let Some(s) = args.noise_sigma {
        cfg.noise_sigma = s;
    }
    if let Some(n) = args.n_courses {
        cfg.n_courses = n;
    }
    if let Some(d) = args.dim {
        cfg.dims = FeatureDims::uniform(d);
    }
    if args.complementary {
        cfg.modality_informativeness = TopicSignals::complementary();
    }
    let lectures = generate_synthetic(&cfg)?;

    let features = ctx.out_dir(&["features"])?;
    let gt_dir = ctx.out_dir(&["gt"])?;
    let mut entries = Vec::with_capacity(lectures.len());
    for (i, lec) in lectures.iter().enumerate() {
        write_features(lec, features.join(format!("{}.avlf", lec.lecture_id)))?;
        let boundaries_s = lec
            .gt
            .as_ref()
            .map(|g| g.boundaries_s(&lec.starts()))
            .unwrap_or_default();
        write_gt_file(
            &GroundTruthFile {
                lecture_id: lec.lecture_id.clone(),
                boundaries_s: boundaries_s.clone(),
            },
            gt_dir.join(format!("{}.json", lec.lecture_id)),
        )?;
        entries.push(ManifestEntry {
            id: lec.lecture_id.clone(),
            path: format!("features/{}.avlf", lec.lecture_id),
            n_clips: lec.n_clips(),
            gt_boundaries_s: Some(boundaries_s),
            course: Some(lecture_course(&cfg, i)),
        });
    }
    write_manifest(&entries, ctx.out.join("manifest.jsonl"))?;
    log::info!("wrote {} lectures to {}", entries.len(), ctx.out.display());
    Ok(())
}
