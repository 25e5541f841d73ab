use std::collections::BTreeMap;

use anyhow::{anyhow, bail};
use lecseg_core::metrics::{evaluate, format_table};
use lecseg_core::output::SegmentationOutput;
use lecseg_core::MetricReport;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{write_json, Ctx};
use crate::cli::EvalArgs;
use crate::corpus;
use crate::exit::require;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LectureScore {
    pub lecture_id: String,
    pub course: Option<String>,
    pub report: MetricReport,
}

/// Everything `eval` writes; `report` reads it back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalFile {
    pub name: String,
    pub k_list: Vec<u32>,
    pub lectures: Vec<LectureScore>,
    pub courses: BTreeMap<String, MetricReport>,
    pub mean: MetricReport,
}

/// The BS column shows 30 s when available, else the first tolerance.
pub fn table_k(k_list: &[u32]) -> u32 {
    if k_list.contains(&30) {
        30
    } else {
        k_list[0]
    }
}

pub fn run(ctx: Ctx, args: EvalArgs) -> anyhow::Result<()> {
    let corpus = corpus::load(&ctx.corpus_path(&args.corpus)?)?;
    let seg_dir = require(&args.segments)?;
    let k_list = args
        .k_list
        .clone()
        .unwrap_or_else(|| ctx.cfg.k_list.clone());
    if k_list.is_empty() {
        bail!("k_list must not be empty");
    }

    let scored = ctx.pool.install(|| {
        corpus
            .par_iter()
            .map(|c| -> anyhow::Result<(String, LectureScore)> {
                let lec = &c.lecture;
                let pred = SegmentationOutput::load(require(
                    &seg_dir.join(format!("{}.json", lec.lecture_id)),
                )?)?;
                let gt = lec.gt.as_ref().ok_or_else(|| {
                    anyhow!("{}: no ground truth to evaluate against", lec.lecture_id)
                })?;
                let report = evaluate(&pred.segmentation(), gt, lec, &k_list)?;
                Ok((
                    pred.method,
                    LectureScore {
                        lecture_id: lec.lecture_id.clone(),
                        course: c.entry.course.clone(),
                        report,
                    },
                ))
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    if scored.is_empty() {
        bail!("corpus has no lectures");
    }

    let name = args.name.clone().unwrap_or_else(|| {
        let first = &scored[0].0;
        if scored.iter().all(|(m, _)| m == first) {
            first.clone()
        } else {
            "mixed".into()
        }
    });
    let lectures: Vec<LectureScore> = scored.into_iter().map(|(_, s)| s).collect();
    let mut groups: BTreeMap<String, Vec<MetricReport>> = BTreeMap::new();
    for l in &lectures {
        let course = l.course.clone().unwrap_or_else(|| "-".into());
        groups.entry(course).or_default().push(l.report.clone());
    }
    let courses = groups
        .into_iter()
        .map(|(c, rs)| Ok((c, MetricReport::mean(&rs)?)))
        .collect::<anyhow::Result<BTreeMap<_, _>>>()?;
    let all: Vec<MetricReport> = lectures.iter().map(|l| l.report.clone()).collect();
    let file = EvalFile {
        name,
        k_list,
        mean: MetricReport::mean(&all)?,
        lectures,
        courses,
    };

    let mut rows = Vec::new();
    if args.by_course {
        rows.extend(
            file.courses
                .iter()
                .map(|(c, r)| (format!("{} [{c}]", file.name), r.clone())),
        );
    }
    rows.push((file.name.clone(), file.mean.clone()));
    let table = format_table(&rows, table_k(&file.k_list));
    ctx.out_dir(&[])?;
    write_json(&ctx.out.join("eval.json"), &file)?;
    std::fs::write(ctx.out.join("eval.txt"), &table)?;
    print!("{table}");
    Ok(())
}
