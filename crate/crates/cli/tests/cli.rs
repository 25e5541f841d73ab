use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lecseg_core::datamodel::{read_features, read_manifest};
use lecseg_core::output::SegmentationOutput;
use lecseg_core::Segmentation;
use serde_json::Value;

fn lecseg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lecseg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lecseg(dir, args);
    assert!(
        out.status.success(),
        "lecseg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    lecseg(dir, args).status.code().expect("exit code")
}

fn synth(dir: &Path, out: &str, extra: &[&str]) -> PathBuf {
    let mut args = vec![
        "synth",
        "--out",
        out,
        "--n-lectures",
        "4",
        "--clips-per-lecture",
        "40",
        "--dim",
        "8",
    ];
    args.extend_from_slice(extra);
    ok(dir, &args);
    dir.join(out).join("manifest.jsonl")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Relative paths and contents of every file under `root`.
fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, "a", &["--seed", "5"]);
    synth(d, "b", &["--seed", "5"]);
    synth(d, "c", &["--seed", "6"]);
    assert_eq!(tree(&d.join("a")), tree(&d.join("b")));
    assert_ne!(tree(&d.join("a")), tree(&d.join("c")));
    assert_eq!(read_manifest(d.join("a/manifest.jsonl")).unwrap().len(), 4);
    assert_eq!(code(d, &["synth", "--out", "z", "--n-lectures", "0"]), 1);
}

#[test]
fn usage_and_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["no-such-command"]), 1);
    assert_eq!(code(d, &["segment", "--corpus", "missing.jsonl"]), 2);
    let manifest = synth(d, "corpus", &[]);
    let m = manifest.to_str().unwrap();
    assert_eq!(
        code(d, &["eval", "--corpus", m, "--segments", "nowhere"]),
        2
    );
    assert_eq!(
        code(d, &["segment", "--corpus", m, "--k-source", "fixed:1000"]),
        1
    );
    assert_eq!(
        code(d, &["segment", "--corpus", m, "--k-source", "bogus"]),
        1
    );
    fs::write(d.join("q.json"), "[0,0,0,0,0,0,0,1]").unwrap();
    assert_eq!(
        code(
            d,
            &[
                "retrieve",
                "--corpus",
                m,
                "--checkpoint",
                "none.avle",
                "--query",
                "q.json"
            ]
        ),
        2
    );
}

#[test]
fn segment_uses_gt_k_and_naive_needs_no_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = synth(d, "corpus", &[]);
    let m = manifest.to_str().unwrap();
    ok(d, &["segment", "--corpus", m, "--out", "tw"]);
    for e in read_manifest(&manifest).unwrap() {
        let out = SegmentationOutput::load(&d.join(format!("tw/segments/twfinch/{}.json", e.id)))
            .unwrap();
        assert_eq!(out.k, e.gt_boundaries_s.unwrap().len() + 1);
        assert!(out.contiguous);
    }
    ok(
        d,
        &[
            "baseline",
            "--method",
            "naive",
            "--features",
            "learned",
            "--corpus",
            m,
            "--out",
            "nv",
        ],
    );
    assert_eq!(
        read_manifest(&manifest).unwrap().len(),
        fs::read_dir(d.join("nv/segments/naive")).unwrap().count()
    );
}

#[test]
fn modality_subset_changes_result() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = synth(d, "corpus", &["--noise-sigma", "1.5"]);
    let m = manifest.to_str().unwrap();
    ok(d, &["segment", "--corpus", m, "--out", "full"]);
    ok(
        d,
        &[
            "segment",
            "--corpus",
            m,
            "--modalities",
            "text",
            "--out",
            "text",
        ],
    );
    let differs = read_manifest(&manifest).unwrap().iter().any(|e| {
        let rel = format!("segments/twfinch/{}.json", e.id);
        let a = SegmentationOutput::load(&d.join("full").join(&rel)).unwrap();
        let b = SegmentationOutput::load(&d.join("text").join(&rel)).unwrap();
        a.labels != b.labels
    });
    assert!(differs);
}

#[test]
fn ground_truth_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = synth(d, "corpus", &["--n-courses", "2"]);
    let seg_dir = d.join("gt-seg");
    fs::create_dir_all(&seg_dir).unwrap();
    for e in read_manifest(&manifest).unwrap() {
        let lec = read_features(d.join("corpus").join(&e.path)).unwrap();
        let gt =
            Segmentation::from_boundaries(&lec.midpoints(), &e.gt_boundaries_s.unwrap()).unwrap();
        SegmentationOutput::new(&lec, "gt", &gt, None)
            .unwrap()
            .save(&seg_dir.join(format!("{}.json", e.id)))
            .unwrap();
    }
    let table = ok(
        d,
        &[
            "eval",
            "--corpus",
            manifest.to_str().unwrap(),
            "--segments",
            "gt-seg",
            "--by-course",
            "--out",
            "ev",
        ],
    );
    let last = table.lines().last().unwrap();
    assert_eq!(
        last.split_whitespace().collect::<Vec<_>>(),
        ["gt", "100.0", "100.0", "100.0", "100.0", "100.0"]
    );
    assert!(table.contains("gt [course00]") && table.contains("gt [course01]"));

    let ev = read_json(&d.join("ev/eval.json"));
    assert_eq!(ev["courses"].as_object().unwrap().len(), 2);
    let per: Vec<f64> = ev["lectures"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["report"]["mof"].as_f64().unwrap())
        .collect();
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    assert_eq!(ev["mean"]["mof"].as_f64().unwrap(), mean);
}

#[test]
fn every_method_and_k_source_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = synth(d, "corpus", &[]);
    let m = manifest.to_str().unwrap();
    ok(
        d,
        &[
            "train",
            "--corpus",
            m,
            "--out",
            "model",
            "--epochs",
            "1",
            "--embed-dim",
            "8",
        ],
    );
    for method in ["twfinch", "naive", "kmeans", "cte"] {
        for k in ["gt", "second_last", "third_last", "fixed:3"] {
            for features in ["raw", "learned"] {
                let out = format!("run-{method}-{k}-{features}").replace(':', "");
                ok(
                    d,
                    &[
                        "segment",
                        "--method",
                        method,
                        "--k-source",
                        k,
                        "--features",
                        features,
                        "--checkpoint",
                        "model/model.train.avle",
                        "--corpus",
                        m,
                        "--out",
                        &out,
                    ],
                );
                let segs = format!("{out}/segments/{method}");
                ok(
                    d,
                    &[
                        "eval",
                        "--corpus",
                        m,
                        "--segments",
                        &segs,
                        "--out",
                        &out,
                        "--k-list",
                        "5,10,30",
                    ],
                );
            }
        }
    }
}

#[test]
fn two_stage_training_writes_tagged_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pre = synth(d, "pre", &["--seed", "1"]);
    let fine = synth(d, "fine", &["--seed", "2"]);
    ok(
        d,
        &[
            "train",
            "--pretrain-corpus",
            pre.to_str().unwrap(),
            "--corpus",
            fine.to_str().unwrap(),
            "--epochs",
            "3",
            "--embed-dim",
            "8",
            "--out",
            "model",
        ],
    );
    let pre_model = fs::read(d.join("model/model.pretrain.avle")).unwrap();
    let fine_model = fs::read(d.join("model/model.finetune.avle")).unwrap();
    assert_ne!(pre_model, fine_model);
    for tag in ["pretrain", "finetune"] {
        let csv = fs::read_to_string(d.join(format!("model/loss.{tag}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 1 + 3, "{csv}");
    }
}

#[test]
fn resumed_training_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = synth(d, "corpus", &[]);
    let m = manifest.to_str().unwrap();
    let base = ["train", "--corpus", m, "--embed-dim", "8", "--seed", "3"];
    let with = |extra: &[&'static str]| {
        base.iter()
            .copied()
            .chain(extra.iter().copied())
            .collect::<Vec<_>>()
    };
    ok(d, &with(&["--epochs", "4", "--out", "full"]));
    ok(d, &with(&["--epochs", "2", "--out", "split"]));
    ok(d, &with(&["--epochs", "4", "--out", "split", "--resume"]));
    assert_eq!(
        fs::read(d.join("full/model.train.avle")).unwrap(),
        fs::read(d.join("split/model.train.avle")).unwrap()
    );
    assert_eq!(
        fs::read(d.join("full/loss.train.csv")).unwrap(),
        fs::read(d.join("split/loss.train.csv")).unwrap()
    );
}

#[test]
fn divergent_training_exits_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = synth(d, "corpus", &[]);
    let status = code(
        d,
        &[
            "train",
            "--corpus",
            manifest.to_str().unwrap(),
            "--lr",
            "1e308",
            "--epochs",
            "3",
            "--embed-dim",
            "8",
        ],
    );
    assert_eq!(status, 3);
}

#[test]
fn retrieval_finds_the_matching_clip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let manifest = synth(d, "corpus", &["--noise-sigma", "0"]);
    let m = manifest.to_str().unwrap();
    ok(
        d,
        &[
            "train",
            "--corpus",
            m,
            "--out",
            "model",
            "--epochs",
            "5",
            "--embed-dim",
            "8",
            "--lr",
            "1e-3",
        ],
    );

    let entry = &read_manifest(&manifest).unwrap()[0];
    let lec = read_features(d.join("corpus").join(&entry.path)).unwrap();
    // first clip of the second segment; identical clips later in the segment tie and rank after it
    let first_boundary = entry.gt_boundaries_s.as_ref().unwrap()[0];
    let j = lec
        .clips
        .iter()
        .position(|c| c.start_s >= first_boundary)
        .unwrap();
    fs::write(
        d.join("q.json"),
        serde_json::to_vec(&lec.clips[j].text).unwrap(),
    )
    .unwrap();

    let args = [
        "retrieve",
        "--corpus",
        m,
        "--checkpoint",
        "model/model.train.avle",
        "--query",
        "q.json",
    ];
    let out = ok(d, &[&args[..], &["--top-k", "3", "--out", "r"]].concat());
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 3);
    let top: Vec<&str> = rows[0].split('\t').collect();
    assert_eq!(
        (top[1], top[2]),
        (lec.lecture_id.as_str(), j.to_string().as_str())
    );
    assert_eq!(
        read_json(&d.join("r/retrieval.json"))
            .as_array()
            .unwrap()
            .len(),
        3
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("run.json"),
        r#"{"schema_version": 1, "synth": {"n_lectures": 2, "clips_per_lecture": 30, "dims": {"v2d": 4, "v3d": 4, "ocr": 4, "text": 4}}, "paths": {"out_dir": "from-file"}}"#,
    )
    .unwrap();
    ok(d, &["--config", "run.json", "synth"]);
    assert_eq!(
        read_manifest(d.join("from-file/manifest.jsonl"))
            .unwrap()
            .len(),
        2
    );
    ok(
        d,
        &[
            "--config",
            "run.json",
            "synth",
            "--n-lectures",
            "3",
            "--out",
            "from-flag",
        ],
    );
    assert_eq!(
        read_manifest(d.join("from-flag/manifest.jsonl"))
            .unwrap()
            .len(),
        3
    );
    fs::write(
        d.join("bad.json"),
        r#"{"schema_version": 1, "unknown_key": 3}"#,
    )
    .unwrap();
    assert_eq!(code(d, &["--config", "bad.json", "synth"]), 1);
}

#[test]
fn clipify_writes_clips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cues: Vec<Value> = (0..10)
        .map(|i| serde_json::json!({"start_s": i as f64 * 4.0, "end_s": i as f64 * 4.0 + 4.0, "text": "x"}))
        .collect();
    fs::write(d.join("cues.json"), serde_json::to_vec(&cues).unwrap()).unwrap();
    ok(d, &["clipify", "--cues", "cues.json", "--out", "c"]);
    let clips = read_json(&d.join("c/clips.json"));
    let clips = clips.as_array().unwrap();
    assert!(!clips.is_empty());
    assert_eq!(clips.last().unwrap()["end_s"].as_f64().unwrap(), 40.0);
    fs::write(d.join("empty.json"), "[]").unwrap();
    assert_eq!(code(d, &["clipify", "--cues", "empty.json"]), 1);
}
