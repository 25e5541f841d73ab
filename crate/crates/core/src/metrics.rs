//! Segmentation scores on a one-second frame grid.
//!
//! Predicted clusters and ground-truth segments are matched one-to-one to
//! maximize total frame overlap (Hungarian algorithm). Among equally good
//! matchings the lexicographically smallest one wins: segment 0 takes the
//! lowest-numbered cluster it can, then segment 1, and so on, with
//! "unmatched" ranked after every cluster. Labels are canonicalized first,
//! so the choice does not depend on label names.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::datamodel::{Lecture, Segmentation};
use crate::error::{Error, Result};

/// One label per second of lecture time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLabeling {
    labels: Vec<usize>,
    n_labels: usize,
}

impl FrameLabeling {
    /// Canonicalizes arbitrary per-frame labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let seg = Segmentation::from_labels(labels);
        Self {
            n_labels: seg.k(),
            labels: seg.into(),
        }
    }

    /// Frame `f` takes the label of the clip covering `f + 0.5`; frames in a
    /// gap take the preceding clip's label and frames before the first clip
    /// take the first clip's.
    pub fn from_segmentation(
        seg: &Segmentation,
        clip_starts: &[f64],
        t_total: f64,
    ) -> Result<Self> {
        if seg.len() != clip_starts.len() || clip_starts.is_empty() {
            return Err(Error::validation(format!(
                "segmentation labels {} clips, lecture has {}",
                seg.len(),
                clip_starts.len()
            )));
        }
        let n_frames = t_total.floor() as usize;
        let labels = (0..n_frames)
            .map(|f| {
                let mid = f as f64 + 0.5;
                let clip = clip_starts.partition_point(|&s| s <= mid).saturating_sub(1);
                seg.labels()[clip]
            })
            .collect::<Vec<_>>();
        Ok(Self::from_labels(&labels))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn n_labels(&self) -> usize {
        self.n_labels
    }
}

fn check_lengths(pred: &FrameLabeling, gt: &FrameLabeling) -> Result<()> {
    if pred.len() != gt.len() {
        return Err(Error::validation(format!(
            "labelings differ in length: {} vs {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Empty("no frames to score".into()));
    }
    Ok(())
}

/// Frame counts per (ground-truth segment, predicted cluster).
struct Contingency {
    cells: Vec<i64>,
    n_gt: usize,
    n_pred: usize,
}

impl Contingency {
    fn new(pred: &FrameLabeling, gt: &FrameLabeling) -> Self {
        let (n_gt, n_pred) = (gt.n_labels(), pred.n_labels());
        let mut cells = vec![0i64; n_gt * n_pred];
        for (&p, &g) in pred.labels.iter().zip(&gt.labels) {
            cells[g * n_pred + p] += 1;
        }
        Self {
            cells,
            n_gt,
            n_pred,
        }
    }

    fn at(&self, g: usize, p: usize) -> i64 {
        self.cells[g * self.n_pred + p]
    }

    fn gt_size(&self, g: usize) -> i64 {
        self.cells[g * self.n_pred..(g + 1) * self.n_pred]
            .iter()
            .sum()
    }

    fn pred_size(&self, p: usize) -> i64 {
        (0..self.n_gt).map(|g| self.at(g, p)).sum()
    }
}

fn entropy(counts: impl Iterator<Item = i64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information over the arithmetic mean of the two entropies.
pub fn nmi(pred: &FrameLabeling, gt: &FrameLabeling) -> Result<f64> {
    check_lengths(pred, gt)?;
    let table = Contingency::new(pred, gt);
    let n = pred.len() as f64;
    let gt_sizes: Vec<i64> = (0..table.n_gt).map(|g| table.gt_size(g)).collect();
    let pred_sizes: Vec<i64> = (0..table.n_pred).map(|p| table.pred_size(p)).collect();
    let h_gt = entropy(gt_sizes.iter().copied(), n);
    let h_pred = entropy(pred_sizes.iter().copied(), n);
    if h_gt + h_pred == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (g, &gs) in gt_sizes.iter().enumerate() {
        for (p, &ps) in pred_sizes.iter().enumerate() {
            let c = table.at(g, p);
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (gs as f64 * ps as f64)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (h_gt + h_pred))).clamp(0.0, 1.0))
}

/// Maximum-weight assignment of `n_rows` rows to distinct columns out of
/// `n_cols` (rows may stay unmatched, scoring 0). Returns the total and each
/// row's column.
fn max_assignment(
    n_rows: usize,
    n_cols: usize,
    weight: impl Fn(usize, usize) -> i128,
) -> (i128, Vec<Option<usize>>) {
    let n = n_rows.max(n_cols);
    if n == 0 {
        return (0, Vec::new());
    }
    // square cost matrix, 1-based, padding has weight 0
    let cost = |i: usize, j: usize| -> i128 {
        if i <= n_rows && j <= n_cols {
            -weight(i - 1, j - 1)
        } else {
            0
        }
    };
    let mut potentials = vec![0i128; 3 * (n + 1)];
    let (u, rest) = potentials.split_at_mut(n + 1);
    let (v, minv) = rest.split_at_mut(n + 1);
    let mut links = vec![0usize; 2 * (n + 1)];
    let (p, way) = links.split_at_mut(n + 1);
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.fill(INF);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![None; n_rows];
    let mut total = 0;
    for (j, &i) in p.iter().enumerate().take(n_cols + 1).skip(1) {
        if (1..=n_rows).contains(&i) {
            assign[i - 1] = Some(j - 1);
            total += weight(i - 1, j - 1);
        }
    }
    (total, assign)
}

const INF: i128 = i128::MAX / 4;

/// Optimal matching of ground-truth rows to predicted columns with the
/// lexicographic tie-break described in the module docs.
fn best_matching(table: &Contingency) -> Vec<Option<usize>> {
    encoded_matching(table).unwrap_or_else(|| lexicographic_matching(table))
}

/// Solves the tie-break in one assignment by folding it into the weights:
/// overlap is scaled by `base^rows` and each row adds one base-`base` digit
/// that grows as the column index shrinks (0 when unmatched). Row 0 owns the
/// most significant digit, so among equal overlaps the larger total is the
/// lexicographically smaller mapping. `None` when the weights overflow.
fn encoded_matching(table: &Contingency) -> Option<Vec<Option<usize>>> {
    let (n_rows, n_cols) = (table.n_gt, table.n_pred);
    let base = n_cols as i128 + 1;
    let scale = base.checked_pow(u32::try_from(n_rows).ok()?)?;
    let overlap: i128 = table.cells.iter().map(|&x| x as i128).sum();
    let limit = INF / (4 * (n_rows.max(n_cols) as i128 + 1));
    if scale.checked_mul(overlap + 1)? > limit {
        return None;
    }
    let weight = |r: usize, c: usize| {
        table.at(r, c) as i128 * scale + (n_cols - c) as i128 * base.pow((n_rows - 1 - r) as u32)
    };
    Some(max_assignment(n_rows, n_cols, weight).1)
}

/// Same result as [`encoded_matching`] for any size: fixes rows in order,
/// each to the smallest choice that still admits an optimal completion.
fn lexicographic_matching(table: &Contingency) -> Vec<Option<usize>> {
    let (n_rows, n_cols) = (table.n_gt, table.n_pred);
    let weight = |r: usize, c: usize| table.at(r, c) as i128;
    let (best, mut current) = max_assignment(n_rows, n_cols, weight);

    let mut fixed: Vec<Option<usize>> = Vec::with_capacity(n_rows);
    let mut fixed_value = 0i128;
    for g in 0..n_rows {
        let used: Vec<usize> = fixed.iter().flatten().copied().collect();
        let rest_rows: Vec<usize> = (g + 1..n_rows).collect();
        let candidates = (0..n_cols)
            .filter(|c| !used.contains(c))
            .map(Some)
            .chain([None]);
        for cand in candidates {
            if cand == current[g] {
                break;
            }
            let gain = cand.map_or(0, |c| weight(g, c));
            let free: Vec<usize> = (0..n_cols)
                .filter(|c| !used.contains(c) && Some(*c) != cand)
                .collect();
            let bound: i128 = rest_rows
                .iter()
                .map(|&r| free.iter().map(|&c| weight(r, c)).max().unwrap_or(0).max(0))
                .sum();
            if fixed_value + gain + bound < best {
                continue;
            }
            let (rest, assign) = max_assignment(rest_rows.len(), free.len(), |r, c| {
                weight(rest_rows[r], free[c])
            });
            if fixed_value + gain + rest == best {
                current[g] = cand;
                for (&r, a) in rest_rows.iter().zip(assign) {
                    current[r] = a.map(|c| free[c]);
                }
                break;
            }
        }
        fixed_value += current[g].map_or(0, |c| weight(g, c));
        fixed.push(current[g]);
    }
    fixed
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapScores {
    pub mof: f64,
    pub iou: f64,
    pub f1: f64,
}

/// MoF, IoU and F1 under the optimal one-to-one cluster/segment matching.
///
/// IoU and F1 are averaged over ground-truth segments; an unmatched segment
/// scores 0.
pub fn matched_overlap_metrics(pred: &FrameLabeling, gt: &FrameLabeling) -> Result<OverlapScores> {
    check_lengths(pred, gt)?;
    let table = Contingency::new(pred, gt);
    let matching = best_matching(&table);

    let mut matched = 0i64;
    let mut iou = 0.0;
    let mut f1 = 0.0;
    for (g, m) in matching.iter().enumerate() {
        let Some(p) = *m else { continue };
        let inter = table.at(g, p);
        let sizes = table.gt_size(g) + table.pred_size(p);
        matched += inter;
        iou += inter as f64 / (sizes - inter) as f64;
        f1 += 2.0 * inter as f64 / sizes as f64;
    }
    let n_gt = table.n_gt as f64;
    Ok(OverlapScores {
        mof: matched as f64 / pred.len() as f64,
        iou: iou / n_gt,
        f1: f1 / n_gt,
    })
}

/// Percentage of ground-truth boundaries matched by a distinct predicted
/// boundary within `±k_s` seconds.
///
/// Ground-truth boundaries are visited in time order and each takes the
/// nearest unmatched prediction in range (earlier one on ties). Both lists
/// hold internal boundaries only; two empty lists score 100.
pub fn boundary_score(pred_boundaries_s: &[f64], gt_boundaries_s: &[f64], k_s: f64) -> Result<f64> {
    let sorted = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(|x| x.is_finite());
    if !sorted(pred_boundaries_s) || !sorted(gt_boundaries_s) {
        return Err(Error::validation(
            "boundary lists must be sorted and finite",
        ));
    }
    if !(k_s >= 0.0) {
        return Err(Error::validation("tolerance must be >= 0"));
    }
    if pred_boundaries_s.is_empty() && gt_boundaries_s.is_empty() {
        return Ok(100.0);
    }
    let mut taken = vec![false; pred_boundaries_s.len()];
    let mut matched = 0usize;
    for &g in gt_boundaries_s {
        let mut best: Option<(usize, f64)> = None;
        for (i, &p) in pred_boundaries_s.iter().enumerate() {
            let d = (p - g).abs();
            if !taken[i] && d <= k_s && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            taken[i] = true;
            matched += 1;
        }
    }
    Ok(100.0 * matched as f64 / gt_boundaries_s.len().max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub nmi: f64,
    pub mof: f64,
    pub iou: f64,
    pub f1: f64,
    /// BS@k keyed by tolerance in seconds.
    pub bs_at: BTreeMap<u32, f64>,
}

impl MetricReport {
    /// Unweighted mean over lectures.
    pub fn mean(reports: &[MetricReport]) -> Result<MetricReport> {
        if reports.is_empty() {
            return Err(Error::Empty("no reports to average".into()));
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let mut bs_at = BTreeMap::new();
        for &k in reports[0].bs_at.keys() {
            let vals: Option<Vec<f64>> = reports.iter().map(|r| r.bs_at.get(&k).copied()).collect();
            let vals =
                vals.ok_or_else(|| Error::validation(format!("BS@{k} missing from a report")))?;
            bs_at.insert(k, vals.iter().sum::<f64>() / n);
        }
        Ok(MetricReport {
            nmi: avg(|r| r.nmi),
            mof: avg(|r| r.mof),
            iou: avg(|r| r.iou),
            f1: avg(|r| r.f1),
            bs_at,
        })
    }
}

/// Scores a predicted segmentation of `lecture` against `gt`.
pub fn evaluate(
    pred: &Segmentation,
    gt: &Segmentation,
    lecture: &Lecture,
    k_list: &[u32],
) -> Result<MetricReport> {
    let starts = lecture.starts();
    if pred.len() != starts.len() || gt.len() != starts.len() {
        return Err(Error::validation(format!(
            "{}: prediction ({}) and ground truth ({}) must label all {} clips",
            lecture.lecture_id,
            pred.len(),
            gt.len(),
            starts.len()
        )));
    }
    let pf = FrameLabeling::from_segmentation(pred, &starts, lecture.total_duration_s)?;
    let gf = FrameLabeling::from_segmentation(gt, &starts, lecture.total_duration_s)?;
    let overlap = matched_overlap_metrics(&pf, &gf)?;
    let pb = pred.boundaries_s(&starts);
    let gb = gt.boundaries_s(&starts);
    let bs_at = k_list
        .iter()
        .map(|&k| Ok((k, boundary_score(&pb, &gb, k as f64)?)))
        .collect::<Result<_>>()?;
    Ok(MetricReport {
        nmi: nmi(&pf, &gf)?,
        mof: overlap.mof,
        iou: overlap.iou,
        f1: overlap.f1,
        bs_at,
    })
}

/// Text table with percentages to one decimal: NMI, MoF, IoU, F1, BS@k.
pub fn format_table(rows: &[(String, MetricReport)], bs_k: u32) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
    let mut out = String::new();
    let bs = format!("BS@{bs_k}");
    let _ = writeln!(
        out,
        "{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}",
        "Method", "NMI", "MoF", "IoU", "F1", bs
    );
    for (name, r) in rows {
        let b = r
            .bs_at
            .get(&bs_k)
            .map_or("-".to_string(), |v| format!("{v:.1}"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>6.1}  {:>6.1}  {:>6.1}  {:>6.1}  {:>6}",
            name,
            100.0 * r.nmi,
            100.0 * r.mof,
            100.0 * r.iou,
            100.0 * r.f1,
            b
        );
    }
    out
}
