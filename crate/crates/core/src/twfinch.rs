//! Temporally weighted first-neighbor clustering.
//!
//! Clips are nodes of a complete graph with edge distance
//! `E = (1 − cos φ) · (|Δτ| / T)^α`. Linking every node to its nearest
//! neighbor and taking connected components gives the first partition.
//! Collapsing each cluster to the mean of its members and repeating gives a
//! hierarchy of ever coarser partitions. An exact cluster count is reached
//! by greedy closest-pair merges from the finest level that still has enough
//! clusters, and `α` is raised step by step until the clusters are temporal
//! runs.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::datamodel::Segmentation;
use crate::error::{Error, Result};

/// A clip, or a merged cluster of clips, as seen by the clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipPoint {
    pub phi: Vec<f64>,
    /// Timestamp in seconds.
    pub tau: f64,
    /// Number of original clips represented.
    pub weight: usize,
}

impl ClipPoint {
    pub fn new(phi: Vec<f64>, tau: f64) -> Self {
        Self {
            phi,
            tau,
            weight: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwfinchConfig {
    pub alpha_init: f64,
    pub alpha_step: f64,
    pub alpha_max: f64,
    pub require_contiguous: bool,
    /// Also link nodes that share a first neighbor.
    pub shared_neighbor_links: bool,
}

impl Default for TwfinchConfig {
    fn default() -> Self {
        Self {
            alpha_init: 1.0,
            alpha_step: 0.1,
            alpha_max: 5.0,
            require_contiguous: true,
            shared_neighbor_links: false,
        }
    }
}

impl TwfinchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_init > 0.0 && self.alpha_init.is_finite()) {
            return Err(Error::validation("alpha_init must be positive"));
        }
        if !(self.alpha_step > 0.0) {
            return Err(Error::validation("alpha_step must be positive"));
        }
        if !(self.alpha_max >= self.alpha_init && self.alpha_max.is_finite()) {
            return Err(Error::validation("alpha_max must be >= alpha_init"));
        }
        Ok(())
    }

    /// The `α` values tried in order.
    fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..)
            .map(move |i| self.alpha_init + i as f64 * self.alpha_step)
            .take_while(move |&a| a <= self.alpha_max + 1e-9)
    }
}

/// Successively coarser partitions, finest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionHierarchy {
    pub levels: Vec<Segmentation>,
}

impl PartitionHierarchy {
    pub fn counts(&self) -> Vec<usize> {
        self.levels.iter().map(Segmentation::k).collect()
    }
}

/// Which hierarchy level estimates the number of segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKLevel {
    SecondLast,
    ThirdLast,
}

impl AutoKLevel {
    fn offset_from_end(self) -> usize {
        match self {
            AutoKLevel::SecondLast => 2,
            AutoKLevel::ThirdLast => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwfinchResult {
    pub segmentation: Segmentation,
    pub alpha_used: f64,
    /// Set when `alpha_max` was reached without a contiguous result.
    pub exhausted: bool,
    /// Set when auto-K asked for a level the hierarchy does not have.
    pub fallback: bool,
}

/// Points sorted by time with cached squared norms.
struct Prepared {
    phi: Vec<Vec<f64>>,
    sq_norm: Vec<f64>,
    tau: Vec<f64>,
    weight: Vec<usize>,
    /// `order[i]` is the input index of the i-th point in time.
    order: Vec<usize>,
    t_total: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_point(p: &ClipPoint, dim: usize, t_total: f64) -> Result<f64> {
    if p.phi.len() != dim {
        return Err(Error::DimMismatch(format!(
            "point of width {} vs {dim}",
            p.phi.len()
        )));
    }
    if p.phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("non-finite representation"));
    }
    let sq = dot(&p.phi, &p.phi);
    if sq == 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    if !(p.tau.is_finite() && (0.0..=t_total).contains(&p.tau)) {
        return Err(Error::validation(format!(
            "timestamp {} outside [0, {t_total}]",
            p.tau
        )));
    }
    if p.weight == 0 {
        return Err(Error::validation("point weight must be >= 1"));
    }
    Ok(sq)
}

impl Prepared {
    fn new(points: &[ClipPoint], t_total: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("no points to cluster".into()));
        }
        if !(t_total > 0.0 && t_total.is_finite()) {
            return Err(Error::validation("total duration must be positive"));
        }
        let dim = points[0].phi.len();
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].tau.total_cmp(&points[b].tau).then(a.cmp(&b)));
        let mut prep = Prepared {
            phi: Vec::with_capacity(points.len()),
            sq_norm: Vec::with_capacity(points.len()),
            tau: Vec::with_capacity(points.len()),
            weight: Vec::with_capacity(points.len()),
            order,
            t_total,
        };
        for &i in &prep.order {
            let p = &points[i];
            prep.sq_norm.push(check_point(p, dim, t_total)?);
            prep.phi.push(p.phi.clone());
            prep.tau.push(p.tau);
            prep.weight.push(p.weight);
        }
        Ok(prep)
    }

    /// Maps labels over time-sorted points back to input order.
    fn to_input_order(&self, sorted_labels: &[usize]) -> Segmentation {
        let mut raw = vec![0; sorted_labels.len()];
        for (pos, &input) in self.order.iter().enumerate() {
            raw[input] = sorted_labels[pos];
        }
        Segmentation::from_labels(&raw)
    }
}

/// A cluster summary: member-weighted mean representation and time.
#[derive(Debug, Clone)]
struct Node {
    phi: Vec<f64>,
    sq_norm: f64,
    tau: f64,
    weight: usize,
}

fn distance(a: &Node, b: &Node, t_total: f64, alpha: f64) -> f64 {
    let cos = (dot(&a.phi, &b.phi) / (a.sq_norm * b.sq_norm).sqrt()).clamp(-1.0, 1.0);
    let e_s = (1.0 - cos).max(0.0);
    let e_t = (a.tau - b.tau).abs() / t_total;
    e_s * e_t.powf(alpha)
}

/// `(E, |Δτ|)` ordering with index as the last resort.
fn closer(d1: f64, gap1: f64, d2: f64, gap2: f64) -> bool {
    match d1.total_cmp(&d2) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => gap1 < gap2,
    }
}

/// Distance between two clips or clusters.
///
/// `E_s = 1 − cos(φ_m, φ_n)`, `E_τ = |τ_m − τ_n| / T`, `E = E_s · E_τ^α`.
pub fn pair_distance(m: &ClipPoint, n: &ClipPoint, t_total: f64, alpha: f64) -> Result<f64> {
    if !(t_total > 0.0) {
        return Err(Error::validation("total duration must be positive"));
    }
    let dim = m.phi.len();
    let to_node = |p: &ClipPoint| -> Result<Node> {
        Ok(Node {
            sq_norm: check_point(p, dim, f64::INFINITY)?,
            phi: p.phi.clone(),
            tau: p.tau,
            weight: p.weight,
        })
    };
    Ok(distance(&to_node(m)?, &to_node(n)?, t_total, alpha))
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }

    /// Component labels in order of each component's first node.
    fn labels(&mut self) -> Vec<usize> {
        let raw: Vec<usize> = (0..self.0.len()).map(|i| self.find(i)).collect();
        Segmentation::from_labels(&raw).labels().to_vec()
    }
}

/// First-neighbor partition of time-ordered nodes; labels in node order.
fn first_neighbor_labels(nodes: &[Node], t_total: f64, alpha: f64, shared: bool) -> Vec<usize> {
    let n = nodes.len();
    if n == 1 {
        return vec![0];
    }
    let nn: Vec<usize> = (0..n)
        .map(|i| {
            let mut best = usize::MAX;
            let (mut best_d, mut best_gap) = (f64::INFINITY, f64::INFINITY);
            for j in (0..n).filter(|&j| j != i) {
                let d = distance(&nodes[i], &nodes[j], t_total, alpha);
                let gap = (nodes[i].tau - nodes[j].tau).abs();
                if best == usize::MAX || closer(d, gap, best_d, best_gap) {
                    best = j;
                    best_d = d;
                    best_gap = gap;
                }
            }
            best
        })
        .collect();
    let mut uf = UnionFind::new(n);
    for (i, &j) in nn.iter().enumerate() {
        uf.union(i, j);
    }
    if shared {
        let mut first_with: Vec<Option<usize>> = vec![None; n];
        for (i, &j) in nn.iter().enumerate() {
            match first_with[j] {
                Some(k) => uf.union(i, k),
                None => first_with[j] = Some(i),
            }
        }
    }
    uf.labels()
}

fn base_nodes(prep: &Prepared) -> Vec<Node> {
    (0..prep.phi.len())
        .map(|i| Node {
            phi: prep.phi[i].clone(),
            sq_norm: prep.sq_norm[i],
            tau: prep.tau[i],
            weight: prep.weight[i],
        })
        .collect()
}

/// Collapses each cluster of `seg` (over base nodes) to its member mean.
fn collapse(base: &[Node], members: &[Vec<usize>]) -> Vec<Node> {
    let dim = base[0].phi.len();
    members
        .iter()
        .map(|m| {
            let weight: usize = m.iter().map(|&i| base[i].weight).sum();
            let mut phi = vec![0.0; dim];
            let mut tau = 0.0;
            for &i in m {
                let w = base[i].weight as f64;
                for (acc, x) in phi.iter_mut().zip(&base[i].phi) {
                    *acc += w * x;
                }
                tau += w * base[i].tau;
            }
            let wf = weight as f64;
            phi.iter_mut().for_each(|x| *x /= wf);
            Node {
                sq_norm: dot(&phi, &phi),
                phi,
                tau: tau / wf,
                weight,
            }
        })
        .collect()
}

/// Hierarchy over time-sorted base nodes; each level labels base nodes.
fn hierarchy_sorted(base: &[Node], t_total: f64, alpha: f64, shared: bool) -> Vec<Segmentation> {
    let mut levels: Vec<Segmentation> = Vec::new();
    let mut nodes = base.to_vec();
    let mut current = Segmentation::singletons(base.len());
    loop {
        let cluster_labels = first_neighbor_labels(&nodes, t_total, alpha, shared);
        let next = current.compose(&cluster_labels);
        if next.k() == current.k() && !levels.is_empty() {
            break;
        }
        let done = next.k() == 1 || next.k() == current.k();
        levels.push(next.clone());
        if done {
            break;
        }
        nodes = collapse(base, &next.members());
        current = next;
    }
    levels
}

/// Greedy closest-pair merging from `start` down to exactly `k` clusters.
fn merge_down_to(
    base: &[Node],
    start: Segmentation,
    k: usize,
    t_total: f64,
    alpha: f64,
) -> Segmentation {
    let mut members = start.members();
    let mut nodes = collapse(base, &members);
    let m = nodes.len();
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let d = distance(&nodes[i], &nodes[j], t_total, alpha);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut alive: Vec<usize> = (0..m).collect();
    while alive.len() > k {
        let mut best: Option<(usize, usize, f64, f64)> = None;
        for (ai, &i) in alive.iter().enumerate() {
            for &j in &alive[ai + 1..] {
                let d = dist[i][j];
                let gap = (nodes[i].tau - nodes[j].tau).abs();
                if best.is_none_or(|(_, _, bd, bg)| closer(d, gap, bd, bg)) {
                    best = Some((i, j, d, gap));
                }
            }
        }
        let (i, j, _, _) = best.expect("at least two clusters alive");
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        members[i].sort_unstable();
        nodes[i] = collapse(base, std::slice::from_ref(&members[i])).remove(0);
        alive.retain(|&x| x != j);
        for &o in alive.iter().filter(|&&o| o != i) {
            let d = distance(&nodes[i], &nodes[o], t_total, alpha);
            dist[i][o] = d;
            dist[o][i] = d;
        }
    }
    let mut raw = vec![0usize; base.len()];
    for (label, &c) in alive.iter().enumerate() {
        for &p in &members[c] {
            raw[p] = label;
        }
    }
    Segmentation::from_labels(&raw)
}

fn exact_k_sorted(base: &[Node], t_total: f64, k: usize, alpha: f64, shared: bool) -> Segmentation {
    let levels = hierarchy_sorted(base, t_total, alpha, shared);
    let start = levels
        .iter()
        .rev()
        .find(|l| l.k() >= k)
        .cloned()
        .unwrap_or_else(|| Segmentation::singletons(base.len()));
    if start.k() == k {
        return start;
    }
    merge_down_to(base, start, k, t_total, alpha)
}

/// Links every point to its nearest other point and returns the connected
/// components. Ties go to the smaller time gap, then the earlier point.
pub fn one_nn_partition(points: &[ClipPoint], t_total: f64, alpha: f64) -> Result<Segmentation> {
    one_nn_partition_with(points, t_total, alpha, false)
}

/// [`one_nn_partition`] with optional shared-first-neighbor links.
pub fn one_nn_partition_with(
    points: &[ClipPoint],
    t_total: f64,
    alpha: f64,
    shared_neighbor_links: bool,
) -> Result<Segmentation> {
    let prep = Prepared::new(points, t_total)?;
    let labels = first_neighbor_labels(&base_nodes(&prep), t_total, alpha, shared_neighbor_links);
    Ok(prep.to_input_order(&labels))
}

pub fn build_hierarchy(
    points: &[ClipPoint],
    t_total: f64,
    alpha: f64,
) -> Result<PartitionHierarchy> {
    build_hierarchy_with(points, t_total, alpha, false)
}

pub fn build_hierarchy_with(
    points: &[ClipPoint],
    t_total: f64,
    alpha: f64,
    shared_neighbor_links: bool,
) -> Result<PartitionHierarchy> {
    let prep = Prepared::new(points, t_total)?;
    let levels = hierarchy_sorted(&base_nodes(&prep), t_total, alpha, shared_neighbor_links);
    Ok(PartitionHierarchy {
        levels: levels
            .iter()
            .map(|l| prep.to_input_order(l.labels()))
            .collect(),
    })
}

fn escalate(prep: &Prepared, k: usize, cfg: &TwfinchConfig) -> TwfinchResult {
    let base = base_nodes(prep);
    let mut last: Option<(Segmentation, f64)> = None;
    for alpha in cfg.alphas() {
        let seg = exact_k_sorted(&base, prep.t_total, k, alpha, cfg.shared_neighbor_links);
        if !cfg.require_contiguous || seg.is_contiguous() {
            return TwfinchResult {
                segmentation: prep.to_input_order(seg.labels()),
                alpha_used: alpha,
                exhausted: false,
                fallback: false,
            };
        }
        last = Some((seg, alpha));
    }
    let (seg, alpha) = last.expect("alpha_init <= alpha_max yields one try");
    log::warn!(
        "no temporally contiguous {k}-segmentation up to alpha = {}; returning the last result",
        cfg.alpha_max
    );
    TwfinchResult {
        segmentation: prep.to_input_order(seg.labels()),
        alpha_used: alpha,
        exhausted: true,
        fallback: false,
    }
}

/// Partitions the points into exactly `k` clusters, raising `α` until the
/// clusters are contiguous in time (when required).
pub fn segment_exact_k(
    points: &[ClipPoint],
    t_total: f64,
    k: usize,
    cfg: &TwfinchConfig,
) -> Result<TwfinchResult> {
    cfg.validate()?;
    if k == 0 || k > points.len() {
        return Err(Error::validation(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let prep = Prepared::new(points, t_total)?;
    Ok(escalate(&prep, k, cfg))
}

/// Cluster count of the second- or third-last level of the hierarchy built
/// at `alpha_init`. The flag is set when the hierarchy is too shallow and
/// the coarsest level was used instead.
pub fn auto_k_count(
    points: &[ClipPoint],
    t_total: f64,
    cfg: &TwfinchConfig,
    which: AutoKLevel,
) -> Result<(usize, bool)> {
    cfg.validate()?;
    let prep = Prepared::new(points, t_total)?;
    Ok(auto_k_sorted(&prep, cfg, which))
}

fn auto_k_sorted(prep: &Prepared, cfg: &TwfinchConfig, which: AutoKLevel) -> (usize, bool) {
    let levels = hierarchy_sorted(
        &base_nodes(prep),
        prep.t_total,
        cfg.alpha_init,
        cfg.shared_neighbor_links,
    );
    match levels.len().checked_sub(which.offset_from_end()) {
        Some(i) => (levels[i].k(), false),
        None => (levels.last().expect("hierarchy has a level").k(), true),
    }
}

/// Picks the cluster count with [`auto_k_count`] and segments with it.
pub fn auto_k(
    points: &[ClipPoint],
    t_total: f64,
    cfg: &TwfinchConfig,
    which: AutoKLevel,
) -> Result<TwfinchResult> {
    cfg.validate()?;
    let prep = Prepared::new(points, t_total)?;
    let (k, fallback) = auto_k_sorted(&prep, cfg, which);
    let mut out = escalate(&prep, k, cfg);
    out.fallback = fallback;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(phi: &[f64], tau: f64) -> ClipPoint {
        ClipPoint::new(phi.to_vec(), tau)
    }

    fn four() -> Vec<ClipPoint> {
        vec![
            pt(&[1.0, 0.0], 0.5),
            pt(&[1.0, 0.0], 1.5),
            pt(&[0.0, 1.0], 2.5),
            pt(&[0.0, 1.0], 3.5),
        ]
    }

    #[test]
    fn distance_cases() {
        let a = pt(&[1.0, 2.0], 0.0);
        let same = pt(&[1.0, 2.0], 80.0);
        assert_eq!(pair_distance(&a, &same, 100.0, 1.0).unwrap(), 0.0);
        assert_eq!(pair_distance(&a, &same, 100.0, 3.7).unwrap(), 0.0);
        let cotemporal = pt(&[-3.0, 1.0], 0.0);
        assert_eq!(pair_distance(&a, &cotemporal, 100.0, 1.0).unwrap(), 0.0);

        let x = pt(&[1.0, 0.0], 10.0);
        let y = pt(&[0.0, 1.0], 60.0);
        assert!((pair_distance(&x, &y, 100.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((pair_distance(&x, &y, 100.0, 2.0).unwrap() - 0.25).abs() < 1e-15);

        let zero = pt(&[0.0, 0.0], 1.0);
        assert!(matches!(
            pair_distance(&x, &zero, 100.0, 1.0),
            Err(Error::DegenerateEmbedding)
        ));
    }

    #[test]
    fn four_point_partition() {
        let seg = one_nn_partition(&four(), 4.0, 1.0).unwrap();
        assert_eq!(seg.labels(), &[0, 0, 1, 1]);
        let r = segment_exact_k(&four(), 4.0, 2, &TwfinchConfig::default()).unwrap();
        assert_eq!(r.segmentation.labels(), &[0, 0, 1, 1]);
        assert_eq!(r.alpha_used, 1.0);
    }

    #[test]
    fn identical_points_chain_into_one_cluster() {
        let pts: Vec<_> = (0..7).map(|i| pt(&[0.3, 0.4], i as f64)).collect();
        let seg = one_nn_partition(&pts, 7.0, 1.0).unwrap();
        assert_eq!(seg.k(), 1);
        assert_eq!(
            one_nn_partition(&pts[..1], 7.0, 1.0).unwrap().labels(),
            &[0]
        );
    }

    #[test]
    fn exact_k_extremes() {
        let pts: Vec<_> = (0..9)
            .map(|i| pt(&[(i as f64).cos(), (i as f64).sin(), 0.5], i as f64 + 0.5))
            .collect();
        let cfg = TwfinchConfig::default();
        let all = segment_exact_k(&pts, 9.0, 9, &cfg).unwrap();
        assert_eq!(all.segmentation.labels(), &(0..9).collect::<Vec<_>>()[..]);
        let one = segment_exact_k(&pts, 9.0, 1, &cfg).unwrap();
        assert!(one.segmentation.labels().iter().all(|&l| l == 0));
        assert!(segment_exact_k(&pts, 9.0, 0, &cfg).is_err());
        assert!(segment_exact_k(&pts, 9.0, 10, &cfg).is_err());
    }

    #[test]
    fn merged_representation_is_member_mean() {
        let pts: Vec<_> = (0..11)
            .map(|i| {
                let f = i as f64;
                pt(&[1.0 + 0.1 * f.sin(), 0.3 * f.cos(), 0.01 * f], f + 0.5)
            })
            .collect();
        let prep = Prepared::new(&pts, 11.0).unwrap();
        let base = base_nodes(&prep);
        let levels = hierarchy_sorted(&base, 11.0, 1.0, false);
        // collapse level by level through child means and compare
        let mut nodes = base.clone();
        let mut prev = Segmentation::singletons(11);
        for level in &levels {
            let direct = collapse(&base, &level.members());
            // child-mean route: weight each child cluster by its size
            let child_of: Vec<usize> = prev
                .members()
                .iter()
                .map(|m| level.labels()[m[0]])
                .collect();
            for (c, node) in direct.iter().enumerate() {
                let kids: Vec<usize> = (0..nodes.len()).filter(|&k| child_of[k] == c).collect();
                let w: f64 = kids.iter().map(|&k| nodes[k].weight as f64).sum();
                for d in 0..3 {
                    let v: f64 = kids
                        .iter()
                        .map(|&k| nodes[k].weight as f64 * nodes[k].phi[d])
                        .sum::<f64>()
                        / w;
                    assert!((v - node.phi[d]).abs() < 1e-12);
                }
                let members = &level.members()[c];
                for d in 0..3 {
                    let mean =
                        members.iter().map(|&i| pts[i].phi[d]).sum::<f64>() / members.len() as f64;
                    assert!((mean - node.phi[d]).abs() < 1e-12);
                }
            }
            nodes = direct;
            prev = level.clone();
        }
    }

    #[test]
    fn auto_k_levels_and_fallback() {
        let pts: Vec<_> = (0..40)
            .map(|i| {
                let seg = i / 10;
                let mut phi = vec![0.05; 4];
                phi[seg] = 1.0;
                phi[(i * 7) % 4] += 0.02 * (i as f64).sin();
                pt(&phi, i as f64 + 0.5)
            })
            .collect();
        let cfg = TwfinchConfig::default();
        let h = build_hierarchy(&pts, 40.0, 1.0).unwrap();
        let counts = h.counts();
        let second = auto_k(&pts, 40.0, &cfg, AutoKLevel::SecondLast).unwrap();
        if counts.len() >= 2 {
            assert_eq!(second.segmentation.k(), counts[counts.len() - 2]);
            assert!(!second.fallback);
        }
        let single = auto_k(&pts[..1], 40.0, &cfg, AutoKLevel::ThirdLast).unwrap();
        assert!(single.fallback);
        assert_eq!(single.segmentation.k(), 1);
    }

    #[test]
    fn shared_neighbor_links_can_only_coarsen() {
        let pts: Vec<_> = (0..30)
            .map(|i| {
                pt(
                    &[(i as f64 * 0.7).cos(), (i as f64 * 1.3).sin(), 1.0],
                    i as f64,
                )
            })
            .collect();
        let plain = one_nn_partition_with(&pts, 30.0, 1.0, false).unwrap();
        let shared = one_nn_partition_with(&pts, 30.0, 1.0, true).unwrap();
        assert!(shared.coarsens(&plain));
    }

    fn random_points() -> impl Strategy<Value = Vec<ClipPoint>> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..40).prop_map(|phis| {
            phis.into_iter()
                .enumerate()
                .map(|(i, mut phi)| {
                    phi[0] += 2.0;
                    ClipPoint::new(phi, i as f64 + 0.5)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn distance_symmetric_nonnegative(a in prop::collection::vec(0.1f64..1.0, 3),
                                          b in prop::collection::vec(-1.0f64..1.0, 3),
                                          ta in 0.0f64..100.0, tb in 0.0f64..100.0,
                                          alpha in 0.5f64..5.0) {
            let p = pt(&a, ta);
            let q = pt(&b, tb);
            let d1 = pair_distance(&p, &q, 100.0, alpha).unwrap();
            let d2 = pair_distance(&q, &p, 100.0, alpha).unwrap();
            prop_assert_eq!(d1, d2);
            prop_assert!(d1 >= 0.0);
            // E_tau <= 1, so a larger alpha never increases E
            prop_assert!(pair_distance(&p, &q, 100.0, alpha + 0.5).unwrap() <= d1);
        }

        #[test]
        fn hierarchy_levels_coarsen(pts in random_points()) {
            let t = pts.len() as f64 + 1.0;
            let h = build_hierarchy(&pts, t, 1.0).unwrap();
            let counts = h.counts();
            prop_assert!(counts.windows(2).all(|w| w[1] < w[0]));
            for w in h.levels.windows(2) {
                prop_assert!(w[1].coarsens(&w[0]));
            }
        }

        #[test]
        fn exact_k_has_k_clusters(pts in random_points(), k_frac in 0.0f64..1.0) {
            let n = pts.len();
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let t = n as f64 + 1.0;
            let r = segment_exact_k(&pts, t, k, &TwfinchConfig::default()).unwrap();
            prop_assert_eq!(r.segmentation.k(), k);
            prop_assert!(r.alpha_used <= 5.0 + 1e-9);
            prop_assert_eq!(r.segmentation.is_contiguous(), !r.exhausted);
        }

        #[test]
        fn invariant_to_power_of_two_scaling(pts in random_points(), e in -8i32..8) {
            let t = pts.len() as f64 + 1.0;
            let s = 2f64.powi(e);
            let scaled: Vec<_> = pts.iter().map(|p| ClipPoint::new(p.phi.iter().map(|x| x * s).collect(), p.tau)).collect();
            prop_assert_eq!(build_hierarchy(&pts, t, 1.0).unwrap(), build_hierarchy(&scaled, t, 1.0).unwrap());
        }

        #[test]
        fn invariant_to_input_order(pts in random_points(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let t = pts.len() as f64 + 1.0;
            let mut perm: Vec<usize> = (0..pts.len()).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled: Vec<_> = perm.iter().map(|&i| pts[i].clone()).collect();
            let k = 1 + pts.len() / 3;
            let a = segment_exact_k(&pts, t, k, &TwfinchConfig::default()).unwrap();
            let b = segment_exact_k(&shuffled, t, k, &TwfinchConfig::default()).unwrap();
            let mut back = vec![0; pts.len()];
            for (pos, &i) in perm.iter().enumerate() {
                back[i] = b.segmentation.labels()[pos];
            }
            prop_assert_eq!(&a.segmentation, &Segmentation::from_labels(&back));
        }
    }
}
