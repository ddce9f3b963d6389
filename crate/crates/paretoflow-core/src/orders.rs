//! Global ordering functions consistent with Pareto dominance.
//!
//! Two families are provided. Global Rank peels Pareto fronts off the set
//! and hands out inverted integer layer ranks, so the front carries the
//! highest score; an optional cutoff trims the peeling after a fixed
//! number of layers, and the cheap variant keeps only front membership.
//! Nearest Neighbor Order scores a point by the negated distance to the
//! front (zero exactly on the front), optionally measured against the
//! piecewise-linear interpolation of a planar front.
//!
//! [`transform_rewards`] turns scores into the nonnegative rewards a
//! sampler can be trained against: raw values, a softmax over the batch,
//! or the indicator of the top score.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{self, nondominated_sort, pareto_front, PointId, PointSet};

/// Which ordering produced a [`RankAssignment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankMethod {
    GlobalRank,
    GlobalRankTrimmed(usize),
    CheapGlobalRank,
    NnOrder,
    NnInterpOrder,
}

/// Per-point provenance of a score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RankAux {
    /// Pareto layer index; `trimmed` marks points past the cutoff.
    Layer { index: usize, trimmed: bool },
    /// Distance to the (interpolated) Pareto front.
    FrontDistance(f64),
}

impl RankAux {
    /// Numeric rendering used by CSV outputs (layer index or distance).
    pub fn as_f64(&self) -> f64 {
        match *self {
            RankAux::Layer { index, .. } => index as f64,
            RankAux::FrontDistance(d) => d,
        }
    }
}

/// Scores assigned to every id of the input set, in input order.
#[derive(Debug, Clone)]
pub struct RankAssignment {
    pub method: RankMethod,
    ids: Vec<PointId>,
    scores: Vec<f64>,
    aux: Vec<RankAux>,
    index: HashMap<PointId, usize>,
}

impl RankAssignment {
    fn new(method: RankMethod, ids: Vec<PointId>, scores: Vec<f64>, aux: Vec<RankAux>) -> Self {
        let index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        Self {
            method,
            ids,
            scores,
            aux,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    /// Scores aligned with the input set's order.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn aux(&self) -> &[RankAux] {
        &self.aux
    }

    pub fn score(&self, id: PointId) -> Option<f64> {
        self.index.get(&id).map(|&i| self.scores[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (PointId, f64, RankAux)> + '_ {
        self.ids
            .iter()
            .zip(self.scores.iter())
            .zip(self.aux.iter())
            .map(|((&id, &s), &a)| (id, s, a))
    }
}

/// Distance used by the nearest-neighbor orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Manhattan,
}

impl DistanceMetric {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            DistanceMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            DistanceMetric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

/// Assigns inverted Pareto-layer ranks.
///
/// Layers are peeled front-first and numbered 0, 1, 2, ...; the final
/// score is `layers_peeled - layer_index`, so the Pareto front receives
/// the highest integer and the deepest peeled layer receives 1. With
/// `max_rank` given, peeling stops after that many layers and every
/// remaining point receives the minimal score 0.
pub fn global_rank(xs: &PointSet, max_rank: Option<usize>) -> Result<RankAssignment> {
    let sorted = nondominated_sort(xs, max_rank)?;
    let peeled = sorted.layer_count();

    let mut layer_of: HashMap<PointId, (usize, bool)> = HashMap::with_capacity(xs.len());
    for (layer, ids) in sorted.layers.iter().enumerate() {
        for &id in ids {
            layer_of.insert(id, (layer, false));
        }
    }
    if let Some(trimmed) = &sorted.trimmed {
        for &id in trimmed {
            layer_of.insert(id, (peeled, true));
        }
    }

    let mut scores = Vec::with_capacity(xs.len());
    let mut aux = Vec::with_capacity(xs.len());
    for &id in xs.ids() {
        let (layer, trimmed) = layer_of[&id];
        let score = if trimmed {
            0.0
        } else {
            (peeled - layer) as f64
        };
        scores.push(score);
        aux.push(RankAux::Layer {
            index: layer,
            trimmed,
        });
    }
    let method = match max_rank {
        Some(k) => RankMethod::GlobalRankTrimmed(k),
        None => RankMethod::GlobalRank,
    };
    Ok(RankAssignment::new(method, xs.ids().to_vec(), scores, aux))
}

/// Two-level rank: 1 on the Pareto front of `xs`, 0 elsewhere.
///
/// Equivalent to [`global_rank`] with `max_rank = 1`.
pub fn cheap_global_rank(xs: &PointSet) -> Result<RankAssignment> {
    let front = pareto_front(xs)?;
    let on_front: HashMap<PointId, ()> = front.front.iter().map(|&id| (id, ())).collect();
    let mut scores = Vec::with_capacity(xs.len());
    let mut aux = Vec::with_capacity(xs.len());
    for &id in xs.ids() {
        let is_front = on_front.contains_key(&id);
        scores.push(if is_front { 1.0 } else { 0.0 });
        aux.push(RankAux::Layer {
            index: if is_front { 0 } else { 1 },
            trimmed: !is_front,
        });
    }
    Ok(RankAssignment::new(
        RankMethod::CheapGlobalRank,
        xs.ids().to_vec(),
        scores,
        aux,
    ))
}

/// Cheap rank of `xs` against an external running front.
///
/// A point scores 1 when no snapshot point dominates it, 0 otherwise. An
/// empty snapshot dominates nothing, so the whole input scores 1. This is
/// the scoring rule the cheap variant uses against a replay buffer's
/// front snapshot.
pub fn cheap_rank_against(xs: &PointSet, snapshot: &PointSet) -> Result<RankAssignment> {
    if xs.is_empty() {
        return Err(Error::EmptySet);
    }
    if !snapshot.is_empty() && snapshot.dim() != xs.dim() {
        return Err(Error::DimensionMismatch {
            expected: xs.dim(),
            got: snapshot.dim(),
        });
    }
    let mut scores = Vec::with_capacity(xs.len());
    let mut aux = Vec::with_capacity(xs.len());
    for (_, p) in xs.iter() {
        let dominated = snapshot
            .points()
            .iter()
            .any(|q| pareto::dominates_values(q.values(), p.values()));
        scores.push(if dominated { 0.0 } else { 1.0 });
        aux.push(RankAux::Layer {
            index: usize::from(dominated),
            trimmed: dominated,
        });
    }
    Ok(RankAssignment::new(
        RankMethod::CheapGlobalRank,
        xs.ids().to_vec(),
        scores,
        aux,
    ))
}

/// Per-axis affine rescaling to [0, 1] over the set. A degenerate axis
/// (max == min) is mapped to 0 so it contributes nothing to distances.
fn normalized_rows(xs: &PointSet) -> Vec<Vec<f64>> {
    let d = xs.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in xs.points() {
        for (i, &v) in p.values().iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    xs.points()
        .iter()
        .map(|p| {
            p.values()
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let span = hi[i] - lo[i];
                    if span > 0.0 {
                        (v - lo[i]) / span
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn nn_order_impl(
    xs: &PointSet,
    metric: DistanceMetric,
    normalize: bool,
    interpolate: bool,
) -> Result<RankAssignment> {
    let front = pareto_front(xs)?;
    let rows: Vec<Vec<f64>> = if normalize {
        normalized_rows(xs)
    } else {
        xs.points().iter().map(|p| p.values().to_vec()).collect()
    };

    let front_pos: Vec<usize> = front
        .front
        .iter()
        .map(|&id| xs.index_of(id).expect("front id comes from the set"))
        .collect();
    let mut on_front = vec![false; xs.len()];
    for &i in &front_pos {
        on_front[i] = true;
    }

    // For the interpolated variant, the planar front is ordered by the
    // first objective and treated as a polyline.
    let polyline: Option<Vec<&[f64]>> = if interpolate {
        let mut pts: Vec<&[f64]> = front_pos.iter().map(|&i| rows[i].as_slice()).collect();
        pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap_or(std::cmp::Ordering::Equal));
        Some(pts)
    } else {
        None
    };

    let mut scores = Vec::with_capacity(xs.len());
    let mut aux = Vec::with_capacity(xs.len());
    for (i, row) in rows.iter().enumerate() {
        let dist = if on_front[i] {
            0.0
        } else if let Some(poly) = &polyline {
            polyline_distance(row, poly)
        } else {
            front_pos
                .iter()
                .map(|&j| metric.eval(row, &rows[j]))
                .fold(f64::INFINITY, f64::min)
        };
        scores.push(-dist);
        aux.push(RankAux::FrontDistance(dist));
    }
    let method = if interpolate {
        RankMethod::NnInterpOrder
    } else {
        RankMethod::NnOrder
    };
    Ok(RankAssignment::new(method, xs.ids().to_vec(), scores, aux))
}

/// Negative distance to the nearest Pareto-front point; 0 on the front.
///
/// With `normalize`, every objective axis is min-max rescaled over `xs`
/// before distances are taken.
pub fn nn_order(xs: &PointSet, metric: DistanceMetric, normalize: bool) -> Result<RankAssignment> {
    nn_order_impl(xs, metric, normalize, false)
}

/// Like [`nn_order`], but the distance is measured to the piecewise-linear
/// curve through the front points sorted by the first objective. Only
/// defined for two objectives.
pub fn nn_interp_order(
    xs: &PointSet,
    metric: DistanceMetric,
    normalize: bool,
) -> Result<RankAssignment> {
    if xs.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "front interpolation needs d = 2, got d = {}",
            xs.dim()
        )));
    }
    // The polyline metric is Euclidean geometry; other metrics fall back
    // to the plain nearest-neighbor rule.
    let _ = metric;
    nn_order_impl(xs, DistanceMetric::Euclidean, normalize, true)
}

/// Euclidean distance from `p` to the segment `a`-`b`.
fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 {
        (ab.iter().zip(&ap).map(|(x, y)| x * y).sum::<f64>() / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.iter()
        .zip(a.iter().zip(&ab))
        .map(|(&pv, (&av, &abv))| {
            let c = av + t * abv;
            (pv - c) * (pv - c)
        })
        .sum::<f64>()
        .sqrt()
}

fn polyline_distance(p: &[f64], poly: &[&[f64]]) -> f64 {
    if poly.len() == 1 {
        return DistanceMetric::Euclidean.eval(p, poly[0]);
    }
    poly.windows(2)
        .map(|w| segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Transform applied to scores before they are used as sampler rewards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RewardTransform {
    /// Scores as-is, shifted into the positive range when needed.
    Raw,
    /// `exp(gamma * score) / sum(exp(gamma * score))` over the batch.
    Softmax { gamma: f64 },
    /// 1 on the ids attaining the maximum score, 0 elsewhere.
    IndicatorOfMax,
}

/// Tolerance for top-score ties under [`RewardTransform::IndicatorOfMax`].
pub const INDICATOR_TIE_TOL: f64 = 1e-9;

/// Positivity margin applied when `Raw` must shift nonpositive scores.
pub const RAW_SHIFT_EPS: f64 = 1e-6;

/// Maps scores to nonnegative rewards, in the assignment's id order.
///
/// `Raw` requires positive scores; when the minimum is nonpositive (the
/// nearest-neighbor orders produce scores <= 0) every score is first
/// shifted by `-min + 1e-6` so the logarithm downstream stays defined.
pub fn transform_rewards(ranks: &RankAssignment, t: RewardTransform) -> Result<Vec<f64>> {
    if ranks.is_empty() {
        return Err(Error::EmptySet);
    }
    let scores = ranks.scores();
    match t {
        RewardTransform::Raw => {
            let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
            let shift = if min <= 0.0 { -min + RAW_SHIFT_EPS } else { 0.0 };
            let out: Vec<f64> = scores.iter().map(|&s| s + shift).collect();
            if out.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
                return Err(Error::InvalidInput(
                    "raw reward not positive after shift".into(),
                ));
            }
            Ok(out)
        }
        RewardTransform::Softmax { gamma } => {
            if !(gamma > 0.0) || !gamma.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "softmax temperature must be finite and positive, got {gamma}"
                )));
            }
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|&s| (gamma * (s - max)).exp()).collect();
            let total: f64 = exps.iter().sum();
            Ok(exps.into_iter().map(|e| e / total).collect())
        }
        RewardTransform::IndicatorOfMax => {
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(scores
                .iter()
                .map(|&s| if (s - max).abs() <= INDICATOR_TIE_TOL { 1.0 } else { 0.0 })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_points() -> PointSet {
        PointSet::from_rows(vec![
            vec![1.0, 1.0],
            vec![2.0, 1.2],
            vec![3.0, 1.4],
            vec![1.5, 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn global_rank_example() {
        let ranks = global_rank(&example_points(), None).unwrap();
        assert_eq!(ranks.score(2), Some(3.0)); // x3
        assert_eq!(ranks.score(3), Some(3.0)); // x4
        assert_eq!(ranks.score(1), Some(2.0)); // x2
        assert_eq!(ranks.score(0), Some(1.0)); // x1
        assert_eq!(
            ranks.aux()[0],
            RankAux::Layer {
                index: 2,
                trimmed: false
            }
        );
    }

    #[test]
    fn global_rank_incomparable_all_one() {
        let set = PointSet::from_rows(vec![vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 0.0]])
            .unwrap();
        let ranks = global_rank(&set, None).unwrap();
        assert!(ranks.scores().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn global_rank_trimmed_chain() {
        let set = PointSet::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let ranks = global_rank(&set, Some(2)).unwrap();
        assert_eq!(ranks.score(2), Some(2.0));
        assert_eq!(ranks.score(1), Some(1.0));
        assert_eq!(ranks.score(0), Some(0.0));
        assert_eq!(
            ranks.aux()[0],
            RankAux::Layer {
                index: 2,
                trimmed: true
            }
        );
    }

    #[test]
    fn cheap_rank_example() {
        let ranks = cheap_global_rank(&example_points()).unwrap();
        assert_eq!(ranks.scores(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn cheap_rank_matches_trimmed_global_rank() {
        let set = example_points();
        let cheap = cheap_global_rank(&set).unwrap();
        let gr1 = global_rank(&set, Some(1)).unwrap();
        assert_eq!(cheap.scores(), gr1.scores());
    }

    #[test]
    fn cheap_rank_singleton() {
        let set = PointSet::from_rows(vec![vec![0.5, 0.5]]).unwrap();
        assert_eq!(cheap_global_rank(&set).unwrap().scores(), &[1.0]);
    }

    #[test]
    fn cheap_rank_against_snapshot() {
        let snapshot = PointSet::from_rows(vec![vec![3.0, 1.4], vec![1.5, 2.0]]).unwrap();
        let batch = PointSet::from_rows(vec![vec![2.0, 1.2], vec![4.0, 0.5], vec![3.0, 1.4]])
            .unwrap();
        let ranks = cheap_rank_against(&batch, &snapshot).unwrap();
        // Dominated by (3, 1.4); undominated; tie with a snapshot point.
        assert_eq!(ranks.scores(), &[0.0, 1.0, 1.0]);

        let empty = PointSet::empty(2);
        let ranks = cheap_rank_against(&batch, &empty).unwrap();
        assert!(ranks.scores().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn nn_order_unit_corner() {
        let set = PointSet::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]])
            .unwrap();
        let ranks = nn_order(&set, DistanceMetric::Euclidean, false).unwrap();
        assert_eq!(ranks.score(0), Some(0.0));
        assert_eq!(ranks.score(1), Some(0.0));
        assert_relative_eq!(ranks.score(2).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn nn_order_example_distance() {
        let ranks = nn_order(&example_points(), DistanceMetric::Euclidean, false).unwrap();
        assert_relative_eq!(ranks.score(1).unwrap(), -0.89f64.sqrt(), epsilon = 1e-12);
        assert_eq!(ranks.score(2), Some(0.0));
    }

    #[test]
    fn nn_order_degenerate_axis() {
        // Second axis constant: contributes nothing under normalization.
        let set = PointSet::from_rows(vec![vec![0.0, 5.0], vec![1.0, 5.0], vec![0.5, 5.0]])
            .unwrap();
        let ranks = nn_order(&set, DistanceMetric::Euclidean, true).unwrap();
        // Front is {(1, 5)}; normalized x distances are 1 and 0.5.
        assert_relative_eq!(ranks.score(0).unwrap(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(ranks.score(2).unwrap(), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn nn_interp_on_segment() {
        let set = PointSet::from_rows(vec![
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.5, 0.5],
            vec![0.0, 0.0],
        ])
        .unwrap();
        let ranks = nn_interp_order(&set, DistanceMetric::Euclidean, false).unwrap();
        // (0.5, 0.5) lies on the segment between the front points.
        assert_relative_eq!(ranks.score(2).unwrap(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            ranks.score(3).unwrap(),
            -1.0 / 2.0f64.sqrt(),
            epsilon = 1e-12
        );
        assert_eq!(ranks.score(0), Some(0.0));
    }

    #[test]
    fn nn_interp_rejects_non_planar() {
        let set = PointSet::from_rows(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            nn_interp_order(&set, DistanceMetric::Euclidean, false),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn softmax_hand_example() {
        let set = PointSet::from_rows(vec![vec![2.0], vec![1.0]]).unwrap();
        let ranks = global_rank(&set, None).unwrap();
        let r = transform_rewards(&ranks, RewardTransform::Softmax { gamma: 1.0 }).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(r[0], e * e / (e * e + e), epsilon = 1e-12);
        assert_relative_eq!(r[1], e / (e * e + e), epsilon = 1e-12);
    }

    #[test]
    fn softmax_uniform_on_uniform_ranks() {
        let set = PointSet::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]])
            .unwrap();
        let ranks = global_rank(&set, None).unwrap();
        let r = transform_rewards(&ranks, RewardTransform::Softmax { gamma: 2.0 }).unwrap();
        for &v in &r {
            assert_relative_eq!(v, 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn indicator_on_example_ranks() {
        let ranks = global_rank(&example_points(), None).unwrap();
        let r = transform_rewards(&ranks, RewardTransform::IndicatorOfMax).unwrap();
        assert_eq!(r, vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn raw_shifts_nn_scores_positive() {
        let set = PointSet::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 0.0]])
            .unwrap();
        let ranks = nn_order(&set, DistanceMetric::Euclidean, false).unwrap();
        let r = transform_rewards(&ranks, RewardTransform::Raw).unwrap();
        assert!(r.iter().all(|&v| v > 0.0));
        assert_relative_eq!(r[0], 1.0 + RAW_SHIFT_EPS, epsilon = 1e-12);
        assert_relative_eq!(r[2], RAW_SHIFT_EPS, epsilon = 1e-15);
    }

    #[test]
    fn raw_keeps_positive_scores() {
        let set = PointSet::from_rows(vec![vec![1.0], vec![2.0]]).unwrap();
        let ranks = global_rank(&set, None).unwrap();
        let r = transform_rewards(&ranks, RewardTransform::Raw).unwrap();
        assert_eq!(r, vec![1.0, 2.0]);
    }

    #[test]
    fn softmax_rejects_bad_gamma() {
        let set = PointSet::from_rows(vec![vec![1.0]]).unwrap();
        let ranks = global_rank(&set, None).unwrap();
        assert!(transform_rewards(&ranks, RewardTransform::Softmax { gamma: 0.0 }).is_err());
        assert!(
            transform_rewards(&ranks, RewardTransform::Softmax { gamma: f64::NAN }).is_err()
        );
    }
}
