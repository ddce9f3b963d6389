//! Evaluation metrics for candidate sets against a reference Pareto front.
//!
//! Conventions follow the rest of the crate: objectives are maximized, the
//! reference point for hypervolume sits below the front, and distance-type
//! metrics average *squared* per-point distances. The `plus` flag on the
//! generational distances switches between the plain Euclidean distance
//! and the positive-part distance `max(p_i - s_i, 0)` that does not
//! penalize candidates exceeding the reference front.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{ObjectiveVector, PointSet};

fn check_dims(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Squared distance from reference point `p` to candidate `s`.
///
/// `plus` keeps only the per-coordinate shortfall `max(p_i - s_i, 0)`, so
/// a candidate that exceeds `p` in a coordinate pays nothing there.
#[inline]
fn sq_dist(p: &[f64], s: &[f64], plus: bool) -> f64 {
    p.iter()
        .zip(s)
        .map(|(&pv, &sv)| {
            let d = if plus { (pv - sv).max(0.0) } else { pv - sv };
            d * d
        })
        .sum()
}

/// Inverted generational distance: mean over reference points of the
/// squared (positive-part) distance to the nearest candidate.
pub fn igd_plus(candidates: &PointSet, reference: &PointSet, plus: bool) -> Result<f64> {
    check_dims(candidates, reference)?;
    let total: f64 = reference
        .points()
        .iter()
        .map(|p| {
            candidates
                .points()
                .iter()
                .map(|s| sq_dist(p.values(), s.values(), plus))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / reference.len() as f64)
}

/// Generational distance: mean over candidates of the squared
/// (positive-part) distance to the nearest reference point.
pub fn gd_plus(candidates: &PointSet, reference: &PointSet, plus: bool) -> Result<f64> {
    check_dims(candidates, reference)?;
    let total: f64 = candidates
        .points()
        .iter()
        .map(|s| {
            reference
                .points()
                .iter()
                .map(|p| sq_dist(p.values(), s.values(), plus))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / candidates.len() as f64)
}

/// Averaged Hausdorff distance: `max(GD, IGD)` in the plain or plus form.
pub fn hausdorff(candidates: &PointSet, reference: &PointSet, plus: bool) -> Result<f64> {
    let gd = gd_plus(candidates, reference, plus)?;
    let igd = igd_plus(candidates, reference, plus)?;
    Ok(gd.max(igd))
}

/// Hypervolume dominated by `candidates` relative to reference point `r`
/// (maximization; `r` below the front). Exact for two and three
/// objectives; larger dimensions are rejected.
pub fn hypervolume(candidates: &PointSet, r: &ObjectiveVector) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::EmptySet);
    }
    if candidates.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: candidates.dim(),
            got: r.dim(),
        });
    }
    let d = r.dim();
    if d > 3 {
        return Err(Error::Unsupported(format!(
            "exact hypervolume implemented for d <= 3, got d = {d}"
        )));
    }
    let rv = r.values();
    // Boxes with any side at or below the reference collapse to measure
    // zero and are dropped.
    let pts: Vec<&[f64]> = candidates
        .points()
        .iter()
        .map(|p| p.values())
        .filter(|p| p.iter().zip(rv).all(|(&pv, &rv)| pv > rv))
        .collect();
    if pts.is_empty() {
        return Ok(0.0);
    }
    Ok(match d {
        1 => pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max) - rv[0],
        2 => hv_2d(&pts, rv),
        _ => hv_3d(&pts, rv),
    })
}

/// Sweep from the largest first objective down, adding each strictly
/// higher step of the staircase.
fn hv_2d(pts: &[&[f64]], r: &[f64]) -> f64 {
    let mut sorted: Vec<&[f64]> = pts.to_vec();
    sorted.sort_by(|a, b| b[0].partial_cmp(&a[0]).unwrap_or(std::cmp::Ordering::Equal));
    let mut best_y = r[1];
    let mut area = 0.0;
    for p in sorted {
        if p[1] > best_y {
            area += (p[0] - r[0]) * (p[1] - best_y);
            best_y = p[1];
        }
    }
    area
}

/// Slab decomposition on the third objective: between consecutive cut
/// heights the dominated region is a 2-D union over the points reaching
/// that high.
fn hv_3d(pts: &[&[f64]], r: &[f64]) -> f64 {
    let mut zs: Vec<f64> = pts.iter().map(|p| p[2]).collect();
    zs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    zs.dedup();

    let mut volume = 0.0;
    for (k, &z) in zs.iter().enumerate() {
        let floor = if k + 1 < zs.len() { zs[k + 1] } else { r[2] };
        let height = z - floor;
        if height <= 0.0 {
            continue;
        }
        let slab: Vec<&[f64]> = pts.iter().filter(|p| p[2] >= z).copied().collect();
        volume += height * hv_2d(&slab, r);
    }
    volume
}

/// Pareto-clusters entropy of generated front points against a reference
/// front.
///
/// Every generated point is assigned to its nearest reference point
/// (Euclidean, axes min-max normalized over both sets together) and the
/// entropy of cluster occupancy is taken with the reference size as the
/// normalizer: `-sum_j (c_j/|P|) ln(c_j/|P|)` over non-empty clusters.
/// An empty generated set carries zero entropy.
pub fn pc_entropy(reference: &PointSet, generated: &PointSet) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptySet);
    }
    if generated.is_empty() {
        return Ok(0.0);
    }
    if reference.dim() != generated.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: generated.dim(),
        });
    }
    let d = reference.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in reference.points().iter().chain(generated.points()) {
        for (i, &v) in p.values().iter().enumerate() {
            lo[i] = lo[i].min(v);
            hi[i] = hi[i].max(v);
        }
    }
    let norm = |p: &ObjectiveVector| -> Vec<f64> {
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
    };
    let ref_rows: Vec<Vec<f64>> = reference.points().iter().map(norm).collect();

    let mut counts = vec![0usize; reference.len()];
    for g in generated.points() {
        let gr = norm(g);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, p) in ref_rows.iter().enumerate() {
            let dist = sq_dist(p, &gr, false);
            if dist < best_d {
                best_d = dist;
                best = j;
            }
        }
        counts[best] += 1;
    }

    let n = reference.len() as f64;
    let ent = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n;
            -q * q.ln()
        })
        .sum();
    Ok(ent)
}

/// R2 indicator against weight vectors `lambda` and utopian point `z`.
///
/// `(1/|L|) sum_l min_s max_i l_i * |z_i - s_i|`; lower is better.
pub fn r2_indicator(
    candidates: &PointSet,
    lambda: &[Vec<f64>],
    z: &ObjectiveVector,
) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::EmptySet);
    }
    if lambda.is_empty() {
        return Err(Error::InvalidInput("empty reference vector set".into()));
    }
    let d = candidates.dim();
    if z.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.dim(),
        });
    }
    for l in lambda {
        if l.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: l.len(),
            });
        }
        if l.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidInput("negative reference weight".into()));
        }
    }
    let total: f64 = lambda
        .iter()
        .map(|l| {
            candidates
                .points()
                .iter()
                .map(|s| {
                    l.iter()
                        .zip(z.values())
                        .zip(s.values())
                        .map(|((&w, &zv), &sv)| w * (zv - sv).abs())
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / lambda.len() as f64)
}

/// Fraction of reference-front points matched by some candidate within
/// an L-infinity tolerance.
pub fn coverage(reference: &PointSet, candidates: &PointSet, tol: f64) -> Result<f64> {
    check_dims(candidates, reference)?;
    let hit = reference
        .points()
        .iter()
        .filter(|p| {
            candidates
                .points()
                .iter()
                .any(|s| linf_close(p.values(), s.values(), tol))
        })
        .count();
    Ok(hit as f64 / reference.len() as f64)
}

/// Fraction of candidates lying on the reference front within an
/// L-infinity tolerance.
pub fn samples_in_front(reference: &PointSet, candidates: &PointSet, tol: f64) -> Result<f64> {
    check_dims(candidates, reference)?;
    let hit = candidates
        .points()
        .iter()
        .filter(|s| {
            reference
                .points()
                .iter()
                .any(|p| linf_close(p.values(), s.values(), tol))
        })
        .count();
    Ok(hit as f64 / candidates.len() as f64)
}

/// Default match tolerance for [`coverage`] / [`samples_in_front`]
/// (effectively exact match on discrete environments).
pub const MATCH_TOL: f64 = 1e-9;

#[inline]
fn linf_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(&x, &y)| (x - y).abs() <= tol)
}

/// Mean pairwise distance among the k best-scored samples.
///
/// Ties at the score cutoff break by insertion order; the object distance
/// is environment-supplied (edit distance for sequences, L1 for grid
/// states). Fewer than two selected samples carry zero diversity.
pub fn topk_diversity<T, F>(samples: &[T], scores: &[f64], k: usize, mut dist: F) -> Result<f64>
where
    F: FnMut(&T, &T) -> f64,
{
    if samples.len() != scores.len() {
        return Err(Error::InvalidInput(format!(
            "{} samples but {} scores",
            samples.len(),
            scores.len()
        )));
    }
    let k = k.min(samples.len());
    if k < 2 {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    // Stable sort keeps insertion order among equal scores.
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let top = &order[..k];
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, &a) in top.iter().enumerate() {
        for &b in &top[i + 1..] {
            total += dist(&samples[a], &samples[b]);
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Uniformly spread nonnegative weight vectors on the probability simplex.
///
/// Two objectives use 101 vectors `(i/100, 1-i/100)`; three use the
/// simplex lattice with step 1/13; higher dimensions pick the smallest
/// lattice with at least 100 vectors.
pub fn uniform_weight_vectors(d: usize) -> Vec<Vec<f64>> {
    match d {
        0 => Vec::new(),
        1 => vec![vec![1.0]],
        2 => (0..=100)
            .map(|i| vec![i as f64 / 100.0, (100 - i) as f64 / 100.0])
            .collect(),
        3 => simplex_lattice(3, 13),
        _ => {
            let mut h = 1;
            while simplex_lattice_len(d, h) < 100 {
                h += 1;
            }
            simplex_lattice(d, h)
        }
    }
}

fn simplex_lattice_len(d: usize, h: usize) -> usize {
    // C(h + d - 1, d - 1)
    let mut n = 1usize;
    for i in 0..d - 1 {
        n = n * (h + i + 1) / (i + 1);
    }
    n
}

fn simplex_lattice(d: usize, h: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; d];
    fill_lattice(d, h, 0, h, &mut current, &mut out);
    out
}

fn fill_lattice(
    d: usize,
    h: usize,
    axis: usize,
    remaining: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<f64>>,
) {
    if axis == d - 1 {
        current[axis] = remaining;
        out.push(current.iter().map(|&c| c as f64 / h as f64).collect());
        return;
    }
    for c in 0..=remaining {
        current[axis] = c;
        fill_lattice(d, h, axis + 1, remaining - c, current, out);
    }
}

/// Reference set used when the true front is unknown: a discretization of
/// the upper faces of the unit hypercube, `grid` points per axis, with
/// exact duplicates removed.
pub fn hypercube_face_reference(d: usize, grid: usize) -> Result<PointSet> {
    if d < 2 || grid < 2 {
        return Err(Error::InvalidInput(
            "face reference needs d >= 2 and grid >= 2".into(),
        ));
    }
    let steps: Vec<f64> = (0..grid).map(|i| i as f64 / (grid - 1) as f64).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for face in 0..d {
        let mut coords = vec![0usize; d - 1];
        loop {
            let mut row = Vec::with_capacity(d);
            let mut it = coords.iter();
            for axis in 0..d {
                if axis == face {
                    row.push(1.0);
                } else {
                    row.push(steps[*it.next().unwrap()]);
                }
            }
            rows.push(row);
            // Advance the mixed-radix counter over the free axes.
            let mut carry = true;
            for c in coords.iter_mut() {
                if carry {
                    *c += 1;
                    if *c == grid {
                        *c = 0;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
    }
    rows.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    rows.dedup();
    PointSet::from_rows(rows)
}

/// Echo of the configuration a report was computed under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricConfig {
    pub ref_point: Vec<f64>,
    pub utopian: Vec<f64>,
    pub n_reference_vectors: usize,
    pub coverage_tol: f64,
    pub top_k: usize,
    /// Per-objective (min, max) the raw values were rescaled with, when
    /// the caller normalized before computing metrics.
    pub normalization: Option<Vec<(f64, f64)>>,
}

/// Named metric values for one candidate set against one reference front.
///
/// Both the positive-part and plain variants of the generational
/// distances are reported; `top_k_diversity` stays empty unless the
/// caller supplied an object distance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub hv: f64,
    pub r2: f64,
    pub pc_ent: f64,
    pub igd_plus: f64,
    pub igd: f64,
    pub gd_plus: f64,
    pub gd: f64,
    pub d_h: f64,
    pub d_h_plus: f64,
    pub coverage: f64,
    pub samples_in_front: f64,
    pub top_k_diversity: Option<f64>,
    pub config: MetricConfig,
}

impl MetricReport {
    /// CSV header matching [`MetricReport::csv_row`].
    pub fn csv_header() -> &'static [&'static str] {
        &[
            "hv",
            "r2",
            "pc_ent",
            "igd_plus",
            "igd",
            "gd_plus",
            "gd",
            "d_h",
            "d_h_plus",
            "coverage",
            "samples_in_front",
            "top_k_diversity",
        ]
    }

    pub fn csv_row(&self) -> Vec<String> {
        let fmt = |v: f64| format!("{v}");
        vec![
            fmt(self.hv),
            fmt(self.r2),
            fmt(self.pc_ent),
            fmt(self.igd_plus),
            fmt(self.igd),
            fmt(self.gd_plus),
            fmt(self.gd),
            fmt(self.d_h),
            fmt(self.d_h_plus),
            fmt(self.coverage),
            fmt(self.samples_in_front),
            self.top_k_diversity.map(fmt).unwrap_or_default(),
        ]
    }
}

/// Computes the full report for `candidates` against `reference`.
///
/// `pc_entropy` is taken over the Pareto front of the candidates, the
/// other metrics over the full candidate set.
pub fn compute_report(
    candidates: &PointSet,
    reference: &PointSet,
    config: MetricConfig,
) -> Result<MetricReport> {
    check_dims(candidates, reference)?;
    let r = ObjectiveVector::new(config.ref_point.clone())?;
    let z = ObjectiveVector::new(config.utopian.clone())?;
    let lambda = uniform_weight_vectors(candidates.dim());

    let front = crate::pareto::pareto_front(candidates)?;
    // The candidate front is used as a point *set*: sampled duplicates
    // would otherwise swamp the cluster counts.
    let mut front_rows: Vec<Vec<f64>> = front
        .front
        .iter()
        .map(|&id| {
            let idx = candidates.index_of(id).expect("front id from set");
            candidates.point(idx).values().to_vec()
        })
        .collect();
    front_rows.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    front_rows.dedup();
    let candidate_front = PointSet::from_rows(front_rows)?;

    Ok(MetricReport {
        hv: hypervolume(candidates, &r)?,
        r2: r2_indicator(candidates, &lambda, &z)?,
        pc_ent: pc_entropy(reference, &candidate_front)?,
        igd_plus: igd_plus(candidates, reference, true)?,
        igd: igd_plus(candidates, reference, false)?,
        gd_plus: gd_plus(candidates, reference, true)?,
        gd: gd_plus(candidates, reference, false)?,
        d_h: hausdorff(&candidate_front, reference, false)?,
        d_h_plus: hausdorff(&candidate_front, reference, true)?,
        coverage: coverage(reference, candidates, config.coverage_tol)?,
        samples_in_front: samples_in_front(reference, candidates, config.coverage_tol)?,
        top_k_diversity: None,
        config: MetricConfig {
            n_reference_vectors: lambda.len(),
            ..config
        },
    })
}
