//! Pareto dominance tests, front extraction, and non-dominated sorting.
//!
//! Everything in this module uses the maximization convention: a point
//! dominates another when it is at least as good in every objective and
//! strictly better in at least one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stable integer identity of a point within a [`PointSet`].
pub type PointId = usize;

/// A point in d-dimensional objective space (maximization convention).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    values: Vec<f64>,
}

impl ObjectiveVector {
    /// Builds a vector, rejecting empty or non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("objective vector needs d >= 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "objective vector",
            });
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl AsRef<[f64]> for ObjectiveVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// An ordered collection of objective vectors with stable ids.
///
/// Ids default to insertion order and are preserved through every ranking
/// operation. An empty set is representable (with an explicit dimension) so
/// that callers such as the replay buffer can hand out empty front
/// snapshots; the per-operation preconditions reject empties where the
/// underlying math needs at least one point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    points: Vec<ObjectiveVector>,
    ids: Vec<PointId>,
}

impl PointSet {
    /// Builds a set from points, assigning ids by position.
    pub fn new(points: Vec<ObjectiveVector>) -> Result<Self> {
        let ids = (0..points.len()).collect();
        Self::with_ids(points, ids)
    }

    /// Builds a set with caller-provided ids (must be unique).
    pub fn with_ids(points: Vec<ObjectiveVector>, ids: Vec<PointId>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        if points.len() != ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} ids",
                points.len(),
                ids.len()
            )));
        }
        let dim = points[0].dim();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }
        let mut seen = ids.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate point ids".into()));
        }
        Ok(Self { dim, points, ids })
    }

    /// Builds a set from raw rows of objective values.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let points = rows
            .into_iter()
            .map(ObjectiveVector::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    /// An empty set with a declared dimension.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            ids: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[PointId] {
        &self.ids
    }

    pub fn points(&self) -> &[ObjectiveVector] {
        &self.points
    }

    /// Point at a positional index (not by id).
    pub fn point(&self, index: usize) -> &ObjectiveVector {
        &self.points[index]
    }

    pub fn id_at(&self, index: usize) -> PointId {
        self.ids[index]
    }

    /// Iterates `(id, point)` pairs in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (PointId, &ObjectiveVector)> {
        self.ids.iter().copied().zip(self.points.iter())
    }

    /// Positional index of an id, if present.
    pub fn index_of(&self, id: PointId) -> Option<usize> {
        self.ids.iter().position(|&i| i == id)
    }

    /// Sub-set keeping only the given positional indices (ids preserved).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        let ids = indices.iter().map(|&i| self.ids[i]).collect();
        PointSet::with_ids(points, ids)
    }
}

/// Result of a single Pareto-front extraction: ids on the front and the
/// dominated complement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontResult {
    pub front: Vec<PointId>,
    pub dominated: Vec<PointId>,
}

/// Layered non-dominated sort. When a `max_fronts` cutoff was requested
/// and points remained, they are returned in `trimmed` as one overflow
/// layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedFronts {
    pub layers: Vec<Vec<PointId>>,
    pub trimmed: Option<Vec<PointId>>,
}

impl SortedFronts {
    /// Total number of peeled layers (the trimmed overflow not included).
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }
}

/// True iff `a` Pareto dominates `b`: `a_i >= b_i` for all i and
/// `a_j > b_j` for some j. A point never dominates itself.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(dominates_values(a.values(), b.values()))
}

/// Dominance on raw slices; callers must have validated dimensions.
#[inline]
pub(crate) fn dominates_values(a: &[f64], b: &[f64]) -> bool {
    let mut strictly_better = false;
    for (&av, &bv) in a.iter().zip(b.iter()) {
        if av < bv {
            return false;
        }
        if av > bv {
            strictly_better = true;
        }
    }
    strictly_better
}

/// Positional indices of the non-dominated points among `rows`.
///
/// Ties do not dominate, so every duplicate of a front point is kept.
pub(crate) fn front_indices(rows: &[&[f64]]) -> Vec<usize> {
    let mut front = Vec::new();
    'outer: for (i, p) in rows.iter().enumerate() {
        for (j, q) in rows.iter().enumerate() {
            if i != j && dominates_values(q, p) {
                continue 'outer;
            }
        }
        front.push(i);
    }
    front
}

/// Extracts the Pareto front of a non-empty set.
pub fn pareto_front(xs: &PointSet) -> Result<FrontResult> {
    if xs.is_empty() {
        return Err(Error::EmptySet);
    }
    let rows: Vec<&[f64]> = xs.points().iter().map(|p| p.values()).collect();
    let on_front = front_indices(&rows);
    let mut is_front = vec![false; xs.len()];
    for &i in &on_front {
        is_front[i] = true;
    }
    let front = on_front.iter().map(|&i| xs.id_at(i)).collect();
    let dominated = (0..xs.len())
        .filter(|&i| !is_front[i])
        .map(|i| xs.id_at(i))
        .collect();
    Ok(FrontResult { front, dominated })
}

/// Peels successive Pareto fronts off the set.
///
/// Layer k is the Pareto front of the set minus layers `0..k`. With
/// `max_fronts` given, peeling stops after that many layers and whatever
/// remains is returned as a single trimmed overflow layer.
pub fn nondominated_sort(xs: &PointSet, max_fronts: Option<usize>) -> Result<SortedFronts> {
    if xs.is_empty() {
        return Err(Error::EmptySet);
    }
    if max_fronts == Some(0) {
        return Err(Error::InvalidInput("max_fronts must be >= 1".into()));
    }

    let mut remaining: Vec<usize> = (0..xs.len()).collect();
    let mut layers = Vec::new();
    while !remaining.is_empty() {
        if let Some(cap) = max_fronts {
            if layers.len() == cap {
                let trimmed = remaining.iter().map(|&i| xs.id_at(i)).collect();
                return Ok(SortedFronts {
                    layers,
                    trimmed: Some(trimmed),
                });
            }
        }
        let rows: Vec<&[f64]> = remaining.iter().map(|&i| xs.point(i).values()).collect();
        let local_front = front_indices(&rows);
        let mut in_front = vec![false; remaining.len()];
        for &k in &local_front {
            in_front[k] = true;
        }
        layers.push(local_front.iter().map(|&k| xs.id_at(remaining[k])).collect());
        remaining = remaining
            .iter()
            .enumerate()
            .filter(|&(k, _)| !in_front[k])
            .map(|(_, &i)| i)
            .collect();
    }
    Ok(SortedFronts {
        layers,
        trimmed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(values: &[f64]) -> ObjectiveVector {
        ObjectiveVector::new(values.to_vec()).unwrap()
    }

    /// The four points of the running two-objective example.
    fn example_points() -> PointSet {
        PointSet::from_rows(vec![
            vec![1.0, 1.0],   // x1
            vec![2.0, 1.2],   // x2
            vec![3.0, 1.4],   // x3
            vec![1.5, 2.0],   // x4
        ])
        .unwrap()
    }

    #[test]
    fn dominates_basic() {
        assert!(dominates(&ov(&[3.0, 1.4]), &ov(&[2.0, 1.2])).unwrap());
        assert!(!dominates(&ov(&[1.0, 2.0]), &ov(&[1.0, 2.0])).unwrap());
        // Incomparable pair in both directions.
        assert!(!dominates(&ov(&[2.0, 1.2]), &ov(&[1.5, 2.0])).unwrap());
        assert!(!dominates(&ov(&[1.5, 2.0]), &ov(&[2.0, 1.2])).unwrap());
    }

    #[test]
    fn dominates_dimension_mismatch() {
        let err = dominates(&ov(&[1.0]), &ov(&[1.0, 2.0]));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn objective_vector_rejects_nan() {
        assert!(ObjectiveVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(ObjectiveVector::new(vec![f64::INFINITY]).is_err());
        assert!(ObjectiveVector::new(vec![]).is_err());
    }

    #[test]
    fn front_of_example_set() {
        let set = example_points();
        let res = pareto_front(&set).unwrap();
        assert_eq!(res.front, vec![2, 3]); // x3, x4
        assert_eq!(res.dominated, vec![0, 1]);
    }

    #[test]
    fn front_singleton_and_scalar() {
        let single = PointSet::from_rows(vec![vec![4.0, 2.0]]).unwrap();
        assert_eq!(pareto_front(&single).unwrap().front, vec![0]);

        let scalar = PointSet::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(pareto_front(&scalar).unwrap().front, vec![2]);
    }

    #[test]
    fn front_keeps_duplicates() {
        let set = PointSet::from_rows(vec![
            vec![2.0, 2.0],
            vec![2.0, 2.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        let res = pareto_front(&set).unwrap();
        assert_eq!(res.front, vec![0, 1]);
    }

    #[test]
    fn front_rejects_empty() {
        let empty = PointSet::empty(2);
        assert!(matches!(pareto_front(&empty), Err(Error::EmptySet)));
    }

    #[test]
    fn sort_example_layers() {
        let set = example_points();
        let sorted = nondominated_sort(&set, None).unwrap();
        assert_eq!(sorted.layers, vec![vec![2, 3], vec![1], vec![0]]);
        assert!(sorted.trimmed.is_none());
    }

    #[test]
    fn sort_incomparable_single_layer() {
        let set = PointSet::from_rows(vec![
            vec![0.0, 3.0],
            vec![1.0, 2.0],
            vec![2.0, 1.0],
            vec![3.0, 0.0],
        ])
        .unwrap();
        let sorted = nondominated_sort(&set, None).unwrap();
        assert_eq!(sorted.layers.len(), 1);
        assert_eq!(sorted.layers[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn sort_chain_with_cutoff() {
        let set = PointSet::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let sorted = nondominated_sort(&set, Some(2)).unwrap();
        assert_eq!(sorted.layers, vec![vec![2], vec![1]]);
        assert_eq!(sorted.trimmed, Some(vec![0]));
    }

    #[test]
    fn sort_rejects_zero_cutoff() {
        let set = example_points();
        assert!(nondominated_sort(&set, Some(0)).is_err());
    }

    #[test]
    fn with_ids_validates() {
        let pts = vec![ov(&[1.0, 2.0]), ov(&[2.0, 1.0])];
        assert!(PointSet::with_ids(pts.clone(), vec![7, 7]).is_err());
        assert!(PointSet::with_ids(pts, vec![7]).is_err());
    }
}
