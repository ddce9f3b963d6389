//! Cross-method front comparison: pool every method's generated front,
//! recompute the joint Pareto front, and count the survivors per method.

use serde::Serialize;

use paretoflow_core::pareto::{pareto_front, PointSet};

use crate::config::ConfigError;

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub label: String,
    /// Points on the method's own front (duplicates included).
    pub front_size: usize,
    /// Of those, how many survive on the pooled joint front.
    pub nondominated: usize,
}

/// Counts per-method non-dominated points after pooling all fronts.
pub fn compare_fronts(inputs: &[(String, PointSet)]) -> Result<Vec<CompareRow>, ConfigError> {
    if inputs.is_empty() {
        return Err(ConfigError::Invalid("nothing to compare".into()));
    }
    let mut pooled_rows: Vec<Vec<f64>> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    let mut front_sizes = vec![0usize; inputs.len()];
    for (which, (_, set)) in inputs.iter().enumerate() {
        let front = pareto_front(set).map_err(paretoflow_core::Error::from)?;
        front_sizes[which] = front.front.len();
        for &id in &front.front {
            let idx = set.index_of(id).expect("front id from set");
            pooled_rows.push(set.point(idx).values().to_vec());
            owner.push(which);
        }
    }
    let pooled = PointSet::from_rows(pooled_rows).map_err(paretoflow_core::Error::from)?;
    let joint = pareto_front(&pooled).map_err(paretoflow_core::Error::from)?;

    let mut surviving = vec![0usize; inputs.len()];
    for &id in &joint.front {
        surviving[owner[id]] += 1;
    }
    Ok(inputs
        .iter()
        .enumerate()
        .map(|(which, (label, _))| CompareRow {
            label: label.clone(),
            front_size: front_sizes[which],
            nondominated: surviving[which],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_method_keeps_its_whole_front() {
        let s = set(&[&[1.0, 0.5], &[0.0, 1.0], &[0.5, 0.2]]);
        let rows = compare_fronts(&[("only".into(), s)]).unwrap();
        assert_eq!(rows[0].front_size, 2);
        assert_eq!(rows[0].nondominated, 2);
    }

    #[test]
    fn dominated_method_counts_zero() {
        let weak = set(&[&[0.4, 0.4], &[0.1, 0.5]]);
        let strong = set(&[&[1.0, 1.0]]);
        let rows = compare_fronts(&[("weak".into(), weak), ("strong".into(), strong)]).unwrap();
        assert_eq!(rows[0].nondominated, 0);
        assert_eq!(rows[1].nondominated, 1);
    }

    #[test]
    fn identical_fronts_all_survive_by_the_tie_rule() {
        let a = set(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = set(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let rows = compare_fronts(&[("a".into(), a), ("b".into(), b)]).unwrap();
        assert_eq!(rows[0].nondominated, 2);
        assert_eq!(rows[1].nondominated, 2);
        let total: usize = rows.iter().map(|r| r.nondominated).sum();
        assert!(total >= 2); // duplicates can exceed the unique joint front
    }
}
