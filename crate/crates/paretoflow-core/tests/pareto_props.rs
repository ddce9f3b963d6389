//! Property suite for dominance and non-dominated sorting, checked
//! against an independently written brute-force pass.

use paretoflow_core::pareto::{dominates, nondominated_sort, pareto_front, PointSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Second-pass dominance written directly from the definition, kept
/// structurally separate from the library's implementation.
fn oracle_dominates(a: &[f64], b: &[f64]) -> bool {
    let all_geq = (0..a.len()).all(|i| a[i] >= b[i]);
    let any_gt = (0..a.len()).any(|i| a[i] > b[i]);
    all_geq && any_gt
}

/// All-pairs O(n^2) front filter.
fn oracle_front(rows: &[Vec<f64>]) -> Vec<usize> {
    (0..rows.len())
        .filter(|&i| {
            (0..rows.len()).all(|j| j == i || !oracle_dominates(&rows[j], &rows[i]))
        })
        .collect()
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    // A coarse lattice keeps ties and duplicates frequent.
                    if rng.random::<f64>() < 0.5 {
                        (rng.random_range(0..8) as f64) / 4.0
                    } else {
                        rng.random::<f64>()
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn front_matches_brute_force_on_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..300 {
        let n = rng.random_range(1..=200);
        let d = rng.random_range(1..=4);
        let rows = random_rows(&mut rng, n, d);
        let set = PointSet::from_rows(rows.clone()).unwrap();

        let mut got = pareto_front(&set).unwrap().front;
        got.sort_unstable();
        let expected = oracle_front(&rows);
        assert_eq!(got, expected);
    }
}

#[test]
fn transitivity_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut chains = 0usize;
    for _ in 0..20_000 {
        let d = rng.random_range(1..=4);
        let rows = random_rows(&mut rng, 3, d);
        let set = PointSet::from_rows(rows).unwrap();
        let (a, b, c) = (set.point(0), set.point(1), set.point(2));
        if dominates(a, b).unwrap() && dominates(b, c).unwrap() {
            chains += 1;
            assert!(dominates(a, c).unwrap());
        }
    }
    assert!(chains > 100, "too few dominating chains sampled: {chains}");
}

#[test]
fn every_deeper_layer_point_is_dominated_from_above() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..100 {
        let n = rng.random_range(2..=120);
        let d = rng.random_range(1..=4);
        let rows = random_rows(&mut rng, n, d);
        let set = PointSet::from_rows(rows).unwrap();
        let sorted = nondominated_sort(&set, None).unwrap();

        for k in 1..sorted.layers.len() {
            for &id in &sorted.layers[k] {
                let p = set.point(set.index_of(id).unwrap());
                let dominated_from_above = sorted.layers[..k].iter().any(|layer| {
                    layer.iter().any(|&above| {
                        dominates(set.point(set.index_of(above).unwrap()), p).unwrap()
                    })
                });
                assert!(dominated_from_above, "layer {k} id {id} undominated from above");
            }
        }
        // No point in a deeper layer dominates a shallower one.
        for k in 0..sorted.layers.len() {
            for j in 0..k {
                for &deep in &sorted.layers[k] {
                    for &shallow in &sorted.layers[j] {
                        let dp = set.point(set.index_of(deep).unwrap());
                        let sp = set.point(set.index_of(shallow).unwrap());
                        assert!(!dominates(dp, sp).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn layers_partition_the_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..100 {
        let n = rng.random_range(1..=150);
        let d = rng.random_range(1..=3);
        let set = PointSet::from_rows(random_rows(&mut rng, n, d)).unwrap();
        let cap = if n > 4 { Some(3) } else { None };
        let sorted = nondominated_sort(&set, cap).unwrap();
        let mut seen: Vec<usize> = sorted.layers.iter().flatten().copied().collect();
        if let Some(trimmed) = &sorted.trimmed {
            seen.extend_from_slice(trimmed);
        }
        seen.sort_unstable();
        let mut all: Vec<usize> = set.ids().to_vec();
        all.sort_unstable();
        assert_eq!(seen, all);
    }
}

proptest! {
    #[test]
    fn irreflexive_and_antisymmetric(
        values in prop::collection::vec(-10.0f64..10.0, 1..6),
        deltas in prop::collection::vec(-1.0f64..1.0, 1..6),
    ) {
        let d = values.len().min(deltas.len());
        let a = PointSet::from_rows(vec![values[..d].to_vec()]).unwrap();
        prop_assert!(!dominates(a.point(0), a.point(0)).unwrap());

        let other: Vec<f64> = values[..d]
            .iter()
            .zip(&deltas[..d])
            .map(|(v, e)| v + e)
            .collect();
        let b = PointSet::from_rows(vec![other]).unwrap();
        if dominates(a.point(0), b.point(0)).unwrap() {
            prop_assert!(!dominates(b.point(0), a.point(0)).unwrap());
        }
    }

    #[test]
    fn front_members_are_mutually_incomparable(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..40),
    ) {
        let set = PointSet::from_rows(rows).unwrap();
        let front = pareto_front(&set).unwrap().front;
        for &i in &front {
            for &j in &front {
                if i != j {
                    let pi = set.point(set.index_of(i).unwrap());
                    let pj = set.point(set.index_of(j).unwrap());
                    prop_assert!(!dominates(pi, pj).unwrap());
                }
            }
        }
    }
}
