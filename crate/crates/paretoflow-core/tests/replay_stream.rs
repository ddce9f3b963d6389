//! The incremental front must equal a from-scratch front recomputation
//! after arbitrary insert streams.

use paretoflow_core::pareto::{pareto_front, ObjectiveVector, PointSet};
use paretoflow_core::replay::{ReplayBuffer, ReplayConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn incremental_front_matches_recomputation_on_long_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut buf: ReplayBuffer<usize> = ReplayBuffer::new(ReplayConfig {
        capacity: 2_000,
        warmup: 0,
        pareto_ratio: 0.1,
        min_pareto_k: 1,
    })
    .unwrap();

    for i in 0..10_000 {
        let d = 3;
        let values: Vec<f64> = (0..d)
            .map(|_| {
                if rng.random::<f64>() < 0.3 {
                    (rng.random_range(0..6) as f64) / 3.0
                } else {
                    rng.random::<f64>() * 2.0
                }
            })
            .collect();
        buf.insert(i, ObjectiveVector::new(values).unwrap());

        if i % 500 == 0 || i + 1 == 10_000 {
            let rows: Vec<Vec<f64>> = buf
                .entries()
                .iter()
                .map(|e| e.objectives.values().to_vec())
                .collect();
            let set = PointSet::from_rows(rows).unwrap();
            let expected = pareto_front(&set).unwrap();
            let incremental: Vec<usize> = buf
                .entries()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.on_front())
                .map(|(pos, _)| pos)
                .collect();
            assert_eq!(incremental, expected.front, "diverged at insert {i}");
        }
    }
}

#[test]
fn eviction_never_removes_front_while_nonfront_exists() {
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let mut buf: ReplayBuffer<usize> = ReplayBuffer::new(ReplayConfig {
        capacity: 64,
        warmup: 0,
        pareto_ratio: 0.2,
        min_pareto_k: 1,
    })
    .unwrap();
    for i in 0..5_000 {
        let front_before: Vec<u64> = buf
            .entries()
            .iter()
            .filter(|e| e.on_front())
            .map(|e| e.stamp)
            .collect();
        let was_full = buf.len() == 64;
        let all_front = front_before.len() == buf.len();
        let values = vec![rng.random::<f64>(), rng.random::<f64>()];
        buf.insert(i, ObjectiveVector::new(values).unwrap());

        if was_full && !all_front {
            // Every former front stamp must still be stored.
            let stamps: Vec<u64> = buf.entries().iter().map(|e| e.stamp).collect();
            for s in front_before {
                assert!(stamps.contains(&s), "front stamp {s} evicted at {i}");
            }
        }
    }
}

#[test]
fn batch_composition_exact_for_ablation_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    for ratio in [0.1, 0.2, 0.4] {
        for batch_size in [32usize, 64, 128] {
            let mut buf: ReplayBuffer<usize> = ReplayBuffer::new(ReplayConfig {
                capacity: 10_000,
                warmup: 0,
                pareto_ratio: ratio,
                min_pareto_k: 1,
            })
            .unwrap();
            // A single undominated entry plus dominated filler.
            buf.insert(0, ObjectiveVector::new(vec![9.0, 9.0]).unwrap());
            for i in 1..500 {
                let values = vec![rng.random::<f64>(), rng.random::<f64>()];
                buf.insert(i, ObjectiveVector::new(values).unwrap());
            }
            let quota = buf.front_quota(batch_size);
            assert_eq!(quota, ((ratio * batch_size as f64).ceil() as usize).max(1));
            let batch = buf.sample_batch(batch_size, &mut rng).unwrap();
            assert_eq!(batch.len(), batch_size);
            assert!(batch[..quota].iter().all(|e| e.on_front()));
        }
    }
}
