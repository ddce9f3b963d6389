//! Flow conservation and Monte-Carlo agreement of the exact terminal
//! distribution.

use std::collections::HashMap;

use paretoflow_core::envs::objectives::GridObjective;
use paretoflow_core::envs::{Environment, EnumerableEnvironment, HyperGridEnv, NGramEnv};
use paretoflow_core::gflownet::{exact_terminal_distribution, GFNModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(d: usize, h: u16) -> HyperGridEnv {
    let objectives = (0..d).map(GridObjective::Coordinate).collect();
    HyperGridEnv::new(d, h, objectives).unwrap()
}

fn random_model(env: &impl Environment, seed: u64) -> GFNModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GFNModel::new(env, &mut rng).unwrap()
}

#[test]
fn conservation_on_h32_grids() {
    let env = grid(2, 32);
    for seed in 0..20 {
        let model = random_model(&env, seed);
        let dist = exact_terminal_distribution(&model, &env).unwrap();
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        assert!(
            (total - 1.0).abs() <= 1e-9,
            "seed {seed}: mass sums to {total}"
        );
        assert!(dist.iter().all(|(_, p)| *p >= 0.0));
    }
}

#[test]
fn conservation_on_ngram_env() {
    let env = NGramEnv::new("AC", 6, vec!["A".into()]).unwrap();
    let model = random_model(&env, 7);
    let dist = exact_terminal_distribution(&model, &env).unwrap();
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    assert!((total - 1.0).abs() <= 1e-9);
    // The empty string is not a valid terminal.
    assert!(dist.iter().all(|(s, _)| !s.is_empty()));
}

/// Monte-Carlo rollouts against the exact distribution on the 8x8 grid.
/// The policy is Markov, so rolling from cached per-state action
/// probabilities is an exact reformulation of trajectory sampling.
#[test]
fn monte_carlo_frequencies_within_4_sigma() {
    let env = grid(2, 8);
    let model = random_model(&env, 99);
    let exact: HashMap<Vec<u16>, f64> = exact_terminal_distribution(&model, &env)
        .unwrap()
        .into_iter()
        .collect();

    let probs: HashMap<Vec<u16>, Vec<f64>> = env
        .states_topological()
        .into_iter()
        .map(|s| {
            let lp = model.action_log_probs(&env, &s).unwrap();
            (s, lp.iter().map(|&l| l.exp()).collect())
        })
        .collect();

    let n = 100_000usize;
    let mut counts: HashMap<Vec<u16>, usize> = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let stop = env.stop_action();
    for _ in 0..n {
        let mut state = env.initial_state();
        loop {
            let p = &probs[&state];
            let r: f64 = rng.random();
            let mut acc = 0.0;
            let mut action = stop;
            for (a, &pa) in p.iter().enumerate() {
                acc += pa;
                if r < acc {
                    action = a;
                    break;
                }
            }
            if action == stop {
                *counts.entry(state).or_insert(0) += 1;
                break;
            }
            state = env.apply(&state, action);
        }
    }

    for (state, &p) in &exact {
        let observed = counts.get(state).copied().unwrap_or(0) as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (observed - p).abs() <= 4.0 * sigma.max(1e-12),
            "state {state:?}: exact {p}, observed {observed}, sigma {sigma}"
        );
    }
}

#[test]
fn deterministic_policy_gives_point_mass() {
    let env = grid(2, 4);
    let mut model = random_model(&env, 5);
    // Saturate the logits so the policy always increments axis 0, then
    // stops at the wall (stop must outrank axis 1 once axis 0 is masked).
    for layer in &mut model.policy.layers {
        layer.weights.iter_mut().for_each(|w| *w = 0.0);
        layer.bias.iter_mut().for_each(|b| *b = 0.0);
    }
    let last = model.policy.layers.last_mut().unwrap();
    last.bias[0] = 60.0;
    last.bias[1] = -60.0;

    let dist = exact_terminal_distribution(&model, &env).unwrap();
    let (argmax, mass) = dist
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    assert_eq!(argmax, &vec![4, 1]);
    assert!(*mass > 1.0 - 1e-9);
}
