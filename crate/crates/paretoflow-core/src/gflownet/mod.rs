//! Trajectory sampling, trajectory-balance training, the order-preserving
//! subset-KL baseline, and exact evaluation of the learned terminal
//! distribution on enumerable environments.
//!
//! The sampler is parametrized by a forward policy network and a learnable
//! scalar `log_z`; the backward policy is fixed uniform over parents, so
//! each step's backward log-probability is `-ln(parent count)` of the
//! child state and the terminating step contributes zero.

mod train;

pub use train::{
    train, OrderRule, StepRecord, TrainConfig, TrainLog, TrainMethod, REWARD_FLOOR,
};

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Environment, EnumerableEnvironment};
use crate::error::{Error, Result};
use crate::nn::{log_softmax_masked, DenseNet, ForwardCache, GradTape};
use crate::pareto::{pareto_front, PointSet};

/// A complete rollout: the states where the policy acted, the actions
/// taken (the last one terminating), per-step forward/backward
/// log-probabilities, and the terminal object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    pub actions: Vec<usize>,
    pub log_pf: Vec<f64>,
    pub log_pb: Vec<f64>,
    pub terminal: S,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_log_pf(&self) -> f64 {
        self.log_pf.iter().sum()
    }

    pub fn total_log_pb(&self) -> f64 {
        self.log_pb.iter().sum()
    }
}

/// Sampler model: policy network over action logits plus the learnable
/// log-partition scalar. The backward policy is fixed uniform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GFNModel {
    pub policy: DenseNet,
    pub log_z: f64,
}

impl GFNModel {
    /// Fresh model with the standard policy head: three hidden layers of
    /// 64 units with LeakyReLU, logits for every environment action.
    pub fn new<E: Environment, R: Rng>(env: &E, rng: &mut R) -> Result<Self> {
        let policy = DenseNet::new(
            env.input_dim(),
            &[64, 64, 64, env.num_actions()],
            crate::nn::Activation::LeakyRelu {
                slope: crate::nn::LEAKY_SLOPE,
            },
            rng,
        )?;
        Ok(Self { policy, log_z: 0.0 })
    }

    /// Masked action log-probabilities at a state.
    pub fn action_log_probs<E: Environment>(&self, env: &E, state: &E::State) -> Result<Vec<f64>> {
        let mut input = Vec::new();
        env.encode_state(state, &mut input);
        let mut logits = Vec::new();
        self.policy.forward_logits(&input, &mut logits)?;
        log_softmax_masked(&logits, &env.action_mask(state))
    }
}

/// Gradient contributions for one update: policy tape plus `log_z`.
#[derive(Debug, Clone)]
pub struct ModelGrad {
    pub policy: GradTape,
    pub d_log_z: f64,
}

impl ModelGrad {
    pub fn zeros_like(model: &GFNModel) -> Self {
        Self {
            policy: GradTape::zeros_like(&model.policy),
            d_log_z: 0.0,
        }
    }

    pub fn add_assign(&mut self, other: &ModelGrad) {
        self.policy.add_assign(&other.policy);
        self.d_log_z += other.d_log_z;
    }

    pub fn scale(&mut self, factor: f64) {
        self.policy.scale(factor);
        self.d_log_z *= factor;
    }
}

/// Deterministic RNG stream derived from `(seed, domain, index)`. Rollout
/// sampling, replay draws, evaluation draws, and model initialization
/// each use their own domain so results are reproducible regardless of
/// worker count.
pub fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) ^ index);
    rng
}

/// Rolls one trajectory forward from the initial state.
///
/// With probability `explore_eps` per step a uniformly random valid
/// action is substituted, but the recorded `log_pf` is always the
/// policy's own log-probability of the action actually taken (not the
/// mixture). The backward log-probability of a non-terminating step is
/// `-ln(parent count)` of the child; the terminating step contributes 0.
pub fn sample_trajectory<E: Environment, R: Rng>(
    model: &GFNModel,
    env: &E,
    rng: &mut R,
    explore_eps: f64,
) -> Result<Trajectory<E::State>> {
    let stop = env.stop_action();
    let mut state = env.initial_state();
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut log_pf = Vec::new();
    let mut log_pb = Vec::new();

    let mut input = Vec::new();
    let mut logits = Vec::new();
    loop {
        let mask = env.action_mask(&state);
        if !mask.iter().any(|&m| m) {
            return Err(Error::EnvContract(format!(
                "no valid action in non-terminal state {state:?}"
            )));
        }
        env.encode_state(&state, &mut input);
        model.policy.forward_logits(&input, &mut logits)?;
        let log_probs = log_softmax_masked(&logits, &mask)?;

        let action = if explore_eps > 0.0 && rng.random::<f64>() < explore_eps {
            let valid: Vec<usize> = mask
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| i)
                .collect();
            valid[rng.random_range(0..valid.len())]
        } else {
            sample_categorical(&log_probs, rng)
        };

        states.push(state.clone());
        actions.push(action);
        log_pf.push(log_probs[action]);
        if action == stop {
            log_pb.push(0.0);
            return Ok(Trajectory {
                terminal: state,
                states,
                actions,
                log_pf,
                log_pb,
            });
        }
        let child = env.apply(&state, action);
        let parents = env.parent_action_count(&child);
        debug_assert!(parents >= 1, "reached state must have a parent");
        log_pb.push(-(parents as f64).ln());
        state = child;
    }
}

fn sample_categorical<R: Rng>(log_probs: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_valid = 0;
    for (i, &lp) in log_probs.iter().enumerate() {
        if lp.is_finite() {
            acc += lp.exp();
            last_valid = i;
            if r < acc {
                return i;
            }
        }
    }
    last_valid
}

/// Per-step recomputation of the policy along a stored trajectory,
/// keeping forward caches for backprop.
struct StepEval {
    log_probs: Vec<f64>,
    cache: ForwardCache,
    mask: Vec<bool>,
}

fn replay_forward<E: Environment>(
    model: &GFNModel,
    env: &E,
    traj: &Trajectory<E::State>,
) -> Result<(f64, Vec<StepEval>)> {
    let mut evals = Vec::with_capacity(traj.len());
    let mut sum_log_pf = 0.0;
    let mut input = Vec::new();
    for (state, &action) in traj.states.iter().zip(&traj.actions) {
        let mask = env.action_mask(state);
        env.encode_state(state, &mut input);
        let (logits, cache) = model.policy.forward(&input)?;
        let log_probs = log_softmax_masked(&logits, &mask)?;
        sum_log_pf += log_probs[action];
        evals.push(StepEval {
            log_probs,
            cache,
            mask,
        });
    }
    Ok((sum_log_pf, evals))
}

/// Accumulates `coeff * d(log pf(action))/d(params)` for every step.
fn backprop_steps<E: Environment>(
    model: &GFNModel,
    traj: &Trajectory<E::State>,
    evals: &[StepEval],
    coeff: f64,
    tape: &mut GradTape,
) -> Result<()> {
    let mut d_logits = vec![0.0; model.policy.output_dim()];
    for (eval, &action) in evals.iter().zip(&traj.actions) {
        for (j, d) in d_logits.iter_mut().enumerate() {
            *d = if eval.mask[j] {
                let p = eval.log_probs[j].exp();
                coeff * (f64::from(u8::from(j == action)) - p)
            } else {
                0.0
            };
        }
        model.policy.backward(&eval.cache, &d_logits, tape)?;
    }
    Ok(())
}

/// Trajectory-balance loss and its gradients for one trajectory.
///
/// `loss = (log_z + sum log_pf - log_reward - sum log_pb)^2`, with the
/// forward log-probabilities recomputed under the current parameters so
/// gradients flow into the policy and `log_z`.
pub fn tb_loss<E: Environment>(
    model: &GFNModel,
    env: &E,
    traj: &Trajectory<E::State>,
    log_reward: f64,
) -> Result<(f64, ModelGrad)> {
    if !log_reward.is_finite() {
        return Err(Error::NonFinite {
            context: "log reward",
        });
    }
    let (sum_log_pf, evals) = replay_forward(model, env, traj)?;
    let delta = model.log_z + sum_log_pf - log_reward - traj.total_log_pb();
    let loss = delta * delta;

    let mut grad = ModelGrad::zeros_like(model);
    grad.d_log_z = 2.0 * delta;
    backprop_steps::<E>(model, traj, &evals, 2.0 * delta, &mut grad.policy)?;
    Ok((loss, grad))
}

/// Loss value only (used by finite-difference checks).
pub fn tb_loss_value<E: Environment>(
    model: &GFNModel,
    env: &E,
    traj: &Trajectory<E::State>,
    log_reward: f64,
) -> Result<f64> {
    let mut sum_log_pf = 0.0;
    let mut input = Vec::new();
    let mut logits = Vec::new();
    for (state, &action) in traj.states.iter().zip(&traj.actions) {
        env.encode_state(state, &mut input);
        model.policy.forward_logits(&input, &mut logits)?;
        let log_probs = log_softmax_masked(&logits, &env.action_mask(state))?;
        sum_log_pf += log_probs[action];
    }
    let delta = model.log_z + sum_log_pf - log_reward - traj.total_log_pb();
    Ok(delta * delta)
}

/// Order-preserving baseline loss over a batch of trajectories.
///
/// The batch terminals form the conditioning subset: the target places
/// uniform mass on the batch's Pareto-front entries and zero elsewhere,
/// while the model's conditional is the softmax over the batch of the
/// implied terminal log-rewards `log_z + sum log_pf - sum log_pb`. The
/// returned loss is `KL(target || model conditional)` with gradients
/// through the model terms.
///
/// `objectives` must hold one vector per batch entry, in batch order.
pub fn op_subset_loss<E: Environment>(
    model: &GFNModel,
    env: &E,
    batch: &[&Trajectory<E::State>],
    objectives: &PointSet,
) -> Result<(f64, ModelGrad)> {
    if batch.len() < 2 {
        return Err(Error::InvalidInput(
            "order-preserving loss needs a batch of at least 2".into(),
        ));
    }
    if objectives.len() != batch.len() {
        return Err(Error::InvalidInput(format!(
            "{} objective vectors for {} trajectories",
            objectives.len(),
            batch.len()
        )));
    }

    let front = pareto_front(objectives)?;
    let mut target = vec![0.0; batch.len()];
    let share = 1.0 / front.front.len() as f64;
    for &id in &front.front {
        let idx = objectives.index_of(id).expect("front id from set");
        target[idx] = share;
    }

    // Forward pass per trajectory; implied log-reward per terminal.
    use rayon::prelude::*;
    let forward: Vec<(f64, Vec<StepEval>)> = batch
        .par_iter()
        .map(|traj| {
            let (sum_log_pf, step_evals) = replay_forward(model, env, traj)?;
            Ok((model.log_z + sum_log_pf - traj.total_log_pb(), step_evals))
        })
        .collect::<Result<_>>()?;
    let implied: Vec<f64> = forward.iter().map(|(l, _)| *l).collect();

    // Model conditional over the batch.
    let max = implied.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = implied.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let log_total = total.ln() + max;
    let q: Vec<f64> = exps.iter().map(|e| e / total).collect();

    let mut loss = 0.0;
    for (i, &t) in target.iter().enumerate() {
        if t > 0.0 {
            let log_q = implied[i] - log_total;
            loss += t * (t.ln() - log_q);
        }
    }

    let tapes: Vec<GradTape> = batch
        .par_iter()
        .enumerate()
        .map(|(i, traj)| {
            let mut tape = GradTape::zeros_like(&model.policy);
            backprop_steps::<E>(model, traj, &forward[i].1, q[i] - target[i], &mut tape)?;
            Ok(tape)
        })
        .collect::<Result<_>>()?;
    let mut grad = ModelGrad::zeros_like(model);
    for (i, tape) in tapes.iter().enumerate() {
        grad.d_log_z += q[i] - target[i];
        grad.policy.add_assign(tape);
    }
    Ok((loss, grad))
}

/// Loss value only (used by finite-difference checks).
pub fn op_subset_loss_value<E: Environment>(
    model: &GFNModel,
    env: &E,
    batch: &[&Trajectory<E::State>],
    objectives: &PointSet,
) -> Result<f64> {
    if batch.len() < 2 {
        return Err(Error::InvalidInput(
            "order-preserving loss needs a batch of at least 2".into(),
        ));
    }
    let front = pareto_front(objectives)?;
    let mut target = vec![0.0; batch.len()];
    let share = 1.0 / front.front.len() as f64;
    for &id in &front.front {
        target[objectives.index_of(id).expect("front id")] = share;
    }
    let mut implied = Vec::with_capacity(batch.len());
    for traj in batch {
        let mut sum_log_pf = 0.0;
        let mut input = Vec::new();
        let mut logits = Vec::new();
        for (state, &action) in traj.states.iter().zip(&traj.actions) {
            env.encode_state(state, &mut input);
            model.policy.forward_logits(&input, &mut logits)?;
            sum_log_pf += log_softmax_masked(&logits, &env.action_mask(state))?[action];
        }
        implied.push(model.log_z + sum_log_pf - traj.total_log_pb());
    }
    let max = implied.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = implied.iter().map(|&l| (l - max).exp()).sum::<f64>().ln() + max;
    Ok(target
        .iter()
        .enumerate()
        .filter(|&(_, &t)| t > 0.0)
        .map(|(i, &t)| t * (t.ln() - (implied[i] - log_total)))
        .sum())
}

/// Hard cap on enumerable state spaces for the exact evaluation.
pub const MAX_EXACT_STATES: usize = 100_000;

/// Exact terminal distribution of the current policy by dynamic
/// programming over the environment DAG in topological order.
///
/// Returns `(terminal object, probability)` pairs covering every state
/// where termination is allowed; the probabilities sum to one up to
/// floating-point accumulation.
pub fn exact_terminal_distribution<E: EnumerableEnvironment>(
    model: &GFNModel,
    env: &E,
) -> Result<Vec<(E::State, f64)>> {
    let count = env.state_count();
    if count > MAX_EXACT_STATES {
        return Err(Error::StateSpaceTooLarge {
            states: count,
            limit: MAX_EXACT_STATES,
        });
    }
    let states = env.states_topological();
    let stop = env.stop_action();

    let mut flow: HashMap<E::State, f64> = HashMap::with_capacity(states.len());
    flow.insert(env.initial_state(), 1.0);

    let mut terminals = Vec::new();
    for state in &states {
        let mass = match flow.get(state) {
            Some(&m) if m > 0.0 => m,
            _ => continue,
        };
        let probs = model.action_log_probs(env, state)?;
        for (action, &lp) in probs.iter().enumerate() {
            if !lp.is_finite() {
                continue;
            }
            let p = mass * lp.exp();
            if action == stop {
                terminals.push((state.clone(), p));
            } else {
                *flow.entry(env.apply(state, action)).or_insert(0.0) += p;
            }
        }
    }
    Ok(terminals)
}

/// Samples `n` terminal objects greedily-stochastically (no exploration
/// mixing), using one derived RNG stream per candidate.
pub fn sample_candidates<E: Environment>(
    model: &GFNModel,
    env: &E,
    n: usize,
    seed: u64,
) -> Result<Vec<E::State>> {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, 2, i as u64);
            sample_trajectory(model, env, &mut rng, 0.0).map(|t| t.terminal)
        })
        .collect()
}
