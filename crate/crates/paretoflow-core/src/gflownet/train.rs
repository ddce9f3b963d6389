//! The training loop: roll fresh trajectories, keep the replay buffer
//! fed, score terminals with a global order, and take one optimizer step
//! per batch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::gflownet::{
    op_subset_loss, sample_trajectory, stream_rng, tb_loss, GFNModel, ModelGrad, Trajectory,
};
use crate::nn::AdamState;
use crate::orders::{
    cheap_global_rank, cheap_rank_against, global_rank, nn_interp_order, nn_order,
    transform_rewards, DistanceMetric, RankAssignment, RewardTransform,
};
use crate::pareto::{pareto_front, PointSet};
use crate::replay::{ReplayBuffer, ReplayConfig};

/// Transformed rewards are clamped to at least this value before the
/// logarithm; the indicator transform yields exact zeros otherwise.
pub const REWARD_FLOOR: f64 = 1e-10;

/// Which global order scores a training batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderRule {
    GlobalRank { max_rank: Option<usize> },
    /// Front-membership scoring; against the replay buffer's running
    /// front when a buffer is active, otherwise within the batch.
    CheapGlobalRank,
    NearestNeighbor {
        interpolate: bool,
        metric: DistanceMetric,
        normalize: bool,
    },
}

impl OrderRule {
    fn assign(&self, batch: &PointSet, snapshot: Option<&PointSet>) -> Result<RankAssignment> {
        match *self {
            OrderRule::GlobalRank { max_rank } => global_rank(batch, max_rank),
            OrderRule::CheapGlobalRank => match snapshot {
                Some(front) => cheap_rank_against(batch, front),
                None => cheap_global_rank(batch),
            },
            OrderRule::NearestNeighbor {
                interpolate,
                metric,
                normalize,
            } => {
                if interpolate {
                    nn_interp_order(batch, metric, normalize)
                } else {
                    nn_order(batch, metric, normalize)
                }
            }
        }
    }
}

/// Loss family driving the updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainMethod {
    /// Trajectory balance against transformed global-order rewards.
    OrderReward {
        rule: OrderRule,
        transform: RewardTransform,
    },
    /// The order-preserving subset-KL baseline.
    OrderPreservingBaseline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// `log_z` trains at `learning_rate * z_lr_ratio`.
    pub z_lr_ratio: f64,
    /// Per-step probability of substituting a uniform valid action.
    pub explore_eps: f64,
    pub seed: u64,
    /// Emit a metric snapshot every this many steps (0 disables).
    pub snapshot_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            batch_size: 128,
            learning_rate: 0.01,
            z_lr_ratio: 10.0,
            explore_eps: 0.05,
            seed: 0,
            snapshot_every: 0,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub front_size: usize,
    pub log_z: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<StepRecord>,
}

impl TrainLog {
    /// Writes the log as JSON-lines, one record per step.
    pub fn write_jsonl<W: std::io::Write>(&self, mut writer: W) -> Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut writer, record)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Trains the model in place and returns the per-step log.
///
/// Each step samples a fresh on-policy batch, feeds the replay buffer
/// when one is configured, draws the training batch (from the buffer once
/// warmed up, Pareto-ratio composed), scores terminals with the
/// configured order, and applies one adaptive-moment update. Identical
/// seeds and configurations produce identical logs and parameters
/// regardless of the worker count.
pub fn train<E: Environment>(
    model: &mut GFNModel,
    env: &E,
    method: &TrainMethod,
    cfg: &TrainConfig,
    replay: Option<ReplayConfig>,
    mut snapshot_fn: Option<&mut dyn FnMut(&GFNModel, usize) -> serde_json::Value>,
) -> Result<TrainLog> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be >= 1".into()));
    }
    let mut buffer: Option<ReplayBuffer<Trajectory<E::State>>> = match replay {
        Some(rc) => Some(ReplayBuffer::new(rc)?),
        None => None,
    };
    let mut optimizer = AdamState::new(&model.policy);
    let mut replay_rng = stream_rng(cfg.seed, 1, 0);
    let mut log = TrainLog::default();

    for step in 0..cfg.steps {
        // Fresh on-policy rollouts, one derived RNG stream each.
        let snapshot_model: &GFNModel = model;
        let base = (step * cfg.batch_size) as u64;
        let fresh: Vec<(Trajectory<E::State>, Vec<f64>)> = (0..cfg.batch_size)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(cfg.seed, 0, base + i as u64);
                let traj = sample_trajectory(snapshot_model, env, &mut rng, cfg.explore_eps)?;
                let objectives = env.objectives(&traj.terminal)?;
                Ok((traj, objectives.values().to_vec()))
            })
            .collect::<Result<_>>()?;

        if let Some(buf) = buffer.as_mut() {
            for (traj, obj) in &fresh {
                let ov = crate::pareto::ObjectiveVector::new(obj.clone())?;
                buf.insert(traj.clone(), ov);
            }
        }

        // Training batch: buffer-sampled after warm-up, fresh otherwise.
        let mut batch: Vec<(&Trajectory<E::State>, Vec<f64>)> = Vec::with_capacity(cfg.batch_size);
        let mut from_buffer = false;
        if let Some(buf) = buffer.as_ref() {
            if let Some(entries) = buf.sample_batch(cfg.batch_size, &mut replay_rng) {
                for e in entries {
                    batch.push((&e.payload, e.objectives.values().to_vec()));
                }
                from_buffer = true;
            }
        }
        if !from_buffer {
            for (traj, obj) in &fresh {
                batch.push((traj, obj.clone()));
            }
        }

        let objective_rows: Vec<Vec<f64>> = batch.iter().map(|(_, o)| o.clone()).collect();
        let batch_set = PointSet::from_rows(objective_rows)?;
        let front_size = pareto_front(&batch_set)?.front.len();
        let trajectories: Vec<&Trajectory<E::State>> = batch.iter().map(|(t, _)| *t).collect();

        let (loss, grad) = match method {
            TrainMethod::OrderReward { rule, transform } => {
                let snapshot = buffer.as_ref().map(|b| b.front_snapshot());
                let ranks = rule.assign(&batch_set, snapshot.as_ref())?;
                let rewards = transform_rewards(&ranks, *transform)?;
                let contributions: Vec<(f64, ModelGrad)> = trajectories
                    .par_iter()
                    .zip(rewards.par_iter())
                    .map(|(&traj, &reward)| {
                        tb_loss(snapshot_model, env, traj, reward.max(REWARD_FLOOR).ln())
                    })
                    .collect::<Result<_>>()?;
                let mut total = ModelGrad::zeros_like(snapshot_model);
                let mut loss_sum = 0.0;
                for (l, g) in &contributions {
                    loss_sum += l;
                    total.add_assign(g);
                }
                let scale = 1.0 / contributions.len() as f64;
                total.scale(scale);
                (loss_sum * scale, total)
            }
            TrainMethod::OrderPreservingBaseline => {
                op_subset_loss(snapshot_model, env, &trajectories, &batch_set)?
            }
        };

        drop(trajectories);
        drop(batch);
        optimizer.step(
            &mut model.policy,
            &grad.policy,
            cfg.learning_rate,
            Some((
                &mut model.log_z,
                grad.d_log_z,
                cfg.learning_rate * cfg.z_lr_ratio,
            )),
        );

        let snapshot = match (&mut snapshot_fn, cfg.snapshot_every) {
            (Some(f), every) if every > 0 && (step + 1) % every == 0 => Some(f(model, step)),
            _ => None,
        };
        log.records.push(StepRecord {
            step,
            loss,
            front_size,
            log_z: model.log_z,
            snapshot,
        });
    }
    Ok(log)
}
