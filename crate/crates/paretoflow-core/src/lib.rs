//! Multi-objective black-box optimization with globally ordered rewards.
//!
//! The crate provides:
//!
//! - Pareto dominance tests, front extraction, and non-dominated sorting
//!   ([`pareto`]);
//! - global ordering functions consistent with dominance (Global Rank
//!   with trimming and a cheap front-membership variant, Nearest Neighbor
//!   Order with optional front interpolation) plus the reward transforms
//!   used as sampler targets ([`orders`]);
//! - a full evaluation-metric suite (hypervolume, R2, Pareto-clusters
//!   entropy, IGD/GD with positive-part variants, averaged Hausdorff,
//!   coverage, samples-in-front, top-k diversity) ([`metrics`]);
//! - a minimal dense policy network with reverse-mode differentiation and
//!   an adaptive-moment optimizer ([`nn`]);
//! - trajectory-balance and order-preserving-baseline training with exact
//!   dynamic-programming evaluation on enumerable environments
//!   ([`gflownet`]);
//! - the HyperGrid and N-Grams environments ([`envs`]);
//! - a replay buffer with incremental front tracking and Pareto-ratio
//!   batches ([`replay`]);
//! - a feasibility checker for subset-conditional target distributions,
//!   which exhibits the local-order conflicts that motivate global
//!   ordering ([`consistency`]).

pub mod consistency;
pub mod envs;
pub mod error;
pub mod gflownet;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod orders;
pub mod pareto;
pub mod replay;

pub use error::{Error, Result};
pub use pareto::{dominates, nondominated_sort, pareto_front, ObjectiveVector, PointId, PointSet};
