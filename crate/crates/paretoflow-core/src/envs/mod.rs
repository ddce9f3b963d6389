//! Sequential construction environments: state spaces, action masks,
//! transitions, and objective evaluation.
//!
//! Every environment builds objects by applying actions from a fixed
//! initial state; the last action index is always the terminating action.
//! Transitions are pure functions of `(state, action)` and environments
//! are immutable after construction.

mod hypergrid;
mod ngrams;
pub mod objectives;

pub use hypergrid::HyperGridEnv;
pub use ngrams::{edit_distance, NGramEnv};

use std::fmt::Debug;
use std::hash::Hash;

use crate::error::Result;
use crate::pareto::ObjectiveVector;

/// A discrete construction environment.
pub trait Environment: Sync {
    type State: Clone + Eq + Hash + Debug + Send + Sync;

    fn initial_state(&self) -> Self::State;

    /// Total number of actions including the terminating action, which is
    /// always the last index.
    fn num_actions(&self) -> usize;

    fn stop_action(&self) -> usize {
        self.num_actions() - 1
    }

    /// Valid-action mask for a state (length `num_actions`).
    fn action_mask(&self, state: &Self::State) -> Vec<bool>;

    /// Applies a non-terminating action.
    fn apply(&self, state: &Self::State, action: usize) -> Self::State;

    /// Number of non-terminating actions that can lead into `state`.
    /// Used for the uniform backward policy; the terminal marker itself
    /// always has exactly one parent (the stop transition).
    fn parent_action_count(&self, state: &Self::State) -> usize;

    /// Length of the policy input encoding.
    fn input_dim(&self) -> usize;

    /// Writes the policy input encoding of `state` into `out`.
    fn encode_state(&self, state: &Self::State, out: &mut Vec<f64>);

    fn objective_dim(&self) -> usize;

    /// Objective vector of a terminal object.
    fn objectives(&self, state: &Self::State) -> Result<ObjectiveVector>;

    /// Distance between terminal objects (diversity metric).
    fn object_distance(&self, a: &Self::State, b: &Self::State) -> f64;

    /// Human-readable rendering of a terminal object.
    fn state_label(&self, state: &Self::State) -> String {
        format!("{state:?}")
    }
}

/// Environments small enough to enumerate exhaustively.
pub trait EnumerableEnvironment: Environment {
    /// Number of reachable non-terminal states.
    fn state_count(&self) -> usize;

    /// All reachable non-terminal states in a topological order of the
    /// transition DAG (every state appears after all of its parents).
    fn states_topological(&self) -> Vec<Self::State>;
}
