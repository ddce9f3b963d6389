//! The HyperGrid environment: a d-dimensional grid with side length H.
//!
//! States are coordinate tuples in `{1, ..., H}^d`; actions increment one
//! coordinate (masked at the boundary) or stop. Coordinate `s_i` maps to
//! the unit interval as `u_i = (s_i - 1) / (H - 1)` before objectives are
//! evaluated.

use crate::envs::objectives::GridObjective;
use crate::envs::{Environment, EnumerableEnvironment};
use crate::error::{Error, Result};
use crate::pareto::{pareto_front, ObjectiveVector, PointSet};

/// Grid coordinates, each in `1..=H`.
pub type GridState = Vec<u16>;

#[derive(Debug, Clone)]
pub struct HyperGridEnv {
    d: usize,
    h: u16,
    objectives: Vec<GridObjective>,
}

impl HyperGridEnv {
    pub fn new(d: usize, h: u16, objectives: Vec<GridObjective>) -> Result<Self> {
        if d == 0 || h < 2 {
            return Err(Error::InvalidInput(
                "hypergrid needs d >= 1 and H >= 2".into(),
            ));
        }
        if objectives.is_empty() {
            return Err(Error::InvalidInput("no objectives configured".into()));
        }
        let env = Self { d, h, objectives };
        // Fail fast on bad objective wiring (e.g. a two-input function on
        // a 1-D grid).
        env.objectives(&env.initial_state())?;
        Ok(env)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> u16 {
        self.h
    }

    pub fn objective_names(&self) -> Vec<String> {
        self.objectives.iter().map(|o| o.name()).collect()
    }

    /// Unit-cube embedding of a state.
    pub fn to_unit(&self, state: &GridState) -> Vec<f64> {
        state
            .iter()
            .map(|&s| f64::from(s - 1) / f64::from(self.h - 1))
            .collect()
    }

    /// Evaluates every state of the grid; row order is the topological
    /// enumeration order, ids positional.
    pub fn enumerate_objectives(&self) -> Result<(Vec<GridState>, PointSet)> {
        let states = self.states_topological();
        let rows = states
            .iter()
            .map(|s| self.objectives(s).map(|o| o.values().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok((states, PointSet::from_rows(rows)?))
    }

    /// Exact true Pareto front of the full grid image, deduplicated in
    /// objective space.
    pub fn true_front(&self) -> Result<PointSet> {
        let (_, image) = self.enumerate_objectives()?;
        let front = pareto_front(&image)?;
        let mut rows: Vec<Vec<f64>> = front
            .front
            .iter()
            .map(|&id| {
                let idx = image.index_of(id).expect("front id");
                image.point(idx).values().to_vec()
            })
            .collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        rows.dedup();
        PointSet::from_rows(rows)
    }
}

impl Environment for HyperGridEnv {
    type State = GridState;

    fn initial_state(&self) -> GridState {
        vec![1; self.d]
    }

    fn num_actions(&self) -> usize {
        self.d + 1
    }

    fn action_mask(&self, state: &GridState) -> Vec<bool> {
        let mut mask: Vec<bool> = state.iter().map(|&s| s < self.h).collect();
        mask.push(true); // stop is always available
        mask
    }

    fn apply(&self, state: &GridState, action: usize) -> GridState {
        debug_assert!(action < self.d && state[action] < self.h);
        let mut next = state.clone();
        next[action] += 1;
        next
    }

    fn parent_action_count(&self, state: &GridState) -> usize {
        state.iter().filter(|&&s| s > 1).count()
    }

    fn input_dim(&self) -> usize {
        self.d * self.h as usize
    }

    fn encode_state(&self, state: &GridState, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.input_dim(), 0.0);
        for (i, &s) in state.iter().enumerate() {
            out[i * self.h as usize + (s - 1) as usize] = 1.0;
        }
    }

    fn objective_dim(&self) -> usize {
        self.objectives.len()
    }

    fn objectives(&self, state: &GridState) -> Result<ObjectiveVector> {
        let u = self.to_unit(state);
        let values = self
            .objectives
            .iter()
            .enumerate()
            .map(|(slot, obj)| obj.eval(&u, slot))
            .collect::<Result<Vec<_>>>()?;
        ObjectiveVector::new(values)
    }

    fn object_distance(&self, a: &GridState, b: &GridState) -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (f64::from(x) - f64::from(y)).abs())
            .sum()
    }
}

impl EnumerableEnvironment for HyperGridEnv {
    fn state_count(&self) -> usize {
        (self.h as usize).pow(self.d as u32)
    }

    fn states_topological(&self) -> Vec<GridState> {
        // Mixed-radix enumeration grouped by coordinate sum: every parent
        // (one increment less) precedes its children.
        let mut states: Vec<GridState> = Vec::with_capacity(self.state_count());
        let mut current = vec![1u16; self.d];
        loop {
            states.push(current.clone());
            let mut axis = 0;
            loop {
                if axis == self.d {
                    states.sort_by_key(|s| s.iter().map(|&c| u32::from(c)).sum::<u32>());
                    return states;
                }
                if current[axis] < self.h {
                    current[axis] += 1;
                    break;
                }
                current[axis] = 1;
                axis += 1;
            }
        }
    }
}
