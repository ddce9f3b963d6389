//! Replay buffer with incremental Pareto-front tracking, warm-up gating,
//! and Pareto-ratio batch composition.
//!
//! The buffer is generic over the stored payload (the training loop
//! stores trajectories) and keeps each entry's objective vector alongside
//! it. The running front always equals the Pareto front of the stored
//! objective vectors; eviction prefers the oldest non-front entry so
//! front members survive until nothing else is left to evict.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{dominates_values, ObjectiveVector, PointSet};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayConfig {
    pub capacity: usize,
    pub warmup: usize,
    pub pareto_ratio: f64,
    pub min_pareto_k: usize,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            capacity: 10_000,
            warmup: 1_000,
            pareto_ratio: 0.1,
            min_pareto_k: 1,
        }
    }
}

impl ReplayConfig {
    fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidInput("replay capacity must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.pareto_ratio) || self.pareto_ratio <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "pareto_ratio must lie in (0, 1), got {}",
                self.pareto_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayEntry<T> {
    pub payload: T,
    pub objectives: ObjectiveVector,
    /// Monotone insertion stamp; smaller means older.
    pub stamp: u64,
    on_front: bool,
}

impl<T> ReplayEntry<T> {
    pub fn on_front(&self) -> bool {
        self.on_front
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    config: ReplayConfig,
    entries: Vec<ReplayEntry<T>>,
    next_stamp: u64,
}

impl<T> ReplayBuffer<T> {
    pub fn new(config: ReplayConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            entries: Vec::new(),
            next_stamp: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.config
    }

    pub fn front_len(&self) -> usize {
        self.entries.iter().filter(|e| e.on_front).count()
    }

    /// Whether enough entries have accumulated for buffer sampling.
    pub fn warmed_up(&self) -> bool {
        self.entries.len() >= self.config.warmup
    }

    pub fn entries(&self) -> &[ReplayEntry<T>] {
        &self.entries
    }

    /// Inserts an entry, evicting per the front-protection rule when
    /// full. When every stored entry is on the front and the newcomer is
    /// dominated, the newcomer is dropped instead.
    pub fn insert(&mut self, payload: T, objectives: ObjectiveVector) {
        let joins_front = !self
            .entries
            .iter()
            .filter(|e| e.on_front)
            .any(|e| dominates_values(e.objectives.values(), objectives.values()));

        if self.entries.len() == self.config.capacity {
            let victim = self
                .entries
                .iter()
                .enumerate()
                .filter(|(_, e)| !e.on_front)
                .min_by_key(|(_, e)| e.stamp)
                .map(|(i, _)| i);
            match victim {
                Some(i) => {
                    self.entries.remove(i);
                }
                None => {
                    // Entire buffer is front.
                    if !joins_front {
                        return;
                    }
                    let oldest = self
                        .entries
                        .iter()
                        .enumerate()
                        .min_by_key(|(_, e)| e.stamp)
                        .map(|(i, _)| i)
                        .expect("buffer is full, so non-empty");
                    self.entries.remove(oldest);
                }
            }
        }

        if joins_front {
            for e in &mut self.entries {
                if e.on_front && dominates_values(objectives.values(), e.objectives.values()) {
                    e.on_front = false;
                }
            }
        }
        self.entries.push(ReplayEntry {
            payload,
            objectives,
            stamp: self.next_stamp,
            on_front: joins_front,
        });
        self.next_stamp += 1;
    }

    /// Draws a training batch: at least `ceil(pareto_ratio * batch_size)`
    /// entries (never fewer than `min_pareto_k`) uniformly with
    /// replacement from the front, the remainder uniformly with
    /// replacement from the whole buffer.
    ///
    /// Returns `None` before warm-up; the trainer then works on fresh
    /// trajectories only.
    pub fn sample_batch<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Option<Vec<&ReplayEntry<T>>> {
        if !self.warmed_up() || self.entries.is_empty() || batch_size == 0 {
            return None;
        }
        let front: Vec<&ReplayEntry<T>> = self.entries.iter().filter(|e| e.on_front).collect();
        let quota = ((self.config.pareto_ratio * batch_size as f64).ceil() as usize)
            .max(self.config.min_pareto_k)
            .min(batch_size);

        let mut batch = Vec::with_capacity(batch_size);
        for _ in 0..quota {
            batch.push(front[rng.random_range(0..front.len())]);
        }
        for _ in quota..batch_size {
            batch.push(&self.entries[rng.random_range(0..self.entries.len())]);
        }
        Some(batch)
    }

    /// Number of front draws [`ReplayBuffer::sample_batch`] will make for
    /// a batch size.
    pub fn front_quota(&self, batch_size: usize) -> usize {
        ((self.config.pareto_ratio * batch_size as f64).ceil() as usize)
            .max(self.config.min_pareto_k)
            .min(batch_size)
    }

    /// Immutable copy of the current front's objective vectors. Ids are
    /// the entry stamps. An empty buffer yields an empty snapshot.
    pub fn front_snapshot(&self) -> PointSet {
        let front: Vec<&ReplayEntry<T>> = self.entries.iter().filter(|e| e.on_front).collect();
        if front.is_empty() {
            let dim = self
                .entries
                .first()
                .map(|e| e.objectives.dim())
                .unwrap_or(0);
            return PointSet::empty(dim);
        }
        let points = front.iter().map(|e| e.objectives.clone()).collect();
        let ids = front.iter().map(|e| e.stamp as usize).collect();
        PointSet::with_ids(points, ids).expect("stamps are unique")
    }
}

impl<T: Serialize> ReplayBuffer<T> {
    /// Dumps entries as JSON-lines for experiment resumption.
    pub fn dump<W: Write>(&self, mut writer: W) -> Result<()> {
        for entry in &self.entries {
            serde_json::to_writer(&mut writer, entry)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl<T: DeserializeOwned> ReplayBuffer<T> {
    /// Restores a buffer dumped by [`ReplayBuffer::dump`]. Front flags
    /// are recomputed from scratch.
    pub fn restore<R: BufRead>(config: ReplayConfig, reader: R) -> Result<Self> {
        let mut buf = Self::new(config)?;
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ReplayEntry<T> = serde_json::from_str(&line)?;
            buf.insert(entry.payload, entry.objectives);
        }
        Ok(buf)
    }
}
