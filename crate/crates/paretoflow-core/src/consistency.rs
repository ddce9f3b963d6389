//! Feasibility of a joint distribution consistent with uniform-on-front
//! subset conditionals.
//!
//! Given a point set and a family of subsets, each subset that intersects
//! the global Pareto set is *active* and imposes the target-conditional
//! constraints: equal mass across its within-subset Pareto members and
//! zero mass on its within-subset dominated members. Global Pareto
//! members are required to carry positive mass. The system is solved by
//! equality-class merging plus zero propagation; infeasibility surfaces
//! as a machine-checkable chain from a zero-forcing to a required-positive
//! point.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pareto::{pareto_front, PointId, PointSet};

/// A point set together with the conditioning subsets.
#[derive(Debug, Clone)]
pub struct DilemmaInstance {
    pub points: PointSet,
    pub subsets: Vec<Vec<PointId>>,
}

impl DilemmaInstance {
    pub fn new(points: PointSet, subsets: Vec<Vec<PointId>>) -> Result<Self> {
        for subset in &subsets {
            if subset.is_empty() {
                return Err(Error::InvalidInput("empty subset".into()));
            }
            for &id in subset {
                if points.index_of(id).is_none() {
                    return Err(Error::InvalidInput(format!(
                        "subset id {id} not in the point set"
                    )));
                }
            }
            let mut seen = subset.clone();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput("duplicate id within a subset".into()));
            }
        }
        Ok(Self { points, subsets })
    }

    /// Ids on the global Pareto front of the full point set.
    pub fn global_front(&self) -> Result<Vec<PointId>> {
        Ok(pareto_front(&self.points)?.front)
    }

    /// Whether subset `k` is active (intersects the global Pareto set).
    fn is_active(&self, subset: &[PointId], global_front: &[PointId]) -> bool {
        subset.iter().any(|id| global_front.contains(id))
    }

    /// Within-subset Pareto front, as ids.
    fn subset_front(&self, subset: &[PointId]) -> Result<Vec<PointId>> {
        let indices: Vec<usize> = subset
            .iter()
            .map(|&id| self.points.index_of(id).expect("validated id"))
            .collect();
        let selected = self.points.select(&indices)?;
        Ok(pareto_front(&selected)?.front)
    }
}

/// One verifiable step of a contradiction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainLink {
    /// `P(id) = 0` because `id` is dominated within active subset `subset`.
    ZeroForced { id: PointId, subset: usize },
    /// `P(a) = P(b)` because both lie on the front of active subset `subset`.
    Equal { a: PointId, b: PointId, subset: usize },
    /// `P(id) > 0` because `id` is on the global Pareto front.
    RequiredPositive { id: PointId },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConsistencyVerdict {
    Feasible { witness: BTreeMap<PointId, f64> },
    Infeasible { contradiction: Vec<ChainLink> },
}

impl ConsistencyVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, ConsistencyVerdict::Feasible { .. })
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Decides whether a joint distribution consistent with every active
/// subset's target conditional exists.
///
/// Feasible instances come with a witness: uniform mass over every point
/// not zero-forced (equality classes then hold equal values by
/// construction). Infeasible instances come with a contradiction chain
/// from a zero-forcing through equality links to a required-positive
/// global-front member.
pub fn check_consistency(inst: &DilemmaInstance) -> Result<ConsistencyVerdict> {
    let global_front = inst.global_front()?;
    let n = inst.points.len();
    let pos_of = |id: PointId| inst.points.index_of(id).expect("validated id");

    let mut uf = UnionFind::new(n);
    // Equality adjacency for chain reconstruction: (neighbor, subset).
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    // Positional index -> (forcing subset) for zero-forced points.
    let mut zero_forced: Vec<Option<usize>> = vec![None; n];

    for (k, subset) in inst.subsets.iter().enumerate() {
        if !inst.is_active(subset, &global_front) {
            continue;
        }
        let front = inst.subset_front(subset)?;
        for pair in front.windows(2) {
            let (a, b) = (pos_of(pair[0]), pos_of(pair[1]));
            uf.union(a, b);
            adjacency[a].push((b, k));
            adjacency[b].push((a, k));
        }
        for &id in subset {
            if !front.contains(&id) {
                let p = pos_of(id);
                zero_forced[p].get_or_insert(k);
            }
        }
    }

    // A class is zero when any member is zero-forced.
    let mut class_zero: Vec<bool> = vec![false; n];
    for i in 0..n {
        if zero_forced[i].is_some() {
            let root = uf.find(i);
            class_zero[root] = true;
        }
    }

    // Conflict: a required-positive global-front member in a zero class.
    for &g in &global_front {
        let gp = pos_of(g);
        if class_zero[uf.find(gp)] {
            let chain = build_chain(inst, gp, &zero_forced, &adjacency);
            return Ok(ConsistencyVerdict::Infeasible {
                contradiction: chain,
            });
        }
    }

    let survivors: Vec<usize> = (0..n).filter(|&i| !class_zero[uf.find(i)]).collect();
    let mass = 1.0 / survivors.len() as f64;
    let witness: BTreeMap<PointId, f64> = (0..n)
        .map(|i| {
            let id = inst.points.id_at(i);
            (id, if class_zero[uf.find(i)] { 0.0 } else { mass })
        })
        .collect();
    Ok(ConsistencyVerdict::Feasible { witness })
}

/// BFS from the conflicted global-front member through equality edges to
/// the nearest zero-forced point, then emits the chain zero-first.
fn build_chain(
    inst: &DilemmaInstance,
    conflict_pos: usize,
    zero_forced: &[Option<usize>],
    adjacency: &[Vec<(usize, usize)>],
) -> Vec<ChainLink> {
    let n = adjacency.len();
    let mut previous: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    visited[conflict_pos] = true;
    queue.push_back(conflict_pos);

    let mut zero_hit = None;
    'search: while let Some(current) = queue.pop_front() {
        if let Some(subset) = zero_forced[current] {
            zero_hit = Some((current, subset));
            break 'search;
        }
        for &(next, subset) in &adjacency[current] {
            if !visited[next] {
                visited[next] = true;
                previous[next] = Some((current, subset));
                queue.push_back(next);
            }
        }
    }
    let (zero_pos, zero_subset) = zero_hit.expect("zero class must contain a forced member");

    let mut chain = vec![ChainLink::ZeroForced {
        id: inst.points.id_at(zero_pos),
        subset: zero_subset,
    }];
    // Walk back from the zero point to the conflicted front member.
    let mut cursor = zero_pos;
    while let Some((prev, subset)) = previous[cursor] {
        chain.push(ChainLink::Equal {
            a: inst.points.id_at(cursor),
            b: inst.points.id_at(prev),
            subset,
        });
        cursor = prev;
    }
    chain.push(ChainLink::RequiredPositive {
        id: inst.points.id_at(conflict_pos),
    });
    chain
}

/// Validates a witness against every active-subset constraint.
pub fn verify_witness(
    inst: &DilemmaInstance,
    witness: &BTreeMap<PointId, f64>,
    tol: f64,
) -> Result<()> {
    let total: f64 = witness.values().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidInput(format!("witness sums to {total}")));
    }
    let global_front = inst.global_front()?;
    for &g in &global_front {
        if witness.get(&g).copied().unwrap_or(0.0) <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "global front member {g} has no mass"
            )));
        }
    }
    for subset in &inst.subsets {
        if !inst.is_active(subset, &global_front) {
            continue;
        }
        let front = inst.subset_front(subset)?;
        let first = witness[&front[0]];
        for &id in &front {
            if (witness[&id] - first).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "unequal front mass within subset: {id}"
                )));
            }
        }
        for &id in subset {
            if !front.contains(&id) && witness[&id].abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "dominated member {id} carries mass"
                )));
            }
        }
    }
    Ok(())
}

/// Validates each link of a contradiction chain.
pub fn verify_chain(inst: &DilemmaInstance, chain: &[ChainLink]) -> Result<()> {
    let global_front = inst.global_front()?;
    for link in chain {
        match link {
            ChainLink::ZeroForced { id, subset } => {
                let s = &inst.subsets[*subset];
                if !inst.is_active(s, &global_front) {
                    return Err(Error::InvalidInput("zero-forcing from inactive subset".into()));
                }
                let front = inst.subset_front(s)?;
                if !s.contains(id) || front.contains(id) {
                    return Err(Error::InvalidInput(format!(
                        "{id} is not a dominated member of subset {subset}"
                    )));
                }
            }
            ChainLink::Equal { a, b, subset } => {
                let s = &inst.subsets[*subset];
                if !inst.is_active(s, &global_front) {
                    return Err(Error::InvalidInput("equality from inactive subset".into()));
                }
                let front = inst.subset_front(s)?;
                if !front.contains(a) || !front.contains(b) {
                    return Err(Error::InvalidInput(format!(
                        "{a} = {b} not implied by subset {subset}"
                    )));
                }
            }
            ChainLink::RequiredPositive { id } => {
                if !global_front.contains(id) {
                    return Err(Error::InvalidInput(format!(
                        "{id} is not on the global Pareto front"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Searches families of same-size subsets for minimal infeasible ones.
///
/// Families are enumerated by increasing family size, lexicographically,
/// up to `limit` feasibility checks. A family is reported when it is
/// infeasible but removing any single subset restores feasibility.
pub fn enumerate_dilemmas(
    points: &PointSet,
    subset_size: usize,
    limit: usize,
) -> Result<Vec<DilemmaInstance>> {
    if subset_size == 0 || subset_size > points.len() {
        return Err(Error::InvalidInput(format!(
            "subset size {subset_size} out of range"
        )));
    }
    let ids = points.ids().to_vec();
    let mut candidate_subsets: Vec<Vec<PointId>> = Vec::new();
    for_each_combination(ids.len(), subset_size, &mut |combo| {
        candidate_subsets.push(combo.iter().map(|&i| ids[i]).collect());
    });

    let mut found = Vec::new();
    let mut examined = 0usize;
    'sizes: for family_size in 1..=candidate_subsets.len() {
        let mut families: Vec<Vec<usize>> = Vec::new();
        for_each_combination(candidate_subsets.len(), family_size, &mut |combo| {
            families.push(combo.to_vec());
        });
        for family in families {
            if examined == limit {
                break 'sizes;
            }
            examined += 1;
            let subsets: Vec<Vec<PointId>> = family
                .iter()
                .map(|&i| candidate_subsets[i].clone())
                .collect();
            let inst = DilemmaInstance::new(points.clone(), subsets.clone())?;
            if check_consistency(&inst)?.is_feasible() {
                continue;
            }
            let minimal = (0..subsets.len()).all(|drop| {
                let mut reduced = subsets.clone();
                reduced.remove(drop);
                if reduced.is_empty() {
                    return true;
                }
                let sub_inst = DilemmaInstance::new(points.clone(), reduced)
                    .expect("validated subsets");
                check_consistency(&sub_inst)
                    .map(|v| v.is_feasible())
                    .unwrap_or(false)
            });
            if minimal {
                found.push(inst);
            }
        }
    }
    Ok(found)
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        f(&combo);
        // Advance to the next lexicographic combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if combo[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}
