//! Fitness-level partitions and per-level transition statistics.
//!
//! Levels `S_0 .. S_K` order the states by strictly decreasing fitness with
//! `S_0` the optimal set; equal-fitness states always share a level.
//! [`LevelStats`] aggregates every state's row by target level and caches the
//! per-level extrema that the coefficient and bound machinery consumes.

use crate::chain::StateChain;
use crate::numeric::{max_s, min_s, Scalar};
use crate::{Error, Result};

/// Ordered grouping of states into fitness levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPartition {
    levels: Vec<Vec<usize>>,
    level_of: Vec<usize>,
}

impl LevelPartition {
    /// Number of non-optimal levels (`K`); the partition has `K + 1` levels.
    pub fn last_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// States of level `k`, sorted by state index.
    pub fn level(&self, k: usize) -> &[usize] {
        &self.levels[k]
    }

    pub fn level_of(&self, state: usize) -> usize {
        self.level_of[state]
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }
}

/// Group states into levels by exact fitness, descending. Fails when the
/// chain itself is invalid.
pub fn build_level_partition<S: Scalar>(chain: &StateChain<S>) -> Result<LevelPartition> {
    chain.ensure_valid()?;
    let n = chain.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Exact fitness comparison; ties grouped, then state index for determinism.
    order.sort_by(|&a, &b| {
        chain
            .fitness(b)
            .partial_cmp(chain.fitness(a))
            .expect("fitness values must be comparable")
            .then(a.cmp(&b))
    });

    let mut levels: Vec<Vec<usize>> = Vec::new();
    for state in order {
        match levels.last_mut() {
            Some(level) if chain.fitness(level[0]) == chain.fitness(state) => level.push(state),
            _ => levels.push(vec![state]),
        }
    }
    let mut level_of = vec![0usize; n];
    for (k, level) in levels.iter().enumerate() {
        for &state in level {
            level_of[state] = k;
        }
    }
    debug_assert!(levels[0].iter().all(|&s| chain.is_optimal(s)));
    Ok(LevelPartition { levels, level_of })
}

/// Conditional transition probability from a state to level `target`, given
/// that the chain leaves the state's own level this step. Zero for the own
/// level and for levels below the state's fitness.
pub fn conditional_transition<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
    state: usize,
    target: usize,
) -> Result<S> {
    let own = partition.level_of(state);
    if target == own {
        return Ok(S::zero());
    }
    let mut to_target = S::zero();
    let mut stay = S::zero();
    for (t, p) in chain.row(state) {
        let level = partition.level_of(*t);
        if level == own {
            stay = stay + p.clone();
        } else if level == target {
            to_target = to_target + p.clone();
        }
    }
    let leave = S::one() - stay;
    if leave.is_zero_prob() {
        return Err(absorbing_error(chain, state, own));
    }
    Ok(to_target / leave)
}

fn absorbing_error<S: Scalar>(chain: &StateChain<S>, state: usize, level: usize) -> Error {
    if level == 0 {
        Error::AbsorbingState {
            state: chain.name(state).into(),
            detail: "optimal states have no conditional transitions".into(),
        }
    } else {
        Error::AbsorbingState {
            state: chain.name(state).into(),
            detail: "non-optimal state never leaves its level; violates convergence assumption"
                .into(),
        }
    }
}

/// Per-level transition statistics: each state's row aggregated by target
/// level, plus cached extrema toward single levels and prefix unions.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats<S: Scalar> {
    level_count: usize,
    level_sizes: Vec<usize>,
    /// `rows[level][state_slot][target_level] = p(X, S_target)`.
    rows: Vec<Vec<Vec<S>>>,
    /// `leave[level][state_slot] = p(X, S_[0, level-1]) = 1 - p(X, own level)`.
    leave: Vec<Vec<S>>,
    /// `single_min[k][l] = p_min(X_k, S_l)` for `l < k`; same layout for the others.
    single_min: Vec<Vec<S>>,
    single_max: Vec<Vec<S>>,
    cond_min: Vec<Vec<S>>,
    cond_max: Vec<Vec<S>>,
    /// `prefix_min[k][l] = p_min(X_k, S_[0,l])` for `l < k`.
    prefix_min: Vec<Vec<S>>,
    prefix_max: Vec<Vec<S>>,
}

/// Compute [`LevelStats`]. Errors on absorbing non-optimal states (the chain
/// would violate the convergence assumption), which also guarantees every
/// cached conditional value is well defined.
pub fn level_stats<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
) -> Result<LevelStats<S>> {
    let level_count = partition.level_count();
    let mut rows = Vec::with_capacity(level_count);
    let mut leave = Vec::with_capacity(level_count);

    for k in 0..level_count {
        let mut level_rows = Vec::with_capacity(partition.level(k).len());
        let mut level_leave = Vec::with_capacity(partition.level(k).len());
        for &state in partition.level(k) {
            let mut agg = vec![S::zero(); level_count];
            for (t, p) in chain.row(state) {
                let lvl = partition.level_of(*t);
                // Elitism plus the partition ordering forbids transitions to
                // higher-index (worse) levels.
                assert!(
                    lvl <= k || p.is_zero_prob(),
                    "elitism violation leaked past validation: {} -> {}",
                    chain.name(state),
                    chain.name(*t)
                );
                agg[lvl] = agg[lvl].clone() + p.clone();
            }
            let out = S::one() - agg[k].clone();
            if k >= 1 && out.is_zero_prob() {
                return Err(absorbing_error(chain, state, k));
            }
            level_rows.push(agg);
            level_leave.push(out);
        }
        rows.push(level_rows);
        leave.push(level_leave);
    }

    let mut single_min = vec![Vec::new(); level_count];
    let mut single_max = vec![Vec::new(); level_count];
    let mut cond_min = vec![Vec::new(); level_count];
    let mut cond_max = vec![Vec::new(); level_count];
    let mut prefix_min = vec![Vec::new(); level_count];
    let mut prefix_max = vec![Vec::new(); level_count];

    for k in 1..level_count {
        for l in 0..k {
            let mut p_lo: Option<S> = None;
            let mut p_hi: Option<S> = None;
            let mut r_lo: Option<S> = None;
            let mut r_hi: Option<S> = None;
            let mut pre_lo: Option<S> = None;
            let mut pre_hi: Option<S> = None;
            for (slot, row) in rows[k].iter().enumerate() {
                let p = row[l].clone();
                let r = p.clone() / leave[k][slot].clone();
                let prefix: S = row[..=l].iter().fold(S::zero(), |acc, v| acc + v.clone());
                p_lo = Some(p_lo.map_or(p.clone(), |v| min_s(v, p.clone())));
                p_hi = Some(p_hi.map_or(p.clone(), |v| max_s(v, p)));
                r_lo = Some(r_lo.map_or(r.clone(), |v| min_s(v, r.clone())));
                r_hi = Some(r_hi.map_or(r.clone(), |v| max_s(v, r)));
                pre_lo = Some(pre_lo.map_or(prefix.clone(), |v| min_s(v, prefix.clone())));
                pre_hi = Some(pre_hi.map_or(prefix.clone(), |v| max_s(v, prefix)));
            }
            single_min[k].push(p_lo.expect("non-empty level"));
            single_max[k].push(p_hi.expect("non-empty level"));
            cond_min[k].push(r_lo.expect("non-empty level"));
            cond_max[k].push(r_hi.expect("non-empty level"));
            prefix_min[k].push(pre_lo.expect("non-empty level"));
            prefix_max[k].push(pre_hi.expect("non-empty level"));
        }
    }

    Ok(LevelStats {
        level_count,
        level_sizes: partition.levels().iter().map(|l| l.len()).collect(),
        rows,
        leave,
        single_min,
        single_max,
        cond_min,
        cond_max,
        prefix_min,
        prefix_max,
    })
}

impl<S: Scalar> LevelStats<S> {
    pub fn level_count(&self) -> usize {
        self.level_count
    }

    /// Highest level index `K`.
    pub fn last_level(&self) -> usize {
        self.level_count - 1
    }

    pub fn level_size(&self, k: usize) -> usize {
        self.level_sizes[k]
    }

    /// `p_min(X_k, S_l)`, `l < k`.
    pub fn min_transition(&self, k: usize, l: usize) -> &S {
        &self.single_min[k][l]
    }

    pub fn max_transition(&self, k: usize, l: usize) -> &S {
        &self.single_max[k][l]
    }

    /// `r_min(X_k, S_l)`, `l < k`.
    pub fn min_conditional(&self, k: usize, l: usize) -> &S {
        &self.cond_min[k][l]
    }

    pub fn max_conditional(&self, k: usize, l: usize) -> &S {
        &self.cond_max[k][l]
    }

    /// `p_min(X_k, S_[0,l])`, `l < k`.
    pub fn min_transition_prefix(&self, k: usize, l: usize) -> &S {
        &self.prefix_min[k][l]
    }

    pub fn max_transition_prefix(&self, k: usize, l: usize) -> &S {
        &self.prefix_max[k][l]
    }

    /// `p_min(X_k, S_[0,k-1])`: the weakest climb probability out of level `k`.
    pub fn min_climb(&self, k: usize) -> &S {
        &self.prefix_min[k][k - 1]
    }

    pub fn max_climb(&self, k: usize) -> &S {
        &self.prefix_max[k][k - 1]
    }

    /// Per-state aggregated transition `p(X, S_target)` for each state slot of
    /// level `k`.
    pub fn state_transitions(&self, k: usize) -> &[Vec<S>] {
        &self.rows[k]
    }

    /// Per-state climb probabilities `p(X, S_[0,k-1])` for level `k`.
    pub fn state_leaves(&self, k: usize) -> &[S] {
        &self.leave[k]
    }

    /// Conditional probability `r(X, S_target)` for one state slot.
    pub fn conditional(&self, k: usize, slot: usize, target: usize) -> S {
        if target == k {
            return S::zero();
        }
        self.rows[k][slot][target].clone() / self.leave[k][slot].clone()
    }

    /// Minimum over the states of level `k` of `r(X, union of target levels)`.
    pub fn min_conditional_set(&self, k: usize, targets: &[usize]) -> S {
        self.extremum_conditional_set(k, targets, true)
    }

    pub fn max_conditional_set(&self, k: usize, targets: &[usize]) -> S {
        self.extremum_conditional_set(k, targets, false)
    }

    fn extremum_conditional_set(&self, k: usize, targets: &[usize], minimize: bool) -> S {
        debug_assert!(targets.iter().all(|&t| t != k));
        let mut best: Option<S> = None;
        for (slot, row) in self.rows[k].iter().enumerate() {
            let mass = targets
                .iter()
                .fold(S::zero(), |acc, &t| acc + row[t].clone());
            let r = mass / self.leave[k][slot].clone();
            best = Some(match best {
                None => r,
                Some(b) => {
                    if minimize {
                        min_s(b, r)
                    } else {
                        max_s(b, r)
                    }
                }
            });
        }
        best.expect("non-empty level")
    }
}
