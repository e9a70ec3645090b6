//! Exact hitting statistics: ground truth for every bound in the crate.
//!
//! All quantities come from linear solves over the chain restricted to one
//! level at a time. Elitism makes the level ordering block-triangular, so a
//! full solve is a sweep from the optimal set downward, one small dense system
//! per level.

use crate::chain::StateChain;
use crate::level::{build_level_partition, LevelPartition};
use crate::numeric::Scalar;
use crate::{Error, Result};

/// Hitting probabilities toward one target level, including the first-entry
/// distribution over that level's states.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingProfile<S: Scalar> {
    pub target_level: usize,
    /// States of the target level, in partition order.
    pub target_states: Vec<usize>,
    /// `h(X, S_target)` per state index.
    pub hit: Vec<S>,
    /// `entry[state][j] = h(X, target_states[j])`: probability that the first
    /// visit to the target level enters through that state.
    pub entry: Vec<Vec<S>>,
}

/// Mean times for one start state: per-state exit times, per-state totals,
/// and the per-level staying-time decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeProfile<S: Scalar> {
    /// `m(X, leave own level)` per state; `None` on the optimal level, which
    /// is never left.
    pub exit_time: Vec<Option<S>>,
    /// Total mean hitting time `m(X)` to the optimal set, per state.
    pub total: Vec<S>,
    /// Decomposition for the requested start state.
    pub decomposition: Decomposition<S>,
}

/// Theorem-style split of a hitting time into per-level staying times.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<S: Scalar> {
    pub start_state: usize,
    /// `(level, expected staying time)` for levels `1..=start_level`.
    pub per_level: Vec<(usize, S)>,
    pub total: S,
}

/// Solve `(I - P_level) x = rhs` for the states of one level.
fn solve_level_block<S: Scalar>(
    chain: &StateChain<S>,
    level_states: &[usize],
    rhs_cols: Vec<Vec<S>>,
) -> Result<Vec<Vec<S>>> {
    let n = level_states.len();
    let pos = |state: usize| level_states.iter().position(|&s| s == state);
    let mut a = vec![vec![S::zero(); n]; n];
    for (i, &state) in level_states.iter().enumerate() {
        a[i][i] = S::one();
        for (t, p) in chain.row(state) {
            if let Some(j) = pos(*t) {
                a[i][j] = a[i][j].clone() - p.clone();
            }
        }
    }
    S::solve_dense(a, rhs_cols)
}

/// Hitting probabilities `h(X, S_target)` for every state, plus first-entry
/// probabilities, via one block solve per level above the target.
pub fn hitting_probabilities<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
    target_level: usize,
) -> Result<HittingProfile<S>> {
    if target_level >= partition.level_count() {
        return Err(Error::Internal(format!(
            "target level {target_level} out of range"
        )));
    }
    let target_states: Vec<usize> = partition.level(target_level).to_vec();
    let m = target_states.len();
    let n = chain.len();

    let mut hit = vec![S::zero(); n];
    let mut entry = vec![vec![S::zero(); m]; n];

    // Level `target`: hit with probability one, entering through oneself.
    for (j, &state) in target_states.iter().enumerate() {
        hit[state] = S::one();
        entry[state][j] = S::one();
    }
    // Levels above the target (better fitness) can never come back down.

    // Sweep levels below the target from best to worst; each depends only on
    // already-solved levels plus its own block.
    for k in target_level + 1..partition.level_count() {
        let states = partition.level(k);
        // One right-hand-side column per entry state: mass that reaches the
        // target in one step or through an already-solved intermediate level.
        let mut rhs: Vec<Vec<S>> = vec![vec![S::zero(); states.len()]; m];
        for (i, &state) in states.iter().enumerate() {
            for (t, p) in chain.row(state) {
                let lvl = partition.level_of(*t);
                if lvl >= target_level && lvl < k {
                    for (c, col) in rhs.iter_mut().enumerate() {
                        col[i] = col[i].clone() + p.clone() * entry[*t][c].clone();
                    }
                }
            }
        }
        let solved = solve_level_block(chain, states, rhs)?;
        for (i, &state) in states.iter().enumerate() {
            for c in 0..m {
                entry[state][c] = solved[c][i].clone();
            }
            hit[state] = entry[state]
                .iter()
                .fold(S::zero(), |acc, v| acc + v.clone());
        }
    }

    Ok(HittingProfile {
        target_level,
        target_states,
        hit,
        entry,
    })
}

/// Mean time to leave level `k`, per state of that level (`k >= 1`).
pub fn mean_exit_time<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
    k: usize,
) -> Result<Vec<S>> {
    if k == 0 || k >= partition.level_count() {
        return Err(Error::Internal(format!(
            "exit time defined for levels 1..=K, got {k}"
        )));
    }
    let states = partition.level(k);
    let rhs = vec![vec![S::one(); states.len()]];
    let solved = solve_level_block(chain, states, rhs)?;
    Ok(solved.into_iter().next().expect("one column"))
}

/// Mean hitting time `m(X)` to the optimal set, per state. Zero on the
/// optimal level. This is the independent reference every bound is checked
/// against.
pub fn mean_hitting_time<S: Scalar>(chain: &StateChain<S>) -> Result<Vec<S>> {
    let partition = build_level_partition(chain)?;
    let mut total = vec![S::zero(); chain.len()];
    for k in 1..partition.level_count() {
        let states = partition.level(k);
        let mut rhs = vec![vec![S::zero(); states.len()]];
        for (i, &state) in states.iter().enumerate() {
            let mut acc = S::one();
            for (t, p) in chain.row(state) {
                let lvl = partition.level_of(*t);
                if lvl < k {
                    acc = acc + p.clone() * total[*t].clone();
                }
            }
            rhs[0][i] = acc;
        }
        let solved = solve_level_block(chain, states, rhs)?;
        for (i, &state) in states.iter().enumerate() {
            total[state] = solved[0][i].clone();
        }
    }
    Ok(total)
}

/// Split `m(start)` into per-level staying times: the expected time spent in
/// each level weighted by the probability of entering through each of its
/// states. The total must reproduce [`mean_hitting_time`] exactly in rational
/// mode.
pub fn decompose_hitting_time<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
    start_state: usize,
) -> Result<Decomposition<S>> {
    let start_level = partition.level_of(start_state);
    if start_level == 0 {
        return Err(Error::Internal(
            "decomposition requires a non-optimal start state".into(),
        ));
    }
    let mut per_level = Vec::with_capacity(start_level);
    let mut total = S::zero();
    for level in 1..=start_level {
        let profile = hitting_probabilities(chain, partition, level)?;
        let exits = mean_exit_time(chain, partition, level)?;
        let mut stay = S::zero();
        for (j, _) in profile.target_states.iter().enumerate() {
            stay = stay + profile.entry[start_state][j].clone() * exits[j].clone();
        }
        total = total + stay.clone();
        per_level.push((level, stay));
    }
    Ok(Decomposition {
        start_state,
        per_level,
        total,
    })
}

/// Bundle exit times, totals, and the decomposition for one start state.
pub fn time_profile<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
    start_state: usize,
) -> Result<TimeProfile<S>> {
    let mut exit_time = vec![None; chain.len()];
    for k in 1..partition.level_count() {
        let exits = mean_exit_time(chain, partition, k)?;
        for (i, &state) in partition.level(k).iter().enumerate() {
            exit_time[state] = Some(exits[i].clone());
        }
    }
    Ok(TimeProfile {
        exit_time,
        total: mean_hitting_time(chain)?,
        decomposition: decompose_hitting_time(chain, partition, start_state)?,
    })
}
