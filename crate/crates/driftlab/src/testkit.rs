//! Fixtures and random-chain generators used across the test suites.
//!
//! The generators produce valid elitist chains with exact rational rows:
//! every non-optimal state keeps a positive climb probability, so the chains
//! are convergent by construction. Seeds fully determine the output.

use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chain::StateChain;
use crate::level::{build_level_partition, level_stats, LevelPartition, LevelStats};
use crate::numeric::Scalar;

fn q(n: i64, d: i64) -> BigRational {
    Scalar::from_ratio(n, d)
}

/// Three-state toy chain: s2 -> {s2: 3/5, s1: 3/10, s0: 1/10},
/// s1 -> {s1: 1/2, s0: 1/2}, s0 absorbing optimal.
pub fn t1_chain() -> StateChain<BigRational> {
    StateChain::from_parts(
        vec![
            ("s2".into(), q(0, 1)),
            ("s1".into(), q(1, 1)),
            ("s0".into(), q(2, 1)),
        ],
        vec![
            ("s2".into(), "s2".into(), q(3, 5)),
            ("s2".into(), "s1".into(), q(3, 10)),
            ("s2".into(), "s0".into(), q(1, 10)),
            ("s1".into(), "s1".into(), q(1, 2)),
            ("s1".into(), "s0".into(), q(1, 2)),
            ("s0".into(), "s0".into(), q(1, 1)),
        ],
        None,
    )
    .expect("t1 is well formed")
}

/// Float-mode twin of [`t1_chain`].
pub fn t1_chain_float() -> StateChain<f64> {
    StateChain::from_parts(
        vec![("s2".into(), 0.0), ("s1".into(), 1.0), ("s0".into(), 2.0)],
        vec![
            ("s2".into(), "s2".into(), 0.6),
            ("s2".into(), "s1".into(), 0.3),
            ("s2".into(), "s0".into(), 0.1),
            ("s1".into(), "s1".into(), 0.5),
            ("s1".into(), "s0".into(), 0.5),
            ("s0".into(), "s0".into(), 1.0),
        ],
        None,
    )
    .expect("t1 is well formed")
}

/// T1 together with its partition and statistics.
pub fn t1_setup() -> (
    StateChain<BigRational>,
    LevelPartition,
    LevelStats<BigRational>,
) {
    let chain = t1_chain();
    let partition = build_level_partition(&chain).expect("valid");
    let stats = level_stats(&chain, &partition).expect("valid");
    (chain, partition, stats)
}

/// Random elitist chain with `2..=max_levels` non-optimal levels and up to
/// three states per level. Rows are small rationals summing to one; every
/// non-optimal state gets at least one upward transition.
pub fn random_chain(seed: u64) -> StateChain<BigRational> {
    random_chain_with(seed, 6, 3)
}

/// Random chain with exactly one state per level.
pub fn random_singleton_chain(seed: u64, max_levels: usize) -> StateChain<BigRational> {
    random_chain_with(seed, max_levels, 1)
}

fn random_chain_with(
    seed: u64,
    max_levels: usize,
    max_per_level: usize,
) -> StateChain<BigRational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let last_level = rng.random_range(2..=max_levels);
    let sizes: Vec<usize> = (0..=last_level)
        .map(|_| rng.random_range(1..=max_per_level))
        .collect();

    let mut states = Vec::new();
    let mut level_members: Vec<Vec<String>> = Vec::new();
    for (level, &size) in sizes.iter().enumerate() {
        let mut members = Vec::new();
        for s in 0..size {
            let name = format!("L{level}x{s}");
            // Fitness descends with the level index.
            states.push((name.clone(), q((last_level - level) as i64, 1)));
            members.push(name);
        }
        level_members.push(members);
    }

    let mut transitions = Vec::new();
    for (level, members) in level_members.iter().enumerate() {
        for name in members {
            if level == 0 {
                transitions.push((name.clone(), name.clone(), q(1, 1)));
                continue;
            }
            // Candidate targets: everything at this level or better.
            let mut weights: Vec<(String, i64)> = Vec::new();
            for target_level in 0..=level {
                for target in &level_members[target_level] {
                    if rng.random_bool(0.6) {
                        weights.push((target.clone(), rng.random_range(1..=9)));
                    }
                }
            }
            let has_upward = weights
                .iter()
                .any(|(t, _)| !level_members[level].contains(t));
            if !has_upward {
                let target_level = rng.random_range(0..level);
                let pick = rng.random_range(0..level_members[target_level].len());
                weights.push((
                    level_members[target_level][pick].clone(),
                    rng.random_range(1..=9),
                ));
            }
            let total: i64 = weights.iter().map(|(_, w)| w).sum();
            for (target, w) in weights {
                transitions.push((name.clone(), target, q(w, total)));
            }
        }
    }

    let chain =
        StateChain::from_parts(states, transitions, None).expect("generator is well formed");
    debug_assert!(chain.validate().is_empty());
    chain
}
