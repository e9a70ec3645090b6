//! Cross-module invariants on randomly generated chains, plus the remaining
//! simulation agreement cells.

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use driftlab::bounds::{lower_time_bound, upper_time_bound, BoundValue};
use driftlab::chain::StateChain;
use driftlab::coeffs::{
    constant_table, dominance_check, forward_table, path_table, reverse_table,
    table_from_per_level, type_c_coeff, type_cl_coeffs, CoefficientTable, Direction, Method,
    PathForm,
};
use driftlab::exact::{mean_exit_time, mean_hitting_time};
use driftlab::graph::{build_level_graph, select_path, Path, PathStrategy};
use driftlab::io::{chain_to_json, parse_chain_json, AnyChain};
use driftlab::knapsack::{build_lumped_chain, make_instance, InstanceId, Variant};
use driftlab::level::{
    build_level_partition, conditional_transition, level_stats, LevelPartition, LevelStats,
};
use driftlab::numeric::{format_rational, parse_rational, Scalar};
use driftlab::sim::estimate_hitting_time;
use driftlab::testkit::random_chain;

type Q = BigRational;

fn setup(seed: u64) -> (StateChain<Q>, LevelPartition, LevelStats<Q>) {
    let chain = random_chain(seed);
    let partition = build_level_partition(&chain).unwrap();
    let stats = level_stats(&chain, &partition).unwrap();
    (chain, partition, stats)
}

proptest! {
    #[test]
    fn rational_strings_round_trip(num in -10_000i64..10_000, den in 1i64..10_000) {
        let value = <Q as Scalar>::from_ratio(num, den);
        let text = format_rational(&value);
        prop_assert_eq!(parse_rational(&text).unwrap(), value);
    }

    #[test]
    fn chain_json_round_trips_on_random_chains(seed in 0u64..500) {
        let chain = random_chain(seed);
        let text = chain_to_json(&chain);
        match parse_chain_json(&text).unwrap() {
            AnyChain::Rational(parsed) => prop_assert_eq!(parsed, chain),
            AnyChain::Float(_) => prop_assert!(false, "mode lost"),
        }
    }

    #[test]
    fn conditional_transitions_sum_to_one(seed in 0u64..200) {
        let (chain, partition, _) = setup(seed);
        for state in 0..chain.len() {
            let own = partition.level_of(state);
            if own == 0 {
                continue;
            }
            let mut sum = Q::zero();
            for target in 0..partition.level_count() {
                if target != own {
                    sum += conditional_transition(&chain, &partition, state, target).unwrap();
                }
            }
            prop_assert_eq!(sum, Q::one());
        }
    }

    #[test]
    fn shortest_is_never_longer_than_consecutive(seed in 0u64..200) {
        let (_, _, stats) = setup(seed);
        let graph = build_level_graph(&stats);
        let last = stats.last_level();
        for from in 1..=last {
            for to in 0..from {
                let consecutive = select_path(&graph, from, to, PathStrategy::Consecutive);
                let shortest = select_path(&graph, from, to, PathStrategy::Shortest);
                if let Ok(c) = consecutive {
                    let s = shortest.expect("consecutive implies reachable");
                    prop_assert!(s.vertices().len() <= c.vertices().len());
                }
            }
        }
    }
}

fn all_simple_paths(stats: &LevelStats<Q>, from: usize, to: usize) -> Vec<Path> {
    let graph = build_level_graph(stats);
    fn walk(
        graph: &driftlab::graph::LevelGraph,
        at: usize,
        to: usize,
        prefix: &mut Vec<usize>,
        out: &mut Vec<Path>,
    ) {
        for next in (to..at).rev() {
            if !graph.has_arc(at, next) {
                continue;
            }
            prefix.push(next);
            if next == to {
                out.push(Path::new(graph, prefix.clone()).unwrap());
            } else {
                walk(graph, next, to, prefix, out);
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    let mut prefix = vec![from];
    walk(&graph, from, to, &mut prefix, &mut out);
    out
}

#[test]
fn exit_times_respect_the_escape_probability_bound() {
    for seed in 0..100 {
        let (chain, partition, stats) = setup(seed);
        for level in 1..partition.level_count() {
            let exits = mean_exit_time(&chain, &partition, level).unwrap();
            let min_exit = exits.iter().min().unwrap();
            assert!(*min_exit >= Q::one());
            // Weakest form of the waiting-time argument: the fastest state
            // still waits at least one over the strongest escape mass.
            let bound = Q::one() / stats.max_climb(level).clone();
            assert!(
                *min_exit >= bound,
                "seed {seed} level {level}: {min_exit} < {bound}"
            );
        }
    }
}

#[test]
fn path_tables_are_bracketed_by_the_forward_tables() {
    for seed in 0..60 {
        let (_, _, stats) = setup(seed);
        let last = stats.last_level();
        let fwd_lower = forward_table(&stats, Direction::Lower).unwrap();
        let fwd_upper = forward_table(&stats, Direction::Upper).unwrap();
        for from in 2..=last {
            for to in 1..from {
                for path in all_simple_paths(&stats, from, to) {
                    for form in [PathForm::Explicit, PathForm::Recursive] {
                        let lower = path_table(&stats, &path, Direction::Lower, form).unwrap();
                        let upper = path_table(&stats, &path, Direction::Upper, form).unwrap();
                        for k in 2..=last {
                            for l in 1..k {
                                assert!(
                                    lower.get(k, l) <= fwd_lower.get(k, l),
                                    "seed {seed} path {:?} ({k},{l})",
                                    path.vertices()
                                );
                                assert!(
                                    upper.get(k, l) >= fwd_upper.get(k, l),
                                    "seed {seed} path {:?} ({k},{l})",
                                    path.vertices()
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn per_pair_tables_dominate_per_level_tables_in_both_directions() {
    for seed in 0..100 {
        let (_, _, stats) = setup(seed);
        if stats.last_level() < 2 {
            continue;
        }
        let fill = |values: Vec<Option<Q>>, fallback: Q| -> Vec<Option<Q>> {
            values
                .into_iter()
                .map(|v| v.or_else(|| Some(fallback.clone())))
                .collect()
        };
        let cl_lower = fill(type_cl_coeffs(&stats, Direction::Lower).unwrap(), Q::zero());
        let cl_lower = table_from_per_level(Direction::Lower, Method::TypeCl, &cl_lower);
        let fwd_lower = forward_table(&stats, Direction::Lower).unwrap();
        assert!(dominance_check(&cl_lower, &fwd_lower)
            .unwrap()
            .is_dominated());

        let cl_upper = fill(type_cl_coeffs(&stats, Direction::Upper).unwrap(), Q::one());
        let cl_upper = table_from_per_level(Direction::Upper, Method::TypeCl, &cl_upper);
        let fwd_upper = forward_table(&stats, Direction::Upper).unwrap();
        assert!(dominance_check(&cl_upper, &fwd_upper)
            .unwrap()
            .is_dominated());

        // And the scalar family sits outside the per-level one.
        let c_upper = type_c_coeff(&stats, Direction::Upper).unwrap();
        for l in 1..stats.last_level() {
            assert!(cl_upper.get(stats.last_level(), l) <= c_upper);
        }
    }
}

#[test]
fn every_family_produces_a_valid_sandwich_on_random_chains() {
    for seed in 0..60 {
        let (chain, partition, stats) = setup(seed);
        let last = stats.last_level();
        let m = mean_hitting_time(&chain).unwrap();

        let mut lower_tables: Vec<CoefficientTable<Q>> = vec![
            forward_table(&stats, Direction::Lower).unwrap(),
            reverse_table(&stats, Direction::Lower).unwrap(),
            constant_table(Direction::Lower, last, Q::zero()),
        ];
        let mut upper_tables: Vec<CoefficientTable<Q>> = vec![
            forward_table(&stats, Direction::Upper).unwrap(),
            reverse_table(&stats, Direction::Upper).unwrap(),
            constant_table(Direction::Upper, last, Q::one()),
        ];
        if last >= 2 {
            let scalar = type_c_coeff(&stats, Direction::Lower).unwrap();
            let mut values = vec![Some(scalar); last + 1];
            values[0] = Some(Q::one());
            lower_tables.push(table_from_per_level(
                Direction::Lower,
                Method::TypeC,
                &values,
            ));
            let scalar = type_c_coeff(&stats, Direction::Upper).unwrap();
            let mut values = vec![Some(scalar); last + 1];
            values[0] = Some(Q::one());
            upper_tables.push(table_from_per_level(
                Direction::Upper,
                Method::TypeC,
                &values,
            ));
        }
        // The worst-level state with the smallest hitting time constrains the
        // lower bound; the largest constrains the upper bound.
        let m_min = partition
            .level(last)
            .iter()
            .map(|&s| m[s].clone())
            .min()
            .unwrap();
        let m_max = partition
            .level(last)
            .iter()
            .map(|&s| m[s].clone())
            .max()
            .unwrap();
        for table in &lower_tables {
            let value = lower_time_bound(&stats, table, last)
                .unwrap()
                .lower
                .unwrap()
                .value;
            let BoundValue::Finite(value) = value else {
                panic!("lower bounds are finite");
            };
            assert!(value <= m_min, "seed {seed} {}", table.method);
        }
        for table in &upper_tables {
            match upper_time_bound(&stats, table, last)
                .unwrap()
                .upper
                .unwrap()
                .value
            {
                BoundValue::Finite(value) => {
                    assert!(value >= m_max, "seed {seed} {}", table.method)
                }
                BoundValue::Unbounded => {}
            }
        }
    }
}

#[test]
fn larger_lower_tables_never_weaken_the_bound() {
    for seed in 0..40 {
        let (_, _, stats) = setup(seed);
        let last = stats.last_level();
        let trivial = constant_table(Direction::Lower, last, Q::zero());
        let forward = forward_table(&stats, Direction::Lower).unwrap();
        let weak = lower_time_bound(&stats, &trivial, last)
            .unwrap()
            .lower
            .unwrap()
            .value;
        let strong = lower_time_bound(&stats, &forward, last)
            .unwrap()
            .lower
            .unwrap()
            .value;
        assert!(weak <= strong);

        let trivial = constant_table(Direction::Upper, last, Q::one());
        let forward = forward_table(&stats, Direction::Upper).unwrap();
        let loose = upper_time_bound(&stats, &trivial, last)
            .unwrap()
            .upper
            .unwrap()
            .value;
        let tight = upper_time_bound(&stats, &forward, last)
            .unwrap()
            .upper
            .unwrap()
            .value;
        assert!(tight <= loose);
    }
}

#[test]
fn every_family_satisfies_the_table_invariants() {
    for seed in 0..60 {
        let (_, _, stats) = setup(seed);
        let last = stats.last_level();
        let mut tables = vec![
            forward_table(&stats, Direction::Lower).unwrap(),
            forward_table(&stats, Direction::Upper).unwrap(),
            reverse_table(&stats, Direction::Lower).unwrap(),
            reverse_table(&stats, Direction::Upper).unwrap(),
        ];
        if last >= 2 {
            if let Some(path) = all_simple_paths(&stats, last, 1).into_iter().next() {
                tables
                    .push(path_table(&stats, &path, Direction::Lower, PathForm::Explicit).unwrap());
                tables
                    .push(path_table(&stats, &path, Direction::Upper, PathForm::Explicit).unwrap());
            }
        }
        for table in &tables {
            let violations = table.invariant_violations();
            assert!(
                violations.is_empty(),
                "seed {seed} {}: {violations:?}",
                table.method
            );
        }
    }
}

#[test]
fn estimates_agree_with_the_oracle_on_every_small_cell() {
    // Cells not already pinned by the acceptance suite.
    let cells = [
        (InstanceId::Kp1, Variant::FeasibilityRules, 6),
        (InstanceId::Kp1, Variant::GreedyRepair, 6),
        (InstanceId::Kp2, Variant::FeasibilityRules, 6),
        (InstanceId::Kp2, Variant::GreedyRepair, 6),
        (InstanceId::Kp2, Variant::GreedyRepair, 8),
    ];
    for (id, variant, n) in cells {
        let instance = make_instance(id.clone(), n).unwrap();
        let chain: StateChain<Q> = build_lumped_chain(&instance, variant).unwrap();
        let start = chain.state_index("(0,0;0)").unwrap();
        let exact = Scalar::to_f64(&mean_hitting_time(&chain).unwrap()[start]);
        let est = estimate_hitting_time(&instance, variant, 10_000, 1_000_000, 1234).unwrap();
        assert_eq!(est.censored, 0, "{id} {variant} n={n}");
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.std_error,
            "{id} {variant} n={n}: |{} - {exact}| > 3 * {}",
            est.mean,
            est.std_error
        );
    }
}

#[test]
fn estimates_are_identical_across_thread_counts() {
    let instance = make_instance(InstanceId::Kp1, 8).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                estimate_hitting_time(&instance, Variant::GreedyRepair, 2_000, 100_000, 99).unwrap()
            })
    };
    assert_eq!(run(1), run(4));
}
