//! Finite absorbing Markov chains over fitness-ranked states.
//!
//! A [`StateChain`] models one generation of an elitist EA: states carry exact
//! fitness values, rows are one-step transition distributions, and the
//! declared optimal set must be the maximum-fitness states. Validation is
//! diagnostic (it reports every violation instead of failing fast) because
//! chains arrive from untrusted JSON as well as from internal builders.

use std::collections::BTreeMap;
use std::fmt;

use crate::numeric::Scalar;
use crate::{Error, Result};

/// One validation finding. An empty diagnostic list means the chain satisfies
/// every structural invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// Row mass differs from 1 (beyond the mode's tolerance).
    RowNotStochastic { state: String, sum: String },
    /// A probability outside `[0, 1]`.
    ProbabilityOutOfRange { from: String, to: String, p: String },
    /// Positive transition to a strictly worse state.
    ElitismViolated { from: String, to: String },
    /// State cannot reach the optimal set in the support digraph.
    NotConvergent { state: String },
    /// Declared optimal flags disagree with the maximum-fitness states.
    OptimalSetMismatch { state: String, declared: bool },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::RowNotStochastic { state, sum } => {
                write!(f, "row not stochastic: state {state} sums to {sum}")
            }
            Diagnostic::ProbabilityOutOfRange { from, to, p } => {
                write!(f, "probability out of range: p({from},{to}) = {p}")
            }
            Diagnostic::ElitismViolated { from, to } => {
                write!(
                    f,
                    "elitism violated: positive transition {from} -> {to} loses fitness"
                )
            }
            Diagnostic::NotConvergent { state } => {
                write!(
                    f,
                    "not convergent: state {state} cannot reach the optimal set"
                )
            }
            Diagnostic::OptimalSetMismatch { state, declared } => {
                if *declared {
                    write!(
                        f,
                        "optimal set mismatch: {state} declared optimal but is not maximal"
                    )
                } else {
                    write!(
                        f,
                        "optimal set mismatch: {state} has maximal fitness but is not declared"
                    )
                }
            }
        }
    }
}

/// Finite Markov chain with exact fitness values and per-state transition rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StateChain<S: Scalar> {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    fitness: Vec<S>,
    /// Sparse rows sorted by target index; duplicate targets merged.
    rows: Vec<Vec<(usize, S)>>,
    optimal: Vec<bool>,
}

impl<S: Scalar> StateChain<S> {
    /// Assemble a chain from parts. Duplicate `(from, to)` entries are summed;
    /// the optimal set defaults to the maximum-fitness states when `optimal`
    /// is `None`. Structural problems (unknown states, duplicate ids) are hard
    /// errors; probabilistic invariants are left to [`validate_chain`].
    pub fn from_parts(
        states: Vec<(String, S)>,
        transitions: Vec<(String, String, S)>,
        optimal: Option<Vec<String>>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Parse("chain has no states".into()));
        }
        let mut index = BTreeMap::new();
        let mut names = Vec::with_capacity(states.len());
        let mut fitness = Vec::with_capacity(states.len());
        for (name, fit) in states {
            if index.insert(name.clone(), names.len()).is_some() {
                return Err(Error::Parse(format!("duplicate state id {name:?}")));
            }
            names.push(name);
            fitness.push(fit);
        }
        let mut rows: Vec<BTreeMap<usize, S>> = vec![BTreeMap::new(); names.len()];
        for (from, to, p) in transitions {
            let &fi = index
                .get(&from)
                .ok_or_else(|| Error::Parse(format!("unknown source state {from:?}")))?;
            let &ti = index
                .get(&to)
                .ok_or_else(|| Error::Parse(format!("unknown target state {to:?}")))?;
            let entry = rows[fi].entry(ti).or_insert_with(S::zero);
            *entry = entry.clone() + p;
        }
        let optimal_flags = match optimal {
            Some(ids) => {
                let mut flags = vec![false; names.len()];
                for id in ids {
                    let &i = index
                        .get(&id)
                        .ok_or_else(|| Error::Parse(format!("unknown optimal state {id:?}")))?;
                    flags[i] = true;
                }
                flags
            }
            None => {
                let best = fitness
                    .iter()
                    .cloned()
                    .reduce(crate::numeric::max_s)
                    .expect("non-empty");
                fitness.iter().map(|f| *f == best).collect()
            }
        };
        Ok(Self {
            names,
            index,
            fitness,
            rows: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
            optimal: optimal_flags,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, state: usize) -> &str {
        &self.names[state]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn fitness(&self, state: usize) -> &S {
        &self.fitness[state]
    }

    pub fn row(&self, state: usize) -> &[(usize, S)] {
        &self.rows[state]
    }

    pub fn is_optimal(&self, state: usize) -> bool {
        self.optimal[state]
    }

    pub fn optimal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.optimal[i])
    }

    /// Direct transition probability `p(from, to)`.
    pub fn probability(&self, from: usize, to: usize) -> S {
        match self.rows[from].binary_search_by_key(&to, |&(t, _)| t) {
            Ok(pos) => self.rows[from][pos].1.clone(),
            Err(_) => S::zero(),
        }
    }

    /// Validate every chain invariant and return the violations found.
    /// Never fails: an invalid chain yields a non-empty report.
    pub fn validate(&self) -> Vec<Diagnostic> {
        validate_chain(self)
    }

    /// Error with the full diagnostic report when the chain is invalid.
    pub fn ensure_valid(&self) -> Result<()> {
        let diagnostics = self.validate();
        if diagnostics.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidChain(
                diagnostics.iter().map(|d| d.to_string()).collect(),
            ))
        }
    }
}

/// Check row stochasticity, elitism, optimal-set agreement, and convergence.
pub fn validate_chain<S: Scalar>(chain: &StateChain<S>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = chain.len();

    for i in 0..n {
        let mut sum = S::zero();
        for (t, p) in chain.row(i) {
            sum = sum + p.clone();
            if *p < S::zero() || *p > S::one() {
                out.push(Diagnostic::ProbabilityOutOfRange {
                    from: chain.name(i).into(),
                    to: chain.name(*t).into(),
                    p: p.render(),
                });
            }
            if !p.is_zero_prob() && chain.fitness(*t) < chain.fitness(i) {
                out.push(Diagnostic::ElitismViolated {
                    from: chain.name(i).into(),
                    to: chain.name(*t).into(),
                });
            }
        }
        if !sum.close_to(&S::one(), &S::prob_tol()) {
            out.push(Diagnostic::RowNotStochastic {
                state: chain.name(i).into(),
                sum: sum.render(),
            });
        }
    }

    let best = (0..n)
        .map(|i| chain.fitness(i).clone())
        .reduce(crate::numeric::max_s)
        .expect("non-empty chain");
    for i in 0..n {
        let maximal = *chain.fitness(i) == best;
        if maximal != chain.is_optimal(i) {
            out.push(Diagnostic::OptimalSetMismatch {
                state: chain.name(i).into(),
                declared: chain.is_optimal(i),
            });
        }
    }

    // Convergence: every state must reach the optimal set in the support
    // digraph. Walk the reversed support edges from the optimal states.
    let mut reaches: Vec<bool> = (0..n).map(|i| chain.is_optimal(i)).collect();
    let mut frontier: Vec<usize> = (0..n).filter(|&i| reaches[i]).collect();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for (t, p) in chain.row(i) {
            if !p.is_zero_prob() && *t != i {
                incoming[*t].push(i);
            }
        }
    }
    while let Some(v) = frontier.pop() {
        for &u in &incoming[v] {
            if !reaches[u] {
                reaches[u] = true;
                frontier.push(u);
            }
        }
    }
    for i in 0..n {
        if !reaches[i] {
            out.push(Diagnostic::NotConvergent {
                state: chain.name(i).into(),
            });
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::t1_chain;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        crate::numeric::Scalar::from_ratio(n, d)
    }

    #[test]
    fn t1_is_valid() {
        let chain = t1_chain();
        assert!(chain.validate().is_empty());
    }

    #[test]
    fn rescaled_row_is_flagged_non_stochastic() {
        let chain = StateChain::from_parts(
            vec![
                ("s2".into(), q(0, 1)),
                ("s1".into(), q(1, 1)),
                ("s0".into(), q(2, 1)),
            ],
            vec![
                // s2 row rescaled to total 9/10.
                ("s2".into(), "s2".into(), q(54, 100)),
                ("s2".into(), "s1".into(), q(27, 100)),
                ("s2".into(), "s0".into(), q(9, 100)),
                ("s1".into(), "s1".into(), q(1, 2)),
                ("s1".into(), "s0".into(), q(1, 2)),
                ("s0".into(), "s0".into(), q(1, 1)),
            ],
            None,
        )
        .unwrap();
        let diags = chain.validate();
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::RowNotStochastic { state, .. } if state == "s2")));
    }

    #[test]
    fn downhill_transition_is_flagged_as_elitism_violation() {
        let chain = StateChain::from_parts(
            vec![
                ("s2".into(), q(0, 1)),
                ("s1".into(), q(1, 1)),
                ("s0".into(), q(2, 1)),
            ],
            vec![
                ("s2".into(), "s2".into(), q(6, 10)),
                ("s2".into(), "s1".into(), q(3, 10)),
                ("s2".into(), "s0".into(), q(1, 10)),
                ("s1".into(), "s1".into(), q(2, 5)),
                ("s1".into(), "s0".into(), q(1, 2)),
                ("s1".into(), "s2".into(), q(1, 10)),
                ("s0".into(), "s0".into(), q(1, 1)),
            ],
            None,
        )
        .unwrap();
        let diags = chain.validate();
        assert!(diags.iter().any(
            |d| matches!(d, Diagnostic::ElitismViolated { from, to } if from == "s1" && to == "s2")
        ));
    }

    #[test]
    fn unreachable_optimum_is_flagged() {
        let chain = StateChain::from_parts(
            vec![("a".into(), q(0, 1)), ("b".into(), q(1, 1))],
            vec![
                ("a".into(), "a".into(), q(1, 1)),
                ("b".into(), "b".into(), q(1, 1)),
            ],
            None,
        )
        .unwrap();
        let diags = chain.validate();
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::NotConvergent { state } if state == "a")));
    }

    #[test]
    fn declared_optimal_must_match_maximal_fitness() {
        let chain = StateChain::from_parts(
            vec![("a".into(), q(0, 1)), ("b".into(), q(1, 1))],
            vec![
                ("a".into(), "b".into(), q(1, 1)),
                ("b".into(), "b".into(), q(1, 1)),
            ],
            Some(vec!["a".into()]),
        )
        .unwrap();
        let diags = chain.validate();
        assert_eq!(
            diags
                .iter()
                .filter(|d| matches!(d, Diagnostic::OptimalSetMismatch { .. }))
                .count(),
            2
        );
    }

    #[test]
    fn duplicate_transitions_accumulate() {
        let chain = StateChain::from_parts(
            vec![("a".into(), q(0, 1)), ("b".into(), q(1, 1))],
            vec![
                ("a".into(), "b".into(), q(1, 2)),
                ("a".into(), "b".into(), q(1, 2)),
                ("b".into(), "b".into(), q(1, 1)),
            ],
            None,
        )
        .unwrap();
        assert_eq!(chain.probability(0, 1), q(1, 1));
        assert!(chain.validate().is_empty());
    }
}
