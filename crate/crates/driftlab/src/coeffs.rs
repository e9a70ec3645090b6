//! Coefficient families bounding hitting probabilities.
//!
//! Every family produces a triangular [`CoefficientTable`] whose entry at
//! `(k, l)` bounds the probability of ever visiting level `l` when starting
//! from level `k`: lower-direction entries stay below the minimum hitting
//! probability, upper-direction entries above the maximum. The families trade
//! tightness against computation:
//!
//! * `forward` — the tightest per-pair table, one state-wise extremization per
//!   level, recursing upward from the target.
//! * `reverse` — recursion on level extrema running from the source downward;
//!   its values coincide with the explicit all-path sums.
//! * `allpath` — brute-force enumeration of every descending level sequence;
//!   exponential, kept as an independent route to the same values as
//!   `reverse` (guarded).
//! * `path` — coefficients supported on a single path, explicit product /
//!   sum forms plus the recursive variants.
//! * `type_c` / `type_cl` — one scalar (viscosity) or one value per target
//!   level (visit probability); `random_init` caps the latter by the start
//!   distribution.

use std::fmt;

use crate::graph::Path;
use crate::level::{LevelPartition, LevelStats};
use crate::numeric::{max_s, min_s, Scalar};
use crate::{Error, Result};

/// Whether a table under-approximates (`Lower`) or over-approximates
/// (`Upper`) hitting probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Lower,
    Upper,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Provenance of a coefficient table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    Forward,
    Reverse,
    AllPath,
    PathExplicit(Vec<usize>),
    PathRecursive(Vec<usize>),
    TypeC,
    TypeCl,
    RandomInit,
    Constant,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Forward => f.write_str("forward"),
            Method::Reverse => f.write_str("reverse"),
            Method::AllPath => f.write_str("allpath"),
            Method::PathExplicit(p) => write!(f, "path({})", join(p)),
            Method::PathRecursive(p) => write!(f, "path_recursive({})", join(p)),
            Method::TypeC => f.write_str("type_c"),
            Method::TypeCl => f.write_str("type_cl"),
            Method::RandomInit => f.write_str("random_init"),
            Method::Constant => f.write_str("constant"),
        }
    }
}

fn join(p: &[usize]) -> String {
    p.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Triangular table `c_{k,l}` for `0 <= l <= k <= K` with the fixed entries
/// `c_{k,k} = c_{k,0} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable<S: Scalar> {
    pub direction: Direction,
    pub method: Method,
    /// `entries[k][l]` for `l = 0..=k`.
    entries: Vec<Vec<S>>,
}

impl<S: Scalar> CoefficientTable<S> {
    fn with_fixed(direction: Direction, method: Method, last_level: usize) -> Self {
        let mut entries = Vec::with_capacity(last_level + 1);
        for k in 0..=last_level {
            let mut row = vec![S::zero(); k + 1];
            row[0] = S::one();
            row[k] = S::one();
            entries.push(row);
        }
        CoefficientTable {
            direction,
            method,
            entries,
        }
    }

    /// Highest level index `K`.
    pub fn last_level(&self) -> usize {
        self.entries.len() - 1
    }

    /// `c_{k,l}`; zero above the diagonal.
    pub fn get(&self, k: usize, l: usize) -> S {
        if l > k {
            S::zero()
        } else {
            self.entries[k][l].clone()
        }
    }

    fn set(&mut self, k: usize, l: usize, value: S) {
        debug_assert!(l < k, "fixed entries are not assignable");
        self.entries[k][l] = value;
    }

    /// All `(k, l, value)` entrywise violations of the table invariants:
    /// fixed ones on the diagonal and first column, range `[0, 1]`.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, row) in self.entries.iter().enumerate() {
            for (l, v) in row.iter().enumerate() {
                if (l == 0 || l == k) && *v != S::one() {
                    out.push(format!("c[{k}][{l}] = {v} must be 1"));
                } else if *v < S::zero() || *v > S::one() {
                    out.push(format!("c[{k}][{l}] = {v} outside [0,1]"));
                }
            }
        }
        out
    }
}

/// Build a table with every free entry set to one constant (the classic
/// trivial choices are 0 for lower tables and 1 for upper tables).
pub fn constant_table<S: Scalar>(
    direction: Direction,
    last_level: usize,
    value: S,
) -> CoefficientTable<S> {
    let mut table = CoefficientTable::with_fixed(direction, Method::Constant, last_level);
    for k in 2..=last_level {
        for l in 1..k {
            table.set(k, l, value.clone());
        }
    }
    table
}

/// Materialize per-level coefficients `c_l` into a table (`c_{k,l} = c_l`).
pub fn table_from_per_level<S: Scalar>(
    direction: Direction,
    method: Method,
    values: &[Option<S>],
) -> CoefficientTable<S> {
    let last_level = values.len() - 1;
    let mut table = CoefficientTable::with_fixed(direction, method, last_level);
    for k in 2..=last_level {
        for l in 1..k {
            let v = values[l]
                .clone()
                .expect("per-level coefficient required for every fed level");
            table.set(k, l, v);
        }
    }
    table
}

fn extremize<S: Scalar>(direction: Direction, a: S, b: S) -> S {
    match direction {
        Direction::Lower => min_s(a, b),
        Direction::Upper => max_s(a, b),
    }
}

fn clamp_unit<S: Scalar>(v: S) -> S {
    if v > S::one() {
        S::one()
    } else {
        v
    }
}

/// One column of the forward recursion: for the target level `l`, walk `j`
/// upward and assign the extremal admissible value, a state-wise min (lower)
/// or max (upper) of the one-step bracket. Returns `c_{j,l}` for `j = 0..=K`
/// (zero below `l`, one at `l`).
pub fn forward_column<S: Scalar>(
    stats: &LevelStats<S>,
    direction: Direction,
    target: usize,
) -> Result<Vec<S>> {
    let last = stats.last_level();
    if target == 0 || target > last {
        return Err(Error::Internal(format!(
            "forward column target must lie in 1..=K, got {target}"
        )));
    }
    let mut col = vec![S::zero(); last + 1];
    col[target] = S::one();
    for j in target + 1..=last {
        let mut best: Option<S> = None;
        for (slot, row) in stats.state_transitions(j).iter().enumerate() {
            // Bracket evaluated in transition space, divided by the escape
            // mass once: r(X, S_i) = p(X, S_i) / p(X, leave).
            let mut acc = S::zero();
            for i in target..j {
                if !row[i].is_zero() {
                    acc = acc + row[i].clone() * col[i].clone();
                }
            }
            let bracket = acc / stats.state_leaves(j)[slot].clone();
            best = Some(match best {
                None => bracket,
                Some(b) => extremize(direction, b, bracket),
            });
        }
        col[j] = best.expect("non-empty level");
        debug_assert!(col[j] <= S::one() || !S::EXACT);
    }
    Ok(col)
}

/// Full forward table: one [`forward_column`] per target level.
pub fn forward_table<S: Scalar>(
    stats: &LevelStats<S>,
    direction: Direction,
) -> Result<CoefficientTable<S>> {
    let last = stats.last_level();
    let mut table = CoefficientTable::with_fixed(direction, Method::Forward, last);
    for target in 1..=last {
        let col = forward_column(stats, direction, target)?;
        for j in target + 1..=last {
            table.set(j, target, clamp_unit(col[j].clone()));
        }
    }
    Ok(table)
}

/// One row of the reverse recursion for source level `k`: starting from
/// `c_{k,k} = 1`, each target picks up the mass of every already-computed
/// entry times the extremal conditional step into it. Returns raw values
/// (the upper direction may exceed one before clamping).
fn reverse_row_raw<S: Scalar>(stats: &LevelStats<S>, direction: Direction, k: usize) -> Vec<S> {
    let mut row = vec![S::zero(); k + 1];
    row[k] = S::one();
    for target in (1..k).rev() {
        let mut acc = S::zero();
        for i in target + 1..=k {
            let step = match direction {
                Direction::Lower => stats.min_conditional(i, target),
                Direction::Upper => stats.max_conditional(i, target),
            };
            if !step.is_zero() {
                acc = acc + row[i].clone() * step.clone();
            }
        }
        row[target] = acc;
    }
    if k >= 1 {
        row[0] = S::one();
    }
    row
}

/// Reverse-direction row for source level `k` (clamped to `[0, 1]`).
pub fn reverse_row<S: Scalar>(
    stats: &LevelStats<S>,
    direction: Direction,
    k: usize,
) -> Result<Vec<S>> {
    if k == 0 || k > stats.last_level() {
        return Err(Error::Internal(format!(
            "reverse row source must lie in 1..=K, got {k}"
        )));
    }
    Ok(reverse_row_raw(stats, direction, k)
        .into_iter()
        .map(clamp_unit)
        .collect())
}

/// Full reverse table.
pub fn reverse_table<S: Scalar>(
    stats: &LevelStats<S>,
    direction: Direction,
) -> Result<CoefficientTable<S>> {
    let last = stats.last_level();
    let mut table = CoefficientTable::with_fixed(direction, Method::Reverse, last);
    for k in 2..=last {
        let row = reverse_row_raw(stats, direction, k);
        for l in 1..k {
            table.set(k, l, clamp_unit(row[l].clone()));
        }
    }
    Ok(table)
}

/// Number of levels beyond which all-path enumeration is refused.
pub const ALLPATH_GUARD: usize = 14;

/// Sum, over every strictly descending level sequence from `k` to `target`,
/// of the product of extremal conditional steps along the sequence. Exponential
/// in `K`; this is the deliberately brute-force route that must reproduce the
/// reverse recursion exactly.
fn allpath_pair<S: Scalar>(
    stats: &LevelStats<S>,
    direction: Direction,
    k: usize,
    target: usize,
) -> S {
    fn walk<S: Scalar>(
        stats: &LevelStats<S>,
        direction: Direction,
        at: usize,
        target: usize,
        weight: S,
        acc: &mut S,
    ) {
        for next in target..at {
            let step = match direction {
                Direction::Lower => stats.min_conditional(at, next),
                Direction::Upper => stats.max_conditional(at, next),
            };
            if step.is_zero() {
                continue;
            }
            let w = weight.clone() * step.clone();
            if next == target {
                *acc = acc.clone() + w;
            } else {
                walk(stats, direction, next, target, w, acc);
            }
        }
    }
    let mut acc = S::zero();
    walk(stats, direction, k, target, S::one(), &mut acc);
    acc
}

/// Brute-force all-path table. Errors beyond [`ALLPATH_GUARD`] levels: use the
/// recursive form instead.
pub fn allpath_table<S: Scalar>(
    stats: &LevelStats<S>,
    direction: Direction,
) -> Result<CoefficientTable<S>> {
    let last = stats.last_level();
    if last > ALLPATH_GUARD {
        return Err(Error::AllPathGuard { levels: last });
    }
    let mut table = CoefficientTable::with_fixed(direction, Method::AllPath, last);
    for k in 2..=last {
        for l in 1..k {
            table.set(k, l, clamp_unit(allpath_pair(stats, direction, k, l)));
        }
    }
    Ok(table)
}

/// Which formulation of the path-restricted coefficients to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathForm {
    /// Non-recursive product (lower) / sum (upper) expressions.
    Explicit,
    /// Recursive assignment restricted to the path's vertices.
    Recursive,
}

/// Path-restricted table. Only the column of the path's target carries
/// information: on-path levels get the path formula, off-path levels between
/// target and source get the hard assignment (0 for lower, 1 for upper), and
/// everything else falls back to the trivial constants of the direction.
pub fn path_table<S: Scalar>(
    stats: &LevelStats<S>,
    path: &Path,
    direction: Direction,
    form: PathForm,
) -> Result<CoefficientTable<S>> {
    let last = stats.last_level();
    if path.source() > last {
        return Err(Error::InvalidPath(format!(
            "path source {} beyond last level {last}",
            path.source()
        )));
    }
    let target = path.target();
    if target == 0 && path.source() != 0 {
        // A path into the optimal set carries no information beyond c_{k,0}=1.
        return Ok(constant_table(
            direction,
            last,
            match direction {
                Direction::Lower => S::zero(),
                Direction::Upper => S::one(),
            },
        ));
    }

    let method = match form {
        PathForm::Explicit => Method::PathExplicit(path.vertices().to_vec()),
        PathForm::Recursive => Method::PathRecursive(path.vertices().to_vec()),
    };
    let trivial = match direction {
        Direction::Lower => S::zero(),
        Direction::Upper => S::one(),
    };
    let mut table = CoefficientTable::with_fixed(direction, method, last);
    for k in 2..=last {
        for l in 1..k {
            table.set(k, l, trivial.clone());
        }
    }
    if path.source() == target {
        return Ok(table);
    }

    // Ascending on-path vertices: target = p_0 < p_1 < ... < p_m = source.
    let ascending = path.ascending();
    let mut value = vec![S::zero(); ascending.len()];
    value[0] = S::one();
    for (t, &j) in ascending.iter().enumerate().skip(1) {
        let v = match (direction, form) {
            (Direction::Lower, PathForm::Explicit) => {
                // Product over steps into the sub-path below, each taken at
                // its own weakest state.
                let mut prod = S::one();
                for (s, &i) in ascending.iter().enumerate().skip(1) {
                    if i > j {
                        break;
                    }
                    let below = &ascending[..s];
                    prod = prod * stats.min_conditional_set(i, below);
                }
                prod
            }
            (Direction::Lower, PathForm::Recursive) => {
                // State-wise minimum of the bracket restricted to on-path terms.
                let mut best: Option<S> = None;
                for (slot, row) in stats.state_transitions(j).iter().enumerate() {
                    let mut acc = row[target].clone();
                    for (s, &i) in ascending.iter().enumerate().skip(1) {
                        if i >= j {
                            break;
                        }
                        acc = acc + row[i].clone() * value[s].clone();
                    }
                    let bracket = acc / stats.state_leaves(j)[slot].clone();
                    best = Some(match best {
                        None => bracket,
                        Some(b) => min_s(b, bracket),
                    });
                }
                best.expect("non-empty level")
            }
            (Direction::Upper, PathForm::Explicit) => {
                // Sum over on-path vertices of the strongest step that leaves
                // the path: every level in [target, i) except the on-path
                // interior below i.
                let mut sum = S::zero();
                for (s, &i) in ascending.iter().enumerate().skip(1) {
                    if i > j {
                        break;
                    }
                    let off_path: Vec<usize> = (target..i)
                        .filter(|v| !ascending[1..s].contains(v))
                        .collect();
                    sum = sum + stats.max_conditional_set(i, &off_path);
                }
                sum
            }
            (Direction::Upper, PathForm::Recursive) => {
                let mut best: Option<S> = None;
                for (slot, row) in stats.state_transitions(j).iter().enumerate() {
                    let interior: Vec<usize> = ascending
                        .iter()
                        .copied()
                        .filter(|&v| v > target && v < j)
                        .collect();
                    let mut acc = S::zero();
                    for i in target..j {
                        if !interior.contains(&i) {
                            acc = acc + row[i].clone();
                        }
                    }
                    for (s, &i) in ascending.iter().enumerate().skip(1) {
                        if i >= j {
                            break;
                        }
                        acc = acc + row[i].clone() * value[s].clone();
                    }
                    let bracket = acc / stats.state_leaves(j)[slot].clone();
                    best = Some(match best {
                        None => bracket,
                        Some(b) => max_s(b, bracket),
                    });
                }
                best.expect("non-empty level")
            }
        };
        value[t] = v.clone();
        if j >= 2 && target >= 1 && target < j {
            table.set(j, target, clamp_unit(v));
        }
    }
    // Off-path levels between target and source keep the hard assignment,
    // which the trivial fill above already provides.
    Ok(table)
}

/// Single scalar coefficient (viscosity): the extremal ratio of "step into
/// `S_l`" to "step into `S_[0,l]`" over every pair `k > l >= 1` and every
/// state with positive denominator.
pub fn type_c_coeff<S: Scalar>(stats: &LevelStats<S>, direction: Direction) -> Result<S> {
    let mut best: Option<S> = None;
    for l in 1..stats.last_level() {
        if let Some(v) = type_ratio_extremum(stats, direction, l) {
            best = Some(match best {
                None => v,
                Some(b) => extremize(direction, b, v),
            });
        }
    }
    best.ok_or(Error::NoQualifyingPair)
}

/// Per-target-level coefficients (visit probabilities). `None` for level `K`
/// (no feeding level) and level 0 (fixed at one by convention).
pub fn type_cl_coeffs<S: Scalar>(
    stats: &LevelStats<S>,
    direction: Direction,
) -> Result<Vec<Option<S>>> {
    let last = stats.last_level();
    let mut out = vec![None; last + 1];
    let mut any = false;
    for l in 1..last {
        out[l] = type_ratio_extremum(stats, direction, l);
        any |= out[l].is_some();
    }
    if !any {
        return Err(Error::NoQualifyingPair);
    }
    Ok(out)
}

fn type_ratio_extremum<S: Scalar>(
    stats: &LevelStats<S>,
    direction: Direction,
    l: usize,
) -> Option<S> {
    let mut best: Option<S> = None;
    for k in l + 1..=stats.last_level() {
        for row in stats.state_transitions(k) {
            let denom: S = row[..=l].iter().fold(S::zero(), |acc, v| acc + v.clone());
            if denom.is_zero_prob() {
                continue;
            }
            let ratio = row[l].clone() / denom;
            best = Some(match best {
                None => ratio,
                Some(b) => extremize(direction, b, ratio),
            });
        }
    }
    best
}

/// Lower-direction per-level coefficients under random initialization: the
/// transition ratio capped by the start distribution's visit ratio. A start
/// prefix with zero mass forces the coefficient to zero.
pub fn random_init_coeffs<S: Scalar>(
    stats: &LevelStats<S>,
    init_by_level: &[S],
) -> Result<Vec<Option<S>>> {
    let last = stats.last_level();
    if init_by_level.len() != last + 1 {
        return Err(Error::BadDistribution(format!(
            "expected {} level masses, got {}",
            last + 1,
            init_by_level.len()
        )));
    }
    if init_by_level.iter().any(|v| *v < S::zero()) {
        return Err(Error::BadDistribution("negative mass".into()));
    }
    let total = init_by_level
        .iter()
        .fold(S::zero(), |acc, v| acc + v.clone());
    if !total.close_to(&S::one(), &S::prob_tol()) {
        return Err(Error::BadDistribution(format!("masses sum to {total}")));
    }

    let mut out = vec![None; last + 1];
    let mut prefix = init_by_level[0].clone();
    for l in 1..=last {
        prefix = prefix + init_by_level[l].clone();
        let transition_part = type_ratio_extremum(stats, Direction::Lower, l);
        out[l] = Some(if prefix.is_zero_prob() {
            S::zero()
        } else {
            let start_ratio = init_by_level[l].clone() / prefix.clone();
            match transition_part {
                Some(t) => min_s(t, start_ratio),
                None => start_ratio,
            }
        });
    }
    Ok(out)
}

/// Conditional drift of a table's target column at one state: the entry minus
/// the expected entry after one conditioned step. Lower tables need this
/// non-positive, upper tables non-negative.
pub fn conditional_drift<S: Scalar>(
    partition: &LevelPartition,
    stats: &LevelStats<S>,
    table: &CoefficientTable<S>,
    state: usize,
    target: usize,
) -> Result<S> {
    let k = partition.level_of(state);
    let slot = partition
        .level(k)
        .iter()
        .position(|&s| s == state)
        .expect("state belongs to its level");
    if k == 0 {
        return Err(Error::Internal(
            "conditional drift is defined for non-optimal states".into(),
        ));
    }
    let row = &stats.state_transitions(k)[slot];
    let mut acc = S::zero();
    for i in target..k {
        acc = acc + row[i].clone() * table.get(i, target);
    }
    Ok(table.get(k, target) - acc / stats.state_leaves(k)[slot].clone())
}

/// One dominance violation: a per-level coefficient beating the per-pair one.
#[derive(Debug, Clone)]
pub struct DominanceViolation<S> {
    pub k: usize,
    pub l: usize,
    pub per_level: S,
    pub per_pair: S,
}

/// Report of [`dominance_check`].
#[derive(Debug, Clone)]
pub struct DominanceReport<S> {
    pub violations: Vec<DominanceViolation<S>>,
}

impl<S> DominanceReport<S> {
    pub fn is_dominated(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify that a per-pair table Pareto-dominates a per-level table built from
/// the same statistics: entrywise `>=` for lower tables, `<=` for upper. Any
/// violation is a bug signal in one of the two constructions.
pub fn dominance_check<S: Scalar>(
    per_level: &CoefficientTable<S>,
    per_pair: &CoefficientTable<S>,
) -> Result<DominanceReport<S>> {
    if per_level.last_level() != per_pair.last_level() {
        return Err(Error::ShapeMismatch(format!(
            "tables cover {} and {} levels",
            per_level.last_level() + 1,
            per_pair.last_level() + 1
        )));
    }
    if per_level.direction != per_pair.direction {
        return Err(Error::ShapeMismatch("table directions differ".into()));
    }
    let mut violations = Vec::new();
    for k in 2..=per_pair.last_level() {
        for l in 1..k {
            let a = per_level.get(k, l);
            let b = per_pair.get(k, l);
            let bad = match per_pair.direction {
                Direction::Lower => b < a,
                Direction::Upper => b > a,
            };
            if bad {
                violations.push(DominanceViolation {
                    k,
                    l,
                    per_level: a,
                    per_pair: b,
                });
            }
        }
    }
    Ok(DominanceReport { violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_level_graph, select_path, PathStrategy};
    use crate::testkit::t1_setup;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    fn q(n: i64, d: i64) -> BigRational {
        Scalar::from_ratio(n, d)
    }

    #[test]
    fn t1_forward_lower_is_tight_on_singleton_levels() {
        let (_, _, stats) = t1_setup();
        let table = forward_table(&stats, Direction::Lower).unwrap();
        assert_eq!(table.get(2, 1), q(3, 4));
        assert_eq!(table.get(2, 2), BigRational::one());
        assert_eq!(table.get(2, 0), BigRational::one());
        let upper = forward_table(&stats, Direction::Upper).unwrap();
        assert_eq!(upper.get(2, 1), q(3, 4));
    }

    #[test]
    fn t1_reverse_row_matches_forward_on_singleton_levels() {
        let (_, _, stats) = t1_setup();
        let row = reverse_row(&stats, Direction::Lower, 2).unwrap();
        assert_eq!(row, vec![BigRational::one(), q(3, 4), BigRational::one()]);
    }

    #[test]
    fn reverse_base_case_is_the_single_conditional_step() {
        let (_, _, stats) = t1_setup();
        let row = reverse_row(&stats, Direction::Lower, 2).unwrap();
        assert_eq!(row[1], *stats.min_conditional(2, 1));
    }

    #[test]
    fn t1_allpath_has_one_sequence() {
        let (_, _, stats) = t1_setup();
        let table = allpath_table(&stats, Direction::Lower).unwrap();
        assert_eq!(table.get(2, 1), q(3, 4));
    }

    #[test]
    fn allpath_guard_rejects_large_partitions() {
        use crate::level::{build_level_partition, level_stats};
        use crate::testkit::random_singleton_chain;
        let chain = random_singleton_chain(3, 16);
        let partition = build_level_partition(&chain).unwrap();
        let stats = level_stats(&chain, &partition).unwrap();
        assert!(matches!(
            allpath_table(&stats, Direction::Lower),
            Err(Error::AllPathGuard { .. })
        ));
    }

    #[test]
    fn t1_path_tables_match_hand_values() {
        let (_, _, stats) = t1_setup();
        let graph = build_level_graph(&stats);
        let path = select_path(&graph, 2, 1, PathStrategy::Consecutive).unwrap();
        let explicit = path_table(&stats, &path, Direction::Lower, PathForm::Explicit).unwrap();
        assert_eq!(explicit.get(2, 1), q(3, 4));
        let upper = path_table(&stats, &path, Direction::Upper, PathForm::Explicit).unwrap();
        assert_eq!(upper.get(2, 1), q(3, 4));
    }

    #[test]
    fn off_path_levels_get_hard_assignments() {
        // Levels 0..3 with a direct arc 3 -> 1 skipping level 2.
        use crate::chain::StateChain;
        use crate::level::{build_level_partition, level_stats};
        let chain = StateChain::from_parts(
            vec![
                ("d".into(), q(0, 1)),
                ("c".into(), q(1, 1)),
                ("b".into(), q(2, 1)),
                ("a".into(), q(3, 1)),
            ],
            vec![
                ("d".into(), "d".into(), q(1, 2)),
                ("d".into(), "b".into(), q(1, 4)),
                ("d".into(), "a".into(), q(1, 4)),
                ("c".into(), "c".into(), q(1, 2)),
                ("c".into(), "a".into(), q(1, 2)),
                ("b".into(), "b".into(), q(1, 2)),
                ("b".into(), "a".into(), q(1, 2)),
                ("a".into(), "a".into(), q(1, 1)),
            ],
            None,
        )
        .unwrap();
        let partition = build_level_partition(&chain).unwrap();
        let stats = level_stats(&chain, &partition).unwrap();
        let graph = build_level_graph(&stats);
        // Path 3 -> 1 skips level 2.
        let path = select_path(&graph, 3, 1, PathStrategy::Explicit(vec![3, 1])).unwrap();
        let lower = path_table(&stats, &path, Direction::Lower, PathForm::Explicit).unwrap();
        assert_eq!(lower.get(2, 1), BigRational::zero());
        let upper = path_table(&stats, &path, Direction::Upper, PathForm::Explicit).unwrap();
        assert_eq!(upper.get(2, 1), BigRational::one());
    }

    #[test]
    fn t1_type_c_and_type_cl() {
        let (_, _, stats) = t1_setup();
        assert_eq!(type_c_coeff(&stats, Direction::Lower).unwrap(), q(3, 4));
        assert_eq!(type_c_coeff(&stats, Direction::Upper).unwrap(), q(3, 4));
        let cl = type_cl_coeffs(&stats, Direction::Lower).unwrap();
        assert_eq!(cl[1], Some(q(3, 4)));
        assert_eq!(cl[2], None);
    }

    #[test]
    fn a_skipped_level_drags_the_scalar_coefficient_to_zero() {
        use crate::chain::StateChain;
        use crate::level::{build_level_partition, level_stats};
        // The bottom state jumps straight past the middle level, so its
        // step-into-middle ratio is zero.
        let chain = StateChain::from_parts(
            vec![
                ("low".into(), q(0, 1)),
                ("mid".into(), q(1, 1)),
                ("top".into(), q(2, 1)),
            ],
            vec![
                ("low".into(), "low".into(), q(1, 2)),
                ("low".into(), "top".into(), q(1, 2)),
                ("mid".into(), "mid".into(), q(1, 2)),
                ("mid".into(), "top".into(), q(1, 2)),
                ("top".into(), "top".into(), q(1, 1)),
            ],
            None,
        )
        .unwrap();
        let partition = build_level_partition(&chain).unwrap();
        let stats = level_stats(&chain, &partition).unwrap();
        assert_eq!(
            type_c_coeff(&stats, Direction::Lower).unwrap(),
            BigRational::zero()
        );
    }

    #[test]
    fn type_c_requires_two_non_optimal_levels() {
        use crate::chain::StateChain;
        use crate::level::{build_level_partition, level_stats};
        let chain = StateChain::from_parts(
            vec![("lo".into(), q(0, 1)), ("hi".into(), q(1, 1))],
            vec![
                ("lo".into(), "lo".into(), q(1, 2)),
                ("lo".into(), "hi".into(), q(1, 2)),
                ("hi".into(), "hi".into(), q(1, 1)),
            ],
            None,
        )
        .unwrap();
        let partition = build_level_partition(&chain).unwrap();
        let stats = level_stats(&chain, &partition).unwrap();
        assert!(matches!(
            type_c_coeff(&stats, Direction::Lower),
            Err(Error::NoQualifyingPair)
        ));
    }

    #[test]
    fn random_init_deterministic_start_in_the_last_level() {
        let (_, _, stats) = t1_setup();
        let init = vec![q(0, 1), q(0, 1), q(1, 1)];
        let c = random_init_coeffs(&stats, &init).unwrap();
        // Start prefix mass is zero below the start level.
        assert_eq!(c[1], Some(BigRational::zero()));
        assert_eq!(c[2], Some(BigRational::one()));
    }

    #[test]
    fn random_init_ratio_follows_the_start_distribution() {
        let (_, _, stats) = t1_setup();
        // Uniform over the optimal level and level 1.
        let init = vec![q(1, 2), q(1, 2), q(0, 1)];
        let c = random_init_coeffs(&stats, &init).unwrap();
        // Start ratio 1/2 caps the transition value 3/4.
        assert_eq!(c[1], Some(q(1, 2)));
        // Uniform over the two non-optimal levels.
        let init = vec![q(0, 1), q(1, 2), q(1, 2)];
        let c = random_init_coeffs(&stats, &init).unwrap();
        assert_eq!(c[1], Some(q(3, 4)));
        assert_eq!(c[2], Some(q(1, 2)));
    }

    #[test]
    fn random_init_rejects_bad_distributions() {
        let (_, _, stats) = t1_setup();
        assert!(random_init_coeffs(&stats, &[q(1, 2), q(1, 2)]).is_err());
        assert!(random_init_coeffs(&stats, &[q(1, 2), q(1, 2), q(1, 2)]).is_err());
        assert!(random_init_coeffs(&stats, &[q(3, 2), q(-1, 2), q(0, 1)]).is_err());
    }

    #[test]
    fn t1_conditional_drift_is_zero_under_equality_assignment() {
        let (chain, partition, stats) = t1_setup();
        let table = forward_table(&stats, Direction::Lower).unwrap();
        let s2 = chain.state_index("s2").unwrap();
        let drift = conditional_drift(&partition, &stats, &table, s2, 1).unwrap();
        assert_eq!(drift, BigRational::zero());
    }

    #[test]
    fn trivial_tables_have_one_sided_drift() {
        let (chain, partition, stats) = t1_setup();
        let zeros = constant_table(Direction::Lower, 2, BigRational::zero());
        let ones = constant_table(Direction::Upper, 2, BigRational::one());
        for state in 0..chain.len() {
            if partition.level_of(state) == 0 {
                continue;
            }
            for target in 1..partition.level_of(state) {
                let down = conditional_drift(&partition, &stats, &zeros, state, target).unwrap();
                assert!(down <= BigRational::zero());
                let up = conditional_drift(&partition, &stats, &ones, state, target).unwrap();
                assert!(up >= BigRational::zero());
            }
        }
    }

    #[test]
    fn t1_dominance_is_an_equality() {
        let (_, _, stats) = t1_setup();
        let cl = type_cl_coeffs(&stats, Direction::Lower).unwrap();
        let cl_table = table_from_per_level(Direction::Lower, Method::TypeCl, &cl);
        let fwd = forward_table(&stats, Direction::Lower).unwrap();
        let report = dominance_check(&cl_table, &fwd).unwrap();
        assert!(report.is_dominated());
    }

    #[test]
    fn dominance_can_be_strict() {
        // Two feeding levels with different ratios toward the target make the
        // per-pair coefficient strictly beat the shared per-level one.
        use crate::chain::StateChain;
        use crate::level::{build_level_partition, level_stats};
        let chain = StateChain::from_parts(
            vec![
                ("low".into(), q(0, 1)),
                ("mid".into(), q(1, 1)),
                ("tgt".into(), q(2, 1)),
                ("top".into(), q(3, 1)),
            ],
            vec![
                // low: ratio into tgt vs everything above = (1/4)/(1/2) = 1/2
                ("low".into(), "low".into(), q(1, 2)),
                ("low".into(), "tgt".into(), q(1, 4)),
                ("low".into(), "top".into(), q(1, 4)),
                // mid: ratio = (3/8)/(1/2) = 3/4 (strictly larger)
                ("mid".into(), "mid".into(), q(1, 2)),
                ("mid".into(), "tgt".into(), q(3, 8)),
                ("mid".into(), "top".into(), q(1, 8)),
                ("tgt".into(), "tgt".into(), q(1, 2)),
                ("tgt".into(), "top".into(), q(1, 2)),
                ("top".into(), "top".into(), q(1, 1)),
            ],
            None,
        )
        .unwrap();
        let partition = build_level_partition(&chain).unwrap();
        let stats = level_stats(&chain, &partition).unwrap();
        // Levels: top=0, tgt=1, mid=2, low=3.
        let cl = type_cl_coeffs(&stats, Direction::Lower).unwrap();
        assert_eq!(cl[1], Some(q(1, 2)));
        let fwd = forward_table(&stats, Direction::Lower).unwrap();
        // Level 2 feeds the target at ratio 3/4 > 1/2.
        assert_eq!(fwd.get(2, 1), q(3, 4));
        let cl_table = table_from_per_level(Direction::Lower, Method::TypeCl, &cl);
        let report = dominance_check(&cl_table, &fwd).unwrap();
        assert!(report.is_dominated());
    }
}
