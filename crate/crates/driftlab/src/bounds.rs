//! Linear hitting-time bounds assembled from level statistics and
//! coefficient tables, plus drift verification and two-algorithm comparison.
//!
//! A bound is a sum of per-level waiting terms: the coefficient for the level
//! divided by the extremal probability of climbing out of it (maximum for
//! lower bounds, minimum for upper bounds). Upper bounds over a level that
//! some state cannot climb out of carry an explicit unbounded sentinel that
//! compares greater than every finite value.

use std::fmt;

use crate::coeffs::{table_from_per_level, CoefficientTable, Direction, Method};
use crate::level::LevelStats;
use crate::numeric::Scalar;
use crate::{Error, Result};

/// A bound value that may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundValue<S> {
    Finite(S),
    Unbounded,
}

impl<S: Scalar> BoundValue<S> {
    pub fn as_finite(&self) -> Option<&S> {
        match self {
            BoundValue::Finite(v) => Some(v),
            BoundValue::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, BoundValue::Unbounded)
    }
}

impl<S: Scalar> PartialOrd for BoundValue<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering;
        match (self, other) {
            (BoundValue::Unbounded, BoundValue::Unbounded) => Some(Ordering::Equal),
            (BoundValue::Unbounded, BoundValue::Finite(_)) => Some(Ordering::Greater),
            (BoundValue::Finite(_), BoundValue::Unbounded) => Some(Ordering::Less),
            (BoundValue::Finite(a), BoundValue::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl<S: Scalar> fmt::Display for BoundValue<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundValue::Finite(v) => write!(f, "{}", v.render()),
            BoundValue::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Starting point of a bound: a fixed level or a distribution over levels.
#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec<S> {
    Level(usize),
    Distribution(Vec<S>),
}

/// One per-level contribution to a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTerm<S> {
    pub level: usize,
    pub coefficient: S,
    /// Extremal climb probability out of the level (the term's denominator).
    pub escape: S,
    pub term: BoundValue<S>,
}

/// One side (lower or upper) of a bound, with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSide<S: Scalar> {
    pub direction: Direction,
    pub value: BoundValue<S>,
    pub terms: Vec<LevelTerm<S>>,
    pub table: CoefficientTable<S>,
}

/// Lower/upper bound pair for one start, with per-level contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<S: Scalar> {
    pub start: StartSpec<S>,
    pub lower: Option<BoundSide<S>>,
    pub upper: Option<BoundSide<S>>,
}

impl<S: Scalar> BoundReport<S> {
    pub fn merge(mut self, other: BoundReport<S>) -> Self {
        if self.lower.is_none() {
            self.lower = other.lower;
        }
        if self.upper.is_none() {
            self.upper = other.upper;
        }
        self
    }
}

fn escape_probability<S: Scalar>(stats: &LevelStats<S>, direction: Direction, level: usize) -> S {
    match direction {
        Direction::Lower => stats.max_climb(level).clone(),
        Direction::Upper => stats.min_climb(level).clone(),
    }
}

fn side_from_table<S: Scalar>(
    stats: &LevelStats<S>,
    table: &CoefficientTable<S>,
    start_level: usize,
) -> Result<BoundSide<S>> {
    let direction = table.direction;
    let mut terms = Vec::with_capacity(start_level);
    let mut total = BoundValue::Finite(S::zero());
    for level in 1..=start_level {
        let coefficient = if level == start_level {
            S::one()
        } else {
            table.get(start_level, level)
        };
        let escape = escape_probability(stats, direction, level);
        if escape.is_zero_prob() {
            match direction {
                Direction::Lower => {
                    return Err(Error::UnreachableLevel { level });
                }
                Direction::Upper => {
                    terms.push(LevelTerm {
                        level,
                        coefficient,
                        escape,
                        term: BoundValue::Unbounded,
                    });
                    total = BoundValue::Unbounded;
                    continue;
                }
            }
        }
        let value = coefficient.clone() / escape.clone();
        if let BoundValue::Finite(t) = &total {
            total = BoundValue::Finite(t.clone() + value.clone());
        }
        terms.push(LevelTerm {
            level,
            coefficient,
            escape,
            term: BoundValue::Finite(value),
        });
    }
    Ok(BoundSide {
        direction,
        value: total,
        terms,
        table: table.clone(),
    })
}

/// Lower hitting-time bound from level `start_level`, using a lower-direction
/// coefficient table (the start level's own term always has coefficient one).
pub fn lower_time_bound<S: Scalar>(
    stats: &LevelStats<S>,
    table: &CoefficientTable<S>,
    start_level: usize,
) -> Result<BoundReport<S>> {
    check_start(stats, table, start_level, Direction::Lower)?;
    Ok(BoundReport {
        start: StartSpec::Level(start_level),
        lower: Some(side_from_table(stats, table, start_level)?),
        upper: None,
    })
}

/// Upper counterpart of [`lower_time_bound`]; levels no state can climb out
/// of yield an unbounded report.
pub fn upper_time_bound<S: Scalar>(
    stats: &LevelStats<S>,
    table: &CoefficientTable<S>,
    start_level: usize,
) -> Result<BoundReport<S>> {
    check_start(stats, table, start_level, Direction::Upper)?;
    Ok(BoundReport {
        start: StartSpec::Level(start_level),
        lower: None,
        upper: Some(side_from_table(stats, table, start_level)?),
    })
}

fn check_start<S: Scalar>(
    stats: &LevelStats<S>,
    table: &CoefficientTable<S>,
    start_level: usize,
    direction: Direction,
) -> Result<()> {
    if table.direction != direction {
        return Err(Error::ShapeMismatch(format!(
            "{} bound requires a {}-direction table, got {}",
            direction, direction, table.direction
        )));
    }
    if table.last_level() != stats.last_level() {
        return Err(Error::ShapeMismatch(
            "coefficient table and statistics cover different level counts".into(),
        ));
    }
    if start_level == 0 || start_level > stats.last_level() {
        return Err(Error::Internal(format!(
            "start level must lie in 1..=K, got {start_level}"
        )));
    }
    Ok(())
}

/// Scalar (viscosity) or per-level (visit probability) coefficients for the
/// typed bound forms.
#[derive(Debug, Clone, PartialEq)]
pub enum TypedCoefficients<S> {
    Scalar {
        value: S,
        direction: Direction,
    },
    PerLevel {
        values: Vec<Option<S>>,
        direction: Direction,
        /// `Method::RandomInit` switches the distribution form of the bound
        /// to the flat per-level sum; anything else averages the fixed-start
        /// bound over the start distribution.
        method: Method,
    },
}

impl<S: Scalar> TypedCoefficients<S> {
    fn direction(&self) -> Direction {
        match self {
            TypedCoefficients::Scalar { direction, .. } => *direction,
            TypedCoefficients::PerLevel { direction, .. } => *direction,
        }
    }

    fn method(&self) -> Method {
        match self {
            TypedCoefficients::Scalar { .. } => Method::TypeC,
            TypedCoefficients::PerLevel { method, .. } => method.clone(),
        }
    }

    fn coefficient(&self, level: usize) -> S {
        match self {
            TypedCoefficients::Scalar { value, .. } => value.clone(),
            TypedCoefficients::PerLevel { values, .. } => values[level]
                .clone()
                .expect("typed coefficient missing for a fed level"),
        }
    }

    fn materialize(&self, last_level: usize) -> CoefficientTable<S> {
        match self {
            TypedCoefficients::Scalar { value, direction } => {
                let mut values = vec![Some(value.clone()); last_level + 1];
                values[0] = Some(S::one());
                let mut t = table_from_per_level(*direction, Method::TypeC, &values);
                t.method = Method::TypeC;
                t
            }
            TypedCoefficients::PerLevel {
                values,
                direction,
                method,
            } => {
                // Fill fed levels only; unfed levels never appear as entries.
                let mut padded = values.clone();
                for v in padded.iter_mut() {
                    if v.is_none() {
                        *v = Some(match direction {
                            Direction::Lower => S::zero(),
                            Direction::Upper => S::one(),
                        });
                    }
                }
                table_from_per_level(*direction, method.clone(), &padded)
            }
        }
    }
}

/// Evaluate a typed bound. A fixed start level uses the start term plus
/// coefficient-weighted waiting terms below it; a start distribution either
/// averages that form, or, for random-initialization coefficients, evaluates
/// the flat per-level sum.
pub fn typed_bound<S: Scalar>(
    stats: &LevelStats<S>,
    coeffs: &TypedCoefficients<S>,
    start: StartSpec<S>,
) -> Result<BoundReport<S>> {
    let direction = coeffs.direction();
    let last = stats.last_level();
    let table = coeffs.materialize(last);

    let build = |value: BoundValue<S>, terms: Vec<LevelTerm<S>>| -> BoundReport<S> {
        let side = BoundSide {
            direction,
            value,
            terms,
            table: table.clone(),
        };
        BoundReport {
            start: start.clone(),
            lower: (direction == Direction::Lower).then(|| side.clone()),
            upper: (direction == Direction::Upper).then_some(side),
        }
    };

    match &start {
        StartSpec::Level(k) => {
            let report = match direction {
                Direction::Lower => lower_time_bound(stats, &table, *k)?,
                Direction::Upper => upper_time_bound(stats, &table, *k)?,
            };
            let mut report = report;
            report.start = start.clone();
            Ok(report)
        }
        StartSpec::Distribution(init) => {
            if init.len() != last + 1 {
                return Err(Error::BadDistribution(format!(
                    "expected {} level masses, got {}",
                    last + 1,
                    init.len()
                )));
            }
            if coeffs.method() == Method::RandomInit {
                // Flat form: every level contributes its coefficient once.
                let mut terms = Vec::new();
                let mut total = BoundValue::Finite(S::zero());
                for level in 1..=last {
                    let coefficient = coeffs.coefficient(level);
                    let escape = escape_probability(stats, direction, level);
                    if escape.is_zero_prob() {
                        return Err(Error::UnreachableLevel { level });
                    }
                    let value = coefficient.clone() / escape.clone();
                    if let BoundValue::Finite(t) = &total {
                        total = BoundValue::Finite(t.clone() + value.clone());
                    }
                    terms.push(LevelTerm {
                        level,
                        coefficient,
                        escape,
                        term: BoundValue::Finite(value),
                    });
                }
                Ok(build(total, terms))
            } else {
                // Average the fixed-start bound over the start distribution.
                let mut total = BoundValue::Finite(S::zero());
                for k in 1..=last {
                    if init[k].is_zero_prob() {
                        continue;
                    }
                    let side = side_from_table(stats, &table, k)?;
                    match (&mut total, &side.value) {
                        (BoundValue::Finite(t), BoundValue::Finite(v)) => {
                            *t = t.clone() + init[k].clone() * v.clone();
                        }
                        _ => total = BoundValue::Unbounded,
                    }
                }
                Ok(build(total, Vec::new()))
            }
        }
    }
}

/// Drifts of the level function induced by a bound's coefficient table.
#[derive(Debug, Clone)]
pub struct DriftReport<S> {
    pub direction: Direction,
    /// `(level, slot, drift)` for every non-optimal state.
    pub drifts: Vec<(usize, usize, S)>,
    /// Entries violating the one-sided unit-drift condition.
    pub violations: Vec<(usize, usize, S)>,
}

impl<S> DriftReport<S> {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify the drift inequality of the level function `d` induced by a
/// coefficient table: at every non-optimal state the one-step drift of `d`
/// must not exceed one for lower tables and not fall below one for upper
/// tables.
pub fn verify_drift_inequality<S: Scalar>(
    stats: &LevelStats<S>,
    table: &CoefficientTable<S>,
) -> Result<DriftReport<S>> {
    let direction = table.direction;
    let last = stats.last_level();
    if table.last_level() != last {
        return Err(Error::ShapeMismatch(
            "coefficient table and statistics cover different level counts".into(),
        ));
    }
    // d_k = sum over levels l <= k of the waiting term; d_0 = 0.
    let mut weight = vec![S::zero(); last + 1];
    for level in 1..=last {
        let escape = escape_probability(stats, direction, level);
        if escape.is_zero_prob() {
            return Err(Error::UnreachableLevel { level });
        }
        weight[level] = S::one() / escape;
    }
    let mut d = vec![S::zero(); last + 1];
    for k in 1..=last {
        let mut acc = weight[k].clone();
        for l in 1..k {
            acc = acc + table.get(k, l) * weight[l].clone();
        }
        d[k] = acc;
    }

    let unit = S::one();
    let tol = S::cmp_tol();
    let mut drifts = Vec::new();
    let mut violations = Vec::new();
    for k in 1..=last {
        for (slot, row) in stats.state_transitions(k).iter().enumerate() {
            let mut after = S::zero();
            for (i, mass) in row.iter().enumerate().take(k + 1) {
                after = after + mass.clone() * d[i].clone();
            }
            let drift = d[k].clone() - after;
            let bad = match direction {
                Direction::Lower => drift > unit.clone() + tol.clone(),
                Direction::Upper => drift < unit.clone() - tol.clone(),
            };
            if bad {
                violations.push((k, slot, drift.clone()));
            }
            drifts.push((k, slot, drift));
        }
    }
    Ok(DriftReport {
        direction,
        drifts,
        violations,
    })
}

/// Ratio interval comparing two algorithms' hitting times.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<S: Scalar> {
    /// `A_lower / B_upper`.
    pub low: BoundValue<S>,
    /// `A_upper / B_lower`.
    pub high: BoundValue<S>,
    /// Exact ratio `m_A / m_B` when both oracle values are available.
    pub exact: Option<BoundValue<S>>,
}

fn ratio_low<S: Scalar>(a: &BoundValue<S>, b: &BoundValue<S>) -> BoundValue<S> {
    match (a, b) {
        (_, BoundValue::Unbounded) => BoundValue::Finite(S::zero()),
        (BoundValue::Unbounded, BoundValue::Finite(_)) => BoundValue::Unbounded,
        (BoundValue::Finite(a), BoundValue::Finite(b)) => {
            if b.is_zero_prob() {
                if a.is_zero_prob() {
                    BoundValue::Finite(S::zero())
                } else {
                    BoundValue::Unbounded
                }
            } else {
                BoundValue::Finite(a.clone() / b.clone())
            }
        }
    }
}

fn ratio_high<S: Scalar>(a: &BoundValue<S>, b: &BoundValue<S>) -> BoundValue<S> {
    match (a, b) {
        (BoundValue::Unbounded, _) => BoundValue::Unbounded,
        (BoundValue::Finite(a), BoundValue::Finite(b)) => {
            if b.is_zero_prob() {
                BoundValue::Unbounded
            } else {
                BoundValue::Finite(a.clone() / b.clone())
            }
        }
        (BoundValue::Finite(_), BoundValue::Unbounded) => BoundValue::Finite(S::zero()),
    }
}

/// Combine bound sides of two algorithms into the comparison interval
/// `[A_lower / B_upper, A_upper / B_lower]`, with the exact ratio when the
/// oracle values are supplied.
pub fn compare_algorithms<S: Scalar>(
    a_lower: &BoundSide<S>,
    a_upper: &BoundSide<S>,
    b_lower: &BoundSide<S>,
    b_upper: &BoundSide<S>,
    exact: Option<(S, S)>,
) -> Comparison<S> {
    Comparison {
        low: ratio_low(&a_lower.value, &b_upper.value),
        high: ratio_high(&a_upper.value, &b_lower.value),
        exact: exact.map(|(ma, mb)| ratio_high(&BoundValue::Finite(ma), &BoundValue::Finite(mb))),
    }
}
