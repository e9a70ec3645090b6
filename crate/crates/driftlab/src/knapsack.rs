//! Knapsack benchmark: instance family, (1+1) EA semantics, and exact
//! transition chains.
//!
//! Six instances share the same shape: two high-value heavy items plus `n-2`
//! unit items. Small parameter changes move the global and local optima
//! around. The fractional parameters are exact rationals; they decide fitness
//! ties.
//!
//! Two chain backends produce the same hitting statistics: a full chain over
//! all feasible bit strings (exponential, guarded) and a lumped chain over
//! `(b1, b2; k)` classes that exploits the exchangeability of items `3..n`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::chain::StateChain;
use crate::numeric::Scalar;
use crate::{Error, Result};

/// Largest `n` for which full-chain construction is attempted (the mask
/// enumeration costs `4^n`).
pub const FULL_CHAIN_MAX_N: usize = 12;
/// Largest `n` for the lumped backend.
pub const LUMPED_CHAIN_MAX_N: usize = 64;

/// Builtin instance identifiers plus free-form custom instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceId {
    Kp1,
    Kp2,
    Kp3,
    Kp4,
    Kp5,
    Kp6,
    Custom(String),
}

impl InstanceId {
    pub fn parse(text: &str) -> Self {
        match text.to_ascii_uppercase().as_str() {
            "KP1" => InstanceId::Kp1,
            "KP2" => InstanceId::Kp2,
            "KP3" => InstanceId::Kp3,
            "KP4" => InstanceId::Kp4,
            "KP5" => InstanceId::Kp5,
            "KP6" => InstanceId::Kp6,
            _ => InstanceId::Custom(text.to_string()),
        }
    }
}

impl std::fmt::Display for InstanceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InstanceId::Kp1 => f.write_str("KP1"),
            InstanceId::Kp2 => f.write_str("KP2"),
            InstanceId::Kp3 => f.write_str("KP3"),
            InstanceId::Kp4 => f.write_str("KP4"),
            InstanceId::Kp5 => f.write_str("KP5"),
            InstanceId::Kp6 => f.write_str("KP6"),
            InstanceId::Custom(name) => f.write_str(name),
        }
    }
}

/// Constraint handler of the (1+1) EA.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    FeasibilityRules,
    GreedyRepair,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::FeasibilityRules => "feasibility",
            Variant::GreedyRepair => "greedy",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Item values and weights as exact rationals; `capacity: None` is an
/// unconstrained knapsack.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackInstance {
    pub id: InstanceId,
    pub n: usize,
    pub values: Vec<BigRational>,
    pub weights: Vec<BigRational>,
    pub capacity: Option<BigRational>,
}

impl KnapsackInstance {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::Knapsack(format!("need n >= 4, got {}", self.n)));
        }
        if self.values.len() != self.n || self.weights.len() != self.n {
            return Err(Error::Knapsack("item count mismatch".into()));
        }
        if self
            .values
            .iter()
            .chain(self.weights.iter())
            .any(|v| !v.is_positive())
        {
            return Err(Error::Knapsack(
                "values and weights must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Items `3..n` identical in value and weight, the property the lumped
    /// backend relies on.
    pub fn has_exchangeable_tail(&self) -> bool {
        self.values[2..].windows(2).all(|w| w[0] == w[1])
            && self.weights[2..].windows(2).all(|w| w[0] == w[1])
    }
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Construct one of the six builtin instances for a given `n`.
///
/// Divisibility rules: KP2 and KP5 need even `n`, KP4 needs `n` divisible by
/// four (their second weights are `n-3`-style integers only then). All
/// instances need `n >= 4`.
pub fn make_instance(id: InstanceId, n: usize) -> Result<KnapsackInstance> {
    if n < 4 {
        return Err(Error::Knapsack(format!("need n >= 4, got {n}")));
    }
    let ni = n as i64;
    let half_minus_third = ratio(3 * ni - 2, 6); // n/2 - 1/3

    let (v1, v2, w1, w2, capacity) = match id {
        InstanceId::Kp1 => (
            ratio(ni - 2, 1),
            half_minus_third,
            ratio(ni - 2, 1),
            ratio(ni - 3, 1),
            Some(ratio(ni - 2, 1)),
        ),
        InstanceId::Kp2 => {
            if n % 2 != 0 {
                return Err(Error::Knapsack(format!("KP2 requires even n, got {n}")));
            }
            (
                ratio(ni - 2, 1),
                half_minus_third,
                ratio(ni - 2, 1),
                ratio(ni - 3, 1),
                Some(ratio(ni - 3, 1)),
            )
        }
        InstanceId::Kp3 => (
            ratio(ni - 1, 1),
            half_minus_third,
            ratio(ni - 2, 1),
            ratio(ni - 3, 1),
            Some(ratio(ni - 2, 1)),
        ),
        InstanceId::Kp4 => {
            if n % 4 != 0 {
                return Err(Error::Knapsack(format!(
                    "KP4 requires n divisible by 4, got {n}"
                )));
            }
            (
                ratio(ni - 2, 1),
                half_minus_third,
                ratio(ni - 2, 1),
                ratio(ni / 4, 1),
                Some(ratio(ni - 2, 1)),
            )
        }
        InstanceId::Kp5 => {
            if n % 2 != 0 {
                return Err(Error::Knapsack(format!("KP5 requires even n, got {n}")));
            }
            (
                ratio(3 * ni - 8, 3), // n - 2 - 2/3
                half_minus_third,
                ratio(ni - 2, 1),
                ratio(ni / 2, 1),
                Some(ratio(ni - 2, 1)),
            )
        }
        InstanceId::Kp6 => (
            ratio(ni - 2, 1),
            half_minus_third,
            ratio(ni - 2, 1),
            ratio(ni, 2),
            None,
        ),
        InstanceId::Custom(name) => {
            return Err(Error::Knapsack(format!(
                "custom instance {name:?} has no builtin parameters"
            )))
        }
    };

    let mut values = vec![v1, v2];
    let mut weights = vec![w1, w2];
    values.resize(n, BigRational::one());
    weights.resize(n, BigRational::one());
    let instance = KnapsackInstance {
        id,
        n,
        values,
        weights,
        capacity,
    };
    instance.validate()?;
    Ok(instance)
}

/// Bit sequence `b_1 .. b_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution(pub Vec<bool>);

impl Solution {
    pub fn empty(n: usize) -> Self {
        Solution(vec![false; n])
    }

    pub fn from_bit_string(text: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(text.len());
        for c in text.chars() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(Error::Parse(format!("invalid bit character {c:?}"))),
            }
        }
        if bits.is_empty() {
            return Err(Error::Parse("empty bit string".into()));
        }
        Ok(Solution(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Display for Solution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Result of evaluating one solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub fitness: BigRational,
    pub weight: BigRational,
    pub feasible: bool,
}

/// Fitness is the plain value sum regardless of feasibility; feasibility is
/// the weight test against the capacity.
pub fn evaluate(instance: &KnapsackInstance, solution: &Solution) -> Result<Evaluation> {
    if solution.len() != instance.n {
        return Err(Error::Knapsack(format!(
            "solution length {} does not match n = {}",
            solution.len(),
            instance.n
        )));
    }
    let mut fitness = BigRational::zero();
    let mut weight = BigRational::zero();
    for (i, &bit) in solution.0.iter().enumerate() {
        if bit {
            fitness += &instance.values[i];
            weight += &instance.weights[i];
        }
    }
    let feasible = match &instance.capacity {
        Some(c) => weight <= *c,
        None => true,
    };
    Ok(Evaluation {
        fitness,
        weight,
        feasible,
    })
}

/// Removal priority: lowest value first, ties broken by the larger weight,
/// then by the higher item index. Item keys never change during repair, so
/// the order can be fixed up front.
fn removal_order(instance: &KnapsackInstance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..instance.n).collect();
    order.sort_by(|&a, &b| {
        instance.values[a]
            .cmp(&instance.values[b])
            .then(instance.weights[b].cmp(&instance.weights[a]))
            .then(b.cmp(&a))
    });
    order
}

/// Remove lowest-value included items until the solution fits. Feasible
/// inputs (and any input of an unconstrained instance) come back unchanged.
pub fn greedy_repair(instance: &KnapsackInstance, solution: &Solution) -> Result<Solution> {
    let capacity = match &instance.capacity {
        Some(c) => c,
        None => return Ok(solution.clone()),
    };
    let mut out = solution.clone();
    let mut weight = evaluate(instance, &out)?.weight;
    if weight <= *capacity {
        return Ok(out);
    }
    for &idx in &removal_order(instance) {
        if weight <= *capacity {
            break;
        }
        if out.0[idx] {
            out.0[idx] = false;
            weight -= &instance.weights[idx];
        }
    }
    Ok(out)
}

/// Class key `(b_1, b_2; k)` with `k` the number of included tail items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LevelClass {
    pub b1: bool,
    pub b2: bool,
    pub k: usize,
}

impl std::fmt::Display for LevelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{};{})", self.b1 as u8, self.b2 as u8, self.k)
    }
}

/// Class of a solution: the two head bits plus the tail count.
pub fn classify(instance: &KnapsackInstance, solution: &Solution) -> Result<LevelClass> {
    if solution.len() != instance.n {
        return Err(Error::Knapsack(format!(
            "solution length {} does not match n = {}",
            solution.len(),
            instance.n
        )));
    }
    Ok(LevelClass {
        b1: solution.0[0],
        b2: solution.0[1],
        k: solution.0[2..].iter().filter(|&&b| b).count(),
    })
}

fn to_scalar<S: Scalar>(value: &BigRational) -> S {
    S::from_big_ratio(value.numer().clone(), value.denom().clone())
}

/// Exact full chain over all feasible bit strings: each row is the expectation
/// over every mutation mask, followed by the variant's selection (and repair).
/// Guarded at `n <= 12`.
pub fn build_full_chain<S: Scalar>(
    instance: &KnapsackInstance,
    variant: Variant,
) -> Result<StateChain<S>> {
    instance.validate()?;
    let n = instance.n;
    if n > FULL_CHAIN_MAX_N {
        return Err(Error::Guard(format!(
            "full chain limited to n <= {FULL_CHAIN_MAX_N}, got {n}"
        )));
    }
    let size = 1usize << n;

    // Per-mask fitness/weight, and the repair map (mask -> feasible mask).
    let mut fitness = Vec::with_capacity(size);
    let mut weight = Vec::with_capacity(size);
    for mask in 0..size {
        let mut f = BigRational::zero();
        let mut w = BigRational::zero();
        for i in 0..n {
            if mask >> i & 1 == 1 {
                f += &instance.values[i];
                w += &instance.weights[i];
            }
        }
        fitness.push(f);
        weight.push(w);
    }
    let feasible: Vec<bool> = match &instance.capacity {
        Some(c) => weight.iter().map(|w| w <= c).collect(),
        None => vec![true; size],
    };
    let order = removal_order(instance);
    let repaired: Vec<usize> = (0..size)
        .map(|mask| {
            if feasible[mask] {
                return mask;
            }
            let capacity = instance
                .capacity
                .as_ref()
                .expect("infeasible implies capacity");
            let mut m = mask;
            let mut w = weight[mask].clone();
            for &idx in &order {
                if w <= *capacity {
                    break;
                }
                if m >> idx & 1 == 1 {
                    m &= !(1 << idx);
                    w -= &instance.weights[idx];
                }
            }
            m
        })
        .collect();

    let states: Vec<usize> = (0..size).filter(|&m| feasible[m]).collect();
    let state_pos: Vec<Option<usize>> = {
        let mut v = vec![None; size];
        for (i, &m) in states.iter().enumerate() {
            v[m] = Some(i);
        }
        v
    };
    let bit_name = |mask: usize| -> String {
        (0..n)
            .map(|i| if mask >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    };

    // Mask weight numerators over the common denominator n^n.
    let nn = BigInt::from(n).pow(n as u32);
    let stay_pow: Vec<BigInt> = {
        let mut v = vec![BigInt::one()];
        for i in 0..n {
            let last = v[i].clone();
            v.push(last * BigInt::from(n as i64 - 1));
        }
        v
    };

    let mut state_defs = Vec::with_capacity(states.len());
    let mut transitions = Vec::new();
    for &x in &states {
        let mut acc = vec![BigInt::zero(); states.len()];
        for delta in 0..size {
            let y_raw = x ^ delta;
            let flips = delta.count_ones() as usize;
            let target = match variant {
                Variant::FeasibilityRules => {
                    if feasible[y_raw] && fitness[y_raw] >= fitness[x] {
                        y_raw
                    } else {
                        x
                    }
                }
                Variant::GreedyRepair => {
                    let y = repaired[y_raw];
                    if fitness[y] >= fitness[x] {
                        y
                    } else {
                        x
                    }
                }
            };
            let pos = state_pos[target].expect("selection lands on a feasible state");
            acc[pos] += &stay_pow[n - flips];
        }
        let from = bit_name(x);
        for (pos, num) in acc.into_iter().enumerate() {
            if !num.is_zero() {
                transitions.push((
                    from.clone(),
                    bit_name(states[pos]),
                    S::from_big_ratio(num, nn.clone()),
                ));
            }
        }
        state_defs.push((from, to_scalar::<S>(&fitness[x])));
    }

    StateChain::from_parts(state_defs, transitions, None)
}

/// Class-level view of an instance with an exchangeable tail.
#[derive(Debug, Clone)]
struct ClassView {
    v1: BigRational,
    v2: BigRational,
    v_tail: BigRational,
    w1: BigRational,
    w2: BigRational,
    w_tail: BigRational,
    capacity: Option<BigRational>,
}

impl ClassView {
    fn new(instance: &KnapsackInstance) -> Result<Self> {
        if !instance.has_exchangeable_tail() {
            return Err(Error::Knapsack(
                "lumped chain requires items 3..n to be identical".into(),
            ));
        }
        Ok(ClassView {
            v1: instance.values[0].clone(),
            v2: instance.values[1].clone(),
            v_tail: instance.values[2].clone(),
            w1: instance.weights[0].clone(),
            w2: instance.weights[1].clone(),
            w_tail: instance.weights[2].clone(),
            capacity: instance.capacity.clone(),
        })
    }

    fn fitness(&self, class: LevelClass) -> BigRational {
        let mut f = BigRational::zero();
        if class.b1 {
            f += &self.v1;
        }
        if class.b2 {
            f += &self.v2;
        }
        f + &self.v_tail * BigRational::from_integer(BigInt::from(class.k))
    }

    fn weight(&self, class: LevelClass) -> BigRational {
        let mut w = BigRational::zero();
        if class.b1 {
            w += &self.w1;
        }
        if class.b2 {
            w += &self.w2;
        }
        w + &self.w_tail * BigRational::from_integer(BigInt::from(class.k))
    }

    fn feasible(&self, class: LevelClass) -> bool {
        match &self.capacity {
            Some(c) => self.weight(class) <= *c,
            None => true,
        }
    }

    /// Greedy repair acting on classes: repeatedly drop the included item of
    /// lowest value (ties to larger weight, then higher index; the tail sits
    /// at the highest indices).
    fn repair(&self, mut class: LevelClass) -> LevelClass {
        let capacity = match &self.capacity {
            Some(c) => c.clone(),
            None => return class,
        };
        let mut weight = self.weight(class);
        while weight > capacity {
            // Candidates: (value, weight, index rank) with rank 2 the tail.
            // Smaller value wins; then larger weight; then higher index.
            let candidates = [
                (0usize, &self.v1, &self.w1, class.b1),
                (1, &self.v2, &self.w2, class.b2),
                (2, &self.v_tail, &self.w_tail, class.k > 0),
            ];
            let pick = candidates
                .iter()
                .filter(|(_, _, _, present)| *present)
                .min_by(|(ra, va, wa, _), (rb, vb, wb, _)| {
                    va.cmp(vb).then(wb.cmp(wa)).then(rb.cmp(ra))
                });
            let Some(&(rank, _, _, _)) = pick else {
                break; // nothing left to remove
            };
            match rank {
                0 => {
                    class.b1 = false;
                    weight -= &self.w1;
                }
                1 => {
                    class.b2 = false;
                    weight -= &self.w2;
                }
                _ => {
                    class.k -= 1;
                    weight -= &self.w_tail;
                }
            }
        }
        class
    }
}

/// Exact lumped chain over feasible `(b1, b2; k)` classes. Transition mass is
/// aggregated combinatorially over head-bit flips and tail flip counts, so
/// the cost is polynomial in `n` and the chain's hitting statistics match the
/// full chain state-for-state.
pub fn build_lumped_chain<S: Scalar>(
    instance: &KnapsackInstance,
    variant: Variant,
) -> Result<StateChain<S>> {
    instance.validate()?;
    let view = ClassView::new(instance)?;
    let n = instance.n;
    if n > LUMPED_CHAIN_MAX_N {
        return Err(Error::Guard(format!(
            "lumped chain limited to n <= {LUMPED_CHAIN_MAX_N}, got {n}"
        )));
    }
    let tail = n - 2;

    let mut classes = Vec::new();
    for b1 in [false, true] {
        for b2 in [false, true] {
            for k in 0..=tail {
                let class = LevelClass { b1, b2, k };
                if view.feasible(class) {
                    classes.push(class);
                }
            }
        }
    }
    let pos = |class: LevelClass| classes.iter().position(|&c| c == class);

    // binom[a][b] = C(a, b)
    let mut binom = vec![vec![BigInt::zero(); tail + 1]; tail + 1];
    for a in 0..=tail {
        binom[a][0] = BigInt::one();
        for b in 1..=a {
            binom[a][b] = &binom[a - 1][b - 1]
                + if b <= a - 1 {
                    binom[a - 1][b].clone()
                } else {
                    BigInt::zero()
                };
        }
    }
    let nn = BigInt::from(n).pow(n as u32);
    let stay_pow: Vec<BigInt> = {
        let mut v = vec![BigInt::one()];
        for i in 0..n {
            let last = v[i].clone();
            v.push(last * BigInt::from(n as i64 - 1));
        }
        v
    };

    let mut state_defs = Vec::with_capacity(classes.len());
    let mut transitions = Vec::new();
    for &src in &classes {
        let src_fitness = view.fitness(src);
        let mut acc = vec![BigInt::zero(); classes.len()];
        for b1_next in [src.b1, !src.b1] {
            let head1 = usize::from(b1_next != src.b1);
            for b2_next in [src.b2, !src.b2] {
                let head2 = usize::from(b2_next != src.b2);
                for drop in 0..=src.k {
                    for add in 0..=(tail - src.k) {
                        let flips = head1 + head2 + drop + add;
                        let raw = LevelClass {
                            b1: b1_next,
                            b2: b2_next,
                            k: src.k - drop + add,
                        };
                        let target = match variant {
                            Variant::FeasibilityRules => {
                                if view.feasible(raw) && view.fitness(raw) >= src_fitness {
                                    raw
                                } else {
                                    src
                                }
                            }
                            Variant::GreedyRepair => {
                                let repaired = view.repair(raw);
                                if view.fitness(repaired) >= src_fitness {
                                    repaired
                                } else {
                                    src
                                }
                            }
                        };
                        let idx = pos(target).expect("selection lands on a feasible class");
                        let ways = &binom[src.k][drop] * &binom[tail - src.k][add];
                        acc[idx] += ways * &stay_pow[n - flips];
                    }
                }
            }
        }
        let from = src.to_string();
        for (idx, num) in acc.into_iter().enumerate() {
            if !num.is_zero() {
                transitions.push((
                    from.clone(),
                    classes[idx].to_string(),
                    S::from_big_ratio(num, nn.clone()),
                ));
            }
        }
        state_defs.push((from, to_scalar::<S>(&src_fitness)));
    }

    StateChain::from_parts(state_defs, transitions, None)
}

/// Maximum fitness over feasible classes: the optimum of any instance with an
/// exchangeable tail.
pub fn optimal_fitness(instance: &KnapsackInstance) -> Result<BigRational> {
    instance.validate()?;
    if instance.has_exchangeable_tail() {
        let view = ClassView::new(instance)?;
        let tail = instance.n - 2;
        let mut best: Option<BigRational> = None;
        for b1 in [false, true] {
            for b2 in [false, true] {
                for k in 0..=tail {
                    let class = LevelClass { b1, b2, k };
                    if view.feasible(class) {
                        let f = view.fitness(class);
                        best = Some(match best {
                            None => f,
                            Some(b) => b.max(f),
                        });
                    }
                }
            }
        }
        best.ok_or_else(|| Error::Knapsack("no feasible class".into()))
    } else {
        if instance.n > 20 {
            return Err(Error::Guard(
                "optimum search over general instances limited to n <= 20".into(),
            ));
        }
        let mut best: Option<BigRational> = None;
        for mask in 0_usize..1 << instance.n {
            let sol = Solution((0..instance.n).map(|i| mask >> i & 1 == 1).collect());
            let eval = evaluate(instance, &sol)?;
            if eval.feasible {
                best = Some(match best {
                    None => eval.fitness,
                    Some(b) => b.max(eval.fitness),
                });
            }
        }
        best.ok_or_else(|| Error::Knapsack("no feasible solution".into()))
    }
}
