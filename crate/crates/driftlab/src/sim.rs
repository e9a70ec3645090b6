//! Seeded Monte Carlo execution of the two (1+1) EA variants.
//!
//! Trials are reproducible and embarrassingly parallel: each trial owns a
//! ChaCha stream derived from the master seed and the trial index, and the
//! aggregation sums exact integer hitting times, so the estimate is
//! bit-identical regardless of thread count.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::knapsack::{optimal_fitness, KnapsackInstance, Solution, Variant};
use crate::{Error, Result};

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    /// First generation inside the optimal set, or the cap when censored.
    pub generations: u64,
    pub censored: bool,
    pub final_solution: Solution,
    /// Index identifying the trial's RNG stream under the master seed.
    pub trial_index: u64,
}

/// Aggregated estimate over uncensored trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub trials: u64,
    pub cap: u64,
    pub master_seed: u64,
    pub mean: f64,
    pub std_error: f64,
    pub censored: u64,
}

/// Instance with all quantities rescaled to integers (exact: the scale is the
/// lcm of every denominator). Keeps the hot loop in `i128`.
struct Scaled {
    n: usize,
    values: Vec<i128>,
    weights: Vec<i128>,
    capacity: Option<i128>,
    optimal: i128,
    /// Removal priority for greedy repair.
    order: Vec<usize>,
}

impl Scaled {
    fn new(instance: &KnapsackInstance) -> Result<Self> {
        instance.validate()?;
        use num_bigint::BigInt;
        use num_integer::Integer;
        let mut lcm = BigInt::from(1);
        for v in instance
            .values
            .iter()
            .chain(instance.weights.iter())
            .chain(instance.capacity.iter())
        {
            lcm = lcm.lcm(v.denom());
        }
        let opt = optimal_fitness(instance)?;
        lcm = lcm.lcm(opt.denom());
        let to_int = |v: &num_rational::BigRational| -> Result<i128> {
            (v.numer() * (&lcm / v.denom())).to_i128().ok_or_else(|| {
                Error::Guard("instance parameters too large for integer simulation".into())
            })
        };
        let mut order: Vec<usize> = (0..instance.n).collect();
        order.sort_by(|&a, &b| {
            instance.values[a]
                .cmp(&instance.values[b])
                .then(instance.weights[b].cmp(&instance.weights[a]))
                .then(b.cmp(&a))
        });
        Ok(Scaled {
            n: instance.n,
            values: instance.values.iter().map(&to_int).collect::<Result<_>>()?,
            weights: instance
                .weights
                .iter()
                .map(&to_int)
                .collect::<Result<_>>()?,
            capacity: instance.capacity.as_ref().map(&to_int).transpose()?,
            optimal: to_int(&opt)?,
            order,
        })
    }

    fn fitness(&self, bits: &[bool]) -> i128 {
        bits.iter()
            .zip(&self.values)
            .filter(|(b, _)| **b)
            .map(|(_, v)| v)
            .sum()
    }

    fn weight(&self, bits: &[bool]) -> i128 {
        bits.iter()
            .zip(&self.weights)
            .filter(|(b, _)| **b)
            .map(|(_, w)| w)
            .sum()
    }

    fn feasible(&self, bits: &[bool]) -> bool {
        match self.capacity {
            Some(c) => self.weight(bits) <= c,
            None => true,
        }
    }

    /// Constraint violation `weight - capacity` (positive iff infeasible).
    fn violation(&self, bits: &[bool]) -> i128 {
        match self.capacity {
            Some(c) => self.weight(bits) - c,
            None => i128::MIN / 2,
        }
    }

    /// One independent bit flip per position with probability 1/n.
    fn mutate(&self, bits: &[bool], rng: &mut impl Rng) -> Vec<bool> {
        let n = self.n as u32;
        bits.iter()
            .map(|&b| if rng.random_ratio(1, n) { !b } else { b })
            .collect()
    }

    fn repair(&self, bits: &mut Vec<bool>) {
        let Some(capacity) = self.capacity else {
            return;
        };
        let mut weight = self.weight(bits);
        for &idx in &self.order {
            if weight <= capacity {
                break;
            }
            if bits[idx] {
                bits[idx] = false;
                weight -= self.weights[idx];
            }
        }
    }

    /// Feasibility-rules selection over parent and offspring; the offspring
    /// wins ties.
    fn step_feasibility(&self, x: &[bool], rng: &mut impl Rng) -> Vec<bool> {
        let y = self.mutate(x, rng);
        let accept = match (self.feasible(x), self.feasible(&y)) {
            (true, true) => self.fitness(&y) >= self.fitness(x),
            (false, false) => self.violation(&y) <= self.violation(x),
            (xf, _) => !xf,
        };
        if accept {
            y
        } else {
            x.to_vec()
        }
    }

    fn step_greedy(&self, x: &[bool], rng: &mut impl Rng) -> Vec<bool> {
        debug_assert!(self.feasible(x), "greedy step requires a feasible parent");
        let mut y = self.mutate(x, rng);
        self.repair(&mut y);
        if self.fitness(&y) >= self.fitness(x) {
            y
        } else {
            x.to_vec()
        }
    }

    fn step(&self, variant: Variant, x: &[bool], rng: &mut impl Rng) -> Vec<bool> {
        match variant {
            Variant::FeasibilityRules => self.step_feasibility(x, rng),
            Variant::GreedyRepair => self.step_greedy(x, rng),
        }
    }
}

/// RNG for one trial: one ChaCha stream per trial index under the master seed.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Flip each bit independently with probability `1 / len`.
pub fn mutate(solution: &Solution, rng: &mut impl Rng) -> Solution {
    let n = solution.len() as u32;
    Solution(
        solution
            .0
            .iter()
            .map(|&b| if rng.random_ratio(1, n) { !b } else { b })
            .collect(),
    )
}

/// One generation under feasibility rules. The parent may be infeasible; all
/// three selection branches are live.
pub fn step_feasibility_rules(
    instance: &KnapsackInstance,
    x: &Solution,
    rng: &mut impl Rng,
) -> Result<Solution> {
    let scaled = Scaled::new(instance)?;
    Ok(Solution(scaled.step_feasibility(&x.0, rng)))
}

/// One generation under greedy repair; the parent must be feasible.
pub fn step_greedy_repair(
    instance: &KnapsackInstance,
    x: &Solution,
    rng: &mut impl Rng,
) -> Result<Solution> {
    let scaled = Scaled::new(instance)?;
    Ok(Solution(scaled.step_greedy(&x.0, rng)))
}

fn run_scaled_trial(
    scaled: &Scaled,
    variant: Variant,
    cap: u64,
    master_seed: u64,
    trial_index: u64,
) -> TrialResult {
    let mut rng = trial_rng(master_seed, trial_index);
    let mut current = vec![false; scaled.n];
    let mut fitness = scaled.fitness(&current);
    if fitness == scaled.optimal {
        return TrialResult {
            generations: 0,
            censored: false,
            final_solution: Solution(current),
            trial_index,
        };
    }
    for generation in 1..=cap {
        let next = scaled.step(variant, &current, &mut rng);
        let next_fitness = scaled.fitness(&next);
        // Elitism: accepted fitness never drops on feasible-start runs.
        assert!(next_fitness >= fitness, "elitism violated in simulation");
        current = next;
        fitness = next_fitness;
        if fitness == scaled.optimal {
            return TrialResult {
                generations: generation,
                censored: false,
                final_solution: Solution(current),
                trial_index,
            };
        }
    }
    TrialResult {
        generations: cap,
        censored: true,
        final_solution: Solution(current),
        trial_index,
    }
}

/// Run one trial from the empty knapsack.
pub fn run_trial(
    instance: &KnapsackInstance,
    variant: Variant,
    cap: u64,
    master_seed: u64,
    trial_index: u64,
) -> Result<TrialResult> {
    let scaled = Scaled::new(instance)?;
    Ok(run_scaled_trial(
        &scaled,
        variant,
        cap,
        master_seed,
        trial_index,
    ))
}

/// Estimate the mean hitting time from the empty knapsack over independent
/// trials. Censored trials are counted and excluded from the mean; callers
/// should surface a warning when the censored count is positive.
pub fn estimate_hitting_time(
    instance: &KnapsackInstance,
    variant: Variant,
    trials: u64,
    cap: u64,
    master_seed: u64,
) -> Result<SimEstimate> {
    if trials == 0 || cap == 0 {
        return Err(Error::Guard("need trials >= 1 and cap >= 1".into()));
    }
    let scaled = Scaled::new(instance)?;

    // Exact integer aggregation keeps the reduction order irrelevant.
    let (sum, sum_sq, censored) = (0..trials)
        .into_par_iter()
        .map(|idx| {
            let trial = run_scaled_trial(&scaled, variant, cap, master_seed, idx);
            if trial.censored {
                (0u128, 0u128, 1u64)
            } else {
                let g = trial.generations as u128;
                (g, g * g, 0u64)
            }
        })
        .reduce(
            || (0u128, 0u128, 0u64),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        );

    let observed = trials - censored;
    let (mean, std_error) = if observed == 0 {
        (0.0, 0.0)
    } else {
        let m = observed as f64;
        let mean = sum as f64 / m;
        let var = if observed >= 2 {
            let sum_f = sum as f64;
            ((sum_sq as f64) - sum_f * sum_f / m) / (m - 1.0)
        } else {
            0.0
        };
        (mean, (var.max(0.0) / m).sqrt())
    };
    Ok(SimEstimate {
        trials,
        cap,
        master_seed,
        mean,
        std_error,
        censored,
    })
}
