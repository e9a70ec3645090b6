//! Serialization: chain and instance JSON schemas, CSV renderings.
//!
//! Chain documents carry their numeric mode:
//!
//! ```json
//! {
//!   "mode": "rational",
//!   "states": [{"id": "s0", "fitness": "2", "optimal": true}, ...],
//!   "rows": [{"from": "s0", "to": "s0", "p": "1"}, ...]
//! }
//! ```
//!
//! Rational mode uses `"p/q"` strings everywhere (integers may drop the
//! denominator); float mode uses plain numbers. Instances serialize as
//! `{"id", "n", "values", "weights", "capacity"}` with `"inf"` for an
//! unconstrained capacity. All emitters are deterministic byte-for-byte.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, BoundValue, Comparison};
use crate::chain::StateChain;
use crate::coeffs::CoefficientTable;
use crate::exact::{Decomposition, HittingProfile};
use crate::knapsack::{InstanceId, KnapsackInstance, Variant};
use crate::level::LevelPartition;
use crate::numeric::{format_rational, parse_rational, NumberLit, Scalar};
use crate::sim::SimEstimate;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ChainDoc {
    mode: String,
    states: Vec<StateDoc>,
    rows: Vec<RowDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StateDoc {
    id: String,
    fitness: NumberLit,
    optimal: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct RowDoc {
    from: String,
    to: String,
    p: NumberLit,
}

/// A chain in either numeric mode, as read from a document.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyChain {
    Rational(StateChain<BigRational>),
    Float(StateChain<f64>),
}

impl AnyChain {
    pub fn mode(&self) -> &'static str {
        match self {
            AnyChain::Rational(_) => BigRational::MODE,
            AnyChain::Float(_) => f64::MODE,
        }
    }
}

fn doc_to_chain<S: Scalar>(doc: &ChainDoc) -> Result<StateChain<S>> {
    let mut states = Vec::with_capacity(doc.states.len());
    let mut optimal = Vec::new();
    for s in &doc.states {
        states.push((s.id.clone(), S::parse_literal(&s.fitness)?));
        if s.optimal {
            optimal.push(s.id.clone());
        }
    }
    let mut transitions = Vec::with_capacity(doc.rows.len());
    for r in &doc.rows {
        transitions.push((r.from.clone(), r.to.clone(), S::parse_literal(&r.p)?));
    }
    StateChain::from_parts(states, transitions, Some(optimal))
}

/// Parse a chain document; the document's `mode` field picks the arithmetic.
pub fn parse_chain_json(text: &str) -> Result<AnyChain> {
    let doc: ChainDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("chain json: {e}")))?;
    match doc.mode.as_str() {
        "rational" => Ok(AnyChain::Rational(doc_to_chain(&doc)?)),
        "float" => Ok(AnyChain::Float(doc_to_chain(&doc)?)),
        other => Err(Error::Parse(format!(
            "unknown mode {other:?}, expected \"rational\" or \"float\""
        ))),
    }
}

/// Serialize a chain under its mode's literal rules.
pub fn chain_to_json<S: Scalar>(chain: &StateChain<S>) -> String {
    let doc = ChainDoc {
        mode: S::MODE.to_string(),
        states: (0..chain.len())
            .map(|i| StateDoc {
                id: chain.name(i).to_string(),
                fitness: chain.fitness(i).to_literal(),
                optimal: chain.is_optimal(i),
            })
            .collect(),
        rows: (0..chain.len())
            .flat_map(|i| {
                chain.row(i).iter().map(move |(t, p)| RowDoc {
                    from: chain.name(i).to_string(),
                    to: chain.name(*t).to_string(),
                    p: p.to_literal(),
                })
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceDoc {
    id: String,
    n: usize,
    values: Vec<String>,
    weights: Vec<String>,
    capacity: String,
}

/// Parse an instance document (rational strings, `"inf"` capacity).
pub fn parse_instance_json(text: &str) -> Result<KnapsackInstance> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance json: {e}")))?;
    let values = doc
        .values
        .iter()
        .map(|s| parse_rational(s))
        .collect::<Result<Vec<_>>>()?;
    let weights = doc
        .weights
        .iter()
        .map(|s| parse_rational(s))
        .collect::<Result<Vec<_>>>()?;
    let capacity = if doc.capacity == "inf" {
        None
    } else {
        Some(parse_rational(&doc.capacity)?)
    };
    let instance = KnapsackInstance {
        id: InstanceId::parse(&doc.id),
        n: doc.n,
        values,
        weights,
        capacity,
    };
    instance.validate()?;
    Ok(instance)
}

pub fn instance_to_json(instance: &KnapsackInstance) -> String {
    let doc = InstanceDoc {
        id: instance.id.to_string(),
        n: instance.n,
        values: instance.values.iter().map(format_rational).collect(),
        weights: instance.weights.iter().map(format_rational).collect(),
        capacity: instance
            .capacity
            .as_ref()
            .map_or_else(|| "inf".to_string(), format_rational),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn csv_finish(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("utf8 csv")
}

/// Columns: `k,ell,value,method,direction`, whole triangle including the
/// fixed diagonal and first column.
pub fn coeff_table_csv<S: Scalar>(table: &CoefficientTable<S>) -> String {
    let mut w = csv_writer();
    w.write_record(["k", "ell", "value", "method", "direction"])
        .expect("csv");
    let method = table.method.to_string();
    let direction = table.direction.to_string();
    for k in 0..=table.last_level() {
        for l in 0..=k {
            w.write_record([
                k.to_string(),
                l.to_string(),
                table.get(k, l).render(),
                method.clone(),
                direction.clone(),
            ])
            .expect("csv");
        }
    }
    csv_finish(w)
}

fn bound_value_text<S: Scalar>(value: &BoundValue<S>) -> String {
    match value {
        BoundValue::Finite(v) => v.render(),
        BoundValue::Unbounded => "unbounded".to_string(),
    }
}

/// Per-level contribution rows of both sides of a bound report.
pub fn bound_report_csv<S: Scalar>(report: &BoundReport<S>) -> String {
    let mut w = csv_writer();
    w.write_record([
        "direction",
        "level",
        "coefficient",
        "escape_probability",
        "term",
    ])
    .expect("csv");
    for side in [report.lower.as_ref(), report.upper.as_ref()]
        .into_iter()
        .flatten()
    {
        for term in &side.terms {
            w.write_record([
                side.direction.to_string(),
                term.level.to_string(),
                term.coefficient.render(),
                term.escape.render(),
                bound_value_text(&term.term),
            ])
            .expect("csv");
        }
        w.write_record([
            side.direction.to_string(),
            "total".to_string(),
            String::new(),
            String::new(),
            bound_value_text(&side.value),
        ])
        .expect("csv");
    }
    csv_finish(w)
}

/// Full bound report as JSON: start, both sides' totals, per-level terms,
/// and the coefficient method behind each side.
pub fn bound_report_json<S: Scalar>(report: &BoundReport<S>) -> String {
    use serde_json::{json, Map, Value};
    let mut root = Map::new();
    root.insert(
        "start".into(),
        match &report.start {
            crate::bounds::StartSpec::Level(k) => json!({ "level": k }),
            crate::bounds::StartSpec::Distribution(init) => {
                json!({ "distribution": init.iter().map(|v| v.render()).collect::<Vec<_>>() })
            }
        },
    );
    for side in [report.lower.as_ref(), report.upper.as_ref()]
        .into_iter()
        .flatten()
    {
        let terms: Vec<Value> = side
            .terms
            .iter()
            .map(|t| {
                json!({
                    "level": t.level,
                    "coefficient": t.coefficient.render(),
                    "escape_probability": t.escape.render(),
                    "term": bound_value_text(&t.term),
                })
            })
            .collect();
        root.insert(
            side.direction.to_string(),
            json!({
                "value": bound_value_text(&side.value),
                "method": side.table.method.to_string(),
                "terms": terms,
            }),
        );
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
    text.push('\n');
    text
}

/// Columns: `state,level,m`.
pub fn hitting_times_csv<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
    times: &[S],
) -> String {
    let mut w = csv_writer();
    w.write_record(["state", "level", "m"]).expect("csv");
    for level in 0..partition.level_count() {
        for &state in partition.level(level) {
            w.write_record([
                chain.name(state).to_string(),
                level.to_string(),
                times[state].render(),
            ])
            .expect("csv");
        }
    }
    csv_finish(w)
}

/// Columns: `state,target_level,h` for each computed profile.
pub fn hitting_profiles_csv<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
    profiles: &[HittingProfile<S>],
) -> String {
    let mut w = csv_writer();
    w.write_record(["state", "target_level", "h"]).expect("csv");
    for profile in profiles {
        for level in 0..partition.level_count() {
            for &state in partition.level(level) {
                w.write_record([
                    chain.name(state).to_string(),
                    profile.target_level.to_string(),
                    profile.hit[state].render(),
                ])
                .expect("csv");
            }
        }
    }
    csv_finish(w)
}

/// Columns: `start_state,level,expected_time` plus a trailing total row.
pub fn decomposition_csv<S: Scalar>(
    chain: &StateChain<S>,
    decomposition: &Decomposition<S>,
) -> String {
    let mut w = csv_writer();
    w.write_record(["start_state", "level", "expected_time"])
        .expect("csv");
    let start = chain.name(decomposition.start_state).to_string();
    for (level, time) in &decomposition.per_level {
        w.write_record([start.clone(), level.to_string(), time.render()])
            .expect("csv");
    }
    w.write_record([start, "total".to_string(), decomposition.total.render()])
        .expect("csv");
    csv_finish(w)
}

/// Columns: `instance,variant,n,trials,cap,mean,se,censored,seed`.
pub fn sim_estimate_csv(
    instance: &KnapsackInstance,
    variant: Variant,
    estimate: &SimEstimate,
) -> String {
    let mut w = csv_writer();
    w.write_record([
        "instance", "variant", "n", "trials", "cap", "mean", "se", "censored", "seed",
    ])
    .expect("csv");
    w.write_record([
        instance.id.to_string(),
        variant.to_string(),
        instance.n.to_string(),
        estimate.trials.to_string(),
        estimate.cap.to_string(),
        format!("{}", estimate.mean),
        format!("{}", estimate.std_error),
        estimate.censored.to_string(),
        estimate.master_seed.to_string(),
    ])
    .expect("csv");
    csv_finish(w)
}

/// Columns: `variant_a,variant_b,ratio_low,ratio_high,exact_ratio`.
pub fn comparison_csv<S: Scalar>(
    variant_a: Variant,
    variant_b: Variant,
    comparison: &Comparison<S>,
) -> String {
    let mut w = csv_writer();
    w.write_record([
        "variant_a",
        "variant_b",
        "ratio_low",
        "ratio_high",
        "exact_ratio",
    ])
    .expect("csv");
    w.write_record([
        variant_a.to_string(),
        variant_b.to_string(),
        bound_value_text(&comparison.low),
        bound_value_text(&comparison.high),
        comparison
            .exact
            .as_ref()
            .map_or_else(String::new, bound_value_text),
    ])
    .expect("csv");
    csv_finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knapsack::make_instance;
    use crate::testkit::{t1_chain, t1_chain_float};

    #[test]
    fn chain_json_round_trips_in_rational_mode() {
        let chain = t1_chain();
        let text = chain_to_json(&chain);
        match parse_chain_json(&text).unwrap() {
            AnyChain::Rational(parsed) => assert_eq!(parsed, chain),
            AnyChain::Float(_) => panic!("mode lost"),
        }
    }

    #[test]
    fn chain_json_round_trips_in_float_mode() {
        let chain = t1_chain_float();
        let text = chain_to_json(&chain);
        match parse_chain_json(&text).unwrap() {
            AnyChain::Float(parsed) => assert_eq!(parsed, chain),
            AnyChain::Rational(_) => panic!("mode lost"),
        }
    }

    #[test]
    fn rational_mode_rejects_number_literals() {
        let text = r#"{"mode":"rational","states":[{"id":"a","fitness":1.0,"optimal":true}],"rows":[{"from":"a","to":"a","p":"1"}]}"#;
        assert!(parse_chain_json(text).is_err());
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let text = r#"{"mode":"decimal","states":[],"rows":[]}"#;
        assert!(parse_chain_json(text).is_err());
    }

    #[test]
    fn instance_json_round_trips() {
        for (id, n) in [
            (InstanceId::Kp1, 8),
            (InstanceId::Kp5, 8),
            (InstanceId::Kp6, 9),
        ] {
            let instance = make_instance(id, n).unwrap();
            let text = instance_to_json(&instance);
            assert_eq!(parse_instance_json(&text).unwrap(), instance);
        }
    }

    #[test]
    fn kp6_capacity_serializes_as_inf() {
        let instance = make_instance(InstanceId::Kp6, 8).unwrap();
        let text = instance_to_json(&instance);
        assert!(text.contains("\"capacity\": \"inf\""));
    }

    #[test]
    fn coefficient_csv_quotes_nothing_unexpected() {
        use crate::coeffs::{constant_table, Direction};
        use num_traits::Zero;
        let table = constant_table::<BigRational>(Direction::Lower, 2, BigRational::zero());
        let text = coeff_table_csv(&table);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,ell,value,method,direction"));
        assert_eq!(lines.next(), Some("0,0,1,constant,lower"));
    }
}
