//! Command-line front end: reproducible analysis runs writing into a
//! self-describing output directory.
//!
//! Every run echoes its resolved configuration (with input hashes) to
//! `config.json` next to the artifacts, and reruns with the same
//! configuration produce byte-identical files. `DRIFTLAB_OUT` overrides
//! `--out`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bounds::{
    compare_algorithms, lower_time_bound, typed_bound, upper_time_bound, verify_drift_inequality,
    BoundSide, BoundValue, StartSpec, TypedCoefficients,
};
use crate::chain::StateChain;
use crate::coeffs::{
    allpath_table, forward_table, path_table, random_init_coeffs, reverse_table,
    table_from_per_level, type_c_coeff, type_cl_coeffs, CoefficientTable, Direction, Method,
    PathForm,
};
use crate::exact::{decompose_hitting_time, hitting_probabilities, mean_hitting_time};
use crate::graph::{build_level_graph, select_path, to_dot, PathStrategy};
use crate::io::{self, AnyChain};
use crate::knapsack::{build_lumped_chain, make_instance, InstanceId, KnapsackInstance, Variant};
use crate::level::{build_level_partition, level_stats, LevelPartition, LevelStats};
use crate::numeric::Scalar;
use crate::sim::estimate_hitting_time;
use crate::{Error, Result};

/// Chains larger than this skip the exact-oracle cross-check in `analyze`.
const ORACLE_STATE_LIMIT: usize = 4000;

#[derive(Debug, Parser)]
#[command(
    name = "driftlab",
    version,
    about = "Fitness-level runtime analysis for elitist EAs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact hitting times, hitting probabilities, and the per-level
    /// decomposition.
    Oracle(OracleArgs),
    /// Coefficient tables plus lower/upper time bounds, with a sandwich
    /// verdict against the exact oracle when feasible.
    Analyze(AnalyzeArgs),
    /// Monte Carlo hitting-time estimation.
    Simulate(SimulateArgs),
    /// Compare the two EA variants on one instance.
    Compare(CompareArgs),
    /// Export the level graph as DOT.
    ExportGraph(ExportGraphArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rational,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Feasibility,
    Greedy,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Feasibility => Variant::FeasibilityRules,
            VariantArg::Greedy => Variant::GreedyRepair,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CoeffsArg {
    Forward,
    Reverse,
    Allpath,
    Path,
    #[value(name = "type_c")]
    TypeC,
    #[value(name = "type_cl")]
    TypeCl,
    #[value(name = "random_init")]
    RandomInit,
}

impl CoeffsArg {
    fn as_str(self) -> &'static str {
        match self {
            CoeffsArg::Forward => "forward",
            CoeffsArg::Reverse => "reverse",
            CoeffsArg::Allpath => "allpath",
            CoeffsArg::Path => "path",
            CoeffsArg::TypeC => "type_c",
            CoeffsArg::TypeCl => "type_cl",
            CoeffsArg::RandomInit => "random_init",
        }
    }
}

/// Input selection shared by all commands: exactly one of a builtin instance
/// or a chain JSON file.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Builtin instance id (KP1..KP6).
    #[arg(long)]
    pub instance: Option<String>,
    /// Problem size for builtin instances.
    #[arg(long)]
    pub n: Option<usize>,
    /// EA variant for builtin instances.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Chain JSON file (the file's own mode governs its arithmetic).
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Numeric mode for instance-built chains.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output directory (DRIFTLAB_OUT overrides).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Coefficient family.
    #[arg(long, value_enum, default_value = "forward")]
    pub coeffs: CoeffsArg,
    /// Explicit level path (comma-separated, descending) for `--coeffs path`.
    #[arg(long)]
    pub path: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub cap: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Coefficient family for the bound interval.
    #[arg(long, value_enum, default_value = "forward")]
    pub coeffs: CoeffsArg,
}

#[derive(Debug, Args)]
pub struct ExportGraphArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

/// Resolved run configuration echoed into the output directory.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<String>,
    pub input_sha256: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub out: String,
}

/// Parse a comma-separated level list such as `12,8,1`.
pub fn parse_path_arg(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(Error::Parse("empty path component".into()));
        }
        out.push(
            part.parse::<usize>()
                .map_err(|_| Error::Parse(format!("invalid level index {part:?}")))?,
        );
    }
    if out.is_empty() {
        return Err(Error::Parse("empty path".into()));
    }
    Ok(out)
}

struct LoadedChain {
    chain: AnyChain,
    /// Preferred start state name (the empty knapsack for instances).
    start_state: Option<String>,
    config: RunConfig,
    out_dir: PathBuf,
}

fn resolve_out_dir(requested: &Option<PathBuf>) -> PathBuf {
    if let Ok(env_dir) = std::env::var("DRIFTLAB_OUT") {
        if !env_dir.is_empty() {
            return PathBuf::from(env_dir);
        }
    }
    requested
        .clone()
        .unwrap_or_else(|| PathBuf::from("driftlab-out"))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn load_instance(input: &InputArgs) -> Result<(KnapsackInstance, Variant)> {
    let id = input
        .instance
        .as_ref()
        .ok_or_else(|| Error::Parse("missing --instance".into()))?;
    let n = input
        .n
        .ok_or_else(|| Error::Parse("--instance requires --n".into()))?;
    let variant = input
        .variant
        .ok_or_else(|| Error::Parse("--instance requires --variant".into()))?;
    let instance = make_instance(InstanceId::parse(id), n)?;
    if matches!(instance.id, InstanceId::Custom(_)) {
        return Err(Error::Parse(format!("unknown builtin instance {id:?}")));
    }
    Ok((instance, variant.into()))
}

fn load_chain(command: &str, input: &InputArgs) -> Result<LoadedChain> {
    match (&input.instance, &input.chain) {
        (Some(_), Some(_)) => Err(Error::Parse(
            "exactly one input source: pass --instance or --chain, not both".into(),
        )),
        (None, None) => Err(Error::Parse(
            "exactly one input source: pass --instance with --n, or --chain FILE".into(),
        )),
        (Some(_), None) => {
            let (instance, variant) = load_instance(input)?;
            let mode = input.mode.unwrap_or(ModeArg::Rational);
            let chain = match mode {
                ModeArg::Rational => AnyChain::Rational(build_lumped_chain(&instance, variant)?),
                ModeArg::Float => AnyChain::Float(build_lumped_chain(&instance, variant)?),
            };
            let canonical = io::instance_to_json(&instance);
            let out_dir = resolve_out_dir(&input.out);
            Ok(LoadedChain {
                chain,
                start_state: Some("(0,0;0)".to_string()),
                config: RunConfig {
                    command: command.to_string(),
                    instance: Some(instance.id.to_string()),
                    n: Some(instance.n),
                    variant: input.variant.map(|v| Variant::from(v).to_string()),
                    chain: None,
                    input_sha256: sha256_hex(canonical.as_bytes()),
                    mode: chain_mode_name(mode),
                    coeffs: None,
                    path: None,
                    trials: None,
                    cap: None,
                    seed: None,
                    out: out_dir.display().to_string(),
                },
                out_dir,
            })
        }
        (None, Some(path)) => {
            let bytes = fs::read(path)?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| Error::Parse("chain file is not utf-8".into()))?;
            let chain = io::parse_chain_json(&text)?;
            if let Some(mode) = input.mode {
                if chain_mode_name(mode) != chain.mode() {
                    return Err(Error::Parse(format!(
                        "chain file is {} mode but --mode {} was requested",
                        chain.mode(),
                        chain_mode_name(mode)
                    )));
                }
            }
            let out_dir = resolve_out_dir(&input.out);
            Ok(LoadedChain {
                start_state: None,
                config: RunConfig {
                    command: command.to_string(),
                    instance: None,
                    n: None,
                    variant: None,
                    chain: Some(path.display().to_string()),
                    input_sha256: sha256_hex(&bytes),
                    mode: chain.mode().to_string(),
                    coeffs: None,
                    path: None,
                    trials: None,
                    cap: None,
                    seed: None,
                    out: out_dir.display().to_string(),
                },
                chain,
                out_dir,
            })
        }
    }
}

fn chain_mode_name(mode: ModeArg) -> String {
    match mode {
        ModeArg::Rational => "rational".to_string(),
        ModeArg::Float => "float".to_string(),
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_config(dir: &Path, config: &RunConfig) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config).expect("serializable");
    text.push('\n');
    write_text(dir, "config.json", &text)
}

/// Start state: the requested one if present, otherwise the first state of
/// the worst level.
fn pick_start<S: Scalar>(
    chain: &StateChain<S>,
    partition: &LevelPartition,
    requested: &Option<String>,
) -> Result<usize> {
    match requested {
        Some(name) => chain
            .state_index(name)
            .ok_or_else(|| Error::Parse(format!("start state {name:?} not in chain"))),
        None => Ok(partition.level(partition.last_level())[0]),
    }
}

fn run_oracle<S: Scalar>(
    chain: &StateChain<S>,
    start_state: &Option<String>,
    out_dir: &Path,
) -> Result<bool> {
    let partition = build_level_partition(chain)?;
    let start = pick_start(chain, &partition, start_state)?;
    let times = mean_hitting_time(chain)?;
    let mut profiles = Vec::new();
    for target in 0..partition.level_count() {
        profiles.push(hitting_probabilities(chain, &partition, target)?);
    }
    write_text(
        out_dir,
        "hitting_times.csv",
        &io::hitting_times_csv(chain, &partition, &times),
    )?;
    write_text(
        out_dir,
        "hitting_probabilities.csv",
        &io::hitting_profiles_csv(chain, &partition, &profiles),
    )?;

    let mut identity_ok = true;
    let mut summary = serde_json::Map::new();
    summary.insert("start_state".into(), chain.name(start).into());
    summary.insert("m_start".into(), times[start].render().into());
    if partition.level_of(start) > 0 {
        let decomposition = decompose_hitting_time(chain, &partition, start)?;
        write_text(
            out_dir,
            "decomposition.csv",
            &io::decomposition_csv(chain, &decomposition),
        )?;
        identity_ok = if S::EXACT {
            decomposition.total == times[start]
        } else {
            let scale = crate::numeric::max_s(times[start].abs(), S::one());
            decomposition
                .total
                .close_to(&times[start], &(S::cmp_tol() * scale))
        };
        summary.insert(
            "decomposition_total".into(),
            decomposition.total.render().into(),
        );
    }
    summary.insert("staying_time_identity".into(), verdict(identity_ok).into());
    let mut text =
        serde_json::to_string_pretty(&serde_json::Value::Object(summary)).expect("serializable");
    text.push('\n');
    write_text(out_dir, "summary.json", &text)?;
    println!(
        "oracle: m({}) = {}; staying-time identity {}",
        chain.name(start),
        times[start].render(),
        verdict(identity_ok)
    );
    Ok(identity_ok)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Lower and upper tables for the chosen family.
fn build_tables<S: Scalar>(
    stats: &LevelStats<S>,
    partition: &LevelPartition,
    family: CoeffsArg,
    path_arg: &Option<String>,
) -> Result<(CoefficientTable<S>, CoefficientTable<S>)> {
    match family {
        CoeffsArg::Forward => Ok((
            forward_table(stats, Direction::Lower)?,
            forward_table(stats, Direction::Upper)?,
        )),
        CoeffsArg::Reverse => Ok((
            reverse_table(stats, Direction::Lower)?,
            reverse_table(stats, Direction::Upper)?,
        )),
        CoeffsArg::Allpath => Ok((
            allpath_table(stats, Direction::Lower)?,
            allpath_table(stats, Direction::Upper)?,
        )),
        CoeffsArg::Path => {
            let spec = path_arg
                .as_ref()
                .ok_or_else(|| Error::Parse("--coeffs path requires --path".into()))?;
            let vertices = parse_path_arg(spec)?;
            let graph = build_level_graph(stats);
            let from = vertices[0];
            let to = *vertices.last().expect("non-empty");
            let path = select_path(&graph, from, to, PathStrategy::Explicit(vertices))?;
            Ok((
                path_table(stats, &path, Direction::Lower, PathForm::Explicit)?,
                path_table(stats, &path, Direction::Upper, PathForm::Explicit)?,
            ))
        }
        CoeffsArg::TypeC => {
            let lower = type_c_coeff(stats, Direction::Lower)?;
            let upper = type_c_coeff(stats, Direction::Upper)?;
            let scalar_table = |value: S, direction| {
                let mut values = vec![Some(value); stats.last_level() + 1];
                values[0] = Some(S::one());
                table_from_per_level(direction, Method::TypeC, &values)
            };
            Ok((
                scalar_table(lower, Direction::Lower),
                scalar_table(upper, Direction::Upper),
            ))
        }
        CoeffsArg::TypeCl => {
            let lower = type_cl_coeffs(stats, Direction::Lower)?;
            let upper = type_cl_coeffs(stats, Direction::Upper)?;
            Ok((
                table_from_per_level(Direction::Lower, Method::TypeCl, &pad(lower, S::zero())),
                table_from_per_level(Direction::Upper, Method::TypeCl, &pad(upper, S::one())),
            ))
        }
        CoeffsArg::RandomInit => {
            // Uniform start over all states, aggregated by level.
            let init = uniform_level_distribution(partition);
            let lower = random_init_coeffs(stats, &init)?;
            let upper = type_cl_coeffs(stats, Direction::Upper)?;
            Ok((
                table_from_per_level(Direction::Lower, Method::RandomInit, &lower),
                table_from_per_level(Direction::Upper, Method::TypeCl, &pad(upper, S::one())),
            ))
        }
    }
}

fn pad<S: Scalar>(mut values: Vec<Option<S>>, fill: S) -> Vec<Option<S>> {
    for v in values.iter_mut() {
        if v.is_none() {
            *v = Some(fill.clone());
        }
    }
    values
}

fn uniform_level_distribution<S: Scalar>(partition: &LevelPartition) -> Vec<S> {
    let total = partition.levels().iter().map(|l| l.len()).sum::<usize>() as i64;
    partition
        .levels()
        .iter()
        .map(|l| S::from_ratio(l.len() as i64, total))
        .collect()
}

fn bound_value_str<S: Scalar>(v: &BoundValue<S>) -> String {
    match v {
        BoundValue::Finite(x) => x.render(),
        BoundValue::Unbounded => "unbounded".into(),
    }
}

fn run_analyze<S: Scalar>(
    chain: &StateChain<S>,
    start_state: &Option<String>,
    family: CoeffsArg,
    path_arg: &Option<String>,
    out_dir: &Path,
) -> Result<bool> {
    let partition = build_level_partition(chain)?;
    let stats = level_stats(chain, &partition)?;
    let start = pick_start(chain, &partition, start_state)?;
    let start_level = partition.level_of(start);
    if start_level == 0 {
        return Err(Error::Internal("start state is already optimal".into()));
    }
    let (lower_table, upper_table) = build_tables(&stats, &partition, family, path_arg)?;
    write_text(
        out_dir,
        "coeffs_lower.csv",
        &io::coeff_table_csv(&lower_table),
    )?;
    write_text(
        out_dir,
        "coeffs_upper.csv",
        &io::coeff_table_csv(&upper_table),
    )?;

    // Random-init lower bounds use the flat distribution form.
    let report = if family == CoeffsArg::RandomInit {
        let init = uniform_level_distribution::<S>(&partition);
        let lower_values: Vec<Option<S>> = (0..=stats.last_level())
            .map(|l| {
                if l == 0 {
                    Some(S::one())
                } else {
                    Some(lower_table.get(stats.last_level(), l))
                }
            })
            .collect();
        let lower = typed_bound(
            &stats,
            &TypedCoefficients::PerLevel {
                values: lower_values,
                direction: Direction::Lower,
                method: Method::RandomInit,
            },
            StartSpec::Distribution(init.clone()),
        )?;
        let upper = upper_time_bound(&stats, &upper_table, start_level)?;
        lower.merge(upper)
    } else {
        let lower = lower_time_bound(&stats, &lower_table, start_level)?;
        let upper = upper_time_bound(&stats, &upper_table, start_level)?;
        lower.merge(upper)
    };
    write_text(out_dir, "bounds.csv", &io::bound_report_csv(&report))?;
    write_text(out_dir, "bounds.json", &io::bound_report_json(&report))?;

    let lower_side = report.lower.as_ref().expect("lower side computed");
    let upper_side = report.upper.as_ref().expect("upper side computed");

    let drift_lower = verify_drift_inequality(&stats, &lower_table)?;
    let drift_upper = verify_drift_inequality(&stats, &upper_table)?;

    let exact = if chain.len() <= ORACLE_STATE_LIMIT {
        Some(mean_hitting_time(chain)?[start].clone())
    } else {
        None
    };
    let sandwich = exact.as_ref().map(|m| {
        // Exact comparison in rational mode; tight bounds in float mode may
        // differ from the oracle value by roundoff only.
        let tol = S::cmp_tol() * crate::numeric::max_s(m.abs(), S::one());
        let lower_ok = match &lower_side.value {
            BoundValue::Finite(v) => *v <= m.clone() + tol.clone(),
            BoundValue::Unbounded => false,
        };
        let upper_ok = match &upper_side.value {
            BoundValue::Finite(v) => *v >= m.clone() - tol.clone(),
            BoundValue::Unbounded => true,
        };
        lower_ok && upper_ok
    });

    let mut summary = serde_json::Map::new();
    summary.insert("start_state".into(), chain.name(start).into());
    summary.insert("start_level".into(), start_level.into());
    summary.insert("method".into(), family.as_str().into());
    summary.insert("lower".into(), bound_value_str(&lower_side.value).into());
    summary.insert("upper".into(), bound_value_str(&upper_side.value).into());
    if let Some(m) = &exact {
        summary.insert("exact".into(), m.render().into());
    }
    summary.insert(
        "sandwich".into(),
        sandwich.map_or("SKIPPED", verdict).into(),
    );
    summary.insert("drift_lower".into(), verdict(drift_lower.ok()).into());
    summary.insert("drift_upper".into(), verdict(drift_upper.ok()).into());
    let mut text =
        serde_json::to_string_pretty(&serde_json::Value::Object(summary)).expect("serializable");
    text.push('\n');
    write_text(out_dir, "summary.json", &text)?;

    let ok = sandwich.unwrap_or(true) && drift_lower.ok() && drift_upper.ok();
    println!(
        "analyze[{}]: lower = {}, upper = {}, exact = {}, sandwich {}",
        family.as_str(),
        bound_value_str(&lower_side.value),
        bound_value_str(&upper_side.value),
        exact.as_ref().map_or("skipped".into(), |m| m.render()),
        sandwich.map_or("SKIPPED", verdict),
    );
    Ok(ok)
}

fn run_export_graph<S: Scalar>(chain: &StateChain<S>, out_dir: &Path) -> Result<()> {
    let partition = build_level_partition(chain)?;
    let stats = level_stats(chain, &partition)?;
    let graph = build_level_graph(&stats);
    let dot = to_dot(&graph, |level| {
        let states = partition.level(level);
        let fitness = chain.fitness(states[0]).render();
        let mut names: Vec<&str> = states.iter().map(|&s| chain.name(s)).collect();
        let extra = names.len().saturating_sub(8);
        names.truncate(8);
        let mut label = format!("S{level} f={fitness} {}", names.join(" "));
        if extra > 0 {
            label.push_str(&format!(" +{extra}"));
        }
        label
    });
    write_text(out_dir, "graph.dot", &dot)?;
    println!(
        "export-graph: {} levels, {} arcs",
        graph.level_count(),
        graph.arc_count()
    );
    Ok(())
}

fn run_compare<S: Scalar>(
    instance: &KnapsackInstance,
    family: CoeffsArg,
    out_dir: &Path,
) -> Result<()>
where
    StateChain<S>: Sized,
{
    let mut sides: Vec<(BoundSide<S>, BoundSide<S>, S)> = Vec::new();
    for variant in [Variant::GreedyRepair, Variant::FeasibilityRules] {
        let chain: StateChain<S> = build_lumped_chain(instance, variant)?;
        let partition = build_level_partition(&chain)?;
        let stats = level_stats(&chain, &partition)?;
        let start = chain
            .state_index("(0,0;0)")
            .ok_or_else(|| Error::Internal("empty knapsack class missing".into()))?;
        let start_level = partition.level_of(start);
        let (lower_table, upper_table) = build_tables(&stats, &partition, family, &None)?;
        let lower = lower_time_bound(&stats, &lower_table, start_level)?;
        let upper = upper_time_bound(&stats, &upper_table, start_level)?;
        let exact = mean_hitting_time(&chain)?[start].clone();
        sides.push((
            lower.lower.expect("lower side"),
            upper.upper.expect("upper side"),
            exact,
        ));
    }
    let (b_lower, b_upper, m_b) = sides.pop().expect("feasibility side");
    let (a_lower, a_upper, m_a) = sides.pop().expect("greedy side");
    let comparison = compare_algorithms(
        &a_lower,
        &a_upper,
        &b_lower,
        &b_upper,
        Some((m_a.clone(), m_b.clone())),
    );
    write_text(
        out_dir,
        "comparison.csv",
        &io::comparison_csv(
            Variant::GreedyRepair,
            Variant::FeasibilityRules,
            &comparison,
        ),
    )?;
    let mut summary = serde_json::Map::new();
    summary.insert("variant_a".into(), Variant::GreedyRepair.to_string().into());
    summary.insert(
        "variant_b".into(),
        Variant::FeasibilityRules.to_string().into(),
    );
    summary.insert("m_a".into(), m_a.render().into());
    summary.insert("m_b".into(), m_b.render().into());
    summary.insert("ratio_low".into(), bound_value_str(&comparison.low).into());
    summary.insert(
        "ratio_high".into(),
        bound_value_str(&comparison.high).into(),
    );
    if let Some(exact) = &comparison.exact {
        summary.insert("exact_ratio".into(), bound_value_str(exact).into());
    }
    let mut text =
        serde_json::to_string_pretty(&serde_json::Value::Object(summary)).expect("serializable");
    text.push('\n');
    write_text(out_dir, "comparison.json", &text)?;
    println!(
        "compare greedy/feasibility: exact ratio {}, interval [{}, {}]",
        comparison
            .exact
            .as_ref()
            .map_or("n/a".into(), bound_value_str),
        bound_value_str(&comparison.low),
        bound_value_str(&comparison.high),
    );
    Ok(())
}

/// Execute a parsed command line; returns the process exit code (0 = all
/// verdicts pass).
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Oracle(args) => {
            let loaded = load_chain("oracle", &args.input)?;
            write_config(&loaded.out_dir, &loaded.config)?;
            let ok = match &loaded.chain {
                AnyChain::Rational(chain) => {
                    run_oracle(chain, &loaded.start_state, &loaded.out_dir)?
                }
                AnyChain::Float(chain) => run_oracle(chain, &loaded.start_state, &loaded.out_dir)?,
            };
            Ok(if ok { 0 } else { 1 })
        }
        Command::Analyze(args) => {
            let mut loaded = load_chain("analyze", &args.input)?;
            loaded.config.coeffs = Some(args.coeffs.as_str().to_string());
            loaded.config.path = args.path.clone();
            write_config(&loaded.out_dir, &loaded.config)?;
            let ok = match &loaded.chain {
                AnyChain::Rational(chain) => run_analyze(
                    chain,
                    &loaded.start_state,
                    args.coeffs,
                    &args.path,
                    &loaded.out_dir,
                )?,
                AnyChain::Float(chain) => run_analyze(
                    chain,
                    &loaded.start_state,
                    args.coeffs,
                    &args.path,
                    &loaded.out_dir,
                )?,
            };
            Ok(if ok { 0 } else { 1 })
        }
        Command::Simulate(args) => {
            let (instance, variant) = load_instance(&args.input)?;
            let out_dir = resolve_out_dir(&args.input.out);
            let canonical = io::instance_to_json(&instance);
            let config = RunConfig {
                command: "simulate".into(),
                instance: Some(instance.id.to_string()),
                n: Some(instance.n),
                variant: Some(variant.to_string()),
                chain: None,
                input_sha256: sha256_hex(canonical.as_bytes()),
                mode: "integer".into(),
                coeffs: None,
                path: None,
                trials: Some(args.trials),
                cap: Some(args.cap),
                seed: Some(args.seed),
                out: out_dir.display().to_string(),
            };
            write_config(&out_dir, &config)?;
            let estimate =
                estimate_hitting_time(&instance, variant, args.trials, args.cap, args.seed)?;
            if estimate.censored > 0 {
                eprintln!(
                    "warning: {} of {} trials censored at cap {}",
                    estimate.censored, estimate.trials, estimate.cap
                );
            }
            write_text(
                &out_dir,
                "simulation.csv",
                &io::sim_estimate_csv(&instance, variant, &estimate),
            )?;
            println!(
                "simulate {} {} n={}: mean {} (se {}), censored {}",
                instance.id,
                variant,
                instance.n,
                estimate.mean,
                estimate.std_error,
                estimate.censored
            );
            Ok(0)
        }
        Command::Compare(args) => {
            if args.input.chain.is_some() {
                return Err(Error::Parse(
                    "compare works on builtin instances (needs both variants)".into(),
                ));
            }
            let id = args
                .input
                .instance
                .as_ref()
                .ok_or_else(|| Error::Parse("missing --instance".into()))?;
            let n = args
                .input
                .n
                .ok_or_else(|| Error::Parse("--instance requires --n".into()))?;
            let instance = make_instance(InstanceId::parse(id), n)?;
            let out_dir = resolve_out_dir(&args.input.out);
            let canonical = io::instance_to_json(&instance);
            let config = RunConfig {
                command: "compare".into(),
                instance: Some(instance.id.to_string()),
                n: Some(instance.n),
                variant: None,
                chain: None,
                input_sha256: sha256_hex(canonical.as_bytes()),
                mode: chain_mode_name(args.input.mode.unwrap_or(ModeArg::Rational)),
                coeffs: Some(args.coeffs.as_str().to_string()),
                path: None,
                trials: None,
                cap: None,
                seed: None,
                out: out_dir.display().to_string(),
            };
            write_config(&out_dir, &config)?;
            match args.input.mode.unwrap_or(ModeArg::Rational) {
                ModeArg::Rational => run_compare::<BigRational>(&instance, args.coeffs, &out_dir)?,
                ModeArg::Float => run_compare::<f64>(&instance, args.coeffs, &out_dir)?,
            }
            Ok(0)
        }
        Command::ExportGraph(args) => {
            let loaded = load_chain("export-graph", &args.input)?;
            write_config(&loaded.out_dir, &loaded.config)?;
            match &loaded.chain {
                AnyChain::Rational(chain) => run_export_graph(chain, &loaded.out_dir)?,
                AnyChain::Float(chain) => run_export_graph(chain, &loaded.out_dir)?,
            }
            Ok(0)
        }
    }
}
