//! Level digraph and path selection.
//!
//! Vertices are fitness levels; an arc `(k, l)` with `k > l` exists exactly
//! when every state of level `k` has positive transition probability to level
//! `l` (`p_min > 0`). Paths are strictly descending vertex sequences joined by
//! arcs and feed the path-restricted coefficient constructions.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::level::LevelStats;
use crate::numeric::Scalar;
use crate::{Error, Result};

/// Digraph over level indices `0..=K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelGraph {
    level_count: usize,
    arcs: BTreeSet<(usize, usize)>,
}

/// Build the level graph: arc `(k, l)` iff `p_min(X_k, S_l) > 0`.
pub fn build_level_graph<S: Scalar>(stats: &LevelStats<S>) -> LevelGraph {
    let mut arcs = BTreeSet::new();
    for k in 1..stats.level_count() {
        for l in 0..k {
            if !stats.min_transition(k, l).is_zero_prob() {
                arcs.insert((k, l));
            }
        }
    }
    LevelGraph {
        level_count: stats.level_count(),
        arcs,
    }
}

impl LevelGraph {
    pub fn level_count(&self) -> usize {
        self.level_count
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.arcs.contains(&(from, to))
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }
}

/// Strictly descending vertex sequence `k = v_0 > v_1 > ... > v_m = l` whose
/// consecutive pairs are arcs of the level graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path(Vec<usize>);

impl Path {
    /// Validate an explicit vertex list against a graph.
    pub fn new(graph: &LevelGraph, vertices: Vec<usize>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidPath("empty vertex list".into()));
        }
        for &v in &vertices {
            if v >= graph.level_count() {
                return Err(Error::InvalidPath(format!("vertex {v} out of range")));
            }
        }
        for w in vertices.windows(2) {
            if w[0] <= w[1] {
                return Err(Error::InvalidPath(format!(
                    "vertices must strictly descend, got {} before {}",
                    w[0], w[1]
                )));
            }
            if !graph.has_arc(w[0], w[1]) {
                return Err(Error::InvalidPath(format!(
                    "missing arc {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Path(vertices))
    }

    /// Source level `k` (highest index, lowest fitness).
    pub fn source(&self) -> usize {
        self.0[0]
    }

    /// Target level `l`.
    pub fn target(&self) -> usize {
        *self.0.last().expect("non-empty path")
    }

    /// Vertices from source down to target.
    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    /// Vertices in ascending level order (target first).
    pub fn ascending(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.reverse();
        v
    }

    pub fn contains(&self, vertex: usize) -> bool {
        self.0.contains(&vertex)
    }

    /// Path vertices strictly between `self.target()` and `upper`, i.e. the
    /// sub-path `P(target, upper)`.
    pub fn between(&self, upper: usize) -> Vec<usize> {
        self.0
            .iter()
            .copied()
            .filter(|&v| v > self.target() && v < upper)
            .collect()
    }

    /// Path vertices below `upper` including the target: `P[target, upper)`.
    pub fn below_inclusive(&self, upper: usize) -> Vec<usize> {
        self.0.iter().copied().filter(|&v| v < upper).collect()
    }
}

/// Path-picking strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathStrategy {
    /// The consecutive path `k -> k-1 -> ... -> l`; errors if any arc is missing.
    Consecutive,
    /// Minimum vertex count, ties broken by the lexicographically smallest
    /// vertex sequence.
    Shortest,
    /// An explicit vertex list, validated against the graph.
    Explicit(Vec<usize>),
}

/// Select a path from level `from` down to level `to`.
pub fn select_path(
    graph: &LevelGraph,
    from: usize,
    to: usize,
    strategy: PathStrategy,
) -> Result<Path> {
    if from >= graph.level_count() || to >= graph.level_count() {
        return Err(Error::InvalidPath("endpoint out of range".into()));
    }
    if to > from {
        return Err(Error::InvalidPath(format!(
            "target level {to} lies below source level {from}"
        )));
    }
    // Explicit lists are validated in full even for trivial endpoints.
    if let PathStrategy::Explicit(vertices) = strategy {
        let path = Path::new(graph, vertices)?;
        if path.source() != from || path.target() != to {
            return Err(Error::InvalidPath(format!(
                "explicit path runs {} -> {}, expected {} -> {}",
                path.source(),
                path.target(),
                from,
                to
            )));
        }
        return Ok(path);
    }
    if from == to {
        return Ok(Path(vec![from]));
    }
    match strategy {
        PathStrategy::Explicit(_) => unreachable!("handled above"),
        PathStrategy::Consecutive => {
            for k in (to + 1..=from).rev() {
                if !graph.has_arc(k, k - 1) {
                    return Err(Error::InvalidPath(format!(
                        "consecutive path requested but arc {} -> {} is missing",
                        k,
                        k - 1
                    )));
                }
            }
            Ok(Path((to..=from).rev().collect()))
        }
        PathStrategy::Shortest => {
            // Hop counts from every vertex down to `to`.
            let mut dist = vec![usize::MAX; graph.level_count()];
            dist[to] = 0;
            for v in to + 1..=from {
                let best = (to..v)
                    .filter(|&u| graph.has_arc(v, u) && dist[u] != usize::MAX)
                    .map(|u| dist[u] + 1)
                    .min();
                if let Some(d) = best {
                    dist[v] = d;
                }
            }
            if dist[from] == usize::MAX {
                return Err(Error::NoPath { from, to });
            }
            // Greedy reconstruction: the smallest admissible next vertex at
            // each step yields the lexicographically smallest sequence.
            let mut vertices = vec![from];
            let mut cur = from;
            while cur != to {
                let next = (to..cur)
                    .find(|&u| {
                        graph.has_arc(cur, u) && dist[u] != usize::MAX && dist[u] + 1 == dist[cur]
                    })
                    .expect("distance table admits a successor");
                vertices.push(next);
                cur = next;
            }
            Ok(Path(vertices))
        }
    }
}

/// Render the level graph as a DOT digraph. `label` supplies each vertex's
/// annotation; vertex and arc order are deterministic.
pub fn to_dot(graph: &LevelGraph, mut label: impl FnMut(usize) -> String) -> String {
    let mut out = String::from("digraph levels {\n");
    for v in 0..graph.level_count() {
        let text = label(v).replace('"', "\\\"");
        let _ = writeln!(out, "  {v} [label=\"{text}\"];");
    }
    for (k, l) in graph.arcs() {
        let _ = writeln!(out, "  {k} -> {l};");
    }
    out.push_str("}\n");
    out
}
