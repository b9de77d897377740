//! Exact minimum-weight placement over a built graph, and the reduction over
//! center hypotheses when the center fragment is unknown.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{
    assignment_from, build_graph, BuildOptions, Choice, CutPolicy, ReassemblyGraph,
};
use crate::matrix::PredictionMatrix;
use crate::types::{Assignment, FragmentId, GraphStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    #[serde(flatten)]
    pub assignment: Assignment,
    /// Sum of edge weights on the chosen path.
    pub cost: f64,
    /// `exp(-cost)`.
    pub probability: f64,
    pub stats: GraphStats,
    pub center_hypothesis: FragmentId,
    /// Decisions along the path, in fragment order.
    #[serde(skip)]
    pub path: Vec<Choice>,
}

impl Solution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn without_timings(mut self) -> Self {
        self.stats = self.stats.without_timings();
        self
    }
}

/// Single forward pass over the layers in topological order.
///
/// Terminals are stored in lexicographic order of their layer choices, so
/// keeping the first strict minimum realizes the tie-break.
pub fn solve(graph: &ReassemblyGraph) -> Result<Solution> {
    let started = Instant::now();
    let terminals = graph.terminals();
    if terminals.is_empty() {
        return Err(Error::Infeasible {
            restoring_theta: None,
        });
    }
    let starts = graph.layer_starts();
    let parents = graph.parents();
    let classes = graph.classes();

    let mut dist = vec![0.0f64];
    for depth in 1..starts.len() - 1 {
        let mut table = [0.0f64; 10];
        for c in &graph.layers()[depth - 1].choices {
            table[c.class.code() as usize] = c.weight;
        }
        let prev_start = starts[depth - 1];
        dist = (starts[depth]..starts[depth + 1])
            .map(|n| dist[parents[n] as usize - prev_start] + table[classes[n] as usize])
            .collect();
    }

    let last_start = starts[starts.len() - 2];
    let mut best = terminals[0];
    let mut best_cost = dist[best.node as usize - last_start] + graph.sink_weight(best);
    for &t in &terminals[1..] {
        let cost = dist[t.node as usize - last_start] + graph.sink_weight(t);
        if cost < best_cost {
            best = t;
            best_cost = cost;
        }
    }

    let mut choices = graph.path_choices(best.node as usize);
    // Re-add in fragment order so the reported cost does not depend on the
    // layer order.
    choices.sort_by_key(|(f, _)| *f);
    let best_cost = choices.iter().map(|(_, c)| c.weight).sum::<f64>() + graph.sink_weight(best);
    let assignment = assignment_from(graph.center(), &choices);
    let mut stats = graph.stats().clone();
    stats.solve_time = Some(started.elapsed().as_secs_f64());
    Ok(Solution {
        assignment,
        cost: best_cost,
        probability: (-best_cost).exp(),
        stats,
        center_hypothesis: graph.center(),
        path: choices.into_iter().map(|(_, c)| c).collect(),
    })
}

/// Builds and solves one matrix.
pub fn solve_matrix(
    matrix: &PredictionMatrix,
    options: &BuildOptions,
    policy: &CutPolicy,
) -> Result<Solution> {
    let graph = build_graph(matrix, options, policy)?;
    solve(&graph)
}

/// Solves every center hypothesis independently, in input order.
pub fn solve_hypotheses(
    matrices: &[PredictionMatrix],
    options: &BuildOptions,
    policy: &CutPolicy,
    exec: Execution,
) -> Result<Vec<Result<Solution>>> {
    check_hypotheses(matrices)?;
    Ok(exec.map(matrices, |m| solve_matrix(m, options, policy)))
}

fn check_hypotheses(matrices: &[PredictionMatrix]) -> Result<()> {
    let Some(first) = matrices.first() else {
        return Err(Error::Config("no center hypotheses given".into()));
    };
    let fragments = |m: &PredictionMatrix| -> BTreeSet<FragmentId> {
        m.rows
            .iter()
            .map(|r| r.fragment)
            .chain([m.center])
            .collect()
    };
    let expected = fragments(first);
    let mut centers = BTreeSet::new();
    for m in matrices {
        if fragments(m) != expected {
            return Err(Error::Validation(format!(
                "hypothesis with center {} covers a different fragment set",
                m.center
            )));
        }
        if !centers.insert(m.center) {
            return Err(Error::Validation(format!(
                "center {} given twice",
                m.center
            )));
        }
    }
    Ok(())
}

/// Solves one graph per candidate center and keeps the cheapest, breaking
/// ties by the smallest center id. Stats are summed over all hypotheses.
pub fn solve_unknown_center(
    matrices: &[PredictionMatrix],
    options: &BuildOptions,
    policy: &CutPolicy,
    exec: Execution,
) -> Result<Solution> {
    let results = solve_hypotheses(matrices, options, policy, exec)?;
    let mut total = GraphStats::default();
    let mut best: Option<Solution> = None;
    for result in results {
        let solution = match result {
            Ok(s) => s,
            Err(Error::Infeasible { .. }) => continue,
            Err(e) => return Err(e),
        };
        accumulate(&mut total, &solution.stats);
        let better = match &best {
            None => true,
            Some(b) => {
                solution.cost < b.cost
                    || (solution.cost == b.cost && solution.center_hypothesis < b.center_hypothesis)
            }
        };
        if better {
            best = Some(solution);
        }
    }
    let mut best = best.ok_or(Error::AllHypothesesInfeasible {
        hypotheses: matrices.len(),
    })?;
    best.stats = total;
    Ok(best)
}

fn accumulate(total: &mut GraphStats, s: &GraphStats) {
    total.nodes += s.nodes;
    total.edges += s.edges;
    total.explored_nodes += s.explored_nodes;
    total.rescued_layers += s.rescued_layers;
    let add = |a: Option<f64>, b: Option<f64>| Some(a.unwrap_or(0.0) + b.unwrap_or(0.0));
    total.build_time = add(total.build_time, s.build_time);
    total.solve_time = add(total.solve_time, s.solve_time);
}
