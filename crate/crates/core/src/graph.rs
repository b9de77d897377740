//! The layered reassembly graph.
//!
//! Each layer places one fragment: on a free lateral slot, or (when allowed)
//! under the outsider label. Nodes are partial placements, so the graph is a
//! prefix tree rooted at the source; complete placements link to the sink
//! through a zero-weight edge. Edges whose probability falls below the cut
//! threshold are never materialized.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::counting::{node_count, GraphSizeQuery};
use crate::error::{Error, Result};
use crate::matrix::{log_weight, PredictionMatrix};
use crate::types::{FragmentId, GraphStats, PositionClass};

pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

/// Set of lateral slots, bit `code - 1` for slot `code`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SlotSet(u8);

impl SlotSet {
    pub const ALL: SlotSet = SlotSet(0xFF);
    pub const NONE: SlotSet = SlotSet(0);

    /// The first `p` lateral slots.
    pub fn first(p: u32) -> SlotSet {
        assert!(p <= 8);
        SlotSet(((1u16 << p) - 1) as u8)
    }

    pub fn from_positions(positions: impl IntoIterator<Item = PositionClass>) -> SlotSet {
        SlotSet(
            positions
                .into_iter()
                .filter(|p| p.is_lateral())
                .fold(0, |m, p| m | bit(p.code())),
        )
    }

    pub fn contains(self, p: PositionClass) -> bool {
        p.is_lateral() && self.0 & bit(p.code()) != 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = PositionClass> {
        PositionClass::laterals().filter(move |&p| self.contains(p))
    }
}

fn bit(code: u8) -> u8 {
    1 << (code - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutPolicy {
    /// Edges with probability strictly below `theta` are omitted; 0 disables cuts.
    pub theta: f64,
    /// Place the fragments with the most cut entries first.
    pub reorder: bool,
}

impl CutPolicy {
    pub fn new(theta: f64, reorder: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Domain {
                what: "cut threshold must lie in [0, 1]",
                value: theta,
            });
        }
        Ok(CutPolicy { theta, reorder })
    }

    pub fn uncut() -> Self {
        CutPolicy {
            theta: 0.0,
            reorder: false,
        }
    }
}

impl Default for CutPolicy {
    fn default() -> Self {
        CutPolicy {
            theta: 0.05,
            reorder: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildOptions {
    pub allow_outsiders: bool,
    /// Allow lateral slots to stay unfilled.
    pub allow_empties: bool,
    pub positions: SlotSet,
    pub node_budget: u64,
    /// Weight charged per unfilled slot on the edge into the sink.
    pub empty_weight: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            allow_outsiders: true,
            allow_empties: true,
            positions: SlotSet::ALL,
            node_budget: DEFAULT_NODE_BUDGET,
            empty_weight: 0.0,
        }
    }
}

impl BuildOptions {
    pub fn with_outsiders(mut self, allow: bool) -> Self {
        self.allow_outsiders = allow;
        self
    }

    pub fn with_positions(mut self, positions: SlotSet) -> Self {
        self.positions = positions;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Choice {
    pub class: PositionClass,
    pub prob: f64,
    pub weight: f64,
}

/// One fragment's surviving placement decisions, laterals by code then outsider.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Layer {
    pub fragment: FragmentId,
    pub choices: Vec<Choice>,
    /// Entries that fell below the threshold.
    pub cut_entries: u32,
    pub rescued: bool,
}

/// Per-fragment surviving choices in processing order.
pub fn prepare_layers(
    matrix: &PredictionMatrix,
    options: &BuildOptions,
    policy: &CutPolicy,
) -> Result<Vec<Layer>> {
    CutPolicy::new(policy.theta, policy.reorder)?;
    if !(options.empty_weight.is_finite() && options.empty_weight >= 0.0) {
        return Err(Error::Domain {
            what: "empty weight must be finite and nonnegative",
            value: options.empty_weight,
        });
    }
    let mut layers = Vec::with_capacity(matrix.f());
    for row in &matrix.rows {
        let lateral_sum: f64 = options.positions.iter().map(|p| row.prob(p)).sum();
        let mut candidates: Vec<(PositionClass, f64)> = if options.allow_outsiders {
            options.positions.iter().map(|p| (p, row.prob(p))).collect()
        } else {
            let scale = if lateral_sum > 0.0 { lateral_sum } else { 1.0 };
            options
                .positions
                .iter()
                .map(|p| (p, (row.prob(p) / scale).min(1.0)))
                .collect()
        };
        if options.allow_outsiders {
            candidates.push((PositionClass::OUTSIDER, row.prob(PositionClass::OUTSIDER)));
        }

        let total = candidates.len();
        let mut kept: Vec<(PositionClass, f64)> = candidates
            .iter()
            .copied()
            .filter(|&(_, p)| p >= policy.theta)
            .collect();
        let cut_entries = (total - kept.len()) as u32;
        let mut rescued = false;
        if kept.is_empty() && !options.allow_outsiders && !candidates.is_empty() {
            let best =
                candidates
                    .iter()
                    .copied()
                    .fold(candidates[0], |b, c| if c.1 > b.1 { c } else { b });
            kept.push(best);
            rescued = true;
        }
        let choices = kept
            .into_iter()
            .map(|(class, prob)| {
                Ok(Choice {
                    class,
                    prob,
                    weight: log_weight(prob)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        layers.push(Layer {
            fragment: row.fragment,
            choices,
            cut_entries,
            rescued,
        });
    }
    if policy.reorder {
        layers.sort_by(|a, b| {
            b.cut_entries
                .cmp(&a.cut_entries)
                .then(a.fragment.cmp(&b.fragment))
        });
    }
    Ok(layers)
}

/// Exact size of the pruned tree: generated nodes (source included) and the
/// number of complete placements linked to the sink.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TreeCount {
    pub explored: u128,
    pub terminals: u128,
}

/// Counts the nodes a build would generate without materializing them.
pub fn count_tree(layers: &[Layer], options: &BuildOptions) -> TreeCount {
    let mut counts = vec![0u128; 256];
    counts[0] = 1;
    let mut explored = 1u128;
    for layer in layers {
        let mut next = vec![0u128; 256];
        for (mask, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for choice in &layer.choices {
                if choice.class.is_outsider() {
                    next[mask] += c;
                } else {
                    let b = bit(choice.class.code()) as usize;
                    if mask & b == 0 {
                        next[mask | b] += c;
                    }
                }
            }
        }
        explored += next.iter().sum::<u128>();
        counts = next;
    }
    let full = options.positions.0 as usize;
    let terminals = counts
        .iter()
        .enumerate()
        .filter(|&(mask, _)| options.allow_empties || mask == full)
        .map(|(_, &c)| c)
        .sum();
    TreeCount {
        explored,
        terminals,
    }
}

/// Generated-node count for a matrix under the given options, without building.
pub fn explored_node_count(
    matrix: &PredictionMatrix,
    options: &BuildOptions,
    policy: &CutPolicy,
) -> Result<TreeCount> {
    Ok(count_tree(
        &prepare_layers(matrix, options, policy)?,
        options,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Terminal {
    pub node: u32,
    pub empties: u8,
}

#[derive(Clone, Debug)]
pub struct ReassemblyGraph {
    center: FragmentId,
    layers: Vec<Layer>,
    options: BuildOptions,
    policy: CutPolicy,
    /// Parent of each node; node 0 is the source.
    parent: Vec<u32>,
    /// Class chosen on the edge into each node.
    class: Vec<u8>,
    /// `layer_start[k]..layer_start[k + 1]` are the nodes at depth `k`.
    layer_start: Vec<usize>,
    terminals: Vec<Terminal>,
    stats: GraphStats,
}

impl ReassemblyGraph {
    pub fn center(&self) -> FragmentId {
        self.center
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn options(&self) -> &BuildOptions {
        &self.options
    }

    pub fn policy(&self) -> &CutPolicy {
        &self.policy
    }

    pub fn stats(&self) -> &GraphStats {
        &self.stats
    }

    pub(crate) fn parents(&self) -> &[u32] {
        &self.parent
    }

    pub(crate) fn classes(&self) -> &[u8] {
        &self.class
    }

    pub(crate) fn layer_starts(&self) -> &[usize] {
        &self.layer_start
    }

    pub(crate) fn terminals(&self) -> &[Terminal] {
        &self.terminals
    }

    /// Weight of the edge into the sink from a terminal.
    pub(crate) fn sink_weight(&self, t: Terminal) -> f64 {
        self.options.empty_weight * t.empties as f64
    }

    /// Number of complete placements.
    pub fn path_count(&self) -> usize {
        self.terminals.len()
    }

    /// Fragment and class choices along the path ending at `node`, in layer order.
    pub(crate) fn path_choices(&self, mut node: usize) -> Vec<(FragmentId, Choice)> {
        let mut depth = self.layer_start.partition_point(|&s| s <= node) - 1;
        let mut out = Vec::with_capacity(depth);
        while depth > 0 {
            let layer = &self.layers[depth - 1];
            let class = PositionClass::new(self.class[node]).expect("valid code");
            let choice = *layer
                .choices
                .iter()
                .find(|c| c.class == class)
                .expect("class belongs to layer");
            out.push((layer.fragment, choice));
            node = self.parent[node] as usize;
            depth -= 1;
        }
        out.reverse();
        out
    }

    /// Writes every edge as one JSON object per line.
    pub fn write_edge_dump(&self, mut out: impl Write) -> Result<()> {
        #[derive(Serialize)]
        struct EdgeLine {
            from: u64,
            to: u64,
            fragment: Option<FragmentId>,
            position: Option<PositionClass>,
            prob: f64,
            weight: f64,
        }
        let sink = self.parent.len() as u64;
        for depth in 1..self.layer_start.len() - 1 {
            let layer = &self.layers[depth - 1];
            for node in self.layer_start[depth]..self.layer_start[depth + 1] {
                let class = PositionClass::new(self.class[node]).expect("valid code");
                let choice = layer
                    .choices
                    .iter()
                    .find(|c| c.class == class)
                    .expect("class");
                let line = EdgeLine {
                    from: self.parent[node] as u64,
                    to: node as u64,
                    fragment: Some(layer.fragment),
                    position: Some(class),
                    prob: choice.prob,
                    weight: choice.weight,
                };
                serde_json::to_writer(&mut out, &line)?;
                out.write_all(b"\n")?;
            }
        }
        for &t in &self.terminals {
            let line = EdgeLine {
                from: t.node as u64,
                to: sink,
                fragment: None,
                position: None,
                prob: 1.0,
                weight: self.sink_weight(t),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Builds the pruned reassembly graph for one center hypothesis.
///
/// Fails with [`Error::Infeasible`] when no complete placement survives,
/// reporting the smallest edge probability on the uncut optimum as the
/// threshold that would restore it.
pub fn build_graph(
    matrix: &PredictionMatrix,
    options: &BuildOptions,
    policy: &CutPolicy,
) -> Result<ReassemblyGraph> {
    let graph = build_unchecked(matrix, options, policy)?;
    if graph.terminals.is_empty() {
        return Err(Error::Infeasible {
            restoring_theta: restoring_theta(matrix, options, policy),
        });
    }
    Ok(graph)
}

fn restoring_theta(
    matrix: &PredictionMatrix,
    options: &BuildOptions,
    policy: &CutPolicy,
) -> Option<f64> {
    if policy.theta == 0.0 {
        return None;
    }
    let uncut = CutPolicy {
        theta: 0.0,
        reorder: false,
    };
    let graph = build_unchecked(matrix, options, &uncut).ok()?;
    let solution = crate::solver::solve(&graph).ok()?;
    solution.path.iter().map(|c| c.prob).reduce(f64::min)
}

fn build_unchecked(
    matrix: &PredictionMatrix,
    options: &BuildOptions,
    policy: &CutPolicy,
) -> Result<ReassemblyGraph> {
    let started = Instant::now();
    let layers = prepare_layers(matrix, options, policy)?;

    let fits_upper_bound = GraphSizeQuery::new(layers.len().max(1) as u32, options.positions.len())
        .and_then(node_count)
        .map(|n| n <= options.node_budget as u128)
        .unwrap_or(false);
    let count = count_tree(&layers, options);
    if !fits_upper_bound && count.explored > options.node_budget as u128 {
        return Err(Error::NodeBudget {
            required: count.explored,
            budget: options.node_budget,
        });
    }

    let capacity = count.explored as usize;
    let mut parent = Vec::with_capacity(capacity);
    let mut class = Vec::with_capacity(capacity);
    let mut layer_start = Vec::with_capacity(layers.len() + 2);
    parent.push(u32::MAX);
    class.push(0u8);
    layer_start.push(0);
    layer_start.push(1);

    let mut masks: Vec<u8> = vec![0];
    for layer in &layers {
        let start = *layer_start.last().expect("nonempty");
        let prev_start = layer_start[layer_start.len() - 2];
        let mut next_masks = Vec::with_capacity(masks.len() * layer.choices.len());
        for (offset, &mask) in masks.iter().enumerate() {
            let node = (prev_start + offset) as u32;
            for choice in &layer.choices {
                let code = choice.class.code();
                let next = if choice.class.is_outsider() {
                    mask
                } else if mask & bit(code) == 0 {
                    mask | bit(code)
                } else {
                    continue;
                };
                parent.push(node);
                class.push(code);
                next_masks.push(next);
            }
        }
        debug_assert_eq!(parent.len() - start, next_masks.len());
        layer_start.push(parent.len());
        masks = next_masks;
    }

    let last_start = layer_start[layer_start.len() - 2];
    let full = options.positions.0;
    let terminals: Vec<Terminal> = masks
        .iter()
        .enumerate()
        .filter(|&(_, &m)| options.allow_empties || m == full)
        .map(|(offset, &m)| Terminal {
            node: (last_start + offset) as u32,
            empties: (full & !m).count_ones() as u8,
        })
        .collect();

    let explored = parent.len() as u64;
    debug_assert_eq!(explored as u128, count.explored);
    let stats = GraphStats {
        nodes: explored + 1,
        edges: explored - 1 + terminals.len() as u64,
        explored_nodes: explored,
        rescued_layers: layers.iter().filter(|l| l.rescued).count() as u32,
        build_time: Some(started.elapsed().as_secs_f64()),
        solve_time: None,
    };
    Ok(ReassemblyGraph {
        center: matrix.center,
        layers,
        options: options.clone(),
        policy: *policy,
        parent,
        class,
        layer_start,
        terminals,
        stats,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEnumeration {
    pub paths: Vec<(crate::types::Assignment, f64)>,
    /// More than `limit` paths exist.
    pub truncated: bool,
}

/// Lists complete placements in lexicographic layer-choice order.
///
/// Path weights are summed in ascending fragment order so the value does not
/// depend on the layer order.
pub fn enumerate_paths(graph: &ReassemblyGraph, limit: usize) -> PathEnumeration {
    let mut paths = Vec::with_capacity(graph.terminals.len().min(limit));
    for &t in graph.terminals.iter().take(limit) {
        let mut choices = graph.path_choices(t.node as usize);
        choices.sort_by_key(|(f, _)| *f);
        let weight = choices.iter().map(|(_, c)| c.weight).sum::<f64>() + graph.sink_weight(t);
        paths.push((assignment_from(graph.center, &choices), weight));
    }
    PathEnumeration {
        paths,
        truncated: graph.terminals.len() > limit,
    }
}

pub(crate) fn assignment_from(
    center: FragmentId,
    choices: &[(FragmentId, Choice)],
) -> crate::types::Assignment {
    let mut a = crate::types::Assignment::new(Some(center));
    for (fragment, choice) in choices {
        a.placements.insert(*fragment, choice.class);
    }
    a.mark_unfilled_as_empty();
    a
}
