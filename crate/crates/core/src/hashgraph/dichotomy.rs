use serde::Serialize;

use super::binomial::{contains_binomial_tree, inductive_binomial_witness};
use super::double_cycle::{double_cycle_from, DoubleCycleShape};
use super::graph::{build_graph, ComponentIndex, Vertex};
use super::loadgraph::{extract_load_graph, ArboricityCheck};
use crate::allocator::RunTrace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelProfile {
    pub level: u32,
    pub vertices: usize,
    /// `|E_l|`; absent for the top level.
    pub edges: Option<usize>,
    /// `a_l`; absent for the top level.
    pub arboricity_bound: Option<u32>,
}

/// Per-run structural checks.
///
/// With `k + 1` the maximum load, some component has excess ≥ 1 or `B_k`
/// is a subgraph. The load graph of a maximum-load bin satisfies the
/// arboricity bound. When that load graph has more edges than vertices, a
/// double cycle is extracted from it and its size recorded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DichotomyReport {
    pub max_load: u32,
    pub max_load_bin: Vertex,
    pub components: usize,
    pub largest_component: usize,
    pub largest_excess: i64,
    pub excess_component: bool,
    /// Searched only when no component has excess ≥ 1.
    pub binomial_tree: Option<bool>,
    pub profile: Vec<LevelProfile>,
    pub arboricity: Option<ArboricityCheck>,
    pub load_graph_edges: usize,
    pub load_graph_vertices: usize,
    pub double_cycle_edges: Option<usize>,
    pub double_cycle_shape: Option<DoubleCycleShape>,
    /// `4k + 4` for `k + 1` the maximum load.
    pub double_cycle_target: u32,
    /// Witness larger than `4k + 6`.
    pub double_cycle_oversize: bool,
    /// Present only for runs whose final graph is a forest.
    pub inductive_witness: Option<bool>,
}

impl DichotomyReport {
    pub fn lemma32_holds(&self) -> bool {
        self.arboricity.as_ref().is_none_or(ArboricityCheck::holds)
    }

    pub fn obs41_holds(&self) -> bool {
        self.max_load == 0 || self.excess_component || self.binomial_tree == Some(true)
    }

    pub fn inductive_holds(&self) -> bool {
        self.inductive_witness != Some(false)
    }

    /// Descriptions of every failed check.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.lemma32_holds() {
            out.push(format!("arboricity bound failed: {:?}", self.arboricity));
        }
        if !self.obs41_holds() {
            out.push(format!(
                "no excess component and no B_{} for max load {}",
                self.max_load - 1,
                self.max_load
            ));
        }
        if !self.inductive_holds() {
            out.push("inductive binomial witness failed on an acyclic run".into());
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }
}

pub fn verify_structural_dichotomy(trace: &RunTrace) -> DichotomyReport {
    let graph = build_graph(trace);
    let index = ComponentIndex::new(&graph);
    let n = trace.n();
    let max_load = trace.max_load();
    let (side, bin) = trace.max_load_bin();
    let center = Vertex::new(side as u8, bin);
    let excess_component = index.largest_excess() >= 1;
    let binomial_tree = if max_load > 0 && !excess_component {
        Some(contains_binomial_tree(&graph, max_load - 1).expect("no excess component"))
    } else {
        None
    };

    let lg = extract_load_graph(trace, center, max_load).expect("bin attains the max load");
    let bounds = lg.level_bounds();
    let profile = (0..=max_load)
        .map(|l| LevelProfile {
            level: l,
            vertices: lg.vertex_levels[l as usize].len(),
            edges: lg.edge_levels.get(l as usize).map(Vec::len),
            arboricity_bound: bounds.get(l as usize).copied(),
        })
        .collect();
    let component_size = index.vertex_count(index.label(center.id(n)));
    let arboricity =
        (max_load >= 1).then(|| ArboricityCheck::new(&lg, component_size).expect("k >= 1"));

    let lg_edges: Vec<(u32, usize, usize)> = lg
        .edge_levels
        .iter()
        .zip(&lg.edge_endpoints)
        .flat_map(|(times, ends)| times.iter().zip(ends))
        .map(|(&t, &(a, b))| (t, a.id(n), b.id(n)))
        .collect();
    let witness = if lg_edges.len() > lg.v0().len() {
        double_cycle_from(&lg_edges, center.id(n))
    } else {
        None
    };
    let k = max_load.saturating_sub(1);

    DichotomyReport {
        max_load,
        max_load_bin: center,
        components: index.len(),
        largest_component: index.largest_component(),
        largest_excess: index.largest_excess(),
        excess_component,
        binomial_tree,
        profile,
        arboricity,
        load_graph_edges: lg_edges.len(),
        load_graph_vertices: lg.v0().len(),
        double_cycle_edges: witness.as_ref().map(|w| w.edge_count()),
        double_cycle_shape: witness.as_ref().map(|w| w.shape),
        double_cycle_target: 4 * k + 4,
        double_cycle_oversize: witness
            .as_ref()
            .is_some_and(|w| w.edge_count() > (4 * k + 6) as usize),
        inductive_witness: inductive_binomial_witness(trace),
    }
}
