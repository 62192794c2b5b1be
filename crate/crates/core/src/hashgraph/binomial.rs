//! Binomial-tree subgraph detection.
//!
//! `B_0` is a single node and `B_k` is a root whose children root
//! `B_0, …, B_{k-1}`. In a rooted tree, the largest `t` with `B_t` embedded
//! at a vertex follows from its children's values sorted descending,
//! `d_1 ≥ d_2 ≥ ⋯`: it is the largest `t` with `d_i ≥ t − i` for `i = 1..t`.

use std::collections::HashMap;

use super::double_cycle::two_core_edges;
use super::graph::{ComponentIndex, ComponentSummary, HashGraph};
use crate::allocator::RunTrace;
use crate::error::{Error, Result};

/// Largest binomial order rooted at a vertex whose children have orders `d`.
pub fn order_from_children(mut d: Vec<u32>) -> u32 {
    d.sort_unstable_by(|a, b| b.cmp(a));
    let feasible = |t: usize| t <= d.len() && (1..=t).all(|i| d[i - 1] as usize + i >= t);
    let mut t = 0;
    while feasible(t + 1) {
        t += 1;
    }
    t as u32
}

/// Adjacency of a forest over local vertex indices.
pub(crate) struct Forest {
    adj: Vec<Vec<usize>>,
}

impl Forest {
    pub(crate) fn new(vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); vertices];
        for (a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        Forest { adj }
    }

    pub(crate) fn add_edge(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
    }

    /// Binomial order of `root` in its tree, rooted at `root`.
    pub(crate) fn rooted_order(&self, root: usize) -> u32 {
        // BFS; parents precede children in `order`. Only the tree of `root`
        // is touched, so scratch state is keyed by vertex.
        let mut order = vec![root];
        let mut parent: HashMap<usize, usize> = HashMap::from([(root, root)]);
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &w in &self.adj[v] {
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(w) {
                    e.insert(v);
                    order.push(w);
                }
            }
            i += 1;
        }
        let mut value: HashMap<usize, u32> = HashMap::with_capacity(order.len());
        for &v in order.iter().rev() {
            let children: Vec<u32> = self.adj[v]
                .iter()
                .filter(|&&w| w != root && parent[&w] == v)
                .map(|w| value[w])
                .collect();
            value.insert(v, order_from_children(children));
        }
        value[&root]
    }
}

fn local_forest(graph: &HashGraph, comp: &ComponentSummary, skip_edge: Option<u32>) -> Forest {
    let local: HashMap<u32, usize> = comp
        .vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i))
        .collect();
    Forest::new(
        comp.vertices.len(),
        comp.edges
            .iter()
            .filter(|&&e| Some(e) != skip_edge)
            .map(|&e| {
                let (a, b) = graph.endpoints(e as usize);
                (local[&(a as u32)], local[&(b as u32)])
            }),
    )
}

fn tree_contains(forest: &Forest, k: u32) -> bool {
    (0..forest.adj.len()).any(|r| forest.rooted_order(r) >= k)
}

/// Whether `B_k` is a subgraph of one component.
///
/// Trees are searched over every root. A unicyclic component is searched
/// over every spanning tree obtained by deleting one cycle edge. Components
/// with two or more independent cycles are refused.
pub fn component_contains_binomial_tree(
    graph: &HashGraph,
    comp: &ComponentSummary,
    k: u32,
) -> Result<bool> {
    if k == 0 {
        return Ok(!comp.vertices.is_empty());
    }
    if k >= 32 || comp.vertex_count() < 1usize << k {
        return Ok(false);
    }
    match comp.excess() {
        -1 => Ok(tree_contains(&local_forest(graph, comp, None), k)),
        0 => {
            let cycle = two_core_edges(graph, &comp.edges);
            Ok(cycle
                .into_iter()
                .any(|e| tree_contains(&local_forest(graph, comp, Some(e)), k)))
        }
        x => Err(Error::Precondition(format!(
            "component has excess {x}; binomial-tree search needs excess <= 0"
        ))),
    }
}

/// Whether `B_k` is a subgraph of `graph`. Fails if any component has
/// excess ≥ 1.
pub fn contains_binomial_tree(graph: &HashGraph, k: u32) -> Result<bool> {
    let index = ComponentIndex::new(graph);
    if let Some(c) = (0..index.len()).find(|&c| index.excess(c) >= 1) {
        return Err(Error::Precondition(format!(
            "component {c} has excess {}; binomial-tree search needs excess <= 0",
            index.excess(c)
        )));
    }
    if k == 0 {
        return Ok(graph.vertex_count() > 0);
    }
    let candidates: Vec<usize> = (0..index.len())
        .filter(|&c| k < 32 && index.vertex_count(c) >= 1usize << k)
        .collect();
    if candidates.is_empty() {
        return Ok(false);
    }
    let summaries = index.summaries(graph);
    for c in candidates {
        if component_contains_binomial_tree(graph, &summaries[c], k)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Replays an acyclic run and checks that every bin reaching load `l` is
/// the root of a `B_l` in the graph at that time.
///
/// Returns `None` when the final hash graph is not a forest.
pub fn inductive_binomial_witness(trace: &RunTrace) -> Option<bool> {
    let n = trace.n();
    let nv = 2 * n as usize;
    let mut uf: Vec<usize> = (0..nv).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    for r in trace.records() {
        let (a, b) = (
            find(&mut uf, r.bin0 as usize),
            find(&mut uf, n as usize + r.bin1 as usize),
        );
        if a == b {
            return None;
        }
        uf[a] = b;
    }
    let mut forest = Forest::new(nv, []);
    let mut loads = vec![0u32; nv];
    for r in trace.records() {
        let (u, w) = (r.bin0 as usize, n as usize + r.bin1 as usize);
        forest.add_edge(u, w);
        let target = if r.chosen == 0 { u } else { w };
        loads[target] += 1;
        if forest.rooted_order(target) < loads[target] {
            return Some(false);
        }
    }
    Some(true)
}
