use serde::{Deserialize, Serialize};

use crate::allocator::RunTrace;
use crate::tabulation::Key;

/// A bin: `side` 0 is table 0 (left), 1 is table 1 (right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub side: u8,
    pub bin: u32,
}

impl Vertex {
    pub fn new(side: u8, bin: u32) -> Self {
        Vertex { side, bin }
    }

    /// Dense id in `[2n]`: left bins first.
    pub fn id(self, n: u32) -> usize {
        self.side as usize * n as usize + self.bin as usize
    }

    pub fn from_id(id: usize, n: u32) -> Self {
        let n = n as usize;
        Vertex::new((id / n) as u8, (id % n) as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// Bin in table 0.
    pub v0: u32,
    /// Bin in table 1.
    pub v1: u32,
    pub key: Key,
    pub time: u32,
}

/// The bipartite multigraph with one edge `(h_0(x), h_1(x))` per ball.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashGraph {
    n: u32,
    edges: Vec<Edge>,
}

impl HashGraph {
    /// A graph on `n + n` bins from explicit edges; edge `i` gets time `i`.
    pub fn from_pairs(n: u32, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let edges = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (v0, v1))| {
                assert!(v0 < n && v1 < n, "edge ({v0}, {v1}) outside [{n}]");
                Edge {
                    v0,
                    v1,
                    key: Key(i as u64),
                    time: i as u32,
                }
            })
            .collect();
        HashGraph { n, edges }
    }

    /// Bins per side.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.n as usize
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Endpoint ids of edge `e`.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        let edge = &self.edges[e];
        (edge.v0 as usize, self.n as usize + edge.v1 as usize)
    }

    /// Graph of the first `t` balls.
    pub fn prefix(&self, t: usize) -> HashGraph {
        HashGraph {
            n: self.n,
            edges: self.edges[..t.min(self.edges.len())].to_vec(),
        }
    }
}

/// One edge per ball, in time order.
pub fn build_graph(trace: &RunTrace) -> HashGraph {
    HashGraph {
        n: trace.n(),
        edges: trace
            .records()
            .iter()
            .map(|r| Edge {
                v0: r.bin0,
                v1: r.bin1,
                key: r.key,
                time: r.time,
            })
            .collect(),
    }
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
    }
}

/// Connected-component labelling of a hash graph with per-component counts.
#[derive(Debug, Clone)]
pub struct ComponentIndex {
    label: Vec<u32>,
    vertices: Vec<u32>,
    edges: Vec<u32>,
}

impl ComponentIndex {
    pub fn new(graph: &HashGraph) -> Self {
        let nv = graph.vertex_count();
        let mut uf = UnionFind::new(nv);
        for e in 0..graph.edges().len() {
            let (a, b) = graph.endpoints(e);
            uf.union(a, b);
        }
        let mut label = vec![u32::MAX; nv];
        let mut vertices = Vec::new();
        let mut next_root_label = vec![u32::MAX; nv];
        for v in 0..nv {
            let root = uf.find(v);
            if next_root_label[root] == u32::MAX {
                next_root_label[root] = vertices.len() as u32;
                vertices.push(0);
            }
            label[v] = next_root_label[root];
            vertices[label[v] as usize] += 1;
        }
        let mut edges = vec![0u32; vertices.len()];
        for e in 0..graph.edges().len() {
            edges[label[graph.endpoints(e).0] as usize] += 1;
        }
        ComponentIndex {
            label,
            vertices,
            edges,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Component of vertex id `v`.
    pub fn label(&self, v: usize) -> usize {
        self.label[v] as usize
    }

    pub fn vertex_count(&self, c: usize) -> usize {
        self.vertices[c] as usize
    }

    pub fn edge_count(&self, c: usize) -> usize {
        self.edges[c] as usize
    }

    pub fn excess(&self, c: usize) -> i64 {
        self.edges[c] as i64 - self.vertices[c] as i64
    }

    pub fn largest_component(&self) -> usize {
        self.vertices.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn largest_excess(&self) -> i64 {
        (0..self.len()).map(|c| self.excess(c)).max().unwrap_or(-1)
    }

    /// Materializes every component.
    pub fn summaries(&self, graph: &HashGraph) -> Vec<ComponentSummary> {
        let mut out: Vec<ComponentSummary> = (0..self.len())
            .map(|c| ComponentSummary {
                vertices: Vec::with_capacity(self.vertices[c] as usize),
                edges: Vec::with_capacity(self.edges[c] as usize),
            })
            .collect();
        for (v, &c) in self.label.iter().enumerate() {
            out[c as usize].vertices.push(v as u32);
        }
        for e in 0..graph.edges().len() {
            out[self.label(graph.endpoints(e).0)].edges.push(e as u32);
        }
        out
    }

    /// The component containing vertex id `v`.
    pub fn summary_of(&self, graph: &HashGraph, v: usize) -> ComponentSummary {
        let c = self.label[v];
        ComponentSummary {
            vertices: (0..self.label.len() as u32)
                .filter(|&u| self.label[u as usize] == c)
                .collect(),
            edges: (0..graph.edges().len() as u32)
                .filter(|&e| self.label[graph.endpoints(e as usize).0] == c)
                .collect(),
        }
    }
}

/// One connected component: member vertex ids and edge indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSummary {
    pub vertices: Vec<u32>,
    pub edges: Vec<u32>,
}

impl ComponentSummary {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `|E| − |V|`; −1 for a tree.
    pub fn excess(&self) -> i64 {
        self.edges.len() as i64 - self.vertices.len() as i64
    }
}

/// Connected components, counting parallel edges.
pub fn components(graph: &HashGraph) -> Vec<ComponentSummary> {
    ComponentIndex::new(graph).summaries(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nontrivial(g: &HashGraph) -> Vec<ComponentSummary> {
        components(g)
            .into_iter()
            .filter(|c| c.edge_count() > 0)
            .collect()
    }

    #[test]
    fn empty_graph_is_isolated_vertices() {
        let g = HashGraph::from_pairs(4, []);
        let cs = components(&g);
        assert_eq!(cs.len(), 8);
        assert!(cs.iter().all(|c| c.vertex_count() == 1 && c.excess() == -1));
    }

    #[test]
    fn forest_components_have_excess_minus_one() {
        let g = HashGraph::from_pairs(8, [(0, 0), (1, 0), (1, 1), (5, 6), (7, 6)]);
        for c in components(&g) {
            assert_eq!(c.excess(), -1);
        }
    }

    #[test]
    fn four_cycle_has_excess_zero() {
        let g = HashGraph::from_pairs(4, [(0, 0), (0, 1), (1, 0), (1, 1)]);
        let cs = nontrivial(&g);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].vertex_count(), 4);
        assert_eq!(cs[0].excess(), 0);
    }

    #[test]
    fn triple_parallel_edges() {
        let g = HashGraph::from_pairs(4, [(2, 3), (2, 3), (2, 3)]);
        let cs = nontrivial(&g);
        assert_eq!(cs.len(), 1);
        assert_eq!(
            (cs[0].vertex_count(), cs[0].edge_count(), cs[0].excess()),
            (2, 3, 1)
        );
        let idx = ComponentIndex::new(&g);
        assert_eq!(idx.largest_excess(), 1);
        assert_eq!(idx.largest_component(), 2);
    }

    #[test]
    fn vertex_ids_round_trip() {
        for id in 0..16 {
            assert_eq!(Vertex::from_id(id, 8).id(8), id);
        }
        assert_eq!(Vertex::new(1, 3).id(8), 11);
    }

    #[test]
    fn summary_of_matches_summaries() {
        let g = HashGraph::from_pairs(8, [(0, 0), (1, 0), (1, 1), (5, 6), (7, 6), (5, 6)]);
        let idx = ComponentIndex::new(&g);
        let all = idx.summaries(&g);
        for v in 0..16 {
            assert_eq!(idx.summary_of(&g, v), all[idx.label(v)]);
        }
    }
}
