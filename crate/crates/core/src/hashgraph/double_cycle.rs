//! Double cycles: the minimal connected subgraphs with two independent cycles.
//!
//! A component holds one iff its excess `|E| − |V|` is at least 1, and this
//! is exactly the obstruction to placing every key in one of its two bins
//! without collisions.

use std::collections::{hash_map::Entry, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::graph::{ComponentSummary, HashGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoubleCycleShape {
    /// Two vertices joined by three internally disjoint paths.
    Theta,
    /// Two cycles sharing exactly one vertex.
    FigureEight,
    /// Two disjoint cycles joined by a path.
    Dumbbell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoubleCycleWitness {
    /// Edge indices (ball times) of the subgraph.
    pub edges: Vec<u32>,
    pub shape: DoubleCycleShape,
}

impl DoubleCycleWitness {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Connected, minimum degree 2 and `|E| = |V| + 1`.
    pub fn is_valid(&self, graph: &HashGraph) -> bool {
        let ends: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&e| graph.endpoints(e as usize))
            .collect();
        let mut deg: HashMap<usize, usize> = HashMap::new();
        for &(a, b) in &ends {
            *deg.entry(a).or_default() += 1;
            *deg.entry(b).or_default() += 1;
        }
        if deg.values().any(|&d| d < 2) || ends.len() != deg.len() + 1 {
            return false;
        }
        let Some(&start) = deg.keys().next() else {
            return false;
        };
        let mut seen = std::collections::HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &(a, b) in &ends {
                let w = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == deg.len()
    }
}

/// Edges `(id, a, b)` of a multigraph after repeatedly deleting degree-1 vertices.
fn peel(edges: &[(u32, usize, usize)]) -> Vec<(u32, usize, usize)> {
    let mut deg: HashMap<usize, usize> = HashMap::new();
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(_, a, b)) in edges.iter().enumerate() {
        *deg.entry(a).or_default() += 1;
        *deg.entry(b).or_default() += 1;
        incident.entry(a).or_default().push(i);
        incident.entry(b).or_default().push(i);
    }
    let mut alive = vec![true; edges.len()];
    let mut queue: VecDeque<usize> = deg
        .iter()
        .filter(|(_, &d)| d == 1)
        .map(|(&v, _)| v)
        .collect();
    while let Some(v) = queue.pop_front() {
        if deg[&v] != 1 {
            continue;
        }
        let i = *incident[&v].iter().find(|&&i| alive[i]).expect("degree 1");
        alive[i] = false;
        let (_, a, b) = edges[i];
        for x in [a, b] {
            let d = deg.get_mut(&x).unwrap();
            *d -= 1;
            if *d == 1 {
                queue.push_back(x);
            }
        }
    }
    edges
        .iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(&e, _)| e)
        .collect()
}

/// Edge indices of the 2-core of the subgraph formed by `edges`.
pub fn two_core_edges(graph: &HashGraph, edges: &[u32]) -> Vec<u32> {
    let list: Vec<(u32, usize, usize)> = edges
        .iter()
        .map(|&e| {
            let (a, b) = graph.endpoints(e as usize);
            (e, a, b)
        })
        .collect();
    peel(&list).into_iter().map(|(e, _, _)| e).collect()
}

fn classify(core: &[(u32, usize, usize)]) -> DoubleCycleShape {
    let mut deg: HashMap<usize, usize> = HashMap::new();
    for &(_, a, b) in core {
        *deg.entry(a).or_default() += 1;
        *deg.entry(b).or_default() += 1;
    }
    if deg.values().any(|&d| d == 4) {
        return DoubleCycleShape::FigureEight;
    }
    let branch: Vec<usize> = deg
        .iter()
        .filter(|(_, &d)| d == 3)
        .map(|(&v, _)| v)
        .collect();
    debug_assert_eq!(branch.len(), 2);
    let start = branch[0];
    // walk each branch out of `start`; a walk returning to `start` is a loop
    for first in core
        .iter()
        .enumerate()
        .filter(|(_, e)| e.1 == start || e.2 == start)
    {
        let mut used = first.0;
        let mut at = if first.1 .1 == start {
            first.1 .2
        } else {
            first.1 .1
        };
        while deg[&at] == 2 {
            let (i, e) = core
                .iter()
                .enumerate()
                .find(|&(i, e)| i != used && (e.1 == at || e.2 == at))
                .expect("degree 2");
            used = i;
            at = if e.1 == at { e.2 } else { e.1 };
        }
        if at == start {
            return DoubleCycleShape::Dumbbell;
        }
    }
    DoubleCycleShape::Theta
}

/// BFS tree from `root` over `edges`, the first two non-tree edges, their
/// endpoints' tree paths to the root, then the 2-core of that union.
pub(crate) fn double_cycle_from(
    edges: &[(u32, usize, usize)],
    root: usize,
) -> Option<DoubleCycleWitness> {
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(_, a, b)) in edges.iter().enumerate() {
        incident.entry(a).or_default().push(i);
        incident.entry(b).or_default().push(i);
    }
    let mut parent_edge: HashMap<usize, Option<usize>> = HashMap::from([(root, None)]);
    let mut tree = vec![false; edges.len()];
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &i in incident.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            let (_, a, b) = edges[i];
            let w = if a == v { b } else { a };
            if let Entry::Vacant(slot) = parent_edge.entry(w) {
                slot.insert(Some(i));
                tree[i] = true;
                queue.push_back(w);
            }
        }
    }
    let extra: Vec<usize> = (0..edges.len())
        .filter(|&i| !tree[i] && parent_edge.contains_key(&edges[i].1))
        .take(2)
        .collect();
    if extra.len() < 2 {
        return None;
    }
    let mut chosen = vec![false; edges.len()];
    for &i in &extra {
        chosen[i] = true;
        for end in [edges[i].1, edges[i].2] {
            let mut v = end;
            while let Some(Some(pe)) = parent_edge.get(&v) {
                if chosen[*pe] {
                    break;
                }
                chosen[*pe] = true;
                let (_, a, b) = edges[*pe];
                v = if a == v { b } else { a };
            }
        }
    }
    let union: Vec<(u32, usize, usize)> = (0..edges.len())
        .filter(|&i| chosen[i])
        .map(|i| edges[i])
        .collect();
    let core = peel(&union);
    let shape = classify(&core);
    Some(DoubleCycleWitness {
        edges: core.iter().map(|&(e, _, _)| e).collect(),
        shape,
    })
}

/// A double cycle inside `component`, present iff its excess is at least 1.
pub fn find_double_cycle(
    graph: &HashGraph,
    component: &ComponentSummary,
) -> Option<DoubleCycleWitness> {
    if component.excess() < 1 {
        return None;
    }
    let edges: Vec<(u32, usize, usize)> = component
        .edges
        .iter()
        .map(|&e| {
            let (a, b) = graph.endpoints(e as usize);
            (e, a, b)
        })
        .collect();
    double_cycle_from(&edges, component.vertices[0] as usize)
}
