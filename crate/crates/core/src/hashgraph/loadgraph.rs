//! Load graphs: the nested levels built backwards from a heavily loaded bin.
//!
//! Starting from `V_k = {v}`, level `E_l` takes, for each bin `b ∈ V_{l+1}`,
//! the ball that raised `b` from load `l` to `l + 1`; `V_l` is the set of
//! endpoints of `E_l`. Then `V_k ⊂ ⋯ ⊂ V_0`, `|E_l| = |V_{l+1}|`, and every
//! bin of `V_l` has load at least `l`.

use std::collections::BTreeSet;

use serde::Serialize;

use super::graph::Vertex;
use crate::allocator::RunTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadGraph {
    pub center: Vertex,
    pub k: u32,
    /// `vertex_levels[l]` is `V_l`, for `l = 0..=k`.
    pub vertex_levels: Vec<BTreeSet<Vertex>>,
    /// `edge_levels[l]` is `E_l` as ball times, for `l = 0..k`.
    pub edge_levels: Vec<Vec<u32>>,
    /// Endpoints of every ball referenced by an edge level, indexed like `edge_levels`.
    pub edge_endpoints: Vec<Vec<(Vertex, Vertex)>>,
}

impl LoadGraph {
    pub fn v0(&self) -> &BTreeSet<Vertex> {
        &self.vertex_levels[0]
    }

    /// Total edges `|E_0| + ⋯ + |E_{k-1}|`.
    pub fn edge_count(&self) -> usize {
        self.edge_levels.iter().map(Vec::len).sum()
    }

    /// All edges of `(V_0, E_0 ∪ ⋯ ∪ E_{k-1})`.
    pub fn all_edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.edge_endpoints.iter().flatten().copied()
    }

    /// `a_l = ⌈(|E_l| + ⋯ + |E_{k-1}|) / (|V_l| − 1)⌉` for each `l ∈ [k]`.
    pub fn level_bounds(&self) -> Vec<u32> {
        let mut suffix = 0usize;
        let mut out = vec![0u32; self.k as usize];
        for l in (0..self.k as usize).rev() {
            suffix += self.edge_levels[l].len();
            let denom = self.vertex_levels[l].len() - 1;
            out[l] = suffix.div_ceil(denom) as u32;
        }
        out
    }
}

/// Builds the load graph of `center` down from load level `k`.
pub fn extract_load_graph(trace: &RunTrace, center: Vertex, k: u32) -> Result<LoadGraph> {
    if center.side > 1 || center.bin >= trace.n() {
        return Err(Error::Domain(format!("vertex {center:?} out of range")));
    }
    let load = trace.final_load(center.side as usize, center.bin);
    if load < k {
        return Err(Error::Precondition(format!(
            "bin {center:?} has load {load} < k = {k}"
        )));
    }
    let records = trace.records();
    let mut vertex_levels = vec![BTreeSet::new(); k as usize + 1];
    let mut edge_levels = vec![Vec::new(); k as usize];
    let mut edge_endpoints = vec![Vec::new(); k as usize];
    vertex_levels[k as usize].insert(center);
    for l in (0..k as usize).rev() {
        let upper: Vec<Vertex> = vertex_levels[l + 1].iter().copied().collect();
        for b in upper {
            let time = trace.bin_history(b.side as usize, b.bin)[l];
            let r = &records[time as usize];
            let ends = (Vertex::new(0, r.bin0), Vertex::new(1, r.bin1));
            edge_levels[l].push(time);
            edge_endpoints[l].push(ends);
            vertex_levels[l].insert(ends.0);
            vertex_levels[l].insert(ends.1);
        }
    }
    Ok(LoadGraph {
        center,
        k,
        vertex_levels,
        edge_levels,
        edge_endpoints,
    })
}

/// `max_l a_l`, a lower bound on the arboricity of the load graph.
pub fn arboricity_lower_bound(lg: &LoadGraph) -> Result<u32> {
    if lg.k == 0 {
        return Err(Error::Precondition("arboricity bound needs k >= 1".into()));
    }
    Ok(lg.level_bounds().into_iter().max().expect("k >= 1"))
}

/// Exact checks of the per-run load bound for one load graph:
/// `a · lg x ≥ k` with `x` the component size, and `|V_0| ≥ (1 + 1/a)^k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArboricityCheck {
    pub k: u32,
    pub a: u32,
    pub v0: usize,
    pub component_size: usize,
    pub log_bound: bool,
    pub growth_bound: bool,
    pub component_covers_v0: bool,
}

impl ArboricityCheck {
    pub fn new(lg: &LoadGraph, component_size: usize) -> Result<Self> {
        let a = arboricity_lower_bound(lg)?;
        let v0 = lg.v0().len();
        Ok(ArboricityCheck {
            k: lg.k,
            a,
            v0,
            component_size,
            log_bound: pow_at_least(component_size as u128, a, 2, lg.k),
            // (1 + 1/a)^k ≤ |V_0|  ⇔  (a + 1)^k ≤ |V_0| · a^k
            growth_bound: le_scaled(a as u128 + 1, lg.k, v0 as u128, a as u128),
            component_covers_v0: component_size >= v0,
        })
    }

    pub fn holds(&self) -> bool {
        self.log_bound && self.growth_bound && self.component_covers_v0
    }
}

/// `x^a ≥ base^k`, exactly.
fn pow_at_least(x: u128, a: u32, base: u128, k: u32) -> bool {
    let rhs = match base.checked_pow(k) {
        Some(v) => v,
        None => return a as f64 * (x as f64).log2() >= k as f64 * (base as f64).log2(),
    };
    let mut acc: u128 = 1;
    for _ in 0..a {
        acc = match acc.checked_mul(x) {
            Some(v) => v,
            None => return true,
        };
        if acc >= rhs {
            return true;
        }
    }
    acc >= rhs
}

/// `b^k ≤ scale · a^k`, exactly when it fits in 128 bits.
fn le_scaled(b: u128, k: u32, scale: u128, a: u128) -> bool {
    match (
        b.checked_pow(k),
        a.checked_pow(k).and_then(|p| p.checked_mul(scale)),
    ) {
        (Some(lhs), Some(rhs)) => lhs <= rhs,
        _ => k as f64 * (b as f64 / a as f64).log2() <= (scale as f64).log2() + 1e-9,
    }
}
