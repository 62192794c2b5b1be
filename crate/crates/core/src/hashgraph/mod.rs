//! Structure of the hash graph of a two-choice run.

mod binomial;
mod dichotomy;
mod double_cycle;
mod graph;
mod loadgraph;

pub use binomial::{
    component_contains_binomial_tree, contains_binomial_tree, inductive_binomial_witness,
    order_from_children,
};
pub use dichotomy::{verify_structural_dichotomy, DichotomyReport, LevelProfile};
pub use double_cycle::{find_double_cycle, two_core_edges, DoubleCycleShape, DoubleCycleWitness};
pub use graph::{
    build_graph, components, ComponentIndex, ComponentSummary, Edge, HashGraph, Vertex,
};
pub use loadgraph::{arboricity_lower_bound, extract_load_graph, ArboricityCheck, LoadGraph};
