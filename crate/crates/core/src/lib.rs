//! Generates subgraph explanations for GNN link predictions and evaluates
//! them by accumulating independent, machine-checkable evidence: clustering
//! overlap, alternative paths, corpus co-mentions, and symbolic entailment
//! with proofs, fused into a per-prediction confidence verdict.

pub mod cluster;
pub mod commands;
pub mod config;
pub mod error;
pub mod evaluator;
pub mod explainer;
pub mod gnn;
pub mod graph;
pub mod paths;
pub mod reasoner;
pub mod rng;
pub mod text;

pub use error::{Error, Result};
