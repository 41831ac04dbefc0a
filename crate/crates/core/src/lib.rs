//! Spectral-domain graph augmentation for imbalanced regression on
//! molecular graphs.
//!
//! Molecules are turned into graphs, each graph into a compact spectral
//! embedding, and a relevance-weighted regressor learns how that embedding
//! varies with the target. New graphs are generated for rare target values
//! by sampling embeddings around the regressor's prediction and mapping them
//! back to adjacency structure.

pub mod boost;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod density;
pub mod downstream;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod manifold;
pub mod metrics;
pub mod pipeline;
pub mod reconstruct;
pub mod relevance;
pub mod smiles;
pub mod spectral;
pub mod spectral_map;
pub mod svg;
