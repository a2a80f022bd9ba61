//! Graph neural network classifiers and the discrete edge-modification
//! attacks that target them.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs and an explicit seed; file formats, configuration
//! and the command line live in the `graphadv` companion crate.
//!
//! Layout:
//!
//! - [`graph`]: immutable undirected graphs, hop distances, components.
//! - [`dataset`]: synthetic component-counting and node-classification data.
//! - [`params`], [`optim`]: named tensors and their optimizers.
//! - [`gnn`]: structure2vec and GCN classifiers with analytic gradients,
//!   including gradients with respect to per-pair adjacency coefficients.
//! - [`attack`]: equivalency indicators, threat models, outcome bookkeeping.
//! - [`baseline`]: random sampling, gradient argmax, genetic and exhaustive
//!   attackers.
//! - [`rl`]: the hierarchical Q-learning attacker.

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod attack;
pub mod baseline;
pub mod dataset;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod linalg;
pub mod optim;
pub mod params;
pub mod rl;
pub mod seed;

pub use error::{Error, Result};
pub use graph::{Edge, Graph, NodeId};
