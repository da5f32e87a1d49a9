//! Batched, multi-worker ABC rejection inference for a six-compartment
//! stochastic epidemic model.
//!
//! The pipeline: ingest Johns-Hopkins-format case data ([`ingest`]),
//! draw parameters from a box-uniform prior ([`prior`]), simulate the
//! tau-leaping compartmental model ([`model`]), accept samples whose
//! simulated observables fall within a Euclidean tolerance of the data
//! ([`abc`]), scale the run loop across workers ([`runtime`]) and turn
//! accepted samples into projections and histograms ([`project`]).
//!
//! Determinism is the central contract: every sample owns a
//! counter-based substream ([`rng`]) keyed by its flattened index, so
//! results are independent of batch partitioning, worker count and
//! scheduling.

pub mod abc;
pub mod config;
pub mod error;
pub mod ingest;
pub mod model;
pub mod output;
pub mod prior;
pub mod project;
pub mod rng;
pub mod runtime;
pub mod stats;

pub use abc::{FilterMode, InferResult, PosteriorSample, RunConfig, RunStats};
pub use error::{Error, Result};
pub use ingest::ObservedSeries;
pub use model::{EpidemicState, GaussianSpread, ModelParams};
pub use prior::PriorSpec;
