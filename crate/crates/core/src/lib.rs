//! Hierarchical intrusion detection for medical IoT network flows.
//!
//! The crate is organised around a four-level detection cascade:
//!
//! * a root anomaly detector separates normal traffic from everything else,
//! * a verification detector trained on known attacks flags unknown ones,
//! * a random forest assigns known attacks to a category,
//! * a second forest refines the category into a concrete subtype.
//!
//! Supporting modules provide the plumbing the cascade needs: CSV ingestion
//! with an explicit schema ([`dataset`]), evaluation metrics ([`metrics`]),
//! hand-rolled tree learners ([`forest`], [`occ`]), a meta-learned binary
//! classifier ([`meta`]), binary model artifacts ([`artifact`]), a synthetic
//! flow generator ([`synth`]), and a tiered TCP deployment of the cascade
//! ([`tierd`]).
//!
//! All training entry points take an explicit seed and derive per-component
//! RNG streams from it, so identical inputs produce bit-identical models.

pub mod artifact;
pub mod dataset;
pub mod forest;
pub mod meta;
pub mod metrics;
pub mod occ;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod tierd;

pub use dataset::{BinaryLabel, Category, Dataset, FlowRecord, LabelTriple, Taxonomy};
