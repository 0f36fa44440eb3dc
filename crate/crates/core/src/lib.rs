//! Dynamic hashtag co-occurrence network analytics.
//!
//! The pipeline ingests post/repost event streams, builds weighted
//! co-occurrence snapshot series under three memory policies (rolling
//! window, growing aggregated, static full-period), extracts topics per
//! snapshot, and derives group attention-similarity and entropy time
//! series. A synthetic corpus generator with machine-readable ground
//! truth backs the verification suite.

pub mod attention;
pub mod compare;
pub mod config;
pub mod entropy;
pub mod error;
pub mod event;
pub mod graph;
pub mod ingest;
pub mod manifest;
pub mod metrics;
pub mod report;
pub mod sketch;
pub mod synth;
pub mod timeutil;
pub mod topics;

pub use error::{Error, Result};
