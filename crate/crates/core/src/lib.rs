//! Object-centric video reasoning toolkit.
//!
//! The pipeline turns a video timeline into structured object trajectories and
//! answers questions over them in four stages:
//!
//! 1. [`chunking`] partitions the timeline into disjoint chunks, samples frame
//!    timestamps, and runs a pluggable state extractor per chunk.
//! 2. [`linking`] associates per-chunk observations across time into globally
//!    consistent trajectories (similarity scoring, gap/confidence filtering,
//!    maximum-weight bipartite conflict resolution).
//! 3. [`answering`] retrieves the query-relevant trajectory subset, renders it
//!    to a deterministic text block, and calls a pluggable answer backend.
//! 4. [`eval`] scores stored predictions (target/sub-question/consistency
//!    accuracy), runs paired-bootstrap significance tests, and drives audit
//!    modes (single-frame, budget-matched).
//!
//! [`bench`] holds the benchmark-item machinery: fact tuples, reasoning-chain
//! validity, template rendering, and annotator-agreement statistics.
//! [`config`], [`cache`], [`storage`], [`pipeline`], and [`grid`] are the
//! operational layer used by the command-line front end.

pub mod answering;
pub mod bench;
pub mod cache;
pub mod chunking;
pub mod config;
pub mod error;
pub mod eval;
pub mod grid;
pub mod linking;
pub mod model;
pub mod pipeline;
pub mod storage;
pub mod synthetic;

mod parallel;
mod util;

pub use error::{Error, Result};
