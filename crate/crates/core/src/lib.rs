//! Continual learning for temporal-sensitive question answering.
//!
//! The crate covers the whole pipeline: synthesizing a chronologically
//! partitioned QA corpus ([`corpus`]), deriving similar and contrastive
//! questions ([`transform`]), a small candidate-selection QA model with
//! hand-written gradients ([`model`], [`losses`]), temporal memory replay
//! ([`replay`]) and the sequential train/evaluate harness ([`harness`]).

#[macro_use]
pub mod corpus;
pub mod config;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod replay;
pub mod rng;
pub mod temporal_text;
pub mod transform;

pub use error::{Error, Result};
