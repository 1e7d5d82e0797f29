//! Unsupervised domain adaptation by aligning joint embedding/label
//! distributions with exact discrete optimal transport.
//!
//! The crate is organized around the training loop it implements:
//!
//! - [`ot`] — exact OT solver (network simplex) plus diagnostics and a
//!   brute-force oracle for small instances.
//! - [`cost`] — the joint ground cost combining squared embedding
//!   distances with classification loss against source labels.
//! - [`nn`] — a small feed-forward embedding + classifier with
//!   hand-written forward/backward passes and an Adam optimizer.
//! - [`trainer`] — the alternating optimization (solve a minibatch
//!   coupling, then take gradient steps on the coupled loss), ablation
//!   variants, label propagation, and evaluation.
//! - [`data`] — synthetic domain-shift generators and CSV/IDX ingestion.
//! - [`cli`] — the `deepjdot` command-line front end.

pub mod cli;
pub mod cost;
pub mod data;
mod error;
pub mod nn;
pub mod ot;
pub mod trainer;

pub use error::{Error, Result};
