//! Compliance pipeline over a policy graph and per-scenario context graphs.
//!
//! The crate converts a structured regulatory document into a typed policy
//! graph (structure nodes, premises, compliance units, cross-reference
//! edges), converts scenario text into an entity-relation context graph
//! annotated with policy-vocabulary hypernyms, aligns the two through a
//! retrieval + judgment gate, and scores the resulting article-level
//! decisions as multi-label classification.
//!
//! Every model call goes through the adapter boundary in [`adapters`], which
//! ships deterministic mock implementations and a record/replay cassette
//! wrapper, so the full pipeline runs offline and reproducibly.

pub mod adapters;
pub mod context;
pub mod error;
pub mod eval;
pub mod fidelity;
pub mod gate;
pub mod pipeline;
pub mod policy;
pub mod retrieval;
pub mod util;

pub use error::{AdapterError, Error, Result};
