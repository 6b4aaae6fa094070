//! Shared plumbing: canonical JSON, stable hashing, seeded RNG, text helpers.

pub mod canon;
pub mod parallel;
pub mod rng;
pub mod text;
