//! Simulation laboratory for secrecy with a short shared key.
//!
//! The pipeline: an i.i.d. source emits length-`n` strings; the epsilon-typical
//! strings are partitioned into bins of at most `k` members, where every bin
//! holds strings of a single empirical type; the transmitter announces the bin
//! index in the clear and encrypts only the within-bin offset with a one-time
//! pad over a `k`-ary key. An eavesdropper who sees the message picks the
//! reproduction string minimizing posterior expected distortion. This crate
//! computes that adversary's distortion exactly (and by Monte Carlo), so the
//! gap to the blind-guess ceiling can be measured as `n` and `k` grow.
//!
//! Everything downstream of a seed is deterministic: same inputs, same
//! partition, same numbers, independent of thread count.

pub mod adversary;
pub mod caps;
pub mod cipher;
pub mod codebook;
pub mod error;
pub mod model;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
