//! Workbench for cusped spaces over group pairs.
//!
//! The crate builds Cayley balls for small presentations, attaches
//! combinatorial horoballs over peripheral cosets, equips the result with an
//! exact geodesic-averaging bicombing, resolves quotient 2-complexes against
//! that bicombing into weighted patterns, and surveys finite covers to
//! compare pattern weight against cover volume. All certified quantities are
//! big-rational exact; measured constants are reported with their sampling
//! census.

#![forbid(unsafe_code)]

pub mod bicombing;
pub mod chain;
pub mod cli;
pub mod complex2;
pub mod cusped;
pub mod error;
pub mod graph;
pub mod group;
pub mod manifest;
pub mod pattern;
pub mod rat;
pub mod resolution;
pub mod ripscyl;
pub mod subgroups;
pub mod words;

pub use error::{Error, ExitClass, Result};
