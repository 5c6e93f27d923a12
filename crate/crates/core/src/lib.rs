//! Gambit analysis toolkit: exact chess rules and notation, a UCI engine
//! bridge, human move statistics from PGN corpora, and the Q-value, skewness
//! and optimality statistics used to evaluate gambit lines.

pub mod analysis;
pub mod catalog;
pub mod chess;
pub mod corpus;
pub mod notation;
pub mod engine;
pub mod eval;
pub mod mdp;
pub mod metrics;
