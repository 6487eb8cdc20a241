//! Modal substitution calculus programs and message-passing circuits run as
//! synchronous distributed systems, the translations between them, and a
//! generator for a Cole-Vishkin style `(Δ+1)`-coloring program.

pub mod circuit;
pub mod colevishkin;
pub mod compile;
pub mod eval;
pub mod harness;
pub mod model;
pub mod syntax;
