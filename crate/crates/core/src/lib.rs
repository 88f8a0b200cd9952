//! Compiler and runtime for neuromorphic dataflow graphs.
//!
//! Programs in a small Algol-like language are parsed by [`frontend`], lowered
//! either into gate/merge dataflow ([`lower::lower_conventional`]) or into
//! graphs built from where/when primitives ([`lower::lower_ndf`]), executed by
//! the token-driven [`engine`], fused and placed on a core mesh by [`fusion`],
//! and trained end to end through a surrogate gradient in [`learn`].

pub mod corpus;
pub mod engine;
pub mod frontend;
pub mod fusion;
pub mod graph;
pub mod learn;
pub mod lower;
