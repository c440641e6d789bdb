//! Exotic B-series for scalar Itô diffusions.
//!
//! Expectations `E[f(u_t)]` of `du = α(u) dt + β(u) dW` are expanded over
//! exotic coloured trees, Feynman multi-indices, or by iterating the
//! generator directly. All combinatorial weights are exact rationals.

pub mod cli;
pub mod growth;
pub mod jets;
pub mod multiindex;
pub mod rational;
pub mod series;
pub mod tree;
pub mod verification;

#[cfg(test)]
mod testutil;

pub use tree::{canonical_key, format_tree, merged_poset, parse_tree, Colour, ExoticTree, MergedPoset, TreeError};
