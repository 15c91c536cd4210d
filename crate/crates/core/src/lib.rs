//! Constant-delay enumeration of first-order queries over structures of
//! bounded degree, via bijective structures and quantifier elimination.

pub mod cli;
pub mod enumeration;
pub mod error;
pub mod formula;
pub mod oracle;
pub mod qelim;
pub mod reduction;
pub mod structure;
pub mod subgraph;

pub use error::{Error, Result};
