//! Correlation detection in random unlabeled trees and partial alignment of
//! sparse correlated Erdős–Rényi graphs.

pub mod eigenbasis;
pub mod error;
pub mod graph_align;
pub mod likelihood;
pub mod random_models;
pub mod tree_core;
pub mod tree_matching;

pub use error::{Error, Result};
