//! Greedy structure learning for tensor networks.
//!
//! A network over `p` nodes is described by a symmetric rank matrix: node `k`
//! carries one dangling leg of size `d_k`, and nodes `i`, `j` share a bond of
//! size `R_ij` (rank one means no edge). Starting from the all-ones
//! structure, [`search::greedy_search`] repeatedly grows the single edge that
//! lowers the loss the most per added parameter, reuses the previous weights,
//! re-optimizes with alternating least squares, and splits cores that have
//! become low-rank.

pub mod als;
pub mod baselines;
pub mod error;
pub mod image;
pub mod increment;
pub mod io;
pub mod linalg;
pub mod network;
pub mod report;
pub mod search;
pub mod seed;
pub mod targets;
pub mod tensor;

pub use error::{Result, TnError};
pub use network::{RankMatrix, TensorNetwork};
pub use tensor::DenseTensor;
