//! Community detection on uniform hypergraphs with Tensor-SCORE.
//!
//! The crate samples hypergraphs from the degree-corrected hypergraph block
//! model, estimates the principal subspace of the adjacency tensor with
//! regularized HOOI, normalizes it with SCORE ratios and clusters the rows.

pub mod config;
pub mod decomp;
pub mod error;
pub mod eval;
pub mod hypergraph;
pub mod kmeans;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod tensor;

pub use error::{Error, Result};
pub use hypergraph::{Hypergraph, MixedHypergraph};
pub use linalg::FactorMatrix;
pub use model::{CoreTensor, HdcbmParams};
pub use pipeline::{DetectOptions, Detection, Partition};
