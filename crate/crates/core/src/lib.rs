//! Squashed shifted PMI: from corpus counts to word embeddings, random
//! graphs and hyperbolic geometry.
//!
//! Numerical types are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod factorization;
pub mod graph;
pub mod hyperbolic;
pub mod linalg;
pub mod matrix;
pub mod quadrature;
pub mod scalar;
pub mod synthetic;
pub mod textio;
pub mod trainers;

pub use error::{Error, Result};
pub use scalar::Real;

pub type DenseMatrixF32 = linalg::DenseMatrix<f32>;
pub type DenseMatrixF64 = linalg::DenseMatrix<f64>;
pub type ScoreMatrixF32 = matrix::SparseScoreMatrix<f32>;
pub type ScoreMatrixF64 = matrix::SparseScoreMatrix<f64>;
pub type SvdF32 = factorization::SvdResult<f32>;
pub type SvdF64 = factorization::SvdResult<f64>;
pub type EmbeddingsF32 = factorization::EmbeddingSet<f32>;
pub type EmbeddingsF64 = factorization::EmbeddingSet<f64>;
pub type TrainedF32 = trainers::Trained<f32>;
pub type TrainedF64 = trainers::Trained<f64>;
