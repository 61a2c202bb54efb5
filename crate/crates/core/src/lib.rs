//! Rumor source localization from partial sensor observations.
//!
//! The numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod diffusion;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod linalg;
pub mod recovery;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::NodeId;
pub use scalar::Real;

pub type SocialGraph = graph::SocialGraph<f64>;
pub type EdgeDelay = graph::EdgeDelay<f64>;
pub type Partition = graph::Partition<f64>;
pub type GatewayGraph = graph::GatewayGraph<f64>;
pub type ShortestPathTree = graph::ShortestPathTree<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type Cascade = diffusion::Cascade<f64>;
pub type ObservationVector = diffusion::ObservationVector<f64>;
pub type CandidateStats = estimator::CandidateStats<f64>;
pub type SourceEstimate = estimator::SourceEstimate<f64>;
pub type SparsifyingBasis = recovery::SparsifyingBasis<f64>;
pub type PartialDelayMatrix = recovery::PartialDelayMatrix<f64>;
pub type RenewalParams = recovery::RenewalParams<f64>;
