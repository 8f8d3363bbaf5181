//! Random linear embeddings of graphs in the unit cube: linking numbers and
//! writhe over all cycles, Monte Carlo estimates of the crossing constants `q`
//! and `q'`, and the closed-form expectations they feed.
//!
//! The geometric core is generic over the scalar type (`f32` or `f64`); the
//! aliases below fix it to `f64`, which every experiment uses by default.

pub mod cli;
pub mod constants;
pub mod cycles;
pub mod geometry;
pub mod invariants;
pub mod models;
pub mod montecarlo;
pub mod scalar;
pub mod stats;
pub mod theory;

pub use scalar::Real;

pub type Point3f = geometry::Point3<f64>;
pub type Segmentf = geometry::Segment<f64>;
pub type Directionf = geometry::Direction<f64>;
pub type Embedding = models::LinearEmbedding<f64>;
