//! Geometric predicates: projected signed crossings, linking numbers,
//! directional writhe, and an independent surface-intersection oracle.
//!
//! All predicates are pure functions. Whenever a decision rests on a quantity
//! whose magnitude falls below [`Real::DEGENERACY_TOL`](crate::Real) the call
//! fails instead of guessing a sign; callers are expected to resample.

mod crossing;
mod oracle;
mod point;

pub use crossing::{
    crossing_projected, crossing_sum, directional_writhe, linking_number, signed_crossing,
    SignedCrossing,
};
pub use oracle::{linking_number_oracle, segment_triangle_sign};
pub use point::{sample_direction, Direction, Point3, Projected, Segment};

use thiserror::Error;

/// Which quantity fell under the degeneracy tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    Orientation,
    HeightGap,
    Tangential,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate projection ({0:?} below tolerance)")]
    DegenerateProjection(Degeneracy),
    #[error("degenerate surface intersection ({0:?})")]
    DegenerateIntersection(Degeneracy),
    #[error("odd signed crossing sum {0} between closed polygons")]
    OddCrossingSum(i64),
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("segment has zero length")]
    ZeroLengthSegment,
    #[error("direction vector is zero or not finite")]
    ZeroDirection,
}

impl GeometryError {
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Self::DegenerateProjection(_) | Self::DegenerateIntersection(_)
        )
    }
}
