use serde::{Deserialize, Serialize};

use super::point::{Direction, Point3, Projected, Segment};
use super::{Degeneracy, GeometryError};
use crate::scalar::Real;

/// Sign of one projected crossing: `-1`, `0` (no crossing) or `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedCrossing(i8);

impl SignedCrossing {
    pub const NONE: Self = Self(0);
    pub const POSITIVE: Self = Self(1);
    pub const NEGATIVE: Self = Self(-1);

    pub fn value(self) -> i8 {
        self.0
    }

    pub fn is_crossing(self) -> bool {
        self.0 != 0
    }
}

impl From<SignedCrossing> for i64 {
    fn from(c: SignedCrossing) -> i64 {
        c.0 as i64
    }
}

#[inline]
fn orient2<T: Real>(a: Projected<T>, b: Projected<T>, c: Projected<T>) -> T {
    (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u)
}

#[inline]
fn check<T: Real>(x: T) -> Result<T, GeometryError> {
    if x.abs() < T::DEGENERACY_TOL {
        Err(GeometryError::DegenerateProjection(Degeneracy::Orientation))
    } else {
        Ok(x)
    }
}

/// Signed crossing of two segments already expressed in a projection frame.
///
/// The sign is `sign(da x db) * (+1 if a is over b, else -1)` where `da`, `db`
/// are the projected segment directions; it is symmetric in `a` and `b`.
#[inline]
pub fn crossing_projected<T: Real>(
    a0: Projected<T>,
    a1: Projected<T>,
    b0: Projected<T>,
    b1: Projected<T>,
) -> Result<SignedCrossing, GeometryError> {
    // bounding boxes apart: no crossing, no determinant consulted
    if a0.u.max(a1.u) < b0.u.min(b1.u)
        || b0.u.max(b1.u) < a0.u.min(a1.u)
        || a0.v.max(a1.v) < b0.v.min(b1.v)
        || b0.v.max(b1.v) < a0.v.min(a1.v)
    {
        return Ok(SignedCrossing::NONE);
    }
    let o1 = check(orient2(a0, a1, b0))?;
    let o2 = check(orient2(a0, a1, b1))?;
    if (o1 > T::zero()) == (o2 > T::zero()) {
        return Ok(SignedCrossing::NONE);
    }
    let o3 = check(orient2(b0, b1, a0))?;
    let o4 = check(orient2(b0, b1, a1))?;
    if (o3 > T::zero()) == (o4 > T::zero()) {
        return Ok(SignedCrossing::NONE);
    }
    let t = o3 / (o3 - o4);
    let s = o1 / (o1 - o2);
    let ha = a0.h + t * (a1.h - a0.h);
    let hb = b0.h + s * (b1.h - b0.h);
    let gap = ha - hb;
    if gap.abs() < T::DEGENERACY_TOL {
        return Err(GeometryError::DegenerateProjection(Degeneracy::HeightGap));
    }
    // o2 - o1 = da x db
    let turn = o2 - o1;
    let positive = (turn > T::zero()) == (gap > T::zero());
    Ok(if positive {
        SignedCrossing::POSITIVE
    } else {
        SignedCrossing::NEGATIVE
    })
}

/// Signed crossing of `a` and `b` seen along `dir`.
pub fn signed_crossing<T: Real>(
    a: &Segment<T>,
    b: &Segment<T>,
    dir: &Direction<T>,
) -> Result<SignedCrossing, GeometryError> {
    crossing_projected(
        dir.project(a.tail),
        dir.project(a.head),
        dir.project(b.tail),
        dir.project(b.head),
    )
}

fn check_polygon<T: Real>(poly: &[Point3<T>]) -> Result<(), GeometryError> {
    if poly.len() < 3 {
        return Err(GeometryError::TooFewVertices(poly.len()));
    }
    Ok(())
}

/// Sum of signed crossings between every edge of `a` and every edge of `b`.
pub fn crossing_sum<T: Real>(
    a: &[Point3<T>],
    b: &[Point3<T>],
    dir: &Direction<T>,
) -> Result<i64, GeometryError> {
    check_polygon(a)?;
    check_polygon(b)?;
    let pa: Vec<_> = a.iter().map(|&p| dir.project(p)).collect();
    let pb: Vec<_> = b.iter().map(|&p| dir.project(p)).collect();
    let mut sum = 0i64;
    for i in 0..pa.len() {
        let (a0, a1) = (pa[i], pa[(i + 1) % pa.len()]);
        for j in 0..pb.len() {
            let (b0, b1) = (pb[j], pb[(j + 1) % pb.len()]);
            sum += i64::from(crossing_projected(a0, a1, b0, b1)?);
        }
    }
    Ok(sum)
}

/// Linking number of two disjoint closed polygons, as half the signed
/// crossing sum of their projections along `dir`.
pub fn linking_number<T: Real>(
    a: &[Point3<T>],
    b: &[Point3<T>],
    dir: &Direction<T>,
) -> Result<i64, GeometryError> {
    let sum = crossing_sum(a, b, dir)?;
    if sum % 2 != 0 {
        return Err(GeometryError::OddCrossingSum(sum));
    }
    Ok(sum / 2)
}

/// Directional writhe: signed self-crossings of one closed polygon along `dir`,
/// summed over unordered pairs of non-adjacent edges.
pub fn directional_writhe<T: Real>(
    poly: &[Point3<T>],
    dir: &Direction<T>,
) -> Result<i64, GeometryError> {
    check_polygon(poly)?;
    let k = poly.len();
    let p: Vec<_> = poly.iter().map(|&q| dir.project(q)).collect();
    let mut sum = 0i64;
    for i in 0..k {
        for j in (i + 2)..k {
            if i == 0 && j == k - 1 {
                continue;
            }
            sum += i64::from(crossing_projected(p[i], p[i + 1], p[j], p[(j + 1) % k])?);
        }
    }
    Ok(sum)
}
