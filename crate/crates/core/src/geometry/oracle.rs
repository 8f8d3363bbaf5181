//! Linking number as an intersection count with a spanning surface.
//!
//! Polygon `a` is spanned by the fan of triangles `(a[0], a[i], a[i+1])`; the
//! fan may self-intersect, but as a 2-chain with boundary `a` its algebraic
//! intersection number with `b` is still `lk(a, b)`. Nothing here shares code
//! with the projection route in `crossing`.

use super::point::Point3;
use super::{Degeneracy, GeometryError};
use crate::scalar::Real;

#[inline]
fn orient3<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>, d: Point3<T>) -> T {
    (b - a).cross(c - a).dot(d - a)
}

fn degenerate() -> GeometryError {
    GeometryError::DegenerateIntersection(Degeneracy::Tangential)
}

fn boxes_apart<T: Real>(p: Point3<T>, q: Point3<T>, tri: [Point3<T>; 3]) -> bool {
    let tol = T::DEGENERACY_TOL;
    let apart = |s0: T, s1: T, t0: T, t1: T, t2: T| {
        s0.max(s1) + tol < t0.min(t1).min(t2) || t0.max(t1).max(t2) + tol < s0.min(s1)
    };
    let [a, b, c] = tri;
    apart(p.x, q.x, a.x, b.x, c.x) || apart(p.y, q.y, a.y, b.y, c.y) || apart(p.z, q.z, a.z, b.z, c.z)
}

/// Signed intersection of the segment `p -> q` with the triangle `tri`:
/// `+1` when the segment runs along the triangle's right-hand normal.
pub fn segment_triangle_sign<T: Real>(
    p: Point3<T>,
    q: Point3<T>,
    tri: [Point3<T>; 3],
) -> Result<i64, GeometryError> {
    if boxes_apart(p, q, tri) {
        return Ok(0);
    }
    let tol = T::DEGENERACY_TOL;
    let [a, b, c] = tri;
    let vp = orient3(a, b, c, p);
    let vq = orient3(a, b, c, q);
    let p_on = vp.abs() < tol;
    let q_on = vq.abs() < tol;
    if p_on && q_on {
        return Err(degenerate());
    }
    if p_on || q_on {
        // the segment touches the plane only at one endpoint
        let touch = if p_on { p } else { q };
        let n = (b - a).cross(c - a);
        let inside = [(a, b), (b, c), (c, a)]
            .iter()
            .all(|&(s, t)| n.dot((t - s).cross(touch - s)) > -tol);
        return if inside { Err(degenerate()) } else { Ok(0) };
    }
    if (vp > T::zero()) == (vq > T::zero()) {
        return Ok(0);
    }
    let sides = [orient3(p, q, a, b), orient3(p, q, b, c), orient3(p, q, c, a)];
    let pos = sides.iter().filter(|s| **s >= tol).count();
    let neg = sides.iter().filter(|s| **s <= -tol).count();
    if pos > 0 && neg > 0 {
        return Ok(0);
    }
    if pos + neg < 3 {
        // grazes a triangle edge or vertex
        return Err(degenerate());
    }
    Ok(if vq > vp { 1 } else { -1 })
}

/// Linking number of polygons `a` and `b` via the fan surface of `a`.
pub fn linking_number_oracle<T: Real>(
    a: &[Point3<T>],
    b: &[Point3<T>],
) -> Result<i64, GeometryError> {
    for poly in [a, b] {
        if poly.len() < 3 {
            return Err(GeometryError::TooFewVertices(poly.len()));
        }
    }
    let mut total = 0i64;
    for j in 0..b.len() {
        let (p, q) = (b[j], b[(j + 1) % b.len()]);
        for i in 1..a.len() - 1 {
            total += segment_triangle_sign(p, q, [a[0], a[i], a[i + 1]])?;
        }
    }
    Ok(total)
}
