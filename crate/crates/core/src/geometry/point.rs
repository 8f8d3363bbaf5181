use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::scalar::Real;

/// A point (or free vector) in three-space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Converts the coordinates to another scalar type.
    pub fn cast<U: Real>(self) -> Point3<U> {
        Point3::new(
            U::from(self.x).unwrap_or_else(U::nan),
            U::from(self.y).unwrap_or_else(U::nan),
            U::from(self.z).unwrap_or_else(U::nan),
        )
    }
}

impl<T: Real> Add for Point3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Point3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Point3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Point3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// An oriented straight segment, `tail -> head`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<T> {
    pub tail: Point3<T>,
    pub head: Point3<T>,
}

impl<T: Real> Segment<T> {
    pub fn new(tail: Point3<T>, head: Point3<T>) -> Result<Self, GeometryError> {
        if tail == head {
            return Err(GeometryError::ZeroLengthSegment);
        }
        Ok(Self { tail, head })
    }

    pub fn reversed(self) -> Self {
        Self {
            tail: self.head,
            head: self.tail,
        }
    }
}

/// A unit direction together with a right-handed basis `(e1, e2)` of the
/// plane orthogonal to it, so that `e1 x e2 = dir`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction<T> {
    dir: Point3<T>,
    e1: Point3<T>,
    e2: Point3<T>,
}

impl<T: Real> Direction<T> {
    /// Normalizes `v` and builds the projection basis.
    pub fn new(v: Point3<T>) -> Result<Self, GeometryError> {
        let len = v.norm();
        if !v.is_finite() || len <= T::DEGENERACY_TOL {
            return Err(GeometryError::ZeroDirection);
        }
        let d = v * (T::one() / len);
        // helper axis: the one least aligned with d
        let (ax, ay, az) = (d.x.abs(), d.y.abs(), d.z.abs());
        let (o, l) = (T::zero(), T::one());
        let helper = if ax <= ay && ax <= az {
            Point3::new(l, o, o)
        } else if ay <= az {
            Point3::new(o, l, o)
        } else {
            Point3::new(o, o, l)
        };
        let h = helper.cross(d);
        let e1 = h * (T::one() / h.norm());
        let e2 = d.cross(e1);
        Ok(Self { dir: d, e1, e2 })
    }

    /// `+z`, projecting onto the `xy` plane with the identity basis.
    pub fn z() -> Self {
        let (o, l) = (T::zero(), T::one());
        Self {
            dir: Point3::new(o, o, l),
            e1: Point3::new(l, o, o),
            e2: Point3::new(o, l, o),
        }
    }

    /// `+x`, with basis `(y, z)`.
    pub fn x() -> Self {
        let (o, l) = (T::zero(), T::one());
        Self {
            dir: Point3::new(l, o, o),
            e1: Point3::new(o, l, o),
            e2: Point3::new(o, o, l),
        }
    }

    /// `+y`, with basis `(z, x)`.
    pub fn y() -> Self {
        let (o, l) = (T::zero(), T::one());
        Self {
            dir: Point3::new(o, l, o),
            e1: Point3::new(o, o, l),
            e2: Point3::new(l, o, o),
        }
    }

    pub fn vector(&self) -> Point3<T> {
        self.dir
    }

    pub fn basis(&self) -> (Point3<T>, Point3<T>) {
        (self.e1, self.e2)
    }

    /// The antipodal direction; its basis is `(e2, e1)` to stay right-handed.
    pub fn opposite(&self) -> Self {
        Self {
            dir: -self.dir,
            e1: self.e2,
            e2: self.e1,
        }
    }

    /// Plane coordinates and height of `p`.
    #[inline]
    pub fn project(&self, p: Point3<T>) -> Projected<T> {
        Projected {
            u: p.dot(self.e1),
            v: p.dot(self.e2),
            h: p.dot(self.dir),
        }
    }
}

/// A point expressed in a direction's frame: `(u, v)` in the plane, `h` along
/// the direction (larger `h` is nearer the viewer).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projected<T> {
    pub u: T,
    pub v: T,
    pub h: T,
}

/// Draws a direction uniformly on the unit sphere: `z` uniform in `[-1, 1]`,
/// azimuth uniform in `[0, 2pi)` (Archimedes' hat-box theorem).
pub fn sample_direction<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Direction<T> {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    let v = Point3::new(T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z));
    Direction::new(v).expect("sphere sample has unit length")
}
