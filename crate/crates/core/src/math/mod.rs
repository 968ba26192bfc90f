//! Small vector/box types and 2D polygon machinery shared by every stage.

pub mod linalg;
pub mod polygon;

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::num::{cast, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2<S> {
    pub x: S,
    pub y: S,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Vec2<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self { x: S::zero(), y: S::zero() }
    }

    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product of the embedded vectors.
    pub fn cross(self, o: Self) -> S {
        self.x * o.y - self.y * o.x
    }

    pub fn length_squared(self) -> S {
        self.dot(self)
    }

    pub fn length(self) -> S {
        self.length_squared().sqrt()
    }

    pub fn distance(self, o: Self) -> S {
        (self - o).length()
    }

    pub fn normalized(self) -> Self {
        let len = self.length();
        if len > S::zero() {
            self / len
        } else {
            Self::zero()
        }
    }

    /// Counter-clockwise perpendicular (rotate +90 degrees).
    pub fn perp(self) -> Self {
        Self { x: -self.y, y: self.x }
    }

    pub fn min_by_component(self, o: Self) -> Self {
        Self { x: self.x.min(o.x), y: self.y.min(o.y) }
    }

    pub fn max_by_component(self, o: Self) -> Self {
        Self { x: self.x.max(o.x), y: self.y.max(o.y) }
    }

    pub fn extend(self, z: S) -> Vec3<S> {
        Vec3 { x: self.x, y: self.y, z }
    }
}

impl<S: Real> Vec3<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self { x: S::zero(), y: S::zero(), z: S::zero() }
    }

    pub fn splat(v: S) -> Self {
        Self { x: v, y: v, z: v }
    }

    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    pub fn length_squared(self) -> S {
        self.dot(self)
    }

    pub fn length(self) -> S {
        self.length_squared().sqrt()
    }

    pub fn distance(self, o: Self) -> S {
        (self - o).length()
    }

    pub fn normalized(self) -> Self {
        let len = self.length();
        if len > S::zero() {
            self / len
        } else {
            Self::zero()
        }
    }

    pub fn min_by_component(self, o: Self) -> Self {
        Self { x: self.x.min(o.x), y: self.y.min(o.y), z: self.z.min(o.z) }
    }

    pub fn max_by_component(self, o: Self) -> Self {
        Self { x: self.x.max(o.x), y: self.y.max(o.y), z: self.z.max(o.z) }
    }

    pub fn truncate(self) -> Vec2<S> {
        Vec2 { x: self.x, y: self.y }
    }
}

macro_rules! impl_vec_ops {
    ($name:ident { $($f:ident),+ }) => {
        impl<S: Real> Add for $name<S> {
            type Output = Self;
            fn add(self, o: Self) -> Self {
                Self { $($f: self.$f + o.$f),+ }
            }
        }
        impl<S: Real> Sub for $name<S> {
            type Output = Self;
            fn sub(self, o: Self) -> Self {
                Self { $($f: self.$f - o.$f),+ }
            }
        }
        impl<S: Real> Mul<S> for $name<S> {
            type Output = Self;
            fn mul(self, s: S) -> Self {
                Self { $($f: self.$f * s),+ }
            }
        }
        impl<S: Real> Div<S> for $name<S> {
            type Output = Self;
            fn div(self, s: S) -> Self {
                Self { $($f: self.$f / s),+ }
            }
        }
        impl<S: Real> Neg for $name<S> {
            type Output = Self;
            fn neg(self) -> Self {
                Self { $($f: -self.$f),+ }
            }
        }
        impl<S: Real> AddAssign for $name<S> {
            fn add_assign(&mut self, o: Self) {
                $(self.$f += o.$f;)+
            }
        }
        impl<S: Real> SubAssign for $name<S> {
            fn sub_assign(&mut self, o: Self) {
                $(self.$f -= o.$f;)+
            }
        }
    };
}

impl_vec_ops!(Vec2 { x, y });
impl_vec_ops!(Vec3 { x, y, z });

/// Axis-aligned rectangle in the layout plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rect<S> {
    pub min: Vec2<S>,
    pub max: Vec2<S>,
}

impl<S: Real> Rect<S> {
    pub fn new(min: Vec2<S>, max: Vec2<S>) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec2<S>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut r = Self { min: first, max: first };
        for p in it {
            r.min = r.min.min_by_component(*p);
            r.max = r.max.max_by_component(*p);
        }
        Some(r)
    }

    pub fn width(&self) -> S {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> S {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Vec2<S> {
        (self.min + self.max) * cast(0.5)
    }

    pub fn contains(&self, p: Vec2<S>, tol: S) -> bool {
        p.x >= self.min.x - tol
            && p.x <= self.max.x + tol
            && p.y >= self.min.y - tol
            && p.y <= self.max.y + tol
    }

    pub fn union(&self, o: &Self) -> Self {
        Self {
            min: self.min.min_by_component(o.min),
            max: self.max.max_by_component(o.max),
        }
    }
}

/// Axis-aligned 3D bounding box.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aabb3<S> {
    pub min: Vec3<S>,
    pub max: Vec3<S>,
}

impl<S: Real> Aabb3<S> {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3<S>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut b = Self { min: first, max: first };
        for p in it {
            b.min = b.min.min_by_component(*p);
            b.max = b.max.max_by_component(*p);
        }
        Some(b)
    }

    pub fn center(&self) -> Vec3<S> {
        (self.min + self.max) * cast(0.5)
    }

    pub fn extents(&self) -> Vec3<S> {
        self.max - self.min
    }

    pub fn union(&self, o: &Self) -> Self {
        Self {
            min: self.min.min_by_component(o.min),
            max: self.max.max_by_component(o.max),
        }
    }

    pub fn translated(&self, by: Vec3<S>) -> Self {
        Self { min: self.min + by, max: self.max + by }
    }
}
