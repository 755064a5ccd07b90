//! Points, axis-aligned boxes and the segment/box slab test.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn component(self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis out of range: {axis}"),
        }
    }

    /// Azimuth in the x-y plane from +x, in (-pi, pi].
    pub fn azimuth(self) -> T {
        let az = self.y.atan2(self.x);
        if az == -T::PI() {
            T::PI()
        } else {
            az
        }
    }

    /// Elevation above the x-y plane, in [-pi/2, pi/2].
    pub fn elevation(self) -> T {
        let horizontal = (self.x * self.x + self.y * self.y).sqrt();
        self.z.atan2(horizontal)
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Closed axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Self {
        Self { min, max }
    }

    pub fn from_center_half_extents(center: Vec3<T>, half: Vec3<T>) -> Self {
        Self::new(center - half, center + half)
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        (0..3).all(|a| {
            let v = p.component(a);
            v >= self.min.component(a) && v <= self.max.component(a)
        })
    }

    /// Slab test: true iff some point of the closed segment `p0..=p1` lies in
    /// the closed box. Touching a face or an edge counts as a hit.
    pub fn intersects_segment(&self, p0: Vec3<T>, p1: Vec3<T>) -> bool {
        let dir = p1 - p0;
        let mut t_enter = T::zero();
        let mut t_exit = T::one();
        for axis in 0..3 {
            let origin = p0.component(axis);
            let d = dir.component(axis);
            let lo = self.min.component(axis);
            let hi = self.max.component(axis);
            if d == T::zero() {
                if origin < lo || origin > hi {
                    return false;
                }
                continue;
            }
            let inv = d.recip();
            let mut t0 = (lo - origin) * inv;
            let mut t1 = (hi - origin) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(min: [f64; 3], max: [f64; 3]) -> Aabb<f64> {
        Aabb::new(Vec3::new(min[0], min[1], min[2]), Vec3::new(max[0], max[1], max[2]))
    }

    #[test]
    fn segment_through_box() {
        let b = bx([4.0, -1.0, 0.0], [6.0, 1.0, 6.0]);
        assert!(b.intersects_segment(Vec3::new(0.0, 0.0, 5.0), Vec3::new(10.0, 0.0, 5.0)));
    }

    #[test]
    fn segment_passes_above() {
        let b = bx([4.0, -1.0, 0.0], [6.0, 1.0, 2.0]);
        assert!(!b.intersects_segment(Vec3::new(0.0, 0.0, 5.0), Vec3::new(10.0, 0.0, 5.0)));
    }

    #[test]
    fn endpoint_on_face_is_a_hit() {
        let b = bx([4.0, -1.0, 0.0], [6.0, 1.0, 6.0]);
        assert!(b.intersects_segment(Vec3::new(0.0, 0.0, 5.0), Vec3::new(4.0, 0.0, 5.0)));
        // grazing along the top face
        let flat = bx([4.0, -1.0, 0.0], [6.0, 1.0, 5.0]);
        assert!(flat.intersects_segment(Vec3::new(0.0, 0.0, 5.0), Vec3::new(10.0, 0.0, 5.0)));
    }

    #[test]
    fn segment_stopping_short() {
        let b = bx([4.0, -1.0, 0.0], [6.0, 1.0, 6.0]);
        assert!(!b.intersects_segment(Vec3::new(0.0, 0.0, 5.0), Vec3::new(3.9, 0.0, 5.0)));
    }

    #[test]
    fn segment_inside_box() {
        let b = bx([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        assert!(b.intersects_segment(Vec3::new(0.2, 0.2, 0.2), Vec3::new(0.8, 0.7, 0.6)));
    }

    #[test]
    fn angles() {
        let v = Vec3::new(-1.0, 0.0, 0.0);
        assert_eq!(v.azimuth(), std::f64::consts::PI);
        let up = Vec3::new(1.0, 0.0, 1.0);
        assert!((up.elevation() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn works_in_f32() {
        let b: Aabb<f32> = Aabb::new(Vec3::new(4.0, -1.0, 0.0), Vec3::new(6.0, 1.0, 6.0));
        assert!(b.intersects_segment(Vec3::new(0.0, 0.0, 5.0), Vec3::new(10.0, 0.0, 5.0)));
    }
}
