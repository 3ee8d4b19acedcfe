//! Convex bounded workspaces and line-integral quadrature over their
//! boundary.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Environment<T> {
    Rectangle { width: T, height: T },
    Disk { radius: T },
}

impl<T: Scalar> Environment<T> {
    /// Geometric centre; rectangles span `[0, width] x [0, height]`, disks
    /// are centred on the origin.
    pub fn center(&self) -> Vec2<T> {
        match *self {
            Environment::Rectangle { width, height } => Vec2::new(width * T::half(), height * T::half()),
            Environment::Disk { .. } => Vec2::zero(),
        }
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        self.boundary_distance(p) >= T::zero()
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn boundary_distance(&self, p: Vec2<T>) -> T {
        match *self {
            Environment::Rectangle { width, height } => p.x.min(width - p.x).min(p.y).min(height - p.y),
            Environment::Disk { radius } => radius - p.norm(),
        }
    }

    /// Inward unit normal of the boundary point nearest to `p`.
    pub fn inward_normal(&self, p: Vec2<T>) -> Vec2<T> {
        match *self {
            Environment::Rectangle { width, height } => {
                let cands = [
                    (p.x, Vec2::new(T::one(), T::zero())),
                    (width - p.x, Vec2::new(-T::one(), T::zero())),
                    (p.y, Vec2::new(T::zero(), T::one())),
                    (height - p.y, Vec2::new(T::zero(), -T::one())),
                ];
                let mut best = cands[0];
                for c in &cands[1..] {
                    if c.0 < best.0 {
                        best = *c;
                    }
                }
                best.1
            }
            Environment::Disk { .. } => (-p).normalized().unwrap_or(Vec2::new(T::one(), T::zero())),
        }
    }

    /// Area, used for density checks.
    pub fn area(&self) -> T {
        match *self {
            Environment::Rectangle { width, height } => width * height,
            Environment::Disk { radius } => T::PI() * radius * radius,
        }
    }

    /// Composite-trapezoid estimate of `∫ f(‖x − s‖) dℓ` over the part of the
    /// boundary within `reach` of `s`. `max_step` bounds the quadrature
    /// spacing along the curve.
    pub fn boundary_integral<F>(&self, s: Vec2<T>, reach: T, max_step: T, f: F) -> T
    where
        F: Fn(T) -> T,
    {
        match *self {
            Environment::Rectangle { width, height } => {
                let z = T::zero();
                let corners = [Vec2::new(z, z), Vec2::new(width, z), Vec2::new(width, height), Vec2::new(z, height)];
                let mut total = T::zero();
                for i in 0..4 {
                    let a = corners[i];
                    let b = corners[(i + 1) % 4];
                    total = total + segment_integral(a, b, s, reach, max_step, &f);
                }
                total
            }
            Environment::Disk { radius } => {
                let q = s.norm();
                if q + reach <= radius {
                    return T::zero();
                }
                let cos_span = if q > T::zero() { (radius * radius + q * q - reach * reach) / (T::two() * radius * q) } else { -T::one() };
                if cos_span >= T::one() {
                    return T::zero();
                }
                let span = cos_span.max(-T::one()).acos();
                let base = if q > T::zero() { s.angle() } else { T::zero() };
                let arc_len = T::two() * span * radius;
                let n = (arc_len / max_step).ceil().to_usize().unwrap_or(1).max(2);
                let h = T::two() * span / T::lit(n as f64);
                let mut acc = T::zero();
                for j in 0..=n {
                    let ang = base - span + h * T::lit(j as f64);
                    let x = Vec2::polar(radius, ang);
                    let w = if j == 0 || j == n { T::half() } else { T::one() };
                    acc = acc + w * f(x.distance(s));
                }
                acc * h * radius
            }
        }
    }
}

fn segment_integral<T: Scalar, F: Fn(T) -> T>(a: Vec2<T>, b: Vec2<T>, s: Vec2<T>, reach: T, max_step: T, f: &F) -> T {
    let ab = b - a;
    let len = ab.norm();
    if len == T::zero() {
        return T::zero();
    }
    let u = ab * (T::one() / len);
    let t0 = (s - a).dot(u);
    let h = (s - a).cross(u).abs();
    if h >= reach {
        return T::zero();
    }
    let half_chord = (reach * reach - h * h).sqrt();
    let lo = (t0 - half_chord).max(T::zero());
    let hi = (t0 + half_chord).min(len);
    if hi <= lo {
        return T::zero();
    }
    let n = ((hi - lo) / max_step).ceil().to_usize().unwrap_or(1).max(2);
    let step = (hi - lo) / T::lit(n as f64);
    let mut acc = T::zero();
    for j in 0..=n {
        let t = lo + step * T::lit(j as f64);
        let x = a + u * t;
        let w = if j == 0 || j == n { T::half() } else { T::one() };
        acc = acc + w * f(x.distance(s));
    }
    acc * step
}
