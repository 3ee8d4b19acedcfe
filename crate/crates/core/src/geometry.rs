//! Planar vectors, angle arithmetic, wrapping angular intervals and the
//! "far sector" set used for worst-case source locations.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector at bearing `angle`.
    #[inline]
    pub fn from_angle(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    #[inline]
    pub fn polar(radius: T, angle: T) -> Self {
        Self::from_angle(angle) * radius
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    #[inline]
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn cast<U: Scalar>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> AddAssign for Vec2<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x = self.x + o.x;
        self.y = self.y + o.y;
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_two_pi<T: Scalar>(a: T) -> T {
    let tau = T::TAU();
    let mut r = a % tau;
    if r < T::zero() {
        r = r + tau;
    }
    // `a % tau` can round to exactly tau for tiny negative inputs.
    if r >= tau {
        r = r - tau;
    }
    r
}

/// Wraps an angle into `(-π, π]`.
#[inline]
pub fn wrap_pi<T: Scalar>(a: T) -> T {
    let r = wrap_two_pi(a);
    if r > T::PI() {
        r - T::TAU()
    } else {
        r
    }
}

/// Unsigned angular distance between two bearings, in `[0, π]`.
#[inline]
pub fn angle_distance<T: Scalar>(a: T, b: T) -> T {
    wrap_pi(a - b).abs()
}

/// A closed interval of bearings running counter-clockwise from `lo` to
/// `lo + width`. Membership is evaluated modulo 2π so the interval may wrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularInterval<T> {
    lo: T,
    width: T,
}

impl<T: Scalar> AngularInterval<T> {
    /// Interval from `lo` counter-clockwise to `hi`. `hi` is unwrapped
    /// relative to `lo`, so `[3π/4, 5π/4]` and `[3π/4, -3π/4]` are the same.
    pub fn new(lo: T, hi: T) -> Self {
        let mut width = hi - lo;
        if width < T::zero() || width > T::TAU() {
            width = wrap_two_pi(width);
        }
        Self { lo: wrap_two_pi(lo), width }
    }

    pub fn centered(mid: T, half_width: T) -> Self {
        Self::new(mid - half_width, mid + half_width)
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    /// Upper end, unwrapped (`lo() <= hi() <= lo() + 2π`).
    pub fn hi(&self) -> T {
        self.lo + self.width
    }

    pub fn width(&self) -> T {
        self.width
    }

    pub fn midpoint(&self) -> T {
        self.lo + self.width * T::half()
    }

    pub fn contains(&self, angle: T) -> bool {
        let eps = T::lit(1e-12) * (T::one() + self.width);
        let off = wrap_two_pi(angle - self.lo);
        off <= self.width + eps || off >= T::TAU() - eps
    }

    /// Angular distance from `angle` to the nearest point of the interval.
    pub fn distance_to(&self, angle: T) -> T {
        if self.contains(angle) {
            T::zero()
        } else {
            angle_distance(angle, self.lo).min(angle_distance(angle, self.hi()))
        }
    }

    /// `n` evenly spaced bearings including both endpoints (midpoint
    /// included whenever `n` is odd). `n == 1` yields the midpoint.
    pub fn samples(&self, n: usize) -> impl Iterator<Item = T> + '_ {
        let n = n.max(1);
        (0..n).map(move |j| if n == 1 { self.midpoint() } else { self.lo + self.width * T::lit(j as f64 / (n - 1) as f64) })
    }
}

/// The set `{ρ·u(ψ) : ρ ≥ radius, ψ ∈ bearings}` relative to an origin:
/// every location a source may occupy given a bearing cone and a lower
/// bound on its range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarSector<T> {
    pub bearings: AngularInterval<T>,
    pub radius: T,
}

impl<T: Scalar> FarSector<T> {
    pub fn new(bearings: AngularInterval<T>, radius: T) -> Self {
        Self { bearings, radius }
    }

    /// Euclidean distance from `p` (same origin) to the nearest point of
    /// the set.
    pub fn distance_from(&self, p: Vec2<T>) -> T {
        let r = p.norm();
        if r > T::zero() && self.bearings.contains(p.angle()) {
            return (self.radius - r).max(T::zero());
        }
        if r == T::zero() {
            return self.radius;
        }
        let ray = |psi: T| {
            let u = Vec2::from_angle(psi);
            let q = u * self.radius;
            let t = (p - q).dot(u).max(T::zero());
            (p - q - u * t).norm()
        };
        ray(self.bearings.lo()).min(ray(self.bearings.hi()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_is_periodic() {
        assert!((wrap_two_pi(-PI / 2.0) - 1.5 * PI).abs() < 1e-12);
        assert_eq!(wrap_two_pi(0.0f64), 0.0);
        assert!((wrap_pi(1.5 * PI) + 0.5 * PI).abs() < 1e-12);
        assert!(wrap_two_pi(-1e-18f64) < 2.0 * PI);
    }

    #[test]
    fn interval_wraps() {
        let iv = AngularInterval::new(3.0 * PI / 4.0, 5.0 * PI / 4.0);
        assert!(iv.contains(PI));
        assert!(iv.contains(PI + 2.0 * PI));
        assert!(iv.contains(-PI));
        assert!(!iv.contains(0.0));
        let wrap = AngularInterval::new(-PI / 8.0, PI / 8.0);
        assert!(wrap.contains(0.0));
        assert!(wrap.contains(2.0 * PI - 0.1));
        assert!(!wrap.contains(PI / 4.0));
        assert!((wrap.width() - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn samples_include_endpoints_and_midpoint() {
        let iv = AngularInterval::new(0.0, 1.0f64);
        let s: Vec<f64> = iv.samples(5).collect();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], 0.0);
        assert!((s[2] - 0.5).abs() < 1e-15);
        assert!((s[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn far_sector_distance_matches_brute_force() {
        let sec = FarSector::new(AngularInterval::centered(0.3, 0.4), 2.0);
        let pts = [Vec2::new(0.1, 0.0), Vec2::new(-1.0, 0.5), Vec2::new(3.0, 1.0), Vec2::new(0.0, -3.0), Vec2::new(0.5, 2.5)];
        for p in pts {
            let mut best = f64::INFINITY;
            for i in 0..=400 {
                let psi = sec.bearings.lo() + sec.bearings.width() * i as f64 / 400.0;
                for j in 0..=400 {
                    let rho = 2.0 + 10.0 * j as f64 / 400.0;
                    best = best.min(Vec2::polar(rho, psi).distance(p));
                }
            }
            let d = sec.distance_from(p);
            assert!(d <= best + 1e-9, "{d} vs {best}");
            assert!(best - d < 0.05, "{d} vs {best}");
        }
    }
}
