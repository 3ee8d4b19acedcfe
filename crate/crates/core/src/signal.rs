//! Signal sources, isotropic sensor readings, multiplicative noise and the
//! virtual-source range under-approximation.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{EncapError, Result};
use crate::geometry::{wrap_two_pi, AngularInterval, Vec2};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Target,
    Robot,
    Environment,
}

/// Shape of the intensity fall-off. Both families are strictly decreasing
/// on `[0, β)`, vanish at `β` and have closed-form inverses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalFamily<T> {
    /// `A·(1 − d/β)`.
    Linear,
    /// `A·(g(d) − g(β)) / (1 − g(β))` with `g(d) = (1 + d/s)^-2`.
    InverseSquare { softening: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalProfile<T> {
    pub kind: SignalKind,
    /// Influence distance β: intensity is exactly zero at and beyond it.
    pub influence: T,
    pub amplitude: T,
    pub family: SignalFamily<T>,
}

impl<T: Scalar> SignalProfile<T> {
    pub fn linear(kind: SignalKind, influence: T) -> Self {
        Self { kind, influence, amplitude: T::one(), family: SignalFamily::Linear }
    }

    pub fn inverse_square(kind: SignalKind, influence: T, softening: T) -> Self {
        Self { kind, influence, amplitude: T::one(), family: SignalFamily::InverseSquare { softening } }
    }

    /// Intensity at distance `d` from the source.
    pub fn strength(&self, d: T) -> Result<T> {
        if d < T::zero() {
            return Err(EncapError::NegativeDistance(d.to_f64_lossy()));
        }
        Ok(self.strength_unchecked(d))
    }

    #[inline]
    pub(crate) fn strength_unchecked(&self, d: T) -> T {
        let beta = self.influence;
        if d >= beta {
            return T::zero();
        }
        match self.family {
            SignalFamily::Linear => self.amplitude * (T::one() - d / beta),
            SignalFamily::InverseSquare { softening } => {
                let g = |x: T| {
                    let q = T::one() + x / softening;
                    T::one() / (q * q)
                };
                let gb = g(beta);
                self.amplitude * (g(d) - gb) / (T::one() - gb)
            }
        }
    }

    /// Distance whose intensity is `z`. Zero or negative intensities map to
    /// `β`; intensities at or above the peak map to 0.
    pub fn inverse(&self, z: T) -> T {
        if z <= T::zero() {
            return self.influence;
        }
        if z >= self.amplitude {
            return T::zero();
        }
        let beta = self.influence;
        let frac = z / self.amplitude;
        match self.family {
            SignalFamily::Linear => beta * (T::one() - frac),
            SignalFamily::InverseSquare { softening } => {
                let q = T::one() + beta / softening;
                let gb = T::one() / (q * q);
                let g = gb + frac * (T::one() - gb);
                softening * (T::one() / g.sqrt() - T::one())
            }
        }
    }
}

/// Response of a sensor to an infinite straight line source at
/// perpendicular distance `h`, tabulated for inversion.
#[derive(Debug, Clone)]
pub struct LineResponse<T> {
    profile: SignalProfile<T>,
    step: T,
    values: Vec<T>,
}

impl<T: Scalar> LineResponse<T> {
    pub const TABLE_LEN: usize = 2001;

    pub fn new(profile: SignalProfile<T>) -> Self {
        let beta = profile.influence;
        let n = Self::TABLE_LEN;
        let step = beta / T::lit((n - 1) as f64);
        let values = (0..n).map(|i| Self::integrate(&profile, step * T::lit(i as f64), 800)).collect();
        Self { profile, step, values }
    }

    /// Trapezoid integral of `B(√(h² + s²))` over `s ∈ [−L, L]`.
    pub fn integrate(profile: &SignalProfile<T>, h: T, intervals: usize) -> T {
        let beta = profile.influence;
        if h >= beta {
            return T::zero();
        }
        let half = (beta * beta - h * h).sqrt();
        let n = intervals.max(2);
        let ds = T::two() * half / T::lit(n as f64);
        let mut acc = T::zero();
        for j in 0..=n {
            let s = -half + ds * T::lit(j as f64);
            let w = if j == 0 || j == n { T::half() } else { T::one() };
            acc = acc + w * profile.strength_unchecked((h * h + s * s).sqrt());
        }
        acc * ds
    }

    pub fn profile(&self) -> &SignalProfile<T> {
        &self.profile
    }

    pub fn response(&self, h: T) -> T {
        if h <= T::zero() {
            return self.values[0];
        }
        let pos = h / self.step;
        let i = pos.floor().to_usize().unwrap_or(usize::MAX);
        if i >= self.values.len() - 1 {
            return T::zero();
        }
        let frac = pos - T::lit(i as f64);
        self.values[i] + (self.values[i + 1] - self.values[i]) * frac
    }

    /// Perpendicular distance whose line response equals `z` (bisection on
    /// the monotone table).
    pub fn inverse(&self, z: T) -> T {
        if z <= T::zero() {
            return self.profile.influence;
        }
        if z >= self.values[0] {
            return T::zero();
        }
        let (mut lo, mut hi) = (0usize, self.values.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.values[mid] >= z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (self.values[lo], self.values[hi]);
        let frac = if a > b { (a - z) / (a - b) } else { T::zero() };
        self.step * (T::lit(lo as f64) + frac)
    }
}

/// Bearings of the isotropic sensors relative to the robot heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorArray<T> {
    angles: Vec<T>,
    mount_radius: T,
    half_gaps: Vec<T>,
    half_angle: T,
}

impl<T: Scalar> SensorArray<T> {
    /// `count` sensors evenly spaced starting at the heading.
    pub fn symmetric(count: usize, mount_radius: T) -> Result<Self> {
        if count == 0 {
            return Err(EncapError::InvalidSensors("at least one sensor required".into()));
        }
        let step = T::TAU() / T::lit(count as f64);
        let angles = (0..count).map(|k| step * T::lit(k as f64)).collect();
        let mut arr = Self::from_angles(angles, mount_radius)?;
        arr.half_angle = T::PI() / T::lit(count as f64);
        for g in arr.half_gaps.iter_mut() {
            *g = arr.half_angle;
        }
        Ok(arr)
    }

    /// Arbitrary placement. Angles are wrapped into `[0, 2π)` and must be
    /// distinct; they are sorted ascending.
    pub fn from_angles(mut angles: Vec<T>, mount_radius: T) -> Result<Self> {
        if angles.is_empty() {
            return Err(EncapError::InvalidSensors("at least one sensor required".into()));
        }
        for a in angles.iter_mut() {
            *a = wrap_two_pi(*a);
        }
        angles.sort_by(|a, b| a.partial_cmp(b).expect("finite sensor angle"));
        for w in angles.windows(2) {
            if w[1] - w[0] <= T::lit(1e-12) {
                return Err(EncapError::InvalidSensors("duplicate sensor bearing".into()));
            }
        }
        let p = angles.len();
        let gap_after = |k: usize| -> T {
            if p == 1 {
                T::TAU()
            } else if k + 1 < p {
                angles[k + 1] - angles[k]
            } else {
                angles[0] + T::TAU() - angles[k]
            }
        };
        let half_gaps: Vec<T> = (0..p)
            .map(|k| {
                let prev = gap_after((k + p - 1) % p);
                prev.max(gap_after(k)) * T::half()
            })
            .collect();
        let half_angle = (0..p).map(gap_after).fold(T::zero(), T::max) * T::half();
        Ok(Self { angles, mount_radius, half_gaps, half_angle })
    }

    pub fn count(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn angle(&self, k: usize) -> T {
        self.angles[k]
    }

    pub fn mount_radius(&self) -> T {
        self.mount_radius
    }

    /// Half of the largest adjacent gap over the whole array (φ).
    pub fn half_angle(&self) -> T {
        self.half_angle
    }

    /// Half of the larger of the two gaps adjacent to sensor `k`.
    pub fn half_gap(&self, k: usize) -> T {
        self.half_gaps[k]
    }

    /// Bearing cone `[φ^k − φ_k, φ^k + φ_k]` containing any source for which
    /// sensor `k` is the closest sensor.
    pub fn cone(&self, k: usize) -> AngularInterval<T> {
        AngularInterval::centered(self.angles[k], self.half_gaps[k])
    }

    pub fn next(&self, k: usize) -> usize {
        (k + 1) % self.count()
    }

    pub fn prev(&self, k: usize) -> usize {
        (k + self.count() - 1) % self.count()
    }

    /// Sensor bearings `k, l` bracketing the robot-frame angle `theta`.
    pub fn bracketing(&self, theta: T) -> (usize, usize) {
        let t = wrap_two_pi(theta);
        let p = self.count();
        for k in 0..p {
            let l = self.next(k);
            let width = wrap_two_pi(self.angles[l] - self.angles[k]);
            let off = wrap_two_pi(t - self.angles[k]);
            if off <= width || p == 1 {
                return (k, l);
            }
        }
        (p - 1, 0)
    }

    /// World position of sensor `k` for a robot at `center` with `heading`.
    pub fn position(&self, k: usize, center: Vec2<T>, heading: T) -> Vec2<T> {
        center + Vec2::polar(self.mount_radius, heading + self.angles[k])
    }
}

/// Per-sensor intensities for each source kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReadingSet<T> {
    pub target: Vec<T>,
    pub robot: Vec<T>,
    pub environment: Vec<T>,
}

impl<T: Scalar> ReadingSet<T> {
    pub fn zeros(p: usize) -> Self {
        Self { target: vec![T::zero(); p], robot: vec![T::zero(); p], environment: vec![T::zero(); p] }
    }

    pub fn of(&self, kind: SignalKind) -> &[T] {
        match kind {
            SignalKind::Target => &self.target,
            SignalKind::Robot => &self.robot,
            SignalKind::Environment => &self.environment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma: f64,
    #[serde(default = "default_true")]
    pub enabled: bool,
}

fn default_true() -> bool {
    true
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { sigma: 0.0, enabled: false }
    }
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64) -> Self {
        Self { sigma, enabled: sigma > 0.0 }
    }

    pub fn is_active(&self) -> bool {
        self.enabled && self.sigma > 0.0
    }

    /// Draw `n ~ N(0, σ²)` conditioned on `n ≤ 1` (rejection, not clamping).
    pub fn sample_factor<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if !self.is_active() {
            return 0.0;
        }
        loop {
            let z: f64 = StandardNormal.sample(rng);
            let n = z * self.sigma;
            if n <= 1.0 {
                return n;
            }
        }
    }
}

/// Everything a robot's sensors can respond to at one instant.
#[derive(Debug, Clone, Copy)]
pub struct SensingScene<'a, T> {
    pub robots: &'a [Vec2<T>],
    pub targets: &'a [Vec2<T>],
    pub environment: &'a Environment<T>,
    pub robot_profile: &'a SignalProfile<T>,
    pub target_profile: &'a SignalProfile<T>,
    pub boundary_profile: &'a SignalProfile<T>,
}

/// Aggregated readings for a robot at `center`/`heading`. Sources at the
/// robot's own centre (within `1e-12`) are skipped.
pub fn sense<T: Scalar, R: Rng + ?Sized>(
    center: Vec2<T>,
    heading: T,
    sensors: &SensorArray<T>,
    scene: &SensingScene<'_, T>,
    noise: &NoiseSpec,
    rng: &mut R,
) -> ReadingSet<T> {
    let p = sensors.count();
    let mut out = ReadingSet::zeros(p);
    let self_eps = T::lit(1e-12);
    let rp = scene.robot_profile;
    let tp = scene.target_profile;
    let ep = scene.boundary_profile;
    let reach_r = rp.influence + sensors.mount_radius();
    let reach_t = tp.influence + sensors.mount_radius();
    let near_robots: Vec<Vec2<T>> = scene
        .robots
        .iter()
        .copied()
        .filter(|q| {
            let d = q.distance(center);
            d > self_eps && d < reach_r
        })
        .collect();
    let near_targets: Vec<Vec2<T>> = scene.targets.iter().copied().filter(|q| q.distance(center) < reach_t).collect();
    let quad_step = ep.influence / T::lit(200.0);
    for k in 0..p {
        let s = sensors.position(k, center, heading);
        out.robot[k] = near_robots.iter().map(|q| rp.strength_unchecked(q.distance(s))).fold(T::zero(), |a, b| a + b);
        out.target[k] = near_targets.iter().map(|q| tp.strength_unchecked(q.distance(s))).fold(T::zero(), |a, b| a + b);
        if scene.environment.boundary_distance(s) < ep.influence {
            out.environment[k] = scene.environment.boundary_integral(s, ep.influence, quad_step, |d| ep.strength_unchecked(d));
        }
    }
    if noise.is_active() {
        for k in 0..p {
            for v in [&mut out.target[k], &mut out.robot[k], &mut out.environment[k]] {
                let n = noise.sample_factor(rng);
                *v = *v * T::lit(1.0 - n);
            }
        }
    }
    out
}

/// Closest possible centre-to-source distance consistent with a sensor that
/// is `d_sensor` from the source: `r·cos φ + √(d² − r²·sin² φ)`.
pub fn virtual_source_distance<T: Scalar>(d_sensor: T, mount_radius: T, half_angle: T) -> Result<T> {
    let (s, c) = half_angle.sin_cos();
    let disc = d_sensor * d_sensor - mount_radius * mount_radius * s * s;
    if disc < T::zero() {
        return Err(EncapError::DegenerateGeometry { d_sensor: d_sensor.to_f64_lossy(), min: (mount_radius * s).to_f64_lossy() });
    }
    Ok(mount_radius * c + disc.sqrt())
}

/// As [`virtual_source_distance`], clamping a negative discriminant to zero.
pub fn virtual_source_distance_clamped<T: Scalar>(d_sensor: T, mount_radius: T, half_angle: T) -> T {
    let (s, c) = half_angle.sin_cos();
    let disc = (d_sensor * d_sensor - mount_radius * mount_radius * s * s).max(T::zero());
    mount_radius * c + disc.sqrt()
}

/// Index of the strictly positive maximum reading, lowest index on ties.
pub fn argmax_reading<T: Scalar>(values: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &v) in values.iter().enumerate() {
        if v > T::zero() && best.is_none_or(|b| v > values[b]) {
            best = Some(k);
        }
    }
    best
}

/// Range estimate from the strongest sensor: the inverse intensity at
/// sensor `k` pushed through the virtual-source bound. `None` when nothing
/// is sensed.
pub fn infer_distance<T: Scalar>(readings: &[T], profile: &SignalProfile<T>, sensors: &SensorArray<T>) -> Option<(T, usize)> {
    let k = argmax_reading(readings)?;
    let d = profile.inverse(readings[k]);
    Some((virtual_source_distance_clamped(d, sensors.mount_radius(), sensors.half_gap(k)), k))
}

/// Boundary range estimate; inverts the line response instead of the point
/// profile.
pub fn infer_boundary_distance<T: Scalar>(readings: &[T], line: &LineResponse<T>, sensors: &SensorArray<T>) -> Option<(T, usize)> {
    let k = argmax_reading(readings)?;
    let d = line.inverse(readings[k]);
    Some((virtual_source_distance_clamped(d, sensors.mount_radius(), sensors.half_gap(k)), k))
}

/// Per-sensor virtual-source radius; unsensed sensors use `β`.
pub fn virtual_radii<T: Scalar>(readings: &[T], profile: &SignalProfile<T>, sensors: &SensorArray<T>) -> Vec<T> {
    readings
        .iter()
        .enumerate()
        .map(|(k, &z)| virtual_source_distance_clamped(profile.inverse(z), sensors.mount_radius(), sensors.half_gap(k)))
        .collect()
}
