//! The memoryless per-robot reactive control law: angular ranges built from
//! the strongest sensor, safe step lengths against robots and the target,
//! orbit classification and behaviour dispatch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EncapError, Result};
use crate::geometry::{angle_distance, AngularInterval, FarSector, Vec2};
use crate::scalar::Scalar;
use crate::signal::{
    infer_boundary_distance, infer_distance, virtual_source_distance_clamped, LineResponse, ReadingSet, SensorArray, SignalProfile,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotParams<T> {
    pub radius: T,
    pub max_step: T,
    pub safe_target: T,
    pub safe_robot: T,
    pub safe_boundary: T,
    pub sensors: SensorArray<T>,
    /// Suppress the orbit-tangent behaviours (approximation of the earlier
    /// static-target controller).
    pub baseline_mode: bool,
    /// Candidates per angular interval when maximising the step length.
    pub heading_samples: usize,
    /// Narrow the line-of-sight cone using the neighbouring sensors.
    pub refine_los: bool,
}

impl<T: Scalar> RobotParams<T> {
    pub fn check(&self) -> Result<()> {
        if self.sensors.half_angle() >= T::FRAC_PI_2() {
            return Err(EncapError::Infeasible("at least three sensors are needed (half-angle below π/2)".into()));
        }
        if self.max_step <= T::zero() {
            return Err(EncapError::Infeasible("max_step must be positive".into()));
        }
        if self.heading_samples == 0 {
            return Err(EncapError::Infeasible("heading_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Where a range estimate falls relative to the orbit rings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitPosition {
    Inside,
    Orbit(u32),
}

/// Primary ring `(inner0, outer0]` and secondary rings of width `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitSet<T> {
    pub inner0: T,
    pub outer0: T,
    pub width: T,
}

impl<T: Scalar> OrbitSet<T> {
    /// Tie-breaking rotation: −1 (clockwise) for the primary orbit, then
    /// `(−1)^(i−1)` for secondary orbit `i`.
    pub fn rotation(&self, i: u32) -> i8 {
        if i.is_multiple_of(2) {
            -1
        } else {
            1
        }
    }

    pub fn ring(&self, i: u32) -> (T, T) {
        if i == 0 {
            (self.inner0, self.outer0)
        } else {
            let k = T::lit(i as f64);
            (self.outer0 + (k - T::one()) * self.width, self.outer0 + k * self.width)
        }
    }

    pub fn classify(&self, range: T) -> OrbitPosition {
        if range <= self.inner0 {
            OrbitPosition::Inside
        } else if range <= self.outer0 {
            OrbitPosition::Orbit(0)
        } else {
            let i = ((range - self.outer0) / self.width).ceil().to_u32().unwrap_or(u32::MAX).max(1);
            OrbitPosition::Orbit(i)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    AvoidBoundary,
    RandomWalk,
    AvoidTarget,
    OrbitTangent,
    ApproachTarget,
    TangentFallback,
    MinSignalFallback,
    Frozen,
}

impl Behavior {
    pub const ALL: [Behavior; 8] = [
        Behavior::AvoidBoundary,
        Behavior::RandomWalk,
        Behavior::AvoidTarget,
        Behavior::OrbitTangent,
        Behavior::ApproachTarget,
        Behavior::TangentFallback,
        Behavior::MinSignalFallback,
        Behavior::Frozen,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Behavior::AvoidBoundary => "avoid-boundary",
            Behavior::RandomWalk => "random-walk",
            Behavior::AvoidTarget => "avoid-target",
            Behavior::OrbitTangent => "orbit-tangent",
            Behavior::ApproachTarget => "approach-target",
            Behavior::TangentFallback => "tangent-fallback",
            Behavior::MinSignalFallback => "min-signal-fallback",
            Behavior::Frozen => "frozen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlOutput<T> {
    /// Turn relative to the current heading.
    pub turn: T,
    pub step: T,
    pub behavior: Behavior,
    pub target_range: Option<T>,
    pub orbit: Option<OrbitPosition>,
}

/// `[φ^k − φ_k, φ^k + φ_k]`, optionally halved towards the stronger
/// neighbouring sensor.
pub fn los_range<T: Scalar>(k: usize, sensors: &SensorArray<T>, refined: bool, target_readings: &[T]) -> AngularInterval<T> {
    let phi_k = sensors.angle(k);
    let half = sensors.half_gap(k);
    if refined && sensors.count() >= 3 {
        let zp = target_readings[sensors.prev(k)];
        let zn = target_readings[sensors.next(k)];
        if zp > zn {
            return AngularInterval::new(phi_k - half, phi_k);
        } else if zn > zp {
            return AngularInterval::new(phi_k, phi_k + half);
        }
    }
    AngularInterval::centered(phi_k, half)
}

/// Headings that move away from every point of a bearing cone:
/// `[hi + π/2, lo + 3π/2]`.
pub fn avoid_range_from<T: Scalar>(cone: &AngularInterval<T>) -> Result<AngularInterval<T>> {
    let width = T::PI() - cone.width();
    if width <= T::zero() {
        return Err(EncapError::Infeasible("avoidance range empty: half-angle must be below π/2".into()));
    }
    Ok(AngularInterval::new(cone.hi() + T::FRAC_PI_2(), cone.hi() + T::FRAC_PI_2() + width))
}

pub fn avoid_range<T: Scalar>(k: usize, sensors: &SensorArray<T>) -> Result<AngularInterval<T>> {
    avoid_range_from(&sensors.cone(k))
}

/// Clockwise (`-1`) and counter-clockwise (`+1`) tangent headings for a
/// bearing cone.
pub fn tangent_ranges_from<T: Scalar>(cone: &AngularInterval<T>) -> (AngularInterval<T>, AngularInterval<T>) {
    let cw = AngularInterval::new(cone.lo() + T::FRAC_PI_2(), cone.hi() + T::FRAC_PI_2());
    let three_half = T::PI() + T::FRAC_PI_2();
    let ccw = AngularInterval::new(cone.lo() + three_half, cone.hi() + three_half);
    (cw, ccw)
}

pub fn tangent_ranges<T: Scalar>(k: usize, sensors: &SensorArray<T>) -> (AngularInterval<T>, AngularInterval<T>) {
    tangent_ranges_from(&sensors.cone(k))
}

/// Largest `d ∈ [0, max]` with `ok(d)`, assuming nothing about monotonicity
/// beyond the coarse grid: the top grid point that passes is refined
/// towards the next failing one.
fn max_feasible_step<T: Scalar, F: Fn(T) -> bool>(max: T, ok: F) -> T {
    if max <= T::zero() {
        return T::zero();
    }
    if ok(max) {
        return max;
    }
    const GRID: usize = 16;
    let at = |j: usize| max * T::lit(j as f64 / GRID as f64);
    let mut j = GRID - 1;
    loop {
        if ok(at(j)) {
            break;
        }
        if j == 0 {
            return T::zero();
        }
        j -= 1;
    }
    let (mut lo, mut hi) = (at(j), at(j + 1));
    for _ in 0..12 {
        let mid = (lo + hi) * T::half();
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Worst-case neighbour regions reconstructed from the robot readings: for
/// each sensor, the bearing cone it is closest to beyond its virtual-source
/// radius. Any robot centre lies in the cone of its nearest sensor at least
/// that far away.
///
/// Each region also carries a separation clearance. With `D` an upper bound
/// on the neighbour's centre distance, `s` the safe distance and `a` the step
/// cap, two robots that each keep `min(s + a, sqrt((s² + D² + 2a²)/2))` from
/// the other's current position end at least `s` apart, and so does a robot
/// keeping it against one that keeps `s + a`.
#[derive(Debug, Clone)]
pub struct NeighborBounds<T> {
    sectors: Vec<FarSector<T>>,
    separation: Vec<T>,
    readings_zero: bool,
}

impl<T: Scalar> NeighborBounds<T> {
    pub fn new(robot_readings: &[T], profile: &SignalProfile<T>, params: &RobotParams<T>) -> Self {
        let sensors = &params.sensors;
        let (s, a) = (params.safe_robot, params.max_step);
        let strict = s + a;
        let mut sectors = Vec::new();
        let mut separation = Vec::new();
        for (k, &z) in robot_readings.iter().enumerate() {
            let d = profile.inverse(z);
            let r = virtual_source_distance_clamped(d, sensors.mount_radius(), sensors.half_gap(k));
            // regions that stay beyond the clearance for every step are inert
            if r - a >= strict {
                continue;
            }
            // a silent sensor gives no upper bound on the neighbour distance
            let m = if z > T::zero() {
                let upper = d + sensors.mount_radius();
                strict.min(((s * s + upper * upper + T::two() * a * a) * T::half()).sqrt())
            } else {
                strict
            };
            sectors.push(FarSector::new(sensors.cone(k), r));
            separation.push(m);
        }
        Self { sectors, separation, readings_zero: robot_readings.iter().all(|&z| z <= T::zero()) }
    }

    pub fn sectors(&self) -> &[FarSector<T>] {
        &self.sectors
    }

    fn max_step(&self, theta: T, params: &RobotParams<T>, strict: bool) -> T {
        if self.readings_zero || self.sectors.is_empty() {
            return params.max_step;
        }
        let clearance = params.safe_robot + params.max_step;
        let dir = Vec2::from_angle(theta);
        max_feasible_step(params.max_step, |d| {
            let p = dir * d;
            self.sectors.iter().zip(&self.separation).all(|(sec, &m)| sec.distance_from(p) >= if strict { clearance } else { m })
        })
    }

    /// Largest step along robot-frame heading `theta` that keeps a distance
    /// of `safe_robot + max_step` from every admissible neighbour location,
    /// so safety survives a simultaneous neighbour move of `max_step`.
    pub fn dist_avo_rob(&self, theta: T, params: &RobotParams<T>) -> T {
        self.max_step(theta, params, true)
    }

    /// Step under the separation clearances, for robots already inside
    /// `safe_robot + max_step` of a neighbour.
    pub fn dist_separate(&self, theta: T, params: &RobotParams<T>) -> T {
        self.max_step(theta, params, false)
    }
}

/// Step cap keeping the robot at least `guard` from every point of the
/// target's admissible region (`los` cone beyond `range`).
pub fn dist_avo_tar<T: Scalar>(theta: T, range: T, los: &AngularInterval<T>, guard: T, max_step: T) -> T {
    let region = FarSector::new(*los, range);
    let dir = Vec2::from_angle(theta);
    max_feasible_step(max_step, |d| region.distance_from(dir * d) >= guard)
}

pub fn current_orbit<T: Scalar>(range: T, orbits: &OrbitSet<T>) -> OrbitPosition {
    orbits.classify(range)
}

/// Immutable per-step context for [`control_step`].
#[derive(Debug, Clone, Copy)]
pub struct ControlContext<'a, T> {
    pub params: &'a RobotParams<T>,
    pub orbits: &'a OrbitSet<T>,
    pub robot_profile: &'a SignalProfile<T>,
    pub target_profile: &'a SignalProfile<T>,
    pub boundary_response: &'a LineResponse<T>,
    /// Whether readings are noise-free (enables the refined LOS cone).
    pub noiseless: bool,
    /// Factor applied to robot and boundary readings before inference;
    /// above 1 it makes neighbours and walls look closer than measured.
    pub guard_gain: T,
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    theta: T,
    step: T,
    preferred: bool,
    mid_offset: T,
    index: usize,
}

fn better<T: Scalar>(a: &Candidate<T>, b: &Candidate<T>) -> bool {
    let tol = T::lit(1e-12) * (T::one() + a.step.abs().max(b.step.abs()));
    if (a.step - b.step).abs() > tol {
        return a.step > b.step;
    }
    if a.preferred != b.preferred {
        return a.preferred;
    }
    if (a.mid_offset - b.mid_offset).abs() > T::lit(1e-12) {
        return a.mid_offset < b.mid_offset;
    }
    a.index < b.index
}

/// Maximise `score` over the discretised union of `(interval, preferred)`.
fn argmax_over<T: Scalar, F: Fn(T) -> T>(intervals: &[(AngularInterval<T>, bool)], samples: usize, score: F) -> (T, T) {
    let mut best: Option<Candidate<T>> = None;
    let mut index = 0;
    for (iv, preferred) in intervals {
        let mid = iv.midpoint();
        for theta in iv.samples(samples) {
            let c = Candidate { theta, step: score(theta), preferred: *preferred, mid_offset: angle_distance(theta, mid), index };
            index += 1;
            if best.as_ref().is_none_or(|b| better(&c, b)) {
                best = Some(c);
            }
        }
    }
    let b = best.expect("non-empty candidate set");
    (b.theta, b.step)
}

/// Sensor with the weakest robot reading, uniform among ties.
fn argmin_reading<T: Scalar, R: Rng + ?Sized>(values: &[T], rng: &mut R) -> usize {
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let ties: Vec<usize> = values.iter().enumerate().filter(|(_, &v)| v == min).map(|(k, _)| k).collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// One evaluation of the reactive controller from the current readings.
pub fn control_step<T: Scalar, R: Rng + ?Sized>(readings: &ReadingSet<T>, ctx: &ControlContext<'_, T>, rng: &mut R) -> ControlOutput<T> {
    let params = ctx.params;
    let sensors = &params.sensors;
    let n = params.heading_samples;
    let guarded = |z: &[T]| -> Vec<T> { z.iter().map(|&v| v * ctx.guard_gain).collect() };
    let robot_readings = guarded(&readings.robot);
    let boundary_readings = guarded(&readings.environment);
    let neighbors = NeighborBounds::new(&robot_readings, ctx.robot_profile, params);
    let rob = |theta: T| neighbors.dist_avo_rob(theta, params);
    let separate = |theta: T| neighbors.dist_separate(theta, params);

    let target = infer_distance(&readings.target, ctx.target_profile, sensors);
    let orbit = target.map(|(range, _)| ctx.orbits.classify(range));
    let out = |turn: T, step: T, behavior: Behavior| ControlOutput {
        turn,
        step: step.max(T::zero()).min(params.max_step),
        behavior,
        target_range: target.map(|t| t.0),
        orbit,
    };

    if let Some((dist, k)) = infer_boundary_distance(&boundary_readings, ctx.boundary_response, sensors) {
        if dist <= params.safe_boundary + params.max_step {
            let away = avoid_range(k, sensors).expect("validated sensor array");
            let (theta, step) = argmax_over(&[(away, false)], n, rob);
            return out(theta, step, Behavior::AvoidBoundary);
        }
    }

    let Some((range, k)) = target else {
        let theta = T::lit(rng.random::<f64>()) * T::TAU();
        let step = rob(theta);
        if step > T::zero() {
            return out(theta, step, Behavior::RandomWalk);
        }
        let j = argmin_reading(&robot_readings, rng);
        let theta = sensors.angle(j);
        return out(theta, separate(theta), Behavior::MinSignalFallback);
    };

    let los = los_range(k, sensors, params.refine_los && ctx.noiseless, &readings.target);
    let inner = ctx.orbits.inner0;
    let tar = |theta: T| dist_avo_tar(theta, range, &los, inner, params.max_step);
    let position = ctx.orbits.classify(range);

    if position == OrbitPosition::Inside {
        let away = avoid_range_from(&los).expect("validated sensor array");
        let (theta, step) = argmax_over(&[(away, false)], n, rob);
        let required = (range - inner).abs();
        return out(theta, step.min(required), Behavior::AvoidTarget);
    }

    let (cw, ccw) = tangent_ranges_from(&los);
    let OrbitPosition::Orbit(i) = position else { unreachable!() };
    let rotation_cw = ctx.orbits.rotation(i) < 0;
    let tangents = [(cw, rotation_cw), (ccw, !rotation_cw)];
    let capped = |theta: T| rob(theta).min(tar(theta));

    if i == 0 && !params.baseline_mode {
        let (theta, step) = argmax_over(&tangents, n, capped);
        return out(theta, step, Behavior::OrbitTangent);
    }

    let (theta, step) = argmax_over(&[(los, false)], n, capped);
    if step > T::zero() {
        return out(theta, step, Behavior::ApproachTarget);
    }
    if !params.baseline_mode {
        let (theta, step) = argmax_over(&tangents, n, capped);
        if step > T::zero() {
            return out(theta, step, Behavior::TangentFallback);
        }
    }
    let j = argmin_reading(&robot_readings, rng);
    let theta = sensors.angle(j);
    out(theta, separate(theta).min(tar(theta)), Behavior::MinSignalFallback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(p: usize) -> RobotParams<f64> {
        RobotParams {
            radius: 1.0,
            max_step: 0.3,
            safe_target: 2.5,
            safe_robot: 3.0,
            safe_boundary: 1.0,
            sensors: SensorArray::symmetric(p, 1.0).unwrap(),
            baseline_mode: false,
            heading_samples: 33,
            refine_los: true,
        }
    }

    #[test]
    fn los_examples() {
        let arr = SensorArray::<f64>::symmetric(8, 1.0).unwrap();
        let iv = los_range(0, &arr, false, &[0.0; 8]);
        assert!((iv.lo() - (2.0 * PI - PI / 8.0)).abs() < 1e-12);
        assert!((iv.width() - PI / 4.0).abs() < 1e-12);
        let mut z = [0.0; 8];
        z[0] = 1.0;
        z[7] = 0.5;
        z[1] = 0.2;
        let r = los_range(0, &arr, true, &z);
        assert!(r.contains(-PI / 8.0) && r.contains(0.0) && !r.contains(PI / 16.0));
        assert!((r.width() - PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn avoid_examples() {
        let arr = SensorArray::<f64>::symmetric(4, 1.0).unwrap();
        let a = avoid_range(0, &arr).unwrap();
        assert!((a.lo() - 3.0 * PI / 4.0).abs() < 1e-12);
        assert!((a.hi() - 5.0 * PI / 4.0).abs() < 1e-12);
        let two = SensorArray::<f64>::symmetric(2, 1.0).unwrap();
        assert!(avoid_range(0, &two).is_err());
        let many = SensorArray::<f64>::symmetric(100_000, 1.0).unwrap();
        let a = avoid_range(0, &many).unwrap();
        assert!((a.lo() - PI / 2.0).abs() < 1e-4 && (a.hi() - 1.5 * PI).abs() < 1e-4);
    }

    #[test]
    fn tangent_examples() {
        let arr = SensorArray::<f64>::symmetric(4, 1.0).unwrap();
        let (cw, ccw) = tangent_ranges(0, &arr);
        assert!((cw.lo() - PI / 4.0).abs() < 1e-12 && (cw.hi() - 3.0 * PI / 4.0).abs() < 1e-12);
        assert!((ccw.lo() - 5.0 * PI / 4.0).abs() < 1e-12);
        // disjoint from the line-of-sight cone once φ ≤ π/4
        for p in 4..20 {
            let arr = SensorArray::<f64>::symmetric(p, 1.0).unwrap();
            let los = los_range(0, &arr, false, &vec![0.0; p]);
            let (cw, ccw) = tangent_ranges(0, &arr);
            for t in cw.samples(101).chain(ccw.samples(101)) {
                let inside_open = los.contains(t) && angle_distance(t, los.lo()) > 1e-9 && angle_distance(t, los.hi()) > 1e-9;
                assert!(!inside_open, "p={p}");
            }
        }
    }

    #[test]
    fn orbit_classification() {
        let o = OrbitSet { inner0: 3.0, outer0: 4.0, width: 2.0 };
        assert_eq!(o.classify(4.0), OrbitPosition::Orbit(0));
        assert_eq!(o.classify(4.0 + 3.0), OrbitPosition::Orbit(2));
        assert_eq!(o.classify(3.0), OrbitPosition::Inside);
        assert_eq!(o.classify(2.0), OrbitPosition::Inside);
        assert_eq!(o.rotation(0), -1);
        assert_eq!(o.rotation(1), 1);
        assert_eq!(o.rotation(2), -1);
    }

    #[test]
    fn no_neighbor_is_unconstrained() {
        let p = params(8);
        let prof = SignalProfile::linear(crate::signal::SignalKind::Robot, 3.3);
        let nb = NeighborBounds::new(&[0.0; 8], &prof, &p);
        assert_eq!(nb.dist_avo_rob(1.234, &p), 0.3);
    }

    #[test]
    fn clearance_boundary_blocks_approach() {
        let p = params(8);
        let sec = FarSector::new(p.sensors.cone(0), p.safe_robot + p.max_step);
        let nb = NeighborBounds { sectors: vec![sec], separation: vec![p.safe_robot + p.max_step], readings_zero: false };
        assert_eq!(nb.dist_avo_rob(0.0, &p), 0.0);
        assert_eq!(nb.dist_avo_rob(PI / 2.0, &p), 0.0);
        assert_eq!(nb.dist_avo_rob(PI, &p), 0.3);
    }

    #[test]
    fn far_field_tangent_is_slack() {
        let los = AngularInterval::centered(0.0, PI / 8.0);
        assert_eq!(dist_avo_tar(PI / 2.0, 50.0, &los, 3.0, 0.5), 0.5);
        assert_eq!(dist_avo_tar(0.0, 3.0, &los, 3.0, 0.5), 0.0);
        assert_eq!(dist_avo_tar(PI / 2.0, 3.0, &los, 3.0, 0.5), 0.0);
    }
}
