//! Target kinematics under the three motion models, the escape-heading
//! rule and capture shut-off.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{EncapError, Result};
use crate::geometry::{wrap_two_pi, Vec2};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pattern<T> {
    ConstantVelocity { cruise_step: T },
    Circle { cruise_step: T, turn_rate: T },
    Waypoints { cruise_step: T, points: Vec<Vec2<T>> },
}

impl<T: Scalar> Pattern<T> {
    pub fn cruise_step(&self) -> T {
        match self {
            Pattern::ConstantVelocity { cruise_step } | Pattern::Circle { cruise_step, .. } | Pattern::Waypoints { cruise_step, .. } => {
                *cruise_step
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionModel<T> {
    /// Uniform heading and uniform step in `[0, d_g^max]`.
    Random,
    /// Random until a robot is inside the escape radius, then flee at
    /// full step.
    RandomEscape,
    /// Follow a pattern at cruise step until a robot is inside the escape
    /// radius, then flee at full step.
    PatternEscape { pattern: Pattern<T> },
}

impl<T> MotionModel<T> {
    pub fn escapes(&self) -> bool {
        !matches!(self, MotionModel::Random)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState<T> {
    pub center: Vec2<T>,
    pub heading: T,
    pub radius: T,
    pub max_step: T,
    pub escape_radius: T,
    pub captured: bool,
    pub motion: MotionModel<T>,
    /// Next waypoint index for the waypoint pattern.
    pub waypoint: usize,
}

/// Where a target may legally be after a move.
#[derive(Debug, Clone, Copy)]
pub struct TargetConstraints<'a, T> {
    pub environment: &'a Environment<T>,
    /// Minimum boundary distance of the target centre.
    pub boundary_margin: T,
    /// Centres of the other targets.
    pub others: &'a [Vec2<T>],
    /// Minimum centre distance to every other target.
    pub spacing: T,
}

impl<T: Scalar> TargetConstraints<'_, T> {
    pub fn admits(&self, p: Vec2<T>) -> bool {
        self.environment.boundary_distance(p) >= self.boundary_margin && self.others.iter().all(|o| o.distance(p) > self.spacing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetMove<T> {
    /// Change of heading.
    pub turn: T,
    pub step: T,
    pub escaping: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeHeading<T> {
    pub heading: T,
    /// Whether the heading increases the distance to every intruder.
    pub feasible: bool,
}

const RESAMPLES: usize = 64;
const FALLBACK_GRID: usize = 720;

/// Absolute heading to flee along. When the open half-planes pointing away
/// from all intruders intersect, the heading is uniform over that arc;
/// otherwise it maximises the smallest post-move intruder distance.
pub fn escape_heading<T: Scalar, R: Rng + ?Sized>(
    center: Vec2<T>,
    step: T,
    intruders: &[Vec2<T>],
    rng: &mut R,
) -> Result<EscapeHeading<T>> {
    if intruders.is_empty() {
        return Err(EncapError::NoIntruders);
    }
    match escape_arc(center, intruders) {
        Some((lo, width)) => {
            let u = T::lit(rng.random::<f64>());
            // open arc: keep away from both ends by a hair
            let eps = width * T::lit(1e-9);
            Ok(EscapeHeading { heading: wrap_two_pi(lo + eps + u * (width - T::two() * eps)), feasible: true })
        }
        None => Ok(EscapeHeading { heading: max_min_heading(center, step, intruders), feasible: false }),
    }
}

/// Open arc `(lo, lo + width)` of headings with negative dot product
/// against every centre-to-intruder direction, if non-empty.
pub fn escape_arc<T: Scalar>(center: Vec2<T>, intruders: &[Vec2<T>]) -> Option<(T, T)> {
    let mut bearings: Vec<T> = intruders.iter().filter_map(|p| (*p - center).normalized().map(|v| wrap_two_pi(v.angle()))).collect();
    if bearings.is_empty() {
        // intruders exactly at the centre: every direction is equally bad
        return None;
    }
    bearings.sort_by(|a, b| a.partial_cmp(b).expect("finite bearings"));
    // the bearings occupy the complement of their largest circular gap,
    // running counter-clockwise and ending at `last`
    let n = bearings.len();
    let mut gap = T::TAU() - (bearings[n - 1] - bearings[0]);
    let mut last = bearings[n - 1];
    for i in 1..n {
        let g = bearings[i] - bearings[i - 1];
        if g > gap {
            gap = g;
            last = bearings[i - 1];
        }
    }
    let span = T::TAU() - gap;
    let width = T::PI() - span;
    if width <= T::zero() {
        return None;
    }
    // headings in (last + π/2, first + 3π/2) move away from every bearing
    Some((wrap_two_pi(last + T::FRAC_PI_2()), width))
}

fn min_distance_after<T: Scalar>(center: Vec2<T>, step: T, heading: T, intruders: &[Vec2<T>]) -> T {
    let p = center + Vec2::from_angle(heading) * step;
    intruders.iter().map(|q| q.distance(p)).fold(T::infinity(), T::min)
}

fn max_min_heading<T: Scalar>(center: Vec2<T>, step: T, intruders: &[Vec2<T>]) -> T {
    let h = T::TAU() / T::lit(FALLBACK_GRID as f64);
    let mut best = (T::neg_infinity(), T::zero());
    for j in 0..FALLBACK_GRID {
        let a = h * T::lit(j as f64);
        let v = min_distance_after(center, step, a, intruders);
        if v > best.0 {
            best = (v, a);
        }
    }
    // golden-section refinement within one grid cell either side
    let (mut lo, mut hi) = (best.1 - h, best.1 + h);
    let g = T::lit(0.618_033_988_749_894_9);
    for _ in 0..40 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if min_distance_after(center, step, a, intruders) < min_distance_after(center, step, b, intruders) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let refined = (lo + hi) * T::half();
    if min_distance_after(center, step, refined, intruders) >= best.0 {
        wrap_two_pi(refined)
    } else {
        best.1
    }
}

fn move_ok<T: Scalar>(center: Vec2<T>, heading: T, step: T, constraints: &TargetConstraints<'_, T>) -> bool {
    constraints.admits(center + Vec2::from_angle(heading) * step)
}

fn random_move<T: Scalar, R: Rng + ?Sized>(t: &TargetState<T>, constraints: &TargetConstraints<'_, T>, rng: &mut R) -> TargetMove<T> {
    let mut last = (t.heading, T::zero());
    for _ in 0..RESAMPLES {
        let heading = T::lit(rng.random::<f64>()) * T::TAU();
        let step = T::lit(rng.random::<f64>()) * t.max_step;
        if move_ok(t.center, heading, step, constraints) {
            return TargetMove { turn: heading - t.heading, step, escaping: false };
        }
        last = (heading, step);
    }
    let reflected = wrap_two_pi(last.0 + T::PI());
    if move_ok(t.center, reflected, last.1, constraints) {
        return TargetMove { turn: reflected - t.heading, step: last.1, escaping: false };
    }
    TargetMove { turn: T::zero(), step: T::zero(), escaping: false }
}

fn escape_move<T: Scalar, R: Rng + ?Sized>(
    t: &TargetState<T>,
    intruders: &[Vec2<T>],
    constraints: &TargetConstraints<'_, T>,
    rng: &mut R,
) -> TargetMove<T> {
    let step = t.max_step;
    if let Some((lo, width)) = escape_arc(t.center, intruders) {
        for _ in 0..RESAMPLES {
            let e = escape_heading(t.center, step, intruders, rng).expect("intruders present");
            if move_ok(t.center, e.heading, step, constraints) {
                return TargetMove { turn: e.heading - t.heading, step, escaping: true };
            }
        }
        // the boundary cuts the arc: best admissible heading inside it
        let n = 256;
        let mut best: Option<(T, T)> = None;
        for j in 1..n {
            let a = lo + width * T::lit(j as f64 / n as f64);
            if move_ok(t.center, a, step, constraints) {
                let v = min_distance_after(t.center, step, a, intruders);
                if best.is_none_or(|b| v > b.0) {
                    best = Some((v, a));
                }
            }
        }
        if let Some((_, a)) = best {
            return TargetMove { turn: wrap_two_pi(a) - t.heading, step, escaping: true };
        }
    }
    let mut best: Option<(T, T)> = None;
    let h = T::TAU() / T::lit(FALLBACK_GRID as f64);
    for j in 0..FALLBACK_GRID {
        let a = h * T::lit(j as f64);
        if move_ok(t.center, a, step, constraints) {
            let v = min_distance_after(t.center, step, a, intruders);
            if best.is_none_or(|b| v > b.0) {
                best = Some((v, a));
            }
        }
    }
    let current = intruders.iter().map(|q| q.distance(t.center)).fold(T::infinity(), T::min);
    match best {
        Some((v, a)) if v >= current => TargetMove { turn: a - t.heading, step, escaping: true },
        _ => TargetMove { turn: T::zero(), step: T::zero(), escaping: true },
    }
}

fn pattern_move<T: Scalar, R: Rng + ?Sized>(
    t: &TargetState<T>,
    pattern: &Pattern<T>,
    constraints: &TargetConstraints<'_, T>,
    rng: &mut R,
) -> TargetMove<T> {
    let step = pattern.cruise_step();
    let heading = match pattern {
        Pattern::ConstantVelocity { .. } => t.heading,
        Pattern::Circle { turn_rate, .. } => t.heading + *turn_rate,
        Pattern::Waypoints { points, .. } => {
            if points.is_empty() {
                t.heading
            } else {
                let wp = points[t.waypoint % points.len()];
                (wp - t.center).normalized().map(|v| v.angle()).unwrap_or(t.heading)
            }
        }
    };
    if move_ok(t.center, heading, step, constraints) {
        return TargetMove { turn: heading - t.heading, step, escaping: false };
    }
    // specular reflection off the nearest wall
    let v = Vec2::from_angle(heading);
    let n = constraints.environment.inward_normal(t.center);
    let dot = v.dot(n);
    if dot < T::zero() {
        let r = v - n * (T::two() * dot);
        let reflected = r.angle();
        if move_ok(t.center, reflected, step, constraints) {
            return TargetMove { turn: reflected - t.heading, step, escaping: false };
        }
    }
    for _ in 0..RESAMPLES {
        let a = T::lit(rng.random::<f64>()) * T::TAU();
        if move_ok(t.center, a, step, constraints) {
            return TargetMove { turn: a - t.heading, step, escaping: false };
        }
    }
    TargetMove { turn: T::zero(), step: T::zero(), escaping: false }
}

/// Move for one timestep. `intruders` are the robot centres the target can
/// see; only those within its escape radius are acted upon.
pub fn target_step<T: Scalar, R: Rng + ?Sized>(
    t: &TargetState<T>,
    robots: &[Vec2<T>],
    constraints: &TargetConstraints<'_, T>,
    rng: &mut R,
) -> TargetMove<T> {
    if t.captured {
        return TargetMove { turn: T::zero(), step: T::zero(), escaping: false };
    }
    if t.motion.escapes() {
        let intruders: Vec<Vec2<T>> = robots.iter().copied().filter(|p| p.distance(t.center) <= t.escape_radius).collect();
        if !intruders.is_empty() {
            return escape_move(t, &intruders, constraints, rng);
        }
    }
    match &t.motion {
        MotionModel::Random | MotionModel::RandomEscape => random_move(t, constraints, rng),
        MotionModel::PatternEscape { pattern } => pattern_move(t, pattern, constraints, rng),
    }
}

impl<T: Scalar> TargetState<T> {
    /// Apply a move computed by [`target_step`].
    pub fn apply(&mut self, m: &TargetMove<T>) {
        if self.captured {
            return;
        }
        self.heading = wrap_two_pi(self.heading + m.turn);
        self.center += Vec2::from_angle(self.heading) * m.step;
        if let MotionModel::PatternEscape { pattern: Pattern::Waypoints { points, cruise_step } } = &self.motion {
            if !points.is_empty() && points[self.waypoint % points.len()].distance(self.center) <= *cruise_step {
                self.waypoint = (self.waypoint + 1) % points.len();
            }
        }
    }

    /// Shut-off: returns `true` on the first call only.
    pub fn on_capture(&mut self) -> bool {
        let first = !self.captured;
        self.captured = true;
        first
    }
}
