//! Closed-form parameter bounds: deadlock-free step and influence radius,
//! encapsulation ring sizing, and the admissible target/robot step ratios
//! for each target motion model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{Config, Scenario};
use crate::controller::Behavior;
use crate::error::{EncapError, Result};
use crate::scalar::Scalar;
use crate::sim::TraceRecord;
use crate::target::MotionModel;

/// Half-angle of a symmetric `p`-sensor array.
pub fn symmetric_half_angle<T: Scalar>(p: usize) -> T {
    T::PI() / T::lit(p as f64)
}

/// `√(a² + b² − 2ab·cos φ)`: distance between points at ranges `a` and `b`
/// separated by angle `φ`.
fn law_of_cosines<T: Scalar>(a: T, b: T, phi: T) -> T {
    (a * a + b * b - T::two() * a * b * phi.cos()).max(T::zero()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBound<T> {
    /// Strict upper bound on the robot step length.
    pub value: T,
    /// Set when `safe_robot <= 2·radius`: bodies may touch at the safety
    /// distance.
    pub degenerate_margin: bool,
}

/// Largest (exclusive) robot step that rules out two-robot deadlock.
pub fn max_robot_step<T: Scalar>(safe_robot: T, radius: T, half_angle: T) -> Result<StepBound<T>> {
    if half_angle >= T::FRAC_PI_2() {
        return Err(EncapError::Infeasible("deadlock bound needs at least three sensors".into()));
    }
    let value = (safe_robot + radius * half_angle.cos()) * T::half() - law_of_cosines(safe_robot, radius, half_angle) * T::half();
    Ok(StepBound { value, degenerate_margin: safe_robot <= T::two() * radius })
}

/// Open interval of robot influence radii compatible with `max_step`.
pub fn beta_r_interval<T: Scalar>(safe_robot: T, radius: T, half_angle: T, max_step: T) -> Result<(T, T)> {
    if half_angle >= T::FRAC_PI_2() {
        return Err(EncapError::Infeasible("influence interval needs at least three sensors".into()));
    }
    let lo = law_of_cosines(safe_robot, radius, half_angle) + T::two() * max_step;
    let hi = safe_robot + radius * half_angle.cos();
    if lo >= hi {
        return Err(EncapError::Infeasible(format!(
            "empty influence interval ({}, {}) for max_step {}",
            lo.to_f64_lossy(),
            hi.to_f64_lossy(),
            max_step.to_f64_lossy()
        )));
    }
    Ok((lo, hi))
}

/// Smallest encapsulation radius that still contains a robot that started
/// retreating on its most pessimistic range estimate.
pub fn min_encap_radius<T: Scalar>(inner: T, radius: T, half_angle: T, max_step: T) -> T {
    max_step + radius + law_of_cosines(inner, radius, half_angle)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingCount<T> {
    pub real: T,
    pub floor: u64,
}

/// `2π / arccos(1 − (β_r + r_r)² / (2ρ²))`: robots that fit on a ring of
/// radius `ring` outside each other's influence.
pub fn max_ring_robots<T: Scalar>(beta_r: T, radius: T, ring: T) -> Result<RingCount<T>> {
    let chord = beta_r + radius;
    if chord * chord > T::lit(4.0) * ring * ring {
        return Err(EncapError::Infeasible(format!(
            "chord {} exceeds ring diameter {}",
            chord.to_f64_lossy(),
            (T::two() * ring).to_f64_lossy()
        )));
    }
    let angle = (T::one() - chord * chord / (T::two() * ring * ring)).acos();
    let real = T::TAU() / angle;
    // guard exact hexagon/square cases against rounding just below an integer
    let floor = (real + T::lit(1e-9)).floor().to_u64().unwrap_or(0);
    Ok(RingCount { real, floor })
}

/// Angle subtended at the target by two ring robots just outside each
/// other's influence, clamped to `(0, π]`.
pub fn alpha_angle<T: Scalar>(beta_r: T, radius: T, escape_radius: T) -> Result<T> {
    let chord = beta_r + radius;
    if chord > T::two() * escape_radius {
        return Err(EncapError::Infeasible("β_r + r_r exceeds the escape-domain diameter".into()));
    }
    let c = (T::one() - chord * chord / (T::two() * escape_radius * escape_radius)).max(-T::one()).min(T::one());
    Ok(c.acos().min(T::PI()).max(T::min_positive_value()))
}

/// `(sin φ / φ)·cos φ`: expected progress along the line of sight per unit
/// step when the heading is uniform over a cone of half-angle `φ`.
pub fn cone_efficiency<T: Scalar>(half_angle: T) -> T {
    if half_angle >= T::FRAC_PI_2() {
        return T::zero();
    }
    if half_angle == T::zero() {
        return T::one();
    }
    half_angle.sin() / half_angle * half_angle.cos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaEscape<T> {
    pub lambda: T,
    /// Bound keeping clockwise orbiting drift non-positive.
    pub tangential: T,
    /// Bound keeping secondary-orbit radial drift non-positive.
    pub radial: T,
    pub diagnostic: Option<String>,
}

/// Target/robot step ratio for a target that escapes intruders.
pub fn lambda_escape<T: Scalar>(half_angle: T, alpha: T) -> LambdaEscape<T> {
    if half_angle >= T::FRAC_PI_2() {
        return LambdaEscape {
            lambda: T::zero(),
            tangential: T::zero(),
            radial: T::zero(),
            diagnostic: Some("half-angle ≥ π/2: fewer than three sensors, no ratio admissible".into()),
        };
    }
    let eff = cone_efficiency(half_angle);
    let s = (T::PI() - alpha).sin();
    let ratio = if s > T::zero() { alpha / s } else { T::infinity() };
    let tangential = ratio * eff;
    let radial = T::FRAC_PI_2() * eff;
    LambdaEscape { lambda: tangential.min(radial), tangential, radial, diagnostic: None }
}

/// Target/robot step ratio for a purely random target:
/// `1 / (n − ñ₀ + 1)` with `ñ₀` the floored count of robots that fit just
/// outside the inner orbit radius.
pub fn lambda_random<T: Scalar>(swarm_size: usize, beta_r: T, radius: T, inner: T) -> Result<T> {
    let chord = beta_r + radius;
    let arg = T::one() - chord * chord / (T::two() * inner * inner);
    if !(-T::one()..=T::one()).contains(&arg) {
        return Err(EncapError::Infeasible("arccos argument outside [-1, 1]".into()));
    }
    let n0 = (T::TAU() / arg.acos() + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    if swarm_size < n0 {
        return Err(EncapError::Infeasible(format!("swarm of {swarm_size} smaller than ring capacity {n0}")));
    }
    Ok(T::one() / T::lit((swarm_size - n0 + 1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPattern<T> {
    /// Strict bound on the cruise step ratio.
    pub cruise: T,
    pub escape: T,
}

pub fn lambda_pattern<T: Scalar>(half_angle: T, alpha: T) -> LambdaPattern<T> {
    LambdaPattern { cruise: cone_efficiency(half_angle), escape: lambda_escape(half_angle, alpha).lambda }
}

/// Running mean with standard error (Welford).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub count: u64,
    pub mean: f64,
    /// Standard error of the mean.
    pub std_err: f64,
    #[serde(skip)]
    m2: f64,
}

impl MeanEstimate {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        self.std_err = if self.count > 1 { (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt() } else { f64::INFINITY };
    }

    /// Upper end of the `k`-standard-error band.
    pub fn upper(&self, k: f64) -> f64 {
        self.mean + k * self.std_err
    }

    pub fn lower(&self, k: f64) -> f64 {
        self.mean - k * self.std_err
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelDrift {
    /// `(u_g − u_r)·t̂` with `t̂` the counter-clockwise normal of the
    /// robot-to-target direction.
    pub tangential: MeanEstimate,
    /// `(u_g − u_r)·l̂`.
    pub radial: MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DriftStats {
    /// `Δ‖c_g − c_r‖²` over approach-target steps.
    pub approach_dv: MeanEstimate,
    pub by_label: BTreeMap<String, LabelDrift>,
    /// Set when fewer than [`MIN_DRIFT_SAMPLES`] approach steps were seen.
    pub insufficient: bool,
}

pub const MIN_DRIFT_SAMPLES: u64 = 1000;

/// Single-pass drift estimator over trace records. Each robot is paired
/// with the nearest uncaptured target; frozen robots are skipped.
#[derive(Debug, Clone, Default)]
pub struct DriftAccumulator {
    stats: DriftStats,
}

impl DriftAccumulator {
    pub fn push(&mut self, rec: &TraceRecord) {
        for r in &rec.robots {
            if r.behavior == Behavior::Frozen {
                continue;
            }
            let nearest = rec
                .targets
                .iter()
                .filter(|t| !t.captured)
                .min_by(|a, b| a.position.distance(r.position).total_cmp(&b.position.distance(r.position)));
            let Some(t) = nearest else { continue };
            let los = t.position - r.position;
            let Some(l) = los.normalized() else { continue };
            let tn = l.perp();
            let u_r = r.next_position() - r.position;
            let u_g = t.next_position() - t.position;
            let rel = u_g - u_r;
            let los_next = t.next_position() - r.next_position();
            if r.behavior == Behavior::ApproachTarget {
                self.stats.approach_dv.push(los_next.norm_sq() - los.norm_sq());
            }
            let e = self.stats.by_label.entry(r.behavior.label().to_string()).or_default();
            e.tangential.push(rel.dot(tn));
            e.radial.push(rel.dot(l));
        }
    }

    pub fn finish(mut self) -> DriftStats {
        self.stats.insufficient = self.stats.approach_dv.count < MIN_DRIFT_SAMPLES;
        self.stats
    }
}

pub fn drift_diagnostics<'a, I: IntoIterator<Item = &'a TraceRecord>>(trace: I) -> DriftStats {
    let mut acc = DriftAccumulator::default();
    for r in trace {
        acc.push(r);
    }
    acc.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub formula: String,
    pub bound: f64,
    pub configured: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Dispersion angle implied by each target's escape radius.
    pub inferred_alpha: Vec<f64>,
}

impl FeasibilityReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, formula: &str, bound: f64, configured: f64, pass: bool) -> &mut Check {
        self.0.push(Check { name: name.into(), formula: formula.into(), bound, configured, pass, note: None });
        self.0.last_mut().expect("just pushed")
    }

    /// `configured < bound`
    fn below(&mut self, name: impl Into<String>, formula: &str, bound: f64, configured: f64) -> &mut Check {
        self.push(name, formula, bound, configured, configured < bound)
    }

    /// `configured ≤ bound`
    fn at_most(&mut self, name: impl Into<String>, formula: &str, bound: f64, configured: f64) -> &mut Check {
        self.push(name, formula, bound, configured, configured <= bound)
    }

    /// `configured ≥ bound`
    fn at_least(&mut self, name: impl Into<String>, formula: &str, bound: f64, configured: f64) -> &mut Check {
        self.push(name, formula, bound, configured, configured >= bound)
    }

    fn failed(&mut self, name: impl Into<String>, formula: &str, why: String) {
        let c = self.push(name, formula, f64::NAN, f64::NAN, false);
        c.note = Some(why);
    }
}

/// Every parameter condition the guarantees rest on, evaluated against a
/// resolved scenario. Failures are reported, not raised.
pub fn validate_scenario(sc: &Scenario) -> FeasibilityReport {
    let p = &sc.params;
    let phi = p.sensors.half_angle();
    let r = p.radius;
    let beta_r = sc.robot_profile.influence;
    let beta_g = sc.target_profile.influence;
    let beta_e = sc.boundary_profile.influence;
    let inner = sc.nominal_inner;
    let mut c = Checks(Vec::new());

    c.push("sensors", "p >= 3 (half-angle < pi/2)", std::f64::consts::FRAC_PI_2, phi, phi < std::f64::consts::FRAC_PI_2);
    c.push("robot-margin", "r_safe > 2 r_r", 2.0 * r, p.safe_robot, p.safe_robot > 2.0 * r);

    c.below("coverage-target", "sqrt(rs_g^2 + r^2 - 2 r rs_g cos phi) < beta_g", beta_g, law_of_cosines(p.safe_target, r, phi));
    c.below("coverage-robot", "sqrt(rs_r^2 + r^2 - 2 r rs_r cos phi) < beta_r", beta_r, law_of_cosines(p.safe_robot, r, phi));
    c.below("coverage-boundary", "rs_e - r cos phi < beta_e", beta_e, p.safe_boundary - r * phi.cos());

    let spacing = sc.target_spacing();
    let mut min_spacing = f64::INFINITY;
    let placed: Vec<_> = sc.targets.iter().filter_map(|t| t.position).collect();
    for (a, pa) in placed.iter().enumerate() {
        for pb in &placed[a + 1..] {
            min_spacing = min_spacing.min(pa.distance(*pb));
        }
    }
    if min_spacing.is_finite() {
        c.push("target-spacing", "||c_g - c_g'|| > 2 beta_g + 2 r_r", spacing, min_spacing, min_spacing > spacing);
    }
    let margin = sc.target_margin();
    let min_margin = placed.iter().map(|q| sc.environment.boundary_distance(*q)).fold(f64::INFINITY, f64::min);
    if min_margin.is_finite() {
        c.at_least("target-boundary-margin", "dist(c_g, boundary) >= r_encap + rs_e + d_r", margin, min_margin);
    }
    let room = match sc.environment {
        crate::environment::Environment::Rectangle { width, height } => 0.5 * width.min(height),
        crate::environment::Environment::Disk { radius } => radius,
    };
    c.below("environment-room", "r_encap + rs_e + d_r < inradius", room, margin);

    match max_robot_step(p.safe_robot, r, phi) {
        Ok(b) => {
            c.below("robot-step", "d_r < (rs_r + r cos phi)/2 - sqrt(rs_r^2 + r^2 - 2 r rs_r cos phi)/2", b.value, p.max_step);
        }
        Err(e) => c.failed("robot-step", "deadlock bound", e.to_string()),
    }
    match beta_r_interval(p.safe_robot, r, phi, p.max_step) {
        Ok((lo, hi)) => {
            c.push("beta-r-lower", "sqrt(rs_r^2 + r^2 - 2 r rs_r cos phi) + 2 d_r < beta_r", lo, beta_r, beta_r > lo);
            c.below("beta-r-upper", "beta_r < rs_r + r cos phi", hi, beta_r);
        }
        Err(e) => c.failed("beta-r-interval", "influence interval", e.to_string()),
    }

    let max_dg = sc.targets.iter().map(|t| t.max_step).fold(0.0, f64::max);
    c.at_least("inner-vs-target-step", "Or_in >= rs_g + d_g", p.safe_target + max_dg, inner);
    c.at_least("inner-vs-steps", "Or_in >= rs_g + max(d_g, d_r)", p.safe_target + max_dg.max(p.max_step), inner);
    let min_encap = min_encap_radius(inner, r, phi, p.max_step);
    c.at_least("encap-radius", "r_encap >= d_r + r + sqrt(Or_in^2 + r^2 - 2 r Or_in cos phi)", min_encap, sc.encap_radius);
    c.push("orbit-order", "Or_in_eff < r_encap", sc.encap_radius, sc.orbits.inner0, sc.orbits.inner0 < sc.encap_radius);
    match max_ring_robots(beta_r, r, sc.encap_radius) {
        Ok(n0) => {
            let ck = c.at_most("ring-capacity", "n_g <= 2 pi / acos(1 - (beta_r + r)^2 / (2 r_encap^2))", n0.real, sc.required as f64);
            if !ck.pass {
                ck.note = Some("more robots required than fit in the ring: expect a dynamic equilibrium around the target".into());
            }
        }
        Err(e) => c.failed("ring-capacity", "ring capacity", e.to_string()),
    }
    c.below("orbit-width", "w < beta_r", beta_r, sc.orbits.width);

    let mut alphas = Vec::new();
    for (j, t) in sc.targets.iter().enumerate() {
        c.at_least(format!("target{j}-escape-radius"), "r_escape >= rs_g + d_g", p.safe_target + t.max_step, t.escape_radius);
        let alpha = match alpha_angle(beta_r, r, t.escape_radius) {
            Ok(a) => a,
            Err(e) => {
                c.failed(format!("target{j}-alpha"), "beta_r + r <= 2 r_escape", e.to_string());
                alphas.push(f64::NAN);
                continue;
            }
        };
        alphas.push(alpha);
        let lam_r = p.max_step;
        match &t.motion {
            MotionModel::Random => match lambda_random(sc.robot_count, beta_r, r, inner) {
                Ok(l) => {
                    c.at_most(format!("target{j}-lambda"), "d_g <= d_r / (n - n0~ + 1)", l * lam_r, t.max_step);
                }
                Err(e) => c.failed(format!("target{j}-lambda"), "random-target ratio", e.to_string()),
            },
            MotionModel::RandomEscape => {
                let l = lambda_escape(phi, alpha).lambda;
                c.at_most(
                    format!("target{j}-lambda"),
                    "d_g <= min(pi/2, alpha/sin(pi-alpha)) (sin phi/phi) cos phi d_r",
                    l * lam_r,
                    t.max_step,
                );
            }
            MotionModel::PatternEscape { pattern } => {
                let l = lambda_pattern(phi, alpha);
                c.at_most(
                    format!("target{j}-lambda"),
                    "d_g <= min(pi/2, alpha/sin(pi-alpha)) (sin phi/phi) cos phi d_r",
                    l.escape * lam_r,
                    t.max_step,
                );
                c.below(format!("target{j}-cruise"), "cruise < (sin phi/phi) cos phi d_r", l.cruise * lam_r, pattern.cruise_step());
            }
        }
    }
    let pass = c.0.iter().all(|k| k.pass);
    FeasibilityReport { checks: c.0, pass, inferred_alpha: alphas }
}

/// Resolve and validate; with `strict`, any failed check is an error.
pub fn validate_config(config: &Config, strict: bool) -> Result<FeasibilityReport> {
    let sc = config.resolve()?;
    let report = validate_scenario(&sc);
    if strict && !report.pass {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(EncapError::Infeasibility(names.join(", ")));
    }
    Ok(report)
}

/// Every closed-form bound for a configuration, for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsTable {
    pub sensors: usize,
    pub half_angle: f64,
    pub robot_step_bound: f64,
    pub degenerate_margin: bool,
    pub beta_r_interval: Option<(f64, f64)>,
    pub min_encap_radius: f64,
    pub ring_capacity: Option<RingCount<f64>>,
    pub random_capacity_inner: Option<RingCount<f64>>,
    pub lambda_random: Option<f64>,
    pub cone_efficiency: f64,
    pub targets: Vec<TargetBounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetBounds {
    pub escape_radius: f64,
    pub alpha: Option<f64>,
    pub lambda_escape: Option<LambdaEscape<f64>>,
    pub lambda_pattern: Option<LambdaPattern<f64>>,
}

pub fn bounds_table(sc: &Scenario) -> BoundsTable {
    let p = &sc.params;
    let phi = p.sensors.half_angle();
    let step = max_robot_step(p.safe_robot, p.radius, phi).ok();
    let beta_r = sc.robot_profile.influence;
    BoundsTable {
        sensors: p.sensors.count(),
        half_angle: phi,
        robot_step_bound: step.map_or(f64::NAN, |s| s.value),
        degenerate_margin: step.is_some_and(|s| s.degenerate_margin),
        beta_r_interval: beta_r_interval(p.safe_robot, p.radius, phi, p.max_step).ok(),
        min_encap_radius: min_encap_radius(sc.nominal_inner, p.radius, phi, p.max_step),
        ring_capacity: max_ring_robots(beta_r, p.radius, sc.encap_radius).ok(),
        random_capacity_inner: max_ring_robots(beta_r, p.radius, sc.nominal_inner).ok(),
        lambda_random: lambda_random(sc.robot_count, beta_r, p.radius, sc.nominal_inner).ok(),
        cone_efficiency: cone_efficiency(phi),
        targets: sc
            .targets
            .iter()
            .map(|t| {
                let alpha = alpha_angle(beta_r, p.radius, t.escape_radius).ok();
                TargetBounds {
                    escape_radius: t.escape_radius,
                    alpha,
                    lambda_escape: alpha.map(|a| lambda_escape(phi, a)),
                    lambda_pattern: alpha.map(|a| lambda_pattern(phi, a)),
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn deadlock_bound_values() {
        let b = max_robot_step(3.0f64, 1.0, PI / 4.0).unwrap();
        assert!((b.value - 0.6538285).abs() < 1e-6, "{}", b.value);
        assert!(!b.degenerate_margin);
        let lim = max_robot_step(3.0f64, 1.0, 1e-7).unwrap();
        assert!((lim.value - 1.0).abs() < 1e-9);
        assert!(max_robot_step(2.0f64, 1.0, PI / 6.0).unwrap().degenerate_margin);
        assert!(max_robot_step(3.0f64, 1.0, PI / 2.0).is_err());
    }

    #[test]
    fn influence_interval() {
        let phi = PI / 7.0;
        let b = max_robot_step(3.0f64, 1.0, phi).unwrap().value;
        let (lo, hi) = beta_r_interval(3.0f64, 1.0, phi, 0.99 * b).unwrap();
        assert!(lo < hi);
        assert!(beta_r_interval(3.0f64, 1.0, phi, 1.01 * b).is_err());
        let (lo, hi) = beta_r_interval(3.0f64, 1.0, 1e-8, 0.25).unwrap();
        assert!((lo - 2.5).abs() < 1e-9 && (hi - 4.0).abs() < 1e-9);
    }

    #[test]
    fn encap_radius_values() {
        let v = min_encap_radius(5.0f64, 1.0, PI / 6.0, 0.0);
        assert!((v - (1.0 + 4.1641021)).abs() < 1e-6, "{v}");
        assert!((min_encap_radius(5.0f64, 0.0, PI / 6.0, 0.3) - 5.3).abs() < 1e-12);
        assert!((min_encap_radius(5.0f64, 1.0, 1e-8, 0.3) - 5.3).abs() < 1e-9);
    }

    #[test]
    fn ring_counts() {
        assert_eq!(max_ring_robots(4.0f64, 1.0, 5.0).unwrap().floor, 6);
        let sq = max_ring_robots(2f64.sqrt() * 5.0 - 1.0, 1.0, 5.0).unwrap();
        assert_eq!(sq.floor, 4);
        let r = max_ring_robots(2.5f64, 0.5, 5.0).unwrap();
        assert_eq!(r.floor, 10);
        assert!((r.real - 10.310694).abs() < 1e-5);
        assert!(max_ring_robots(20.0f64, 1.0, 5.0).is_err());
    }

    #[test]
    fn alpha_values() {
        assert!((alpha_angle(3.0f64, 1.0, 4.0).unwrap() - PI / 3.0).abs() < 1e-12);
        assert!((alpha_angle(2f64.sqrt() * 4.0 - 1.0, 1.0, 4.0).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!((alpha_angle(2.5f64, 0.5, 4.0).unwrap() - 0.7687935).abs() < 1e-6);
        assert!(alpha_angle(10.0f64, 1.0, 4.0).is_err());
    }

    #[test]
    fn lambda_values() {
        let l = lambda_escape(PI / 6.0, PI / 2.0);
        assert!((l.lambda - 1.2990381).abs() < 1e-6, "{}", l.lambda);
        assert_eq!(lambda_escape(PI / 2.0, 1.0).lambda, 0.0);
        let c = lambda_pattern(PI / 7.0, 1.0);
        assert!((c.cruise - 0.8710264).abs() < 1e-6);
        assert!((lambda_pattern(1e-9f64, 1.0).cruise - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_random_values() {
        // geometry with ñ₀ = 6: chord equal to the inner radius
        assert!((lambda_random(10, 4.0f64, 1.0, 5.0).unwrap() - 0.2).abs() < 1e-12);
        assert!((lambda_random(6, 4.0f64, 1.0, 5.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(lambda_random(1_000_000, 4.0f64, 1.0, 5.0).unwrap() < 1e-5);
    }

    #[test]
    fn generic_over_f32() {
        let b = max_robot_step(3.0f32, 1.0, std::f32::consts::PI / 4.0).unwrap();
        assert!((b.value - 0.65383).abs() < 1e-4);
    }
}
