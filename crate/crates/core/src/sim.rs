//! Synchronous fixed-timestep simulation: placement, the per-step
//! snapshot/decide/apply cycle, ground-truth safety and encapsulation
//! oracles, and trace emission.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, Layout, Scenario};
use crate::controller::{control_step, Behavior, ControlContext, ControlOutput, OrbitPosition};
use crate::environment::Environment;
use crate::error::{EncapError, Result};
use crate::geometry::{wrap_two_pi, Vec2};
use crate::signal::{sense, LineResponse, SensingScene};
use crate::target::{target_step, TargetConstraints, TargetMove, TargetState};
use crate::theory::{DriftAccumulator, DriftStats};

pub const TRACE_SCHEMA: u32 = 1;
pub const SUMMARY_SCHEMA: u32 = 1;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;
const RECORDED_VIOLATIONS: usize = 32;

const STREAM_PLACEMENT: u64 = 0;
const STREAM_ROBOT: u64 = 1;
const STREAM_TARGET: u64 = 2;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable per-entity stream seed.
pub fn stream_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ stream) ^ index)
}

fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, stream, index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub center: Vec2<f64>,
    pub heading: f64,
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureEvent {
    pub target: usize,
    pub t: u64,
    pub frozen: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub t: u64,
    pub robots: Vec<RobotState>,
    pub targets: Vec<TargetState<f64>>,
    pub robot_rngs: Vec<ChaCha8Rng>,
    pub target_rngs: Vec<ChaCha8Rng>,
    pub captures: Vec<CaptureEvent>,
}

impl WorldState {
    pub fn all_captured(&self) -> bool {
        self.targets.iter().all(|t| t.captured)
    }

    pub fn robot_centers(&self) -> Vec<Vec2<f64>> {
        self.robots.iter().map(|r| r.center).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    RobotRobot { a: usize, b: usize, distance: f64 },
    RobotTarget { robot: usize, target: usize, distance: f64 },
    RobotBoundary { robot: usize, distance: f64 },
}

/// Smallest ground-truth distances after a step; `None` when no pair exists.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Margins {
    pub robot_robot: Option<f64>,
    pub robot_target: Option<f64>,
    pub robot_boundary: Option<f64>,
}

impl Margins {
    fn merge(&mut self, o: &Margins) {
        fn m(a: &mut Option<f64>, b: Option<f64>) {
            if let Some(b) = b {
                *a = Some(a.map_or(b, |a| a.min(b)));
            }
        }
        m(&mut self.robot_robot, o.robot_robot);
        m(&mut self.robot_target, o.robot_target);
        m(&mut self.robot_boundary, o.robot_boundary);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SafetyReport {
    pub violations: Vec<Violation>,
    pub margins: Margins,
}

/// Safety distances checked by [`safety_scan`].
#[derive(Debug, Clone, Copy)]
pub struct SafetyLimits<'a> {
    pub safe_robot: f64,
    pub safe_target: f64,
    pub safe_boundary: f64,
    pub environment: &'a Environment<f64>,
}

/// Ground-truth safety over robot centres (with frozen flags) and target
/// centres (with captured flags). Distances exactly at a limit are safe.
/// Robot pairs are found with a sort-and-sweep along x.
pub fn safety_scan(robots: &[(Vec2<f64>, bool)], targets: &[(Vec2<f64>, bool)], limits: &SafetyLimits<'_>) -> SafetyReport {
    let mut rep = SafetyReport::default();
    let mut order: Vec<usize> = (0..robots.len()).collect();
    order.sort_by(|&a, &b| robots[a].0.x.total_cmp(&robots[b].0.x).then(a.cmp(&b)));
    let mut best = f64::INFINITY;
    for (oi, &i) in order.iter().enumerate() {
        let pi = robots[i].0;
        for &j in &order[oi + 1..] {
            let pj = robots[j].0;
            if pj.x - pi.x >= limits.safe_robot.max(best) {
                break;
            }
            let d = pi.distance(pj);
            best = best.min(d);
            if d < limits.safe_robot {
                rep.violations.push(Violation::RobotRobot { a: i.min(j), b: i.max(j), distance: d });
            }
        }
    }
    if robots.len() > 1 {
        rep.margins.robot_robot = Some(best);
    }
    for (i, &(p, frozen)) in robots.iter().enumerate() {
        let b = limits.environment.boundary_distance(p);
        rep.margins.robot_boundary = Some(rep.margins.robot_boundary.map_or(b, |m: f64| m.min(b)));
        if b < limits.safe_boundary {
            rep.violations.push(Violation::RobotBoundary { robot: i, distance: b });
        }
        for (j, &(q, captured)) in targets.iter().enumerate() {
            if captured && frozen {
                continue;
            }
            let d = p.distance(q);
            if !captured {
                rep.margins.robot_target = Some(rep.margins.robot_target.map_or(d, |m: f64| m.min(d)));
            }
            if d < limits.safe_target {
                rep.violations.push(Violation::RobotTarget { robot: i, target: j, distance: d });
            }
        }
    }
    rep.violations.sort_by_key(violation_key);
    rep
}

fn violation_key(v: &Violation) -> (u8, usize, usize) {
    match *v {
        Violation::RobotRobot { a, b, .. } => (0, a, b),
        Violation::RobotTarget { robot, target, .. } => (1, robot, target),
        Violation::RobotBoundary { robot, .. } => (2, robot, 0),
    }
}

pub fn check_safety(state: &WorldState, scenario: &Scenario) -> SafetyReport {
    let robots: Vec<(Vec2<f64>, bool)> = state.robots.iter().map(|r| (r.center, r.frozen)).collect();
    let targets: Vec<(Vec2<f64>, bool)> = state.targets.iter().map(|t| (t.center, t.captured)).collect();
    safety_scan(&robots, &targets, &limits(scenario))
}

fn limits(scenario: &Scenario) -> SafetyLimits<'_> {
    SafetyLimits {
        safe_robot: scenario.params.safe_robot,
        safe_target: scenario.params.safe_target,
        safe_boundary: scenario.params.safe_boundary,
        environment: &scenario.environment,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncapsulationStatus {
    /// Robots with `safe_target < d ≤ encap_radius`.
    pub members: Vec<usize>,
    pub spacing_ok: bool,
    pub encapsulated: bool,
}

impl EncapsulationStatus {
    pub fn count(&self) -> usize {
        self.members.len()
    }
}

/// Ring occupancy around `center`; encapsulated when at least `required`
/// robots occupy the ring and all of them are pairwise `safe_robot` apart.
pub fn encapsulation_status(
    robots: &[Vec2<f64>],
    center: Vec2<f64>,
    safe_target: f64,
    encap_radius: f64,
    safe_robot: f64,
    required: usize,
) -> EncapsulationStatus {
    let members: Vec<usize> = robots
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let d = p.distance(center);
            d > safe_target && d <= encap_radius
        })
        .map(|(i, _)| i)
        .collect();
    let spacing_ok =
        members.iter().enumerate().all(|(a, &i)| members[a + 1..].iter().all(|&j| robots[i].distance(robots[j]) >= safe_robot));
    EncapsulationStatus { encapsulated: spacing_ok && members.len() >= required, members, spacing_ok }
}

pub fn check_encapsulation(state: &WorldState, target: usize, scenario: &Scenario) -> EncapsulationStatus {
    encapsulation_status(
        &state.robot_centers(),
        state.targets[target].center,
        scenario.params.safe_target,
        scenario.encap_radius,
        scenario.params.safe_robot,
        scenario.required,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub position: Vec2<f64>,
    pub heading: f64,
    pub behavior: Behavior,
    pub turn: f64,
    pub step: f64,
    pub range: Option<f64>,
    pub orbit: Option<OrbitPosition>,
}

impl RobotRecord {
    /// Position after the recorded move.
    pub fn next_position(&self) -> Vec2<f64> {
        self.position + Vec2::from_angle(wrap_two_pi(self.heading + self.turn)) * self.step
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub position: Vec2<f64>,
    pub heading: f64,
    pub turn: f64,
    pub step: f64,
    pub escaping: bool,
    pub captured: bool,
}

impl TargetRecord {
    pub fn next_position(&self) -> Vec2<f64> {
        self.position + Vec2::from_angle(wrap_two_pi(self.heading + self.turn)) * self.step
    }
}

/// State at the start of timestep `t`, the moves chosen from it, and the
/// ground-truth margins after those moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub schema: u32,
    pub t: u64,
    pub robots: Vec<RobotRecord>,
    pub targets: Vec<TargetRecord>,
    pub margins: Margins,
    pub violations: Vec<Violation>,
    pub captures: Vec<usize>,
}

/// Order in which robot decisions are evaluated inside a step. Every
/// schedule produces the same trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    #[default]
    Sequential,
    Reversed,
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationEvent {
    pub t: u64,
    pub violation: Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: u32,
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub t_max: u64,
    pub steps: u64,
    /// Per target: capture timestep, or `None` on timeout.
    pub captured_at: Vec<Option<u64>>,
    pub all_captured: bool,
    /// Step count until the last target was captured.
    pub encapsulation_time: Option<u64>,
    pub violations: u64,
    pub first_violations: Vec<ViolationEvent>,
    pub halted: bool,
    pub behavior_histogram: BTreeMap<String, u64>,
    pub min_margins: Margins,
    pub drift: DriftStats,
}

pub struct Simulator {
    scenario: Scenario,
    boundary_response: Arc<LineResponse<f64>>,
    config_hash: String,
    schedule: Schedule,
}

impl Simulator {
    pub fn new(config: &Config) -> Result<Self> {
        let scenario = config.resolve()?;
        let response = Arc::new(LineResponse::new(scenario.boundary_profile));
        Ok(Self { scenario, boundary_response: response, config_hash: config.hash(), schedule: Schedule::default() })
    }

    /// Reuse a boundary response table built for an identical profile.
    pub fn with_boundary_response(mut self, response: Arc<LineResponse<f64>>) -> Self {
        if response.profile() == &self.scenario.boundary_profile {
            self.boundary_response = response;
        }
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn boundary_response(&self) -> Arc<LineResponse<f64>> {
        Arc::clone(&self.boundary_response)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn init_world(&self, seed: u64) -> Result<WorldState> {
        init_world(&self.scenario, seed)
    }

    fn decide(&self, state: &WorldState, rngs: &mut [ChaCha8Rng]) -> Vec<ControlOutput<f64>> {
        let sc = &self.scenario;
        let centers = state.robot_centers();
        let live: Vec<Vec2<f64>> = state.targets.iter().filter(|t| !t.captured).map(|t| t.center).collect();
        let scene = SensingScene {
            robots: &centers,
            targets: &live,
            environment: &sc.environment,
            robot_profile: &sc.robot_profile,
            target_profile: &sc.target_profile,
            boundary_profile: &sc.boundary_profile,
        };
        let ctx = ControlContext {
            params: &sc.params,
            orbits: &sc.orbits,
            robot_profile: &sc.robot_profile,
            target_profile: &sc.target_profile,
            boundary_response: &self.boundary_response,
            noiseless: !sc.noise.is_active(),
            guard_gain: sc.guard_gain,
        };
        let eval = |r: &RobotState, rng: &mut ChaCha8Rng| {
            if r.frozen {
                return ControlOutput { turn: 0.0, step: 0.0, behavior: Behavior::Frozen, target_range: None, orbit: None };
            }
            let readings = sense(r.center, r.heading, &sc.params.sensors, &scene, &sc.noise, rng);
            control_step(&readings, &ctx, rng)
        };
        match self.schedule {
            Schedule::Sequential => state.robots.iter().zip(rngs.iter_mut()).map(|(r, g)| eval(r, g)).collect(),
            Schedule::Reversed => {
                let mut out: Vec<_> = state.robots.iter().zip(rngs.iter_mut()).rev().map(|(r, g)| eval(r, g)).collect();
                out.reverse();
                out
            }
            Schedule::Parallel => state.robots.par_iter().zip(rngs.par_iter_mut()).map(|(r, g)| eval(r, g)).collect(),
        }
    }

    /// Advance one timestep and return its trace record.
    pub fn step(&self, state: &mut WorldState) -> TraceRecord {
        let sc = &self.scenario;
        let mut robot_rngs = std::mem::take(&mut state.robot_rngs);
        let decisions = self.decide(state, &mut robot_rngs);
        state.robot_rngs = robot_rngs;

        let centers = state.robot_centers();
        let target_centers: Vec<Vec2<f64>> = state.targets.iter().map(|t| t.center).collect();
        let mut target_moves: Vec<TargetMove<f64>> = Vec::with_capacity(state.targets.len());
        for (j, t) in state.targets.iter().enumerate() {
            let others: Vec<Vec2<f64>> = target_centers.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, c)| *c).collect();
            let cons = TargetConstraints {
                environment: &sc.environment,
                boundary_margin: sc.target_margin(),
                others: &others,
                spacing: sc.target_spacing(),
            };
            target_moves.push(target_step(t, &centers, &cons, &mut state.target_rngs[j]));
        }

        let robots_rec: Vec<RobotRecord> = state
            .robots
            .iter()
            .zip(&decisions)
            .map(|(r, d)| RobotRecord {
                position: r.center,
                heading: r.heading,
                behavior: d.behavior,
                turn: d.turn,
                step: d.step,
                range: d.target_range,
                orbit: d.orbit,
            })
            .collect();
        let targets_rec: Vec<TargetRecord> = state
            .targets
            .iter()
            .zip(&target_moves)
            .map(|(t, m)| TargetRecord {
                position: t.center,
                heading: t.heading,
                turn: m.turn,
                step: m.step,
                escaping: m.escaping,
                captured: t.captured,
            })
            .collect();

        for (r, rec) in state.robots.iter_mut().zip(&robots_rec) {
            if !r.frozen {
                r.heading = wrap_two_pi(r.heading + rec.turn);
                r.center = rec.next_position();
            }
        }
        for (t, m) in state.targets.iter_mut().zip(&target_moves) {
            t.apply(m);
        }

        let mut report = check_safety(state, sc);
        if sc.sim.midpoint_check {
            let mid: Vec<(Vec2<f64>, bool)> =
                robots_rec.iter().zip(&state.robots).map(|(rec, r)| ((rec.position + r.center) * 0.5, r.frozen)).collect();
            let tmid: Vec<(Vec2<f64>, bool)> =
                targets_rec.iter().zip(&state.targets).map(|(rec, t)| ((rec.position + t.center) * 0.5, t.captured)).collect();
            let extra = safety_scan(&mid, &tmid, &limits(sc));
            report.violations.extend(extra.violations);
        }

        let mut captures = Vec::new();
        let t_now = state.t;
        for j in 0..state.targets.len() {
            if state.targets[j].captured {
                continue;
            }
            let status = check_encapsulation(state, j, sc);
            if status.encapsulated && state.targets[j].on_capture() {
                for &i in &status.members {
                    state.robots[i].frozen = true;
                }
                state.captures.push(CaptureEvent { target: j, t: t_now, frozen: status.members });
                captures.push(j);
            }
        }
        state.t += 1;
        TraceRecord {
            schema: TRACE_SCHEMA,
            t: t_now,
            robots: robots_rec,
            targets: targets_rec,
            margins: report.margins,
            violations: report.violations,
            captures,
        }
    }

    /// Run to capture of every target or `t_max` steps, handing each
    /// record to `sink`.
    pub fn run_with<F: FnMut(&TraceRecord)>(&self, seed: u64, t_max: u64, mut sink: F) -> Result<RunSummary> {
        let mut state = self.init_world(seed)?;
        let mut summary = RunSummary {
            schema: SUMMARY_SCHEMA,
            name: self.scenario.name.clone(),
            config_hash: self.config_hash.clone(),
            seed,
            t_max,
            steps: 0,
            captured_at: vec![None; state.targets.len()],
            all_captured: false,
            encapsulation_time: None,
            violations: 0,
            first_violations: Vec::new(),
            halted: false,
            behavior_histogram: Behavior::ALL.iter().map(|b| (b.label().to_string(), 0)).collect(),
            min_margins: Margins::default(),
            drift: DriftStats::default(),
        };
        let mut drift = DriftAccumulator::default();
        while state.t < t_max && !state.all_captured() {
            let rec = self.step(&mut state);
            for r in &rec.robots {
                *summary.behavior_histogram.entry(r.behavior.label().to_string()).or_insert(0) += 1;
            }
            for &j in &rec.captures {
                summary.captured_at[j] = Some(rec.t);
            }
            summary.violations += rec.violations.len() as u64;
            for v in &rec.violations {
                if summary.first_violations.len() < RECORDED_VIOLATIONS {
                    summary.first_violations.push(ViolationEvent { t: rec.t, violation: *v });
                }
            }
            summary.min_margins.merge(&rec.margins);
            drift.push(&rec);
            sink(&rec);
            summary.steps += 1;
            if !rec.violations.is_empty() && self.scenario.sim.halt_on_violation {
                summary.halted = true;
                break;
            }
        }
        summary.all_captured = !state.targets.is_empty() && state.all_captured();
        if summary.all_captured {
            summary.encapsulation_time = summary.captured_at.iter().map(|c| c.map(|t| t + 1)).max().flatten();
        }
        summary.drift = drift.finish();
        Ok(summary)
    }

    pub fn run(&self, seed: u64, t_max: u64) -> Result<(Vec<TraceRecord>, RunSummary)> {
        let mut trace = Vec::new();
        let summary = self.run_with(seed, t_max, |r| trace.push(r.clone()))?;
        Ok((trace, summary))
    }
}

fn bounding_box(env: &Environment<f64>) -> (Vec2<f64>, Vec2<f64>) {
    match *env {
        Environment::Rectangle { width, height } => (Vec2::new(0.0, 0.0), Vec2::new(width, height)),
        Environment::Disk { radius } => (Vec2::new(-radius, -radius), Vec2::new(radius, radius)),
    }
}

fn uniform_in_box<R: Rng>(rng: &mut R, lo: Vec2<f64>, hi: Vec2<f64>) -> Vec2<f64> {
    Vec2::new(lo.x + rng.random::<f64>() * (hi.x - lo.x), lo.y + rng.random::<f64>() * (hi.y - lo.y))
}

/// Place targets and robots by rejection sampling and derive per-entity
/// random streams from `seed`.
pub fn init_world(sc: &Scenario, seed: u64) -> Result<WorldState> {
    let mut rng = stream_rng(sc.init.placement_seed.unwrap_or(seed), STREAM_PLACEMENT, 0);
    let (lo, hi) = bounding_box(&sc.environment);
    let margin = sc.target_margin();
    let spacing = sc.target_spacing();
    let mut attempts = 0usize;

    let mut targets: Vec<TargetState<f64>> = Vec::with_capacity(sc.targets.len());
    for spec in &sc.targets {
        let center = match spec.position {
            Some(p) => p,
            None => loop {
                attempts += 1;
                if attempts > MAX_PLACEMENT_ATTEMPTS {
                    return Err(EncapError::OverDense { attempts: MAX_PLACEMENT_ATTEMPTS, what: "targets".into() });
                }
                let p = uniform_in_box(&mut rng, lo, hi);
                if sc.environment.boundary_distance(p) >= margin && targets.iter().all(|t| t.center.distance(p) > spacing) {
                    break p;
                }
            },
        };
        let heading = spec.heading.unwrap_or_else(|| rng.random::<f64>() * std::f64::consts::TAU);
        targets.push(TargetState {
            center,
            heading,
            radius: spec.radius,
            max_step: spec.max_step,
            escape_radius: spec.escape_radius,
            captured: false,
            motion: spec.motion.clone(),
            waypoint: 0,
        });
    }

    let p = &sc.params;
    let sector = match sc.init.layout {
        Layout::Sector if sc.robot_count > 0 => {
            let anchor = targets.first().ok_or_else(|| EncapError::Config("sector layout needs at least one target".into()))?.center;
            let bearing = sc.init.bearing.unwrap_or_else(|| rng.random::<f64>() * std::f64::consts::TAU);
            Some((anchor, bearing))
        }
        _ => None,
    };
    let mut robots: Vec<RobotState> = Vec::with_capacity(sc.robot_count);
    while robots.len() < sc.robot_count {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(EncapError::OverDense { attempts: MAX_PLACEMENT_ATTEMPTS, what: format!("{} robots", sc.robot_count) });
        }
        let c = match sector {
            Some((anchor, bearing)) => {
                let (r0, r1) = (sc.init.min_range, sc.init.max_range);
                // area-uniform radius inside the annular sector
                let r = (r0 * r0 + rng.random::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
                let a = bearing + (rng.random::<f64>() - 0.5) * sc.init.sector_width;
                anchor + Vec2::polar(r, a)
            }
            None => uniform_in_box(&mut rng, lo, hi),
        };
        let ok = sc.environment.boundary_distance(c) >= p.safe_boundary
            && robots.iter().all(|r| r.center.distance(c) >= p.safe_robot)
            && targets.iter().all(|t| t.center.distance(c) > p.safe_target.max(t.escape_radius));
        if ok {
            robots.push(RobotState { center: c, heading: rng.random::<f64>() * std::f64::consts::TAU, frozen: false });
        }
    }

    Ok(WorldState {
        t: 0,
        robot_rngs: (0..robots.len() as u64).map(|i| stream_rng(seed, STREAM_ROBOT, i)).collect(),
        target_rngs: (0..targets.len() as u64).map(|j| stream_rng(seed, STREAM_TARGET, j)).collect(),
        robots,
        targets,
        captures: Vec::new(),
    })
}

/// NDJSON line for a trace record.
pub fn trace_line(rec: &TraceRecord) -> String {
    serde_json::to_string(rec).expect("trace record serialises")
}
