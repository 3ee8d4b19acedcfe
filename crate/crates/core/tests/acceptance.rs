//! One pass/fail line per acceptance criterion.
//!
//! Run a subset with `cargo test --release --test acceptance -- 3 6`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use encap::config::Config;
use encap::controller::NeighborBounds;
use encap::controller::{control_step, ControlContext, OrbitSet, RobotParams};
use encap::environment::Environment;
use encap::experiment::{compare_baseline, run_batch, BatchReport};
use encap::geometry::Vec2;
use encap::signal::{
    argmax_reading, sense, virtual_source_distance_clamped, LineResponse, NoiseSpec, SensingScene, SensorArray, SignalKind, SignalProfile,
};
use encap::sim::{safety_scan, trace_line, Margins, SafetyLimits, Schedule, Simulator, Violation};
use encap::theory::{alpha_angle, beta_r_interval, lambda_escape, max_robot_step, symmetric_half_angle, validate_config, DriftAccumulator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 50;
const T_MAX: u64 = 4000;
const SIGMAS: [f64; 3] = [0.0, 0.25, 0.5];
const PATTERN: &str = r#"{ model = "pattern_escape", pattern = { kind = "constant_velocity", cruise_step = { lambda_fraction = 0.9 } } }"#;
const MODELS: [(&str, &str); 3] =
    [("random", r#"{ model = "random" }"#), ("random_escape", r#"{ model = "random_escape" }"#), ("pattern_escape", PATTERN)];

const ENCAP_RATE_MIN: f64 = 0.9;
const NOISY_SIGMA: f64 = 0.55;
const NOISY_RATE: (f64, f64) = (0.25, 0.55);
const LAMBDA_LIMIT_TOL: f64 = 1e-3;
const LAMBDA_LIMIT_P: usize = 10_000;
const MONOTONE_TOL: f64 = 1e-12;
const DRIFT_SAMPLES: u64 = 10_000;
const TANGENT_SAMPLES: u64 = 1_000;
const SIGMA_BAND: f64 = 3.0;
const MC_DRAWS: usize = 1_000_000;
const HEAD_ON_SEEDS: u64 = 100;
const HEAD_ON_STEPS: usize = 500;
const BASELINE_SENSORS: [usize; 4] = [4, 6, 8, 10];
const VIRTUAL_CASES: usize = 100_000;
const AVOID_CASES: usize = 10_000;
const ADVERSARY_MOVES: usize = 1_000;
const FUZZ_STATES: usize = 1_000_000;
const GEOMETRY_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

#[derive(Default)]
struct Cache {
    batches: BTreeMap<(String, u64), BatchReport>,
}

fn tv(text: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {text}")).expect("toml literal")["v"].clone()
}

fn reference(model: &str, sigma: f64) -> Config {
    Config::load("preset:reference")
        .and_then(|c| c.with_override("targets.0.motion", &tv(model)))
        .and_then(|c| c.with_override("noise.sigma", &toml::Value::Float(sigma)))
        .expect("reference overrides")
}

fn seeds() -> Vec<u64> {
    (0..SEEDS).collect()
}

impl Cache {
    fn batch(&mut self, name: &str, model: &str, sigma: f64) -> Result<&BatchReport, String> {
        let key = (name.to_string(), sigma.to_bits());
        if !self.batches.contains_key(&key) {
            let cfg = reference(model, sigma);
            validate_config(&cfg, true).map_err(|e| format!("{name} sigma {sigma}: {e}"))?;
            let report = run_batch(&cfg, &seeds(), T_MAX).map_err(|e| e.to_string())?;
            self.batches.insert(key.clone(), report);
        }
        Ok(&self.batches[&key])
    }
}

fn criterion_1(cache: &mut Cache) -> Outcome {
    let mut pass = true;
    let mut cells = Vec::new();
    for &sigma in &SIGMAS {
        for (name, model) in MODELS {
            match cache.batch(name, model, sigma) {
                Ok(r) => {
                    let bad = r.summaries.iter().filter(|s| s.violations > 0).count();
                    let v = r.violations();
                    if v > 0 || !r.failures.is_empty() || r.summaries.len() as u64 != SEEDS {
                        pass = false;
                    }
                    cells.push(format!("{name}@{sigma}: {v} violations in {bad} runs"));
                }
                Err(e) => {
                    pass = false;
                    cells.push(e);
                }
            }
        }
    }
    outcome(pass, cells.join("; "))
}

fn criterion_2(cache: &mut Cache) -> Outcome {
    let r = match cache.batch("random_escape", MODELS[1].1, 0.0) {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let ok = r.summaries.iter().filter(|s| s.all_captured).count();
    let bad = r.summaries.iter().filter(|s| !s.all_captured && s.violations > 0).count();
    let rate = ok as f64 / SEEDS as f64;
    let pass = rate >= ENCAP_RATE_MIN && bad == 0 && r.failures.is_empty();
    outcome(pass, format!("{ok}/{SEEDS} encapsulated within {T_MAX} steps, {bad} failures with violations, median {:?}", r.stats().median))
}

fn criterion_3(cache: &mut Cache) -> Outcome {
    let clean = match cache.batch("pattern_escape", PATTERN, 0.0) {
        Ok(r) => r.stats().success_probability,
        Err(e) => return outcome(false, e),
    };
    let noisy = match cache.batch("pattern_escape", PATTERN, NOISY_SIGMA) {
        Ok(r) => r.stats().success_probability,
        Err(e) => return outcome(false, e),
    };
    let pass = clean >= ENCAP_RATE_MIN && (NOISY_RATE.0..=NOISY_RATE.1).contains(&noisy);
    outcome(pass, format!("success {clean:.2} at sigma 0, {noisy:.2} at sigma {NOISY_SIGMA}"))
}

fn criterion_4(_: &mut Cache) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for p in [1usize, 2] {
        let phi: f64 = symmetric_half_angle(p);
        for alpha in [0.1, 0.7, PI / 2.0, 2.5] {
            let l = lambda_escape(phi, alpha).lambda;
            if l != 0.0 {
                pass = false;
                notes.push(format!("p={p} alpha={alpha}: {l}"));
            }
        }
    }
    let phi: f64 = symmetric_half_angle(LAMBDA_LIMIT_P);
    let limit = lambda_escape(phi, PI / 2.0).lambda;
    if (limit - PI / 2.0).abs() >= LAMBDA_LIMIT_TOL {
        pass = false;
    }
    notes.push(format!("p={LAMBDA_LIMIT_P}: {limit:.6}"));
    let sc = reference(MODELS[1].1, 0.0).resolve().expect("reference resolves");
    let phi = sc.params.sensors.half_angle();
    let beta_r = sc.robot_profile.influence;
    let grid: Vec<f64> = (0..20).map(|i| 3.2 + 0.2 * i as f64).collect();
    let lambdas: Vec<f64> =
        grid.iter().map(|&e| lambda_escape(phi, alpha_angle(beta_r, sc.params.radius, e).expect("alpha")).lambda).collect();
    let monotone = lambdas.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOL);
    pass &= monotone;
    notes.push(format!("non-increasing over r_escape 3.2..7.0: {monotone} ({:.4}..{:.4})", lambdas[0], lambdas[19]));
    notes.insert(0, "p<3 gives 0".into());
    outcome(pass, notes.join("; "))
}

fn criterion_5(_: &mut Cache) -> Outcome {
    let cfg = Config::load("preset:static").expect("static preset");
    let sim = Simulator::new(&cfg).expect("simulator");
    let mut acc = DriftAccumulator::default();
    let mut seed = 0;
    let mut approach = 0;
    while approach < DRIFT_SAMPLES && seed < 500 {
        let mut local = DriftAccumulator::default();
        if sim
            .run_with(seed, T_MAX, |rec| {
                acc.push(rec);
                local.push(rec);
            })
            .is_err()
        {
            return outcome(false, format!("seed {seed} failed to initialize"));
        }
        approach += local.finish().approach_dv.count;
        seed += 1;
    }
    let stats = acc.finish();
    let dv = stats.approach_dv;
    let tan = stats.by_label.get("orbit-tangent").map(|d| d.tangential).unwrap_or_default();
    let dv_ok = dv.count >= DRIFT_SAMPLES && dv.upper(SIGMA_BAND) < 0.0;
    let tan_ok = tan.count >= TANGENT_SAMPLES && tan.upper(SIGMA_BAND) < 0.0;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (d_r, phi, center) = (0.5, PI / 7.0, 0.9);
    let (mut sx, mut sy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..MC_DRAWS {
        let th = center + phi * (2.0 * rng.random::<f64>() - 1.0);
        let (x, y) = (d_r * th.cos(), d_r * th.sin());
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
    }
    let n = MC_DRAWS as f64;
    let expect = d_r * phi.sin() / phi;
    let within = |s: f64, ss: f64, e: f64| {
        let m = s / n;
        let se = ((ss / n - m * m) * n / (n - 1.0) / n).sqrt();
        ((m - e).abs() <= SIGMA_BAND * se, m, se)
    };
    let (okx, mx, _) = within(sx, sxx, expect * center.cos());
    let (oky, my, _) = within(sy, syy, expect * center.sin());
    outcome(
        dv_ok && tan_ok && okx && oky,
        format!(
            "approach E[dV] = {:.4} +- {:.4} over {} steps; orbit E[u_tan] = {:.4} +- {:.4} over {}; E[u_r] = ({mx:.5}, {my:.5}) vs ({:.5}, {:.5})",
            dv.mean,
            dv.std_err,
            dv.count,
            tan.mean,
            tan.std_err,
            tan.count,
            expect * center.cos(),
            expect * center.sin()
        ),
    )
}

struct HeadOn {
    params: RobotParams<f64>,
    robot: SignalProfile<f64>,
    target: SignalProfile<f64>,
    boundary: SignalProfile<f64>,
    response: LineResponse<f64>,
    env: Environment<f64>,
    orbits: OrbitSet<f64>,
}

#[derive(Debug, PartialEq)]
struct HeadOnRun {
    passed_at: Option<usize>,
    min_distance: f64,
    last: [Vec2<f64>; 2],
}

fn head_on(step_factor: f64, beta: impl Fn(f64, f64) -> f64) -> HeadOn {
    let (p, radius, safe_robot) = (7, 1.0, 3.0);
    let phi: f64 = symmetric_half_angle(p);
    let bound = max_robot_step(safe_robot, radius, phi).expect("bound").value;
    let max_step = bound * step_factor;
    let (lo, hi) = beta_r_interval(safe_robot, radius, phi, bound * 0.99).expect("interval");
    let boundary = SignalProfile::linear(SignalKind::Environment, 3.0);
    HeadOn {
        params: RobotParams {
            radius,
            max_step,
            safe_target: 2.5,
            safe_robot,
            safe_boundary: 1.5,
            sensors: SensorArray::symmetric(p, radius).expect("sensors"),
            baseline_mode: false,
            heading_samples: 33,
            refine_los: true,
        },
        robot: SignalProfile::linear(SignalKind::Robot, beta(lo, hi)),
        target: SignalProfile::linear(SignalKind::Target, 150.0),
        boundary,
        response: LineResponse::new(boundary),
        env: Environment::Rectangle { width: 200.0, height: 200.0 },
        orbits: OrbitSet { inner0: 3.2, outer0: 4.0, width: 2.0 },
    }
}

fn head_on_run(h: &HeadOn, seed: u64, steps: usize) -> HeadOnRun {
    let mut init = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = [Vec2::new(90.0, 100.0 + init.random_range(-0.3..0.3)), Vec2::new(110.0, 100.0 + init.random_range(-0.3..0.3))];
    let mut heading = [init.random::<f64>() * 2.0 * PI, init.random::<f64>() * 2.0 * PI];
    let goals = [Vec2::new(160.0, 100.0), Vec2::new(40.0, 100.0)];
    let mut rngs = [ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5), ChaCha8Rng::seed_from_u64(seed ^ 0x5a5a)];
    let ctx = ControlContext {
        params: &h.params,
        orbits: &h.orbits,
        robot_profile: &h.robot,
        target_profile: &h.target,
        boundary_response: &h.response,
        noiseless: true,
        guard_gain: 1.0,
    };
    let noise = NoiseSpec::default();
    let mut min_distance = pos[0].distance(pos[1]);
    for t in 0..steps {
        let mut moves = [(0.0, 0.0); 2];
        for i in 0..2 {
            let other = [pos[1 - i]];
            let goal = [goals[i]];
            let scene = SensingScene {
                robots: &other,
                targets: &goal,
                environment: &h.env,
                robot_profile: &h.robot,
                target_profile: &h.target,
                boundary_profile: &h.boundary,
            };
            let z = sense(pos[i], heading[i], &h.params.sensors, &scene, &noise, &mut rngs[i]);
            let out = control_step(&z, &ctx, &mut rngs[i]);
            moves[i] = (out.turn, out.step);
        }
        for i in 0..2 {
            heading[i] += moves[i].0;
            pos[i] += Vec2::from_angle(heading[i]) * moves[i].1;
        }
        min_distance = min_distance.min(pos[0].distance(pos[1]));
        if pos[0].x > pos[1].x {
            return HeadOnRun { passed_at: Some(t + 1), min_distance, last: pos };
        }
    }
    HeadOnRun { passed_at: None, min_distance, last: pos }
}

fn criterion_6(_: &mut Cache) -> Outcome {
    let good = head_on(0.99, |lo, hi| 0.5 * (lo + hi));
    let runs: Vec<HeadOnRun> = (0..HEAD_ON_SEEDS).map(|s| head_on_run(&good, s, HEAD_ON_STEPS)).collect();
    let passed = runs.iter().filter(|r| r.passed_at.is_some()).count();
    let slowest = runs.iter().filter_map(|r| r.passed_at).max();
    let closest = runs.iter().map(|r| r.min_distance).fold(f64::INFINITY, f64::min);
    let safe = closest >= good.params.safe_robot;

    // sensing range below the interval: neighbours are noticed only inside the clearance
    let bad = head_on(1.05, |lo, _| lo - 0.6);
    let stuck: Vec<u64> = (0..HEAD_ON_SEEDS).filter(|&s| head_on_run(&bad, s, HEAD_ON_STEPS).passed_at.is_none()).collect();
    let reproduced = stuck.first().is_some_and(|&s| head_on_run(&bad, s, HEAD_ON_STEPS) == head_on_run(&bad, s, HEAD_ON_STEPS));
    let pass = passed as u64 == HEAD_ON_SEEDS && safe && reproduced;
    outcome(
        pass,
        format!(
            "within bounds {passed}/{HEAD_ON_SEEDS} passed (slowest {slowest:?} steps, closest {closest:.3}); beyond bounds {} standoffs, reproducible {reproduced}",
            stuck.len()
        ),
    )
}

fn criterion_7(_: &mut Cache) -> Outcome {
    let mut pass = true;
    let mut cells = Vec::new();
    for p in BASELINE_SENSORS {
        let cfg = Config::load("preset:static")
            .and_then(|c| c.with_override("robots.sensors", &toml::Value::Integer(p as i64)))
            .expect("static preset");
        if let Err(e) = validate_config(&cfg, true) {
            pass = false;
            cells.push(format!("p={p}: {e}"));
            continue;
        }
        match compare_baseline(&cfg, &seeds(), T_MAX) {
            Ok(c) => {
                let (a, b) = (c.orbiting.median.unwrap_or(u64::MAX), c.baseline.median.unwrap_or(u64::MAX));
                pass &= a <= b;
                cells.push(format!("p={p}: {a} vs {b}"));
            }
            Err(e) => {
                pass = false;
                cells.push(format!("p={p}: {e}"));
            }
        }
    }
    outcome(pass, format!("median steps orbiting vs baseline: {}", cells.join(", ")))
}

fn random_array(rng: &mut ChaCha8Rng, radius: f64) -> SensorArray<f64> {
    let p = rng.random_range(3..=24);
    if rng.random_bool(0.5) {
        return SensorArray::symmetric(p, radius).expect("symmetric");
    }
    loop {
        let mut a: Vec<f64> = (0..p).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        a.sort_by(f64::total_cmp);
        let max_gap = a.windows(2).map(|w| w[1] - w[0]).fold(a[0] + 2.0 * PI - a[p - 1], f64::max);
        if max_gap < 0.9 * PI {
            if let Ok(s) = SensorArray::from_angles(a, radius) {
                return s;
            }
        }
    }
}

fn virtual_source_check(rng: &mut ChaCha8Rng) -> (usize, f64) {
    let env = Environment::Rectangle { width: 1000.0, height: 1000.0 };
    let zero = SignalProfile::linear(SignalKind::Target, 1.0);
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..VIRTUAL_CASES {
        let radius = rng.random_range(0.2..2.0);
        let sensors = random_array(rng, radius);
        let beta = rng.random_range(1.0..10.0);
        let profile = if rng.random_bool(0.5) {
            SignalProfile::linear(SignalKind::Robot, beta)
        } else {
            SignalProfile::inverse_square(SignalKind::Robot, beta, rng.random_range(0.2..2.0))
        };
        let center = Vec2::new(500.0, 500.0);
        let heading = rng.random::<f64>() * 2.0 * PI;
        let dist = radius * 1.01 + rng.random::<f64>() * beta;
        let source = center + Vec2::from_angle(rng.random::<f64>() * 2.0 * PI) * dist;
        let robots = [source];
        let scene = SensingScene {
            robots: &robots,
            targets: &[],
            environment: &env,
            robot_profile: &profile,
            target_profile: &zero,
            boundary_profile: &zero,
        };
        let z = sense(center, heading, &sensors, &scene, &NoiseSpec::default(), rng);
        let Some(k) = argmax_reading(&z.robot) else { continue };
        let r = virtual_source_distance_clamped(profile.inverse(z.robot[k]), radius, sensors.half_gap(k));
        worst = worst.min(dist - r);
        if r > dist + GEOMETRY_TOL {
            failures += 1;
        }
    }
    (failures, worst)
}

fn avoid_rob_check(rng: &mut ChaCha8Rng) -> (usize, f64) {
    let env = Environment::Rectangle { width: 1000.0, height: 1000.0 };
    let zero = SignalProfile::linear(SignalKind::Target, 1.0);
    let mut failures = 0;
    let mut closest = f64::INFINITY;
    let mut cases = 0;
    while cases < AVOID_CASES {
        let p = rng.random_range(3..=16);
        let radius = 1.0;
        let safe_robot = rng.random_range(2.2..4.0);
        let phi: f64 = symmetric_half_angle(p);
        let Ok(bound) = max_robot_step(safe_robot, radius, phi) else { continue };
        let max_step = bound.value * rng.random_range(0.2..0.99);
        let Ok((lo, hi)) = beta_r_interval(safe_robot, radius, phi, max_step) else { continue };
        let beta = lo + (hi - lo) * rng.random_range(0.01..0.99);
        let params = RobotParams {
            radius,
            max_step,
            safe_target: 2.5,
            safe_robot,
            safe_boundary: 1.0,
            sensors: SensorArray::symmetric(p, radius).expect("sensors"),
            baseline_mode: false,
            heading_samples: 33,
            refine_los: true,
        };
        let profile = SignalProfile::linear(SignalKind::Robot, beta);
        let center = Vec2::new(500.0, 500.0);
        let heading = rng.random::<f64>() * 2.0 * PI;
        // below this distance no step, not even zero, survives an adversarial neighbour
        let clearance = safe_robot + max_step;
        let dist = clearance + rng.random::<f64>() * (beta + radius + 1.0 - clearance).max(0.1);
        let neighbor = center + Vec2::from_angle(rng.random::<f64>() * 2.0 * PI) * dist;
        let robots = [neighbor];
        let scene = SensingScene {
            robots: &robots,
            targets: &[],
            environment: &env,
            robot_profile: &profile,
            target_profile: &zero,
            boundary_profile: &zero,
        };
        let z = sense(center, heading, &params.sensors, &scene, &NoiseSpec::default(), rng);
        let bounds = NeighborBounds::new(&z.robot, &profile, &params);
        let theta = rng.random::<f64>() * 2.0 * PI;
        let d = bounds.dist_avo_rob(theta, &params);
        let moved = center + Vec2::from_angle(heading + theta) * d;
        let mut worst = f64::INFINITY;
        for m in 0..ADVERSARY_MOVES {
            let v = if m == 0 {
                (moved - neighbor).normalized().unwrap_or(Vec2::new(1.0, 0.0)) * max_step
            } else {
                Vec2::from_angle(2.0 * PI * m as f64 / (ADVERSARY_MOVES - 1) as f64) * max_step
            };
            worst = worst.min(moved.distance(neighbor + v));
        }
        closest = closest.min(worst - safe_robot);
        if worst < safe_robot - GEOMETRY_TOL || d < 0.0 || d > max_step {
            failures += 1;
        }
        cases += 1;
    }
    (failures, closest)
}

fn brute_safety(robots: &[(Vec2<f64>, bool)], targets: &[(Vec2<f64>, bool)], l: &SafetyLimits<'_>) -> (Vec<Violation>, Margins) {
    let mut v = Vec::new();
    let mut m = Margins::default();
    let lower = |a: &mut Option<f64>, d: f64| *a = Some(a.map_or(d, |x| x.min(d)));
    for i in 0..robots.len() {
        for j in i + 1..robots.len() {
            let d = robots[i].0.distance(robots[j].0);
            lower(&mut m.robot_robot, d);
            if d < l.safe_robot {
                v.push(Violation::RobotRobot { a: i, b: j, distance: d });
            }
        }
    }
    for (i, &(p, frozen)) in robots.iter().enumerate() {
        for (j, &(q, captured)) in targets.iter().enumerate() {
            let d = p.distance(q);
            if !captured {
                lower(&mut m.robot_target, d);
            }
            if d < l.safe_target && !(captured && frozen) {
                v.push(Violation::RobotTarget { robot: i, target: j, distance: d });
            }
        }
    }
    for (i, &(p, _)) in robots.iter().enumerate() {
        let b = l.environment.boundary_distance(p);
        lower(&mut m.robot_boundary, b);
        if b < l.safe_boundary {
            v.push(Violation::RobotBoundary { robot: i, distance: b });
        }
    }
    (v, m)
}

fn canonical(v: &[Violation]) -> Vec<String> {
    let mut s: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    s.sort();
    s
}

fn safety_fuzz(rng: &mut ChaCha8Rng) -> usize {
    let env = Environment::Rectangle { width: 20.0, height: 20.0 };
    let disk = Environment::Disk { radius: 10.0 };
    let mut mismatches = 0;
    for _ in 0..FUZZ_STATES {
        let environment = if rng.random_bool(0.5) { &env } else { &disk };
        let limits = SafetyLimits {
            safe_robot: rng.random_range(0.5..4.0),
            safe_target: rng.random_range(0.5..4.0),
            safe_boundary: rng.random_range(0.1..2.0),
            environment,
        };
        let (lo, hi) = match environment {
            Environment::Rectangle { .. } => (0.0, 20.0),
            Environment::Disk { .. } => (-7.0, 7.0),
        };
        let n = rng.random_range(0..12);
        let robots: Vec<(Vec2<f64>, bool)> =
            (0..n).map(|_| (Vec2::new(rng.random_range(lo..hi), rng.random_range(lo..hi)), rng.random_bool(0.2))).collect();
        let g = rng.random_range(0..4);
        let targets: Vec<(Vec2<f64>, bool)> =
            (0..g).map(|_| (Vec2::new(rng.random_range(lo..hi), rng.random_range(lo..hi)), rng.random_bool(0.3))).collect();
        let fast = safety_scan(&robots, &targets, &limits);
        let (slow, margins) = brute_safety(&robots, &targets, &limits);
        if canonical(&fast.violations) != canonical(&slow) || fast.margins != margins {
            mismatches += 1;
        }
    }
    mismatches
}

fn determinism() -> Result<usize, String> {
    let cfg = reference(PATTERN, 0.25);
    let mut traces = Vec::new();
    for schedule in [Schedule::Sequential, Schedule::Reversed, Schedule::Parallel] {
        let sim = Simulator::new(&cfg).map_err(|e| e.to_string())?.with_schedule(schedule);
        let mut lines = Vec::new();
        sim.run_with(11, 600, |rec| lines.push(trace_line(rec))).map_err(|e| e.to_string())?;
        traces.push(lines);
    }
    if traces.windows(2).any(|w| w[0] != w[1]) {
        return Err("trace differs across schedules".into());
    }
    let batch_seeds = [3, 11, 3, 29];
    let mut summaries = Vec::new();
    for threads in ["1", "3"] {
        std::env::set_var(encap::experiment::PARALLELISM_ENV, threads);
        let r = run_batch(&cfg, &batch_seeds, 600).map_err(|e| e.to_string())?;
        summaries.push(r.summaries.iter().map(|s| serde_json::to_string(s).expect("json")).collect::<Vec<_>>());
    }
    std::env::remove_var(encap::experiment::PARALLELISM_ENV);
    if summaries[0] != summaries[1] || summaries[0][0] != summaries[0][2] {
        return Err("batch summaries differ across worker counts".into());
    }
    Ok(traces[0].len())
}

fn criterion_8(_: &mut Cache) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (vs_fail, vs_slack) = virtual_source_check(&mut rng);
    let (ar_fail, ar_slack) = avoid_rob_check(&mut rng);
    let fuzz = safety_fuzz(&mut rng);
    let det = determinism();
    let pass = vs_fail == 0 && ar_fail == 0 && fuzz == 0 && det.is_ok();
    outcome(
        pass,
        format!(
            "virtual source {vs_fail}/{VIRTUAL_CASES} over (min slack {vs_slack:.2e}); step bound {ar_fail}/{AVOID_CASES} unsafe (min slack {ar_slack:.2e}); safety fuzz {fuzz}/{FUZZ_STATES} mismatches; determinism {}",
            match &det {
                Ok(n) => format!("identical over {n} records"),
                Err(e) => e.clone(),
            }
        ),
    )
}

type Criterion = fn(&mut Cache) -> Outcome;

fn main() {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, Criterion); 8] = [
        (1, "collision-freedom", criterion_1),
        (2, "eventual encapsulation", criterion_2),
        (3, "noise degradation", criterion_3),
        (4, "escape ratio anchors", criterion_4),
        (5, "drift signs", criterion_5),
        (6, "head-on passing", criterion_6),
        (7, "baseline comparison", criterion_7),
        (8, "oracle equivalence", criterion_8),
    ];
    let mut cache = Cache::default();
    let mut failed = 0;
    for (n, name, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let o = f(&mut cache);
        failed += usize::from(!o.pass);
        println!("criterion {n} {} {name}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
