//! Experiment configuration: a TOML schema with unknown keys rejected,
//! parameters that may be derived from the theory bounds, and resolution
//! into a concrete [`Scenario`].

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::{OrbitSet, RobotParams};
use crate::environment::Environment;
use crate::error::{EncapError, Result};
use crate::geometry::Vec2;
use crate::signal::{NoiseSpec, SensorArray, SignalFamily, SignalKind, SignalProfile};
use crate::target::{MotionModel, Pattern};
use crate::theory;

/// A number, or a rule deriving it from the theory bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Derived(Derive),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Derive {
    /// Fraction of the deadlock-free robot step bound.
    BoundFraction(f64),
    /// Position in `[0, 1]` inside the admissible robot influence interval.
    IntervalPosition(f64),
    /// Fraction of `λ·d_r^max` for the target's motion model.
    LambdaFraction(f64),
    /// Escape radius that makes the escape ratio equal to this value.
    Lambda(f64),
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Value(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SensorsConfig {
    Count(usize),
    Angles(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsConfig {
    pub count: usize,
    pub radius: f64,
    pub max_step: Param,
    pub safe_robot: f64,
    pub safe_target: f64,
    pub safe_boundary: f64,
    pub sensors: SensorsConfig,
    #[serde(default = "default_heading_samples")]
    pub heading_samples: usize,
    #[serde(default = "default_true")]
    pub refine_los: bool,
    #[serde(default)]
    pub baseline_mode: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    #[default]
    Linear,
    InverseSquare {
        softening: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub influence: Param,
    #[serde(default = "default_one")]
    pub amplitude: f64,
    #[serde(default)]
    pub family: FamilyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalsConfig {
    pub robot: SignalConfig,
    pub target: SignalConfig,
    pub boundary: SignalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternKind {
    ConstantVelocity,
    Circle,
    Waypoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternConfig {
    #[serde(default = "default_pattern_kind")]
    pub kind: PatternKind,
    pub cruise_step: Param,
    #[serde(default)]
    pub turn_rate: f64,
    #[serde(default)]
    pub waypoints: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionConfig {
    Random,
    RandomEscape,
    PatternEscape { pattern: PatternConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub radius: f64,
    pub max_step: Param,
    pub escape_radius: Param,
    pub motion: MotionConfig,
    #[serde(default)]
    pub position: Option<[f64; 2]>,
    #[serde(default)]
    pub heading: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureConfig {
    pub encap_radius: f64,
    /// Robots required in the ring, `n_g`.
    pub required: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitsConfig {
    pub inner: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub sigma: f64,
    /// Inner-ring inflation constant `c` in `Or_in·(1 + c·σ)`.
    #[serde(default = "default_one")]
    pub inflation: f64,
    /// Robot and boundary readings are scaled by `1 + guard·σ` before use.
    #[serde(default)]
    pub guard: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { sigma: 0.0, inflation: 1.0, guard: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    Sector,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default)]
    pub layout: Layout,
    #[serde(default = "default_sector_width")]
    pub sector_width: f64,
    #[serde(default = "default_min_range")]
    pub min_range: f64,
    #[serde(default = "default_max_range")]
    pub max_range: f64,
    /// Sector bisector as seen from the first target; random if absent.
    #[serde(default)]
    pub bearing: Option<f64>,
    /// Seed for the initial placement; the run seed if absent.
    #[serde(default)]
    pub placement_seed: Option<u64>,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            layout: Layout::Sector,
            sector_width: default_sector_width(),
            min_range: default_min_range(),
            max_range: default_max_range(),
            bearing: None,
            placement_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_t_max")]
    pub t_max: u64,
    #[serde(default)]
    pub halt_on_violation: bool,
    /// Also test the midpoint of every move against the safety distances.
    #[serde(default)]
    pub midpoint_check: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { t_max: default_t_max(), halt_on_violation: false, midpoint_check: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_name")]
    pub name: String,
    pub environment: Environment<f64>,
    pub robots: RobotsConfig,
    pub signals: SignalsConfig,
    pub targets: Vec<TargetConfig>,
    pub capture: CaptureConfig,
    pub orbits: OrbitsConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub sim: SimConfig,
}

fn default_heading_samples() -> usize {
    33
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_pattern_kind() -> PatternKind {
    PatternKind::ConstantVelocity
}
fn default_sector_width() -> f64 {
    std::f64::consts::FRAC_PI_4
}
fn default_min_range() -> f64 {
    5.0
}
fn default_max_range() -> f64 {
    20.0
}
fn default_t_max() -> u64 {
    4000
}
fn default_name() -> String {
    "unnamed".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub radius: f64,
    pub max_step: f64,
    pub escape_radius: f64,
    pub motion: MotionModel<f64>,
    pub position: Option<Vec2<f64>>,
    pub heading: Option<f64>,
}

/// A configuration with every derived parameter evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub environment: Environment<f64>,
    pub robot_count: usize,
    pub params: RobotParams<f64>,
    pub robot_profile: SignalProfile<f64>,
    pub target_profile: SignalProfile<f64>,
    pub boundary_profile: SignalProfile<f64>,
    /// Orbits with the noise-inflated inner radius.
    pub orbits: OrbitSet<f64>,
    pub nominal_inner: f64,
    pub encap_radius: f64,
    pub required: usize,
    pub targets: Vec<TargetSpec>,
    pub noise: NoiseSpec,
    /// Reading gain for robot and boundary signals.
    pub guard_gain: f64,
    pub init: InitConfig,
    pub sim: SimConfig,
}

impl Scenario {
    /// Minimum boundary distance of a target centre.
    pub fn target_margin(&self) -> f64 {
        self.encap_radius + self.params.safe_boundary + self.params.max_step
    }

    /// Minimum centre distance between two targets.
    pub fn target_spacing(&self) -> f64 {
        2.0 * self.target_profile.influence + 2.0 * self.params.radius
    }
}

fn value_only(p: Param, what: &str) -> Result<f64> {
    match p {
        Param::Value(v) => Ok(v),
        Param::Derived(d) => Err(EncapError::Config(format!("{what} cannot be derived as {d:?}"))),
    }
}

/// Escape radius at which the escape ratio equals `lambda`.
pub fn escape_radius_for_lambda(lambda: f64, beta_r: f64, radius: f64, half_angle: f64) -> Result<f64> {
    let eff = theory::cone_efficiency(half_angle);
    if eff <= 0.0 {
        return Err(EncapError::Config("half-angle admits no escape ratio".into()));
    }
    let ratio = lambda / eff;
    // α/sin α rises from 1 at α → 0 to π/2 at the fixed point
    if ratio <= 1.0 || ratio >= std::f64::consts::FRAC_PI_2 {
        return Err(EncapError::Config(format!("escape ratio {lambda} outside the attainable range for this sensor array")));
    }
    let f = |a: f64| a / a.sin() - ratio;
    let (mut lo, mut hi) = (1e-9, std::f64::consts::FRAC_PI_2 + 0.4);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok((beta_r + radius) / (2.0 * (1.0 - alpha.cos())).sqrt())
}

fn build_sensors(cfg: &SensorsConfig, mount: f64) -> Result<SensorArray<f64>> {
    match cfg {
        SensorsConfig::Count(p) => SensorArray::symmetric(*p, mount),
        SensorsConfig::Angles(a) => SensorArray::from_angles(a.clone(), mount),
    }
}

fn build_profile(kind: SignalKind, influence: f64, s: &SignalConfig) -> SignalProfile<f64> {
    let family = match s.family {
        FamilyConfig::Linear => SignalFamily::Linear,
        FamilyConfig::InverseSquare { softening } => SignalFamily::InverseSquare { softening },
    };
    SignalProfile { kind, influence, amplitude: s.amplitude, family }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| EncapError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| EncapError::Config(e.to_string()))
    }

    /// Load from a file path, or `preset:<name>`.
    pub fn load(reference: &str) -> Result<Self> {
        if let Some(name) = reference.strip_prefix("preset:") {
            return preset_config(name);
        }
        let text = std::fs::read_to_string(reference).map_err(|e| EncapError::Config(format!("{reference}: {e}")))?;
        Self::from_toml_str(&text)
    }

    /// Hex digest identifying this exact configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    /// Set a dotted path (`robots.sensors`, `targets.0.motion`) to a value.
    pub fn with_override(&self, path: &str, value: &toml::Value) -> Result<Self> {
        let mut root = serde_json::to_value(self).map_err(|e| EncapError::Config(e.to_string()))?;
        let v = serde_json::to_value(value).map_err(|e| EncapError::Config(e.to_string()))?;
        set_path(&mut root, path, v)?;
        serde_json::from_value(root).map_err(|e| EncapError::Config(format!("{path}: {e}")))
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let r = &self.robots;
        let sensors = build_sensors(&r.sensors, r.radius)?;
        let phi = sensors.half_angle();
        let max_step = match r.max_step {
            Param::Value(v) => v,
            Param::Derived(Derive::BoundFraction(f)) => f * theory::max_robot_step(r.safe_robot, r.radius, phi)?.value,
            Param::Derived(d) => return Err(EncapError::Config(format!("robots.max_step cannot be derived as {d:?}"))),
        };
        let beta_r = match self.signals.robot.influence {
            Param::Value(v) => v,
            Param::Derived(Derive::IntervalPosition(t)) => {
                let (lo, hi) = theory::beta_r_interval(r.safe_robot, r.radius, phi, max_step)?;
                lo + t * (hi - lo)
            }
            Param::Derived(d) => return Err(EncapError::Config(format!("signals.robot.influence cannot be derived as {d:?}"))),
        };
        let beta_g = value_only(self.signals.target.influence, "signals.target.influence")?;
        let beta_e = value_only(self.signals.boundary.influence, "signals.boundary.influence")?;
        let params = RobotParams {
            radius: r.radius,
            max_step,
            safe_target: r.safe_target,
            safe_robot: r.safe_robot,
            safe_boundary: r.safe_boundary,
            sensors,
            baseline_mode: r.baseline_mode,
            heading_samples: r.heading_samples,
            refine_los: r.refine_los,
        };
        params.check()?;
        let mut targets = Vec::with_capacity(self.targets.len());
        for (j, t) in self.targets.iter().enumerate() {
            let escape_radius = match t.escape_radius {
                Param::Value(v) => v,
                Param::Derived(Derive::Lambda(l)) => escape_radius_for_lambda(l, beta_r, r.radius, phi)?,
                Param::Derived(d) => return Err(EncapError::Config(format!("targets.{j}.escape_radius cannot be derived as {d:?}"))),
            };
            let alpha = theory::alpha_angle(beta_r, r.radius, escape_radius);
            let lambda = match t.motion {
                MotionConfig::Random => theory::lambda_random(r.count, beta_r, r.radius, self.orbits.inner),
                _ => alpha.map(|a| theory::lambda_escape(phi, a).lambda),
            };
            let target_step = match t.max_step {
                Param::Value(v) => v,
                Param::Derived(Derive::LambdaFraction(f)) => f * lambda.clone()? * max_step,
                Param::Derived(d) => return Err(EncapError::Config(format!("targets.{j}.max_step cannot be derived as {d:?}"))),
            };
            let motion = match &t.motion {
                MotionConfig::Random => MotionModel::Random,
                MotionConfig::RandomEscape => MotionModel::RandomEscape,
                MotionConfig::PatternEscape { pattern } => {
                    let cruise_step = match pattern.cruise_step {
                        Param::Value(v) => v,
                        Param::Derived(Derive::LambdaFraction(f)) => f * theory::cone_efficiency(phi) * max_step,
                        Param::Derived(d) => {
                            return Err(EncapError::Config(format!("targets.{j}.motion.pattern.cruise_step cannot be derived as {d:?}")))
                        }
                    };
                    let pattern = match pattern.kind {
                        PatternKind::ConstantVelocity => Pattern::ConstantVelocity { cruise_step },
                        PatternKind::Circle => Pattern::Circle { cruise_step, turn_rate: pattern.turn_rate },
                        PatternKind::Waypoints => {
                            Pattern::Waypoints { cruise_step, points: pattern.waypoints.iter().map(|p| Vec2::new(p[0], p[1])).collect() }
                        }
                    };
                    MotionModel::PatternEscape { pattern }
                }
            };
            targets.push(TargetSpec {
                radius: t.radius,
                max_step: target_step,
                escape_radius,
                motion,
                position: t.position.map(|p| Vec2::new(p[0], p[1])),
                heading: t.heading,
            });
        }
        let noise = NoiseSpec::gaussian(self.noise.sigma);
        let inner = self.orbits.inner * (1.0 + self.noise.inflation * self.noise.sigma);
        Ok(Scenario {
            name: self.name.clone(),
            environment: self.environment,
            robot_count: r.count,
            params,
            robot_profile: build_profile(SignalKind::Robot, beta_r, &self.signals.robot),
            target_profile: build_profile(SignalKind::Target, beta_g, &self.signals.target),
            boundary_profile: build_profile(SignalKind::Environment, beta_e, &self.signals.boundary),
            orbits: OrbitSet { inner0: inner, outer0: self.capture.encap_radius, width: self.orbits.width },
            nominal_inner: self.orbits.inner,
            encap_radius: self.capture.encap_radius,
            required: self.capture.required,
            targets,
            noise,
            guard_gain: 1.0 + self.noise.guard * self.noise.sigma,
            init: self.init.clone(),
            sim: self.sim.clone(),
        })
    }
}

fn set_path(root: &mut serde_json::Value, path: &str, value: serde_json::Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            serde_json::Value::Object(map) => {
                if last {
                    map.insert((*part).to_string(), value);
                    return Ok(());
                }
                map.entry((*part).to_string()).or_insert_with(|| serde_json::Value::Object(Default::default()))
            }
            serde_json::Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| EncapError::Config(format!("{path}: `{part}` is not an index")))?;
                let slot = items.get_mut(idx).ok_or_else(|| EncapError::Config(format!("{path}: index {idx} out of range")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(EncapError::Config(format!("{path}: `{part}` is not a table"))),
        };
    }
    Err(EncapError::Config("empty override path".into()))
}

const PRESET_CONFIGS: &[(&str, &str)] = &[
    ("reference", include_str!("../presets/reference.toml")),
    ("static", include_str!("../presets/static.toml")),
    ("scale", include_str!("../presets/scale.toml")),
];

pub const PRESET_SWEEPS: &[(&str, &str)] = &[
    ("fig9", include_str!("../presets/fig9.toml")),
    ("fig10a", include_str!("../presets/fig10a.toml")),
    ("fig10b", include_str!("../presets/fig10b.toml")),
    ("fig10c", include_str!("../presets/fig10c.toml")),
    ("fig11", include_str!("../presets/fig11.toml")),
    ("fig12", include_str!("../presets/fig12.toml")),
    ("scale", include_str!("../presets/scale_sweep.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESET_CONFIGS.iter().map(|p| p.0).collect()
}

pub fn preset_config(name: &str) -> Result<Config> {
    PRESET_CONFIGS
        .iter()
        .find(|p| p.0 == name)
        .map(|p| Config::from_toml_str(p.1))
        .unwrap_or_else(|| Err(EncapError::Config(format!("unknown preset `{name}` (have {:?})", preset_names()))))
}
