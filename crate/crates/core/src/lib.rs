//! Decentralized target encapsulation by memoryless robot swarms.
//!
//! Geometry, signal sensing, the robot control law, target motion models and
//! the closed-form bounds are generic over the scalar type. The simulator and
//! the experiment layer run in `f64`.

pub mod config;
pub mod controller;
pub mod environment;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod scalar;
pub mod signal;
pub mod sim;
pub mod target;
pub mod theory;

pub use config::{Config, Scenario};
pub use controller::{control_step, Behavior, ControlContext, ControlOutput, OrbitSet, RobotParams};
pub use environment::Environment;
pub use error::{EncapError, Result};
pub use experiment::{run_batch, sweep, AggregateStats, SweepSpec, SweepTable};
pub use geometry::{AngularInterval, Vec2};
pub use scalar::Scalar;
pub use signal::{sense, NoiseSpec, SensorArray, SignalKind, SignalProfile};
pub use sim::{RunSummary, Simulator, TraceRecord, WorldState};
pub use target::{target_step, MotionModel, TargetState};
pub use theory::{bounds_table, validate_config, FeasibilityReport};

pub type Vec2f64 = Vec2<f64>;
pub type Vec2f32 = Vec2<f32>;
pub type RobotParamsF64 = RobotParams<f64>;
pub type RobotParamsF32 = RobotParams<f32>;
pub type SensorArrayF64 = SensorArray<f64>;
pub type SensorArrayF32 = SensorArray<f32>;
pub type SignalProfileF64 = SignalProfile<f64>;
pub type SignalProfileF32 = SignalProfile<f32>;
pub type EnvironmentF64 = Environment<f64>;
pub type EnvironmentF32 = Environment<f32>;
pub type TargetStateF64 = TargetState<f64>;
pub type TargetStateF32 = TargetState<f32>;
