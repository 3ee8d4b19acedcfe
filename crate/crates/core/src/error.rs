use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncapError {
    #[error("negative distance {0} passed to a signal profile")]
    NegativeDistance(f64),

    #[error("degenerate virtual-source geometry: sensed range {d_sensor} below r*sin(phi) = {min}")]
    DegenerateGeometry { d_sensor: f64, min: f64 },

    #[error("infeasible geometry: {0}")]
    Infeasible(String),

    #[error("invalid sensor array: {0}")]
    InvalidSensors(String),

    #[error("empty intruder list")]
    NoIntruders,

    #[error("placement failed after {attempts} rejections: {what}")]
    OverDense { attempts: usize, what: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration failed strict feasibility validation: {0}")]
    Infeasibility(String),
}

pub type Result<T, E = EncapError> = std::result::Result<T, E>;
