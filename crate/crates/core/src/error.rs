use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("instance has no circles")]
    EmptyInstance,

    #[error("radius {radius} at index {index} is not a positive finite number")]
    InvalidRadius { index: usize, radius: f64 },

    #[error("strip width {0} must be positive and finite")]
    InvalidWidth(f64),

    #[error("instance infeasible by width: strip width {width} < largest diameter {diameter}")]
    InfeasibleByWidth { width: f64, diameter: f64 },

    #[error("layout has {got} centers but the instance has {expected} circles")]
    LayoutMismatch { expected: usize, got: usize },

    #[error("dimension {0} must be positive and finite")]
    InvalidDimension(f64),

    #[error("time budget must be positive")]
    ZeroTimeBudget,

    #[error("non-finite objective at the starting point")]
    NonFiniteObjective,

    #[error("post-processing could not find a feasible upper bracket (last tried {tried})")]
    NoFeasibleBracket { tried: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
