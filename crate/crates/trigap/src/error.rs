use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("input must be an odd positive integer, got {0}")]
    NotOdd(String),

    #[error("value {0} is not in Y (numerator divisible by 3 or outside [1/2, 1))")]
    NotInY(String),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("floor_ratio requires strictly positive forms")]
    NonPositiveForm,

    #[error("level table overflow extending past h = {0}")]
    LevelOverflow(u32),

    #[error("no seed index found below bound {bound} for x = {x}")]
    SeedBoundExceeded { x: String, bound: u64 },

    #[error("invalid {what}: {value}")]
    Parse { what: &'static str, value: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
