//! Exact arithmetic for the reduced Collatz map, its dyadic conjugate,
//! the three-distance structure of multiples of log2 3, and the repetend
//! (seed) machinery tying the two together.

pub mod bounds;
pub mod cli;
pub mod collatz;
mod error;
pub mod exact;
pub mod seeds;
pub mod three_distance;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
