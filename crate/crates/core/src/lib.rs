pub mod cli;
pub mod cost;
pub mod error;
pub mod lgoc;
pub mod lie;
pub mod mech;
pub mod solvers;
pub mod systems;
pub mod tboc;

pub use error::{Error, Result};
