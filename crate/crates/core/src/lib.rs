//! Distances of quantum channels from the CP- and P-divisible sets,
//! computed with diamond-norm semidefinite programs.

pub mod error;
pub mod exec;
pub mod matlin;
pub mod channels;
pub mod diamond;
pub mod divisibility;
pub mod sdp;

pub use error::{Error, Result};
pub use exec::Execution;
