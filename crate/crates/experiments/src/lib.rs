//! End-to-end experiments on top of `uc-core`: the model PDE–ODE pair and its
//! cutoffs, the inequality chains behind the absorption argument, vanishing
//! order estimates, and the comparison of two Einstein-scalar solutions in
//! aligned normal coordinates.

pub mod chain;
pub mod difference;
pub mod model;
pub mod vanishing;

pub use uc_core::{Error, Result};
