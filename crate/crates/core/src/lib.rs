pub mod carleman;
pub mod einstein;
pub mod error;
pub mod frame;
pub mod geodesic;
pub mod geometry;
pub mod jet;
pub mod metric;
pub mod normal_chart;
pub mod ode;
pub mod tensor;

pub use error::{Error, Result};
