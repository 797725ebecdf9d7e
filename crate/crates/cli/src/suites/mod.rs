pub mod carleman;
pub mod demo;
pub mod geometry;
pub mod pipeline;
pub mod system;
