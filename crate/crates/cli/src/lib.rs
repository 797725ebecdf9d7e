//! Check suites behind the `uccheck` binary, with their configuration and
//! report formats.

pub mod config;
pub mod report;
pub mod sampling;
pub mod suites;

use clap::ValueEnum;

pub use config::{ConfigError, RunConfig};
pub use report::{Check, SuiteOutput, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CurvatureCheck,
    FrameOde,
    SystemResiduals,
    CarlemanVerify,
    UcDemo,
    DiffPipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CurvatureCheck => "curvature-check",
            Command::FrameOde => "frame-ode",
            Command::SystemResiduals => "system-residuals",
            Command::CarlemanVerify => "carleman-verify",
            Command::UcDemo => "uc-demo",
            Command::DiffPipeline => "diff-pipeline",
        }
    }
}

/// Runs one suite. Numerical failures become failed checks.
pub fn run(command: Command, cfg: &RunConfig) -> SuiteOutput {
    match command {
        Command::CurvatureCheck => suites::geometry::curvature_check(cfg),
        Command::FrameOde => suites::geometry::frame_ode(cfg),
        Command::SystemResiduals => suites::system::system_residuals(cfg),
        Command::CarlemanVerify => suites::carleman::carleman_verify(cfg),
        Command::UcDemo => suites::demo::uc_demo(cfg),
        Command::DiffPipeline => suites::pipeline::diff_pipeline(cfg),
    }
}
