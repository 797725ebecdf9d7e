use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::Command;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub geometry: GeometrySection,
    pub frame: FrameSection,
    pub carleman: CarlemanSection,
    pub sweep: SweepSection,
    pub corpus: CorpusSection,
    pub demo: DemoSection,
    pub pipeline: PipelineSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub n: usize,
    /// `euclidean`, `sphere`, `hyperbolic` or `normal`.
    pub preset: String,
    pub curvature: f64,
    /// `analytic` or `finite-difference`.
    pub backend: String,
    pub h: f64,
    pub points: usize,
    pub sample_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSection {
    pub rays: usize,
    pub radius: f64,
    pub seed_radius: f64,
    pub jacobi_radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanSection {
    pub delta: f64,
    pub radius: f64,
    pub r0: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    pub probe_min: f64,
    pub probe_max: f64,
    pub probe_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub support: f64,
    pub by_parts_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoSection {
    pub radius: f64,
    pub k: u32,
    pub constant: f64,
    pub lambdas: Vec<f64>,
    pub ok_lambda: f64,
    pub ok_k_min: u32,
    pub ok_k_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub n: usize,
    pub curvature: f64,
    pub perturbed_curvature: f64,
    pub rotation_angle: f64,
    pub radius: f64,
    pub base_point: Vec<f64>,
    pub tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection::default(),
            geometry: GeometrySection::default(),
            frame: FrameSection::default(),
            carleman: CarlemanSection::default(),
            sweep: SweepSection::default(),
            corpus: CorpusSection::default(),
            demo: DemoSection::default(),
            pipeline: PipelineSection::default(),
        }
    }
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 20_241_018, out: None }
    }
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            n: 3,
            preset: "sphere".into(),
            curvature: 1.0,
            backend: "analytic".into(),
            h: 1e-4,
            points: 100,
            sample_radius: 0.5,
        }
    }
}

impl Default for FrameSection {
    fn default() -> Self {
        FrameSection {
            rays: 100,
            radius: 0.5,
            seed_radius: 1e-3,
            jacobi_radii: vec![0.1, 0.3, 0.5],
        }
    }
}

impl Default for CarlemanSection {
    fn default() -> Self {
        CarlemanSection {
            delta: 0.05,
            radius: 0.25,
            r0: 0.5,
            nodes: 16,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            lambdas: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            probe_min: 5.0,
            probe_max: 50.0,
            probe_step: 1.0,
        }
    }
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            support: 1.0,
            by_parts_lambda: 8.0,
        }
    }
}

impl Default for DemoSection {
    fn default() -> Self {
        DemoSection {
            radius: 0.2,
            k: 2,
            constant: 1.0,
            lambdas: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            ok_lambda: 10.0,
            ok_k_min: 2,
            ok_k_max: 10,
        }
    }
}

impl Default for PipelineSection {
    fn default() -> Self {
        PipelineSection {
            n: 3,
            curvature: 1.0,
            perturbed_curvature: 1.1,
            rotation_angle: 0.6,
            radius: 0.4,
            base_point: vec![0.3, 0.1, -0.2],
            tolerance: 1e-6,
        }
    }
}

/// Every problem found in a configuration, one `field: message` line each.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub diagnostics: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration {}:", self.source)?;
        for d in &self.diagnostics {
            writeln!(f, "  {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn from_toml(text: &str, source: &str) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError {
            source: source.to_string(),
            diagnostics: vec![e.to_string().trim_end().replace('\n', "\n  ")],
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            diagnostics: vec![format!("cannot read file: {e}")],
        })?;
        RunConfig::from_toml(&text, &source)
    }

    /// Range checks for the sections `command` uses.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        let mut d = Vec::new();
        let mut bad = |field: &str, msg: String| d.push(format!("{field}: {msg}"));
        let g = &self.geometry;
        match command {
            Command::CurvatureCheck | Command::FrameOde | Command::SystemResiduals => {
                if g.n < 2 {
                    bad("geometry.n", format!("must be at least 2, got {}", g.n));
                }
                let sign_ok = match g.preset.as_str() {
                    "euclidean" => true,
                    "sphere" => g.curvature > 0.0,
                    "hyperbolic" => g.curvature < 0.0,
                    "normal" => g.curvature.is_finite(),
                    other => {
                        bad("geometry.preset", format!("unknown preset '{other}' (euclidean, sphere, hyperbolic, normal)"));
                        true
                    }
                };
                if !sign_ok {
                    bad("geometry.curvature", format!("sign does not match preset '{}', got {}", g.preset, g.curvature));
                }
                if !matches!(g.backend.as_str(), "analytic" | "finite-difference") {
                    bad("geometry.backend", format!("must be 'analytic' or 'finite-difference', got '{}'", g.backend));
                }
                if !(g.h > 0.0 && g.h < 0.1) {
                    bad("geometry.h", format!("must lie in (0, 0.1), got {}", g.h));
                }
                if g.points == 0 {
                    bad("geometry.points", "must be positive".into());
                }
                if !(g.sample_radius > 0.0) {
                    bad("geometry.sample_radius", format!("must be positive, got {}", g.sample_radius));
                }
                if command == Command::FrameOde {
                    let f = &self.frame;
                    if f.rays == 0 {
                        bad("frame.rays", "must be positive".into());
                    }
                    if !(f.seed_radius >= 1e-4 && f.seed_radius < f.radius) {
                        bad("frame.seed_radius", format!("must lie in [1e-4, frame.radius), got {}", f.seed_radius));
                    }
                    if f.jacobi_radii.iter().any(|&r| !(r >= f.seed_radius)) {
                        bad("frame.jacobi_radii", "every radius must be at least frame.seed_radius".into());
                    }
                }
            }
            Command::CarlemanVerify | Command::UcDemo => {
                let n = g.n;
                if n < 3 {
                    bad("geometry.n", format!("Carleman checks need n >= 3, got {n}"));
                }
                let c = &self.carleman;
                let dmax = 2.0 / n.max(1) as f64;
                if !(c.delta > 0.0 && c.delta < dmax) {
                    bad("carleman.delta", format!("must lie in (0, 2/n) = (0, {dmax:.6}), got {}", c.delta));
                }
                let radius = if command == Command::UcDemo { self.demo.radius } else { c.radius };
                let field = if command == Command::UcDemo { "demo.radius" } else { "carleman.radius" };
                if !(radius > 0.0 && radius < c.r0) {
                    bad(field, format!("must lie in (0, carleman.r0 = {}), got {radius}", c.r0));
                }
                if !(c.r0 > 0.0 && c.r0 < 1.0) {
                    bad("carleman.r0", format!("must lie in (0, 1), got {}", c.r0));
                }
                if c.nodes < 2 {
                    bad("carleman.nodes", format!("must be at least 2, got {}", c.nodes));
                }
                let lambdas = if command == Command::UcDemo { &self.demo.lambdas } else { &self.sweep.lambdas };
                let name = if command == Command::UcDemo { "demo.lambdas" } else { "sweep.lambdas" };
                if lambdas.is_empty() {
                    bad(name, "must not be empty".into());
                }
                if let Some(l) = lambdas.iter().find(|&&l| !(l > n as f64)) {
                    bad(name, format!("every λ must exceed n = {n}, got {l}"));
                }
                if command == Command::CarlemanVerify {
                    let s = &self.sweep;
                    if !(s.probe_step > 0.0 && s.probe_min <= s.probe_max) {
                        bad("sweep.probe_step", "probe range must be nonempty with a positive step".into());
                    }
                    if !(self.corpus.by_parts_lambda > n as f64 / 2.0) {
                        bad("corpus.by_parts_lambda", format!("must exceed n/2, got {}", self.corpus.by_parts_lambda));
                    }
                } else {
                    let dm = &self.demo;
                    if !(dm.ok_lambda > n as f64) {
                        bad("demo.ok_lambda", format!("must exceed n = {n}, got {}", dm.ok_lambda));
                    }
                    if dm.ok_k_min > dm.ok_k_max || dm.ok_k_max > 40 {
                        bad("demo.ok_k_max", "need ok_k_min <= ok_k_max <= 40".into());
                    }
                    if !(self.corpus.support > 0.0) {
                        bad("corpus.support", format!("must be positive, got {}", self.corpus.support));
                    }
                    if !(dm.constant > 0.0) {
                        bad("demo.constant", format!("must be positive, got {}", dm.constant));
                    }
                }
            }
            Command::DiffPipeline => {
                let p = &self.pipeline;
                if p.n < 2 {
                    bad("pipeline.n", format!("must be at least 2, got {}", p.n));
                }
                if !(p.curvature > 0.0) || !(p.perturbed_curvature > 0.0) {
                    bad("pipeline.curvature", "both curvatures must be positive".into());
                }
                if p.base_point.len() != p.n {
                    bad("pipeline.base_point", format!("needs {} components, got {}", p.n, p.base_point.len()));
                }
                if !(p.radius > 0.0 && p.radius < 1.0) {
                    bad("pipeline.radius", format!("must lie in (0, 1), got {}", p.radius));
                }
                if !(p.tolerance > 0.0) {
                    bad("pipeline.tolerance", format!("must be positive, got {}", p.tolerance));
                }
            }
        }
        if d.is_empty() {
            Ok(())
        } else {
            Err(ConfigError {
                source: "(validation)".into(),
                diagnostics: d,
            })
        }
    }
}
