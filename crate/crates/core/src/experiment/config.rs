//! Experiment configuration: TOML with sections, unknown keys rejected.
//!
//! ```toml
//! kind = "convergence"        # sample | theta | beta | wulff | phi | shape | convergence
//! d = 2
//! p = 0.7
//! seed = 1
//! replicates = 30
//! n = [10, 20, 30, 40]
//!
//! [theta]                     # value, or an estimate on a box
//! half_width = 40
//! replicates = 200
//!
//! [norm]                      # table file, or an inline estimate
//! mesh = "circle"             # circle | fibonacci | axis-diagonal
//! directions = 36
//! n = 30
//! h_rel = 0.25
//! replicates = 20
//!
//! [phi]
//! anneal_steps = 20000
//!
//! [shape]
//! max_evaluations = 2000
//! ```
//!
//! The configuration hash is the content hash of the canonical JSON form of
//! the parsed configuration, defaults filled in.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::digest::blob_hash;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sample,
    Theta,
    Beta,
    Wulff,
    Phi,
    Shape,
    Convergence,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Sample => "sample",
            ExperimentKind::Theta => "theta",
            ExperimentKind::Beta => "beta",
            ExperimentKind::Wulff => "wulff",
            ExperimentKind::Phi => "phi",
            ExperimentKind::Shape => "shape",
            ExperimentKind::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: usize,
    pub p: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Scales for `phi`, `shape` and `convergence`.
    #[serde(default)]
    pub n: Vec<usize>,
    /// Output directory; the command line may override it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sample: SampleParams,
    #[serde(default)]
    pub theta: ThetaParams,
    #[serde(default)]
    pub norm: NormParams,
    #[serde(default)]
    pub phi: PhiParams,
    #[serde(default)]
    pub shape: ShapeParams,
}

fn default_replicates() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleParams {
    pub half_width: i64,
    /// Margin; `ceil(L/5)` when absent.
    pub margin: Option<i64>,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            half_width: 20,
            margin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaParams {
    /// Known value; skips estimation.
    pub value: Option<f64>,
    pub half_width: i64,
    pub replicates: usize,
}

impl Default for ThetaParams {
    fn default() -> Self {
        ThetaParams {
            value: None,
            half_width: 30,
            replicates: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mesh {
    /// `directions` equally spaced angles (d = 2).
    Circle,
    /// `directions` Fibonacci points (d = 3).
    Fibonacci,
    /// Signed axes and diagonals, any d.
    AxisDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormParams {
    /// Precomputed table (JSON); the estimate parameters are then ignored.
    pub table: Option<PathBuf>,
    pub mesh: Mesh,
    pub directions: usize,
    pub n: usize,
    pub h_rel: f64,
    pub replicates: usize,
    pub symmetry: bool,
    /// Interpolate between table directions for unlisted face normals.
    pub interpolate: bool,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams {
            table: None,
            mesh: Mesh::Circle,
            directions: 36,
            n: 30,
            h_rel: 0.25,
            replicates: 20,
            symmetry: true,
            interpolate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiParams {
    /// Defaults to `n^d`.
    pub vol_cap: Option<usize>,
    pub anneal_steps: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Also run the polytope certificate on a dilate of the Wulff estimate.
    pub certificate: bool,
    pub certificate_dilation: f64,
    /// Defaults to `0.1 * diam`.
    pub delta: Option<f64>,
    /// Samples drawn per replicate before the replicate counts as rejected.
    pub max_attempts: usize,
}

impl Default for PhiParams {
    fn default() -> Self {
        PhiParams {
            vol_cap: None,
            anneal_steps: 20_000,
            t_start: 1.5,
            t_end: 0.02,
            certificate: false,
            certificate_dilation: 0.8,
            delta: None,
            max_attempts: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeParams {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evaluations: usize,
    /// Defaults to `0.05 * diam(W)`.
    pub profile_delta: Option<f64>,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams {
            initial_step: 4.0,
            min_step: 0.125,
            max_evaluations: 2000,
            profile_delta: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Minimal configuration of the given kind, every section defaulted.
    pub fn new(kind: ExperimentKind, d: usize, p: f64) -> Self {
        ExperimentConfig {
            kind,
            d,
            p,
            seed: 0,
            replicates: default_replicates(),
            n: Vec::new(),
            output: None,
            sample: SampleParams::default(),
            theta: ThetaParams::default(),
            norm: NormParams::default(),
            phi: PhiParams::default(),
            shape: ShapeParams::default(),
        }
    }

    /// Content hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        blob_hash(json.as_bytes())
    }

    /// Checks every parameter the kind will use, before any sampling.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(2..=6).contains(&self.d) {
            return bad(format!("d = {} must lie in 2..=6", self.d));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} must lie in [0, 1]", self.p));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        let needs_n = matches!(
            self.kind,
            ExperimentKind::Phi | ExperimentKind::Shape | ExperimentKind::Convergence
        );
        if needs_n {
            if self.n.is_empty() || self.n.contains(&0) {
                return bad("n must be a nonempty list of positive scales".into());
            }
            if self.phi.max_attempts == 0 {
                return bad("phi.max_attempts must be at least 1".into());
            }
            if !(self.phi.t_start > 0.0 && self.phi.t_end > 0.0 && self.phi.t_end <= self.phi.t_start) {
                return bad("phi temperatures must satisfy 0 < t_end <= t_start".into());
            }
            if self.phi.vol_cap == Some(0) {
                return bad("phi.vol_cap must be positive".into());
            }
            if !(self.phi.certificate_dilation > 0.0) {
                return bad("phi.certificate_dilation must be positive".into());
            }
            if self.phi.delta.is_some_and(|x| !(x > 0.0)) {
                return bad("phi.delta must be positive".into());
            }
        }
        let needs_theta = matches!(
            self.kind,
            ExperimentKind::Theta | ExperimentKind::Wulff | ExperimentKind::Shape | ExperimentKind::Convergence
        );
        if needs_theta {
            if let Some(v) = self.theta.value {
                if !(v > 0.0 && v <= 1.0) {
                    return bad(format!("theta.value = {v} must lie in (0, 1]"));
                }
            } else if self.theta.half_width < 2 || self.theta.replicates == 0 {
                return bad("theta estimate needs half_width >= 2 and replicates >= 1".into());
            }
        }
        let needs_norm = matches!(
            self.kind,
            ExperimentKind::Beta | ExperimentKind::Wulff | ExperimentKind::Shape | ExperimentKind::Convergence
        ) || (self.kind == ExperimentKind::Phi && self.phi.certificate);
        if needs_norm && self.norm.table.is_none() {
            let nm = &self.norm;
            match (nm.mesh, self.d) {
                (Mesh::Circle, 2) | (Mesh::Fibonacci, 3) | (Mesh::AxisDiagonal, _) => {}
                (m, d) => return bad(format!("mesh {m:?} is not available in d = {d}")),
            }
            if nm.mesh != Mesh::AxisDiagonal && nm.directions < self.d + 1 {
                return bad("norm.directions is too small to span".into());
            }
            if nm.n == 0 || nm.replicates == 0 || !(nm.h_rel > 0.0) {
                return bad("norm.n, norm.replicates and norm.h_rel must be positive".into());
            }
        }
        if self.kind == ExperimentKind::Sample && self.sample.half_width < 1 {
            return bad("sample.half_width must be at least 1".into());
        }
        if matches!(self.kind, ExperimentKind::Shape) {
            let s = &self.shape;
            let dyadic = |x: f64| x > 0.0 && x.log2().fract() == 0.0;
            if !dyadic(s.initial_step) || !dyadic(s.min_step) || s.min_step > s.initial_step {
                return bad("shape steps must be powers of two with min_step <= initial_step".into());
            }
            if s.profile_delta.is_some_and(|x| !(x > 0.0)) {
                return bad("shape.profile_delta must be positive".into());
            }
        }
        Ok(())
    }
}
