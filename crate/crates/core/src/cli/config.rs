//! Experiment configuration files.
//!
//! A config is TOML with global scheme settings and one optional table per
//! command. Missing tables fall back to the defaults below; unknown keys are
//! rejected.

use serde::{Deserialize, Serialize};

use crate::carnot::{GaugeBall, Point, TestFunction};
use crate::error::{LabError, Result};
use crate::lab::Normalization;
use crate::quad::{QuadratureScheme, DEFAULT_ANNULI_LEVELS};
use crate::weights::{BallSampler, ExponentSystem, Weight, DEFAULT_T_GRID};

pub const DEFAULT_SAMPLES: usize = 20_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    #[default]
    Uniform,
    Annuli,
    Grid,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub scheme: SchemeChoice,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_info: Option<GroupInfoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poincare: Option<InequalityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<InequalityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev_sublaplacian: Option<InequalityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights_check: Option<WeightsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repformula: Option<RepformulaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morrey: Option<MorreyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campanato: Option<MorreyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leibniz: Option<LeibnizConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_constants: Option<VolumeConfig>,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_levels() -> usize {
    DEFAULT_ANNULI_LEVELS
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            samples: DEFAULT_SAMPLES,
            scheme: SchemeChoice::Uniform,
            levels: DEFAULT_ANNULI_LEVELS,
            group_info: None,
            counterexample: None,
            poincare: None,
            sobolev: None,
            sobolev_sublaplacian: None,
            weights_check: None,
            repformula: None,
            morrey: None,
            campanato: None,
            leibniz: None,
            volume_constants: None,
        }
    }
}

impl ExperimentConfig {
    /// Unknown keys and malformed values surface as parse errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The quadrature scheme with samples and seed applied.
    pub fn quadrature(&self) -> QuadratureScheme {
        match self.scheme {
            SchemeChoice::Uniform => QuadratureScheme::uniform(self.samples, self.seed),
            SchemeChoice::Annuli => QuadratureScheme::annuli(self.samples, self.levels, self.seed),
            SchemeChoice::Grid => QuadratureScheme::grid(self.samples),
        }
    }

    /// Annuli scheme for singular integrals, whatever the ball scheme.
    pub fn singular_quadrature(&self) -> QuadratureScheme {
        QuadratureScheme::annuli(self.samples, self.levels, self.seed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupInfoConfig {
    pub group: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub p: f64,
    pub q: f64,
    /// Dyadic range such as `2^-2..2^-8`, or a comma-separated list.
    pub eps: String,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig { p: 0.5, q: 1.0, eps: "2^-2..2^-8".into() }
    }
}

/// Shared by the Poincaré and both Sobolev commands.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityConfig {
    pub group: String,
    pub p_list: Vec<f64>,
    /// Defaults to `1/Σ(1/p_i)`; a different value fails validation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub q: f64,
    pub k: u32,
    #[serde(default = "one_weight")]
    pub u: Weight,
    /// One per slot; defaults to constant weights.
    #[serde(default)]
    pub v: Vec<Weight>,
    /// Ignored for sweeps.
    #[serde(default)]
    pub functions: Vec<TestFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<GaugeBall>,
    /// For `poincare`: a positive count runs a randomized sweep.
    #[serde(default)]
    pub trials: usize,
    /// Attach a sampled weight-condition verdict.
    #[serde(default = "yes")]
    pub check_weights: bool,
    #[serde(default = "default_sampler")]
    pub sampler: BallSampler,
}

fn one_weight() -> Weight {
    Weight::one()
}
fn yes() -> bool {
    true
}
fn default_sampler() -> BallSampler {
    BallSampler::new(24, 0)
}

impl InequalityConfig {
    pub fn system(&self) -> ExponentSystem {
        let mut s = ExponentSystem::new(self.p_list.clone(), self.q, self.k);
        if let Some(p) = self.p {
            s.p = p;
        }
        s
    }

    pub fn weights(&self) -> Vec<Weight> {
        if self.v.is_empty() {
            vec![Weight::one(); self.p_list.len()]
        } else {
            self.v.clone()
        }
    }

    pub fn default_poincare() -> Self {
        InequalityConfig {
            group: "heisenberg:1".into(),
            p_list: vec![2.0, 2.0],
            p: None,
            q: 4.0 / 3.0,
            k: 1,
            u: Weight::one(),
            v: Vec::new(),
            functions: vec![
                TestFunction::bump(Point::new(vec![0.1, 0.0, 0.0]), 0.8),
                TestFunction::bump(Point::new(vec![-0.1, 0.2, 0.0]), 0.9),
            ],
            ball: Some(GaugeBall { center: Point::new(vec![0.0, 0.0, 0.0]), radius: 0.75 }),
            trials: 0,
            check_weights: true,
            sampler: default_sampler(),
        }
    }

    pub fn default_sobolev() -> Self {
        InequalityConfig { ball: None, k: 1, ..Self::default_poincare() }
    }

    pub fn default_sobolev_sublaplacian() -> Self {
        InequalityConfig { ball: None, k: 2, q: 2.0, ..Self::default_poincare() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub group: String,
    pub p_list: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub q: f64,
    pub k: u32,
    #[serde(default = "one_weight")]
    pub u: Weight,
    #[serde(default)]
    pub v: Vec<Weight>,
    #[serde(default = "default_sampler")]
    pub sampler: BallSampler,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
}

fn default_t_grid() -> Vec<f64> {
    DEFAULT_T_GRID.to_vec()
}

impl Default for WeightsConfig {
    fn default() -> Self {
        WeightsConfig {
            group: "heisenberg:1".into(),
            p_list: vec![2.0, 2.0],
            p: None,
            q: 4.0 / 3.0,
            k: 1,
            u: Weight::one(),
            v: Vec::new(),
            sampler: default_sampler(),
            t_grid: default_t_grid(),
        }
    }
}

impl WeightsConfig {
    pub fn system(&self) -> ExponentSystem {
        let mut s = ExponentSystem::new(self.p_list.clone(), self.q, self.k);
        if let Some(p) = self.p {
            s.p = p;
        }
        s
    }

    pub fn weights(&self) -> Vec<Weight> {
        if self.v.is_empty() {
            vec![Weight::one(); self.p_list.len()]
        } else {
            self.v.clone()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepformulaConfig {
    pub group: String,
    pub functions: Vec<TestFunction>,
    pub ball: GaugeBall,
    pub k: u32,
    /// Evaluation points drawn uniformly from the ball.
    pub points: usize,
}

impl Default for RepformulaConfig {
    fn default() -> Self {
        RepformulaConfig {
            group: "euclidean:1".into(),
            functions: vec![
                TestFunction::bump(Point::new(vec![0.1]), 0.8),
                TestFunction::bump(Point::new(vec![-0.2]), 1.0),
            ],
            ball: GaugeBall { center: Point::new(vec![0.0]), radius: 0.5 },
            k: 2,
            points: 20,
        }
    }
}

/// Shared by `morrey` and `campanato`; `k` is used by the latter only.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorreyConfig {
    pub group: String,
    pub function: TestFunction,
    #[serde(default = "one_weight")]
    pub w: Weight,
    pub p: f64,
    pub lambda: f64,
    #[serde(default = "one_k")]
    pub k: u32,
    #[serde(default = "default_sampler")]
    pub sampler: BallSampler,
    #[serde(default)]
    pub normalization: Normalization,
}

fn one_k() -> u32 {
    1
}

impl Default for MorreyConfig {
    fn default() -> Self {
        MorreyConfig {
            group: "euclidean:1".into(),
            function: TestFunction::bump(Point::new(vec![0.0]), 1.0),
            w: Weight::one(),
            p: 2.0,
            lambda: 1.0,
            k: 1,
            sampler: default_sampler(),
            normalization: Normalization::Ambient,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeibnizConfig {
    pub group: String,
    /// `f` and `g`; ignored when `configurations > 0`.
    #[serde(default)]
    pub functions: Vec<TestFunction>,
    #[serde(default = "one_weight")]
    pub u: Weight,
    #[serde(default)]
    pub v: Vec<Weight>,
    pub p_list: Vec<f64>,
    pub q: f64,
    pub k: u32,
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(default = "default_sampler")]
    pub sampler: BallSampler,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub configurations: usize,
}

impl Default for LeibnizConfig {
    fn default() -> Self {
        LeibnizConfig {
            group: "euclidean:1".into(),
            functions: vec![
                TestFunction::bump(Point::new(vec![0.1]), 0.8),
                TestFunction::bump(Point::new(vec![-0.2]), 1.0),
            ],
            u: Weight::one(),
            v: Vec::new(),
            p_list: vec![2.0, 2.0],
            q: 1.0,
            k: 2,
            lambda: 1.0,
            lambda1: 1.0,
            lambda2: 1.0,
            sampler: BallSampler { count: 16, half_width: 1.0, r_min: 0.05, r_max: 4.0, seed: 0 },
            normalization: Normalization::Ambient,
            configurations: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeConfig {
    pub group: String,
}
