//! TOML run configuration.
//!
//! ```toml
//! mode = "adam"
//! seed = 7
//!
//! [dataset]
//! path = "points.csv"
//!
//! [kernel]
//! kind = "gaussian"
//! scale = 0.5
//!
//! [variance]
//! kind = "reciprocal"
//!
//! [[families]]
//! kind = "srp"
//! bits = 1
//!
//! [params]
//! eps = 0.25
//! delta = 0.1
//! tau = 0.4
//!
//! [workload]
//! structure = "points.adms"
//! queries = "queries.csv"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::DataFormat;
use crate::kernel::{KernelKind, KernelSpec};
use crate::lsh::FamilyKind;
use crate::schedule::SamplingMode;
use crate::variance::VarianceProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Multi,
    Adam,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Multi => "multi",
            Mode::Adam => "adam",
        }
    }

    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Mode::Single => 0,
            Mode::Multi => 1,
            Mode::Adam => 2,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Mode::Single),
            1 => Ok(Mode::Multi),
            2 => Ok(Mode::Adam),
            _ => Err(Error::Format(format!("unknown mode byte {b}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: DataFormat,
}

fn default_format() -> DataFormat {
    DataFormat::Csv
}

/// Kernel section: the kernel kind plus an optional Lipschitz override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(flatten)]
    pub kind: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

impl KernelConfig {
    pub fn spec(&self) -> Result<KernelSpec> {
        let spec = KernelSpec::new(self.kind.clone())?;
        match self.lipschitz {
            Some(k) => spec.with_lipschitz(k),
            None => Ok(spec),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    /// Construction accuracy (single/multi) or user-facing accuracy (adam).
    pub eps: f64,
    pub delta: f64,
    pub tau: f64,
    /// Query accuracy for single/multi; unused by adam.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Overrides the number of hash tables per family.
    #[serde(default)]
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub sampling: SamplingMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Structure file written by `build` and read by the other commands.
    #[serde(default)]
    pub structure: Option<PathBuf>,
    /// CSV of query points for `query`.
    #[serde(default)]
    pub queries: Option<PathBuf>,
    /// Operation script for `mutate`.
    #[serde(default)]
    pub ops: Option<PathBuf>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Perturbation radius of the adversary.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Candidates proposed per adversary round.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
}

fn default_rounds() -> usize {
    200
}

fn default_radius() -> f64 {
    0.1
}

fn default_candidates() -> usize {
    8
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            structure: None,
            queries: None,
            ops: None,
            rounds: default_rounds(),
            radius: default_radius(),
            candidates: default_candidates(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub dataset: DatasetConfig,
    pub kernel: KernelConfig,
    #[serde(default = "default_variance")]
    pub variance: VarianceProfile,
    /// Hash families; one for single mode. Defaults to SRP with 1 bit
    /// (single) or SRP with 1, 2 and 3 bits (multi, adam).
    #[serde(default)]
    pub families: Option<Vec<FamilyKind>>,
    pub params: ParamsConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workload: WorkloadConfig,
    /// Default report path for `query` and `adversary`.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_variance() -> VarianceProfile {
    VarianceProfile::Reciprocal
}

impl RunConfig {
    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset.path);
        for p in [
            &mut self.workload.structure,
            &mut self.workload.queries,
            &mut self.workload.ops,
            &mut self.output,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Checks the parameters that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.kernel.spec()?;
        self.variance.validate()?;
        let families = self.family_kinds();
        if families.is_empty() {
            return Err(Error::Config("at least one hash family is required".into()));
        }
        if self.mode == Mode::Single && families.len() != 1 {
            return Err(Error::Config(format!(
                "single mode takes exactly one family, got {}",
                families.len()
            )));
        }
        if self.mode != Mode::Adam {
            match self.params.alpha {
                Some(a) if a > 0.0 && a <= 1.0 => {}
                Some(a) => return Err(Error::Config(format!("alpha must lie in (0, 1], got {a}"))),
                None => return Err(Error::Config(format!("{} mode needs params.alpha", self.mode))),
            }
        }
        if self.params.repetitions == Some(0) {
            return Err(Error::Config("repetitions must be positive".into()));
        }
        if self.workload.candidates == 0 {
            return Err(Error::Config("workload.candidates must be positive".into()));
        }
        if !(self.workload.radius.is_finite() && self.workload.radius >= 0.0) {
            return Err(Error::Config("workload.radius must be non-negative".into()));
        }
        Ok(())
    }

    pub fn family_kinds(&self) -> Vec<FamilyKind> {
        match (&self.families, self.mode) {
            (Some(f), _) => f.clone(),
            (None, Mode::Single) => vec![FamilyKind::Srp { bits: 1 }],
            (None, _) => (1..=3).map(|bits| FamilyKind::Srp { bits }).collect(),
        }
    }
}
