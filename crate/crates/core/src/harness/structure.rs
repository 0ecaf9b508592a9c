//! A built estimator of any mode, together with the settings needed to
//! rebuild or query it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{Mode, RunConfig};
use crate::adam::{AdamHash, AdamParams};
use crate::dataset::{Dataset, Point, PointId};
use crate::error::{Error, Result};
use crate::hbe_multi::MultiHbe;
use crate::hbe_single::SingleHbe;
use crate::kernel::KernelSpec;
use crate::lsh::{FamilyKind, HashFamily};
use crate::schedule::{Estimate, HbeParams, SamplingMode};
use crate::variance::VarianceProfile;

/// Everything but the tables: enough to rebuild a structure from its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    pub mode: Mode,
    /// Master seed. Kept out of the TOML text (TOML integers are signed)
    /// and persisted as a raw `u64`.
    #[serde(skip)]
    pub seed: u64,
    pub eps: f64,
    pub delta: f64,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    pub sampling: SamplingMode,
    pub kernel: KernelSpec,
    pub variance: VarianceProfile,
    pub families: Vec<FamilyKind>,
}

impl StructureSpec {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            mode: cfg.mode,
            seed: cfg.seed,
            eps: cfg.params.eps,
            delta: cfg.params.delta,
            tau: cfg.params.tau,
            alpha: cfg.params.alpha,
            repetitions: cfg.params.repetitions,
            sampling: cfg.params.sampling,
            kernel: cfg.kernel.spec()?,
            variance: cfg.variance.clone(),
            families: cfg.family_kinds(),
        })
    }

    pub(crate) fn hash_families(&self, dim: usize) -> Result<Vec<HashFamily>> {
        self.families.iter().map(|k| HashFamily::new(k.clone(), dim)).collect()
    }

    pub(crate) fn hbe_params(&self) -> HbeParams {
        HbeParams {
            eps: self.eps,
            delta: self.delta,
            tau: self.tau,
            repetitions: self.repetitions,
        }
    }

    pub(crate) fn adam_params(&self) -> AdamParams {
        AdamParams {
            eps: self.eps,
            delta: self.delta,
            tau: self.tau,
            repetitions: self.repetitions,
        }
    }

    /// Relative-error bound of the query contract.
    pub fn accuracy(&self) -> f64 {
        match self.mode {
            Mode::Adam => self.eps,
            _ => self.alpha.unwrap_or(self.eps),
        }
    }
}

pub enum Engine {
    Single(SingleHbe),
    Multi(MultiHbe),
    Adam(AdamHash),
}

pub struct Structure {
    spec: StructureSpec,
    engine: Engine,
}

impl Structure {
    pub fn build(spec: StructureSpec, data: Dataset) -> Result<Self> {
        let families = spec.hash_families(data.dim())?;
        let kernel = spec.kernel.clone();
        let vprof = spec.variance.clone();
        let engine = match spec.mode {
            Mode::Single => {
                let [family]: [HashFamily; 1] = families
                    .try_into()
                    .map_err(|_| Error::Config("single mode takes exactly one family".into()))?;
                Engine::Single(SingleHbe::initialize(data, kernel, vprof, family, spec.hbe_params(), spec.seed)?)
            }
            Mode::Multi => Engine::Multi(MultiHbe::initialize(
                data,
                kernel,
                vprof,
                families,
                spec.hbe_params(),
                spec.seed,
            )?),
            Mode::Adam => Engine::Adam(AdamHash::initialize(
                data,
                kernel,
                vprof,
                families,
                spec.adam_params(),
                spec.seed,
            )?),
        };
        Ok(Self::from_parts(spec, engine))
    }

    pub(crate) fn from_parts(spec: StructureSpec, mut engine: Engine) -> Self {
        match &mut engine {
            Engine::Single(s) => s.set_sampling_mode(spec.sampling),
            Engine::Multi(m) => m.set_sampling_mode(spec.sampling),
            Engine::Adam(a) => a.set_sampling_mode(spec.sampling),
        }
        Self { spec, engine }
    }

    pub fn spec(&self) -> &StructureSpec {
        &self.spec
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn mode(&self) -> Mode {
        self.spec.mode
    }

    pub fn dataset(&self) -> &Dataset {
        match &self.engine {
            Engine::Single(s) => s.dataset(),
            Engine::Multi(m) => m.dataset(),
            Engine::Adam(a) => a.dataset(),
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.spec.kernel
    }

    pub fn hash_evals(&self) -> u64 {
        match &self.engine {
            Engine::Single(s) => s.hash_evals(),
            Engine::Multi(m) => m.hash_evals(),
            Engine::Adam(a) => a.hash_evals(),
        }
    }

    /// Hash evaluations one insert or delete costs: `R`, `R·G` or `L·R·G`.
    pub fn hash_evals_per_op(&self) -> u64 {
        let per = |m: &MultiHbe| (m.repetitions() * m.schemes()) as u64;
        match &self.engine {
            Engine::Single(s) => s.repetitions() as u64,
            Engine::Multi(m) => per(m),
            Engine::Adam(a) => a.estimators().iter().map(per).sum(),
        }
    }

    pub fn query<R: Rng + ?Sized>(&self, q: &[f64], rng: &mut R) -> Result<Estimate> {
        let s = &self.spec;
        let alpha = s.accuracy();
        match &self.engine {
            Engine::Single(e) => e.query(q, alpha, s.tau, s.delta, rng),
            Engine::Multi(e) => e.query(q, alpha, s.tau, s.delta, rng),
            Engine::Adam(e) => e.query(q, rng),
        }
    }

    pub fn insert(&mut self, x: &[f64]) -> Result<PointId> {
        match &mut self.engine {
            Engine::Single(s) => s.insert(x),
            Engine::Multi(m) => m.insert(x),
            Engine::Adam(a) => a.insert(x),
        }
    }

    pub fn delete(&mut self, id: PointId) -> Result<Point> {
        match &mut self.engine {
            Engine::Single(s) => s.delete(id),
            Engine::Multi(m) => m.delete(id),
            Engine::Adam(a) => a.delete(id),
        }
    }
}
