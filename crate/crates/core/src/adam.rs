//! Adaptive wrapper: `L` independent multi-resolution estimators queried at
//! the nearest point of an implicit ε₀-net, aggregated by the lower median.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{check_dim, check_finite, norm, Dataset, Point, PointId};
use crate::error::{Error, Result};
use crate::hbe_multi::MultiHbe;
use crate::kernel::KernelSpec;
use crate::lsh::HashFamily;
use crate::schedule::{ceil_snap, lower_median, open_unit, Estimate, HbeParams, SamplingMode};
use crate::seed;
use crate::variance::VarianceProfile;

/// Failure probability each inner estimator is run at.
pub const INNER_FAILURE: f64 = 0.1;

/// Queries may exceed the unit ball by this much; they are then normalized.
pub const NORM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    /// User-facing relative accuracy; inner estimators run at `eps/3`.
    pub eps: f64,
    pub delta: f64,
    pub tau: f64,
    /// Overrides `R` of each inner estimator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
}

impl AdamParams {
    pub fn new(eps: f64, delta: f64, tau: f64) -> Self {
        Self {
            eps,
            delta,
            tau,
            repetitions: None,
        }
    }

    pub fn with_repetitions(mut self, r: usize) -> Self {
        self.repetitions = Some(r);
        self
    }

    pub fn validate(&self) -> Result<()> {
        // eps/3 must be a valid construction accuracy for the inner estimators.
        if !(self.eps > 0.0 && self.eps < 0.3) {
            return Err(Error::param("eps", format!("must lie in (0, 0.3), got {}", self.eps)));
        }
        open_unit("delta", self.delta)?;
        open_unit("tau", self.tau)
    }

    /// Accuracy of each inner query.
    pub fn inner_eps(&self) -> f64 {
        self.eps / 3.0
    }

    pub(crate) fn inner(&self) -> HbeParams {
        HbeParams {
            eps: self.inner_eps(),
            delta: INNER_FAILURE,
            tau: self.tau,
            repetitions: self.repetitions,
        }
    }
}

/// Number of independent estimators, `⌈d·ln(10k/(ετ)) + ln(1/δ)⌉`.
pub fn estimator_count(k: f64, eps: f64, tau: f64, dim: usize, delta: f64) -> usize {
    ceil_snap(dim as f64 * (10.0 * k / (eps * tau)).ln() + (1.0 / delta).ln()).max(1)
}

/// Rounds points of the unit ball onto the lattice `cell·ℤ^d`, `cell = ε₀/√d`,
/// projecting back onto the ball when rounding leaves it.
#[derive(Debug, Clone, PartialEq)]
pub struct NetQuantizer {
    dim: usize,
    eps0: f64,
    cell: f64,
}

impl NetQuantizer {
    pub fn new(dim: usize, eps0: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        if !(eps0.is_finite() && eps0 > 0.0) {
            return Err(Error::param("eps0", "must be positive"));
        }
        Ok(Self {
            dim,
            eps0,
            cell: eps0 / (dim as f64).sqrt(),
        })
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn quantize(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, q)?;
        check_finite(q)?;
        let qn = norm(q);
        if qn > 1.0 + NORM_SLACK {
            return Err(Error::NormOutOfRange(qn));
        }
        let scale = if qn > 1.0 { 1.0 / qn } else { 1.0 };
        // Nearest multiple of `cell`; exact halves go toward −∞.
        let mut p: Vec<f64> = q
            .iter()
            .map(|&x| (x * scale / self.cell - 0.5).ceil() * self.cell)
            .collect();
        let pn = norm(&p);
        if pn > 1.0 {
            p.iter_mut().for_each(|v| *v /= pn);
            while norm(&p) > 1.0 {
                p.iter_mut().for_each(|v| *v *= 1.0 - f64::EPSILON);
            }
        }
        Ok(p)
    }
}

/// Lower median of `values`.
pub fn median_aggregate(values: &[f64]) -> Result<f64> {
    lower_median(values)
}

#[derive(Debug)]
pub struct AdamHash {
    estimators: Vec<MultiHbe>,
    kernel: KernelSpec,
    params: AdamParams,
    quantizer: NetQuantizer,
    seed: u64,
}

impl AdamHash {
    /// Builds `L` multi-resolution estimators with child seeds derived from `seed`.
    pub fn initialize(
        data: Dataset,
        kernel: KernelSpec,
        vprof: VarianceProfile,
        families: Vec<HashFamily>,
        params: AdamParams,
        seed: u64,
    ) -> Result<Self> {
        kernel.validate()?;
        params.validate()?;
        let k = kernel.lipschitz_k;
        let count = estimator_count(k, params.eps, params.tau, data.dim(), params.delta);
        let quantizer = NetQuantizer::new(data.dim(), params.eps * params.tau / k)?;
        let estimators = (0..count as u64)
            .map(|i| {
                MultiHbe::initialize(
                    data.clone(),
                    kernel.clone(),
                    vprof.clone(),
                    families.clone(),
                    params.inner(),
                    seed::derive(seed, i),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            estimators,
            kernel,
            params,
            quantizer,
            seed,
        })
    }

    pub(crate) fn restore(
        estimators: Vec<MultiHbe>,
        kernel: KernelSpec,
        params: AdamParams,
        seed: u64,
    ) -> Result<Self> {
        let dim = estimators
            .first()
            .map(|e| e.dataset().dim())
            .ok_or_else(|| Error::Format("no estimators".into()))?;
        let quantizer = NetQuantizer::new(dim, params.eps * params.tau / kernel.lipschitz_k)?;
        Ok(Self {
            estimators,
            kernel,
            params,
            quantizer,
            seed,
        })
    }

    /// Child seed of estimator `i`.
    pub fn child_seed(&self, i: usize) -> u64 {
        seed::derive(self.seed, i as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn estimators(&self) -> &[MultiHbe] {
        &self.estimators
    }

    /// `L`
    pub fn len(&self) -> usize {
        self.estimators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimators.is_empty()
    }

    pub fn params(&self) -> &AdamParams {
        &self.params
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn quantizer(&self) -> &NetQuantizer {
        &self.quantizer
    }

    pub fn eps0(&self) -> f64 {
        self.quantizer.eps0
    }

    pub fn dataset(&self) -> &Dataset {
        self.estimators[0].dataset()
    }

    /// Number of live points.
    pub fn n(&self) -> usize {
        self.dataset().len()
    }

    pub fn hash_evals(&self) -> u64 {
        self.estimators.iter().map(MultiHbe::hash_evals).sum()
    }

    pub fn set_sampling_mode(&mut self, mode: SamplingMode) {
        self.estimators.iter_mut().for_each(|e| e.set_sampling_mode(mode));
    }

    /// Quantizes `q` and returns the lower median of the inner estimates.
    /// Each inner estimator runs with a private generator seeded from `rng`.
    pub fn query<R: Rng + ?Sized>(&self, q: &[f64], rng: &mut R) -> Result<Estimate> {
        let p = self.quantizer.quantize(q)?;
        let alpha = self.params.inner_eps();
        let mut estimates = Vec::with_capacity(self.estimators.len());
        for est in &self.estimators {
            let mut child = ChaCha8Rng::seed_from_u64(rng.random());
            estimates.push(est.query(&p, alpha, self.params.tau, INNER_FAILURE, &mut child)?);
        }
        let samples = estimates.iter().map(|e| e.samples_used).sum();
        estimates.sort_by(|a, b| a.value.total_cmp(&b.value));
        let mid = estimates[(estimates.len() - 1) / 2];
        Ok(Estimate {
            value: mid.value,
            zero_flag: mid.value == 0.0,
            schedule_index: mid.schedule_index,
            samples_used: samples,
        })
    }

    /// Inserts `x` into every estimator; `L·R·G` hash evaluations.
    pub fn insert(&mut self, x: &[f64]) -> Result<PointId> {
        let mut first = None;
        for e in &mut self.estimators {
            let id = e.insert(x)?;
            if *first.get_or_insert(id) != id {
                return Err(Error::Format(format!("estimators disagree on id {id}")));
            }
        }
        Ok(first.expect("at least one estimator"))
    }

    /// Deletes point `id` from every estimator; `L·R·G` hash evaluations.
    pub fn delete(&mut self, id: PointId) -> Result<Point> {
        if !self.dataset().contains(id) {
            return Err(Error::UnknownPoint(id));
        }
        let mut removed = None;
        for e in &mut self.estimators {
            removed = Some(e.delete(id)?);
        }
        Ok(removed.expect("at least one estimator"))
    }
}
