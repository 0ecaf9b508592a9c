//! Median-of-means sub-queries and the geometric μ-schedule shared by the
//! single- and multi-resolution estimators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variance::VarianceProfile;

/// `⌈x⌉`, treating values within 1e-9 (relative) of an integer as that
/// integer so that e.g. `6/0.1²` does not round up to 601.
pub(crate) fn ceil_snap(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Group size `m = ⌈6ε⁻²V(μ)⌉`.
pub fn group_size(eps: f64, v_mu: f64) -> usize {
    ceil_snap(6.0 * v_mu / (eps * eps)).max(1)
}

/// Group count `L = ⌈9·ln(1/δ₀)⌉`.
pub fn group_count(delta0: f64) -> usize {
    ceil_snap(9.0 * (1.0 / delta0).ln()).max(1)
}

/// How a sub-query picks hash functions for its draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Every draw uses the next function index of a cursor that starts at a
    /// random offset and wraps modulo `R`, so no function repeats within a
    /// sub-query while `m·L ≤ R`. Draws are then independent, which the
    /// median-of-means tail bound needs.
    #[default]
    Fresh,
    /// One function index `r ~ U[R]` per group, shared by the group's `m`
    /// draws. Group means then concentrate around `E[Z | h_r]` rather than
    /// `E[Z]`, so the tail bound only holds when that conditional mean has
    /// small spread.
    WithReplacement,
}

/// Construction parameters shared by every estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbeParams {
    pub eps: f64,
    pub delta: f64,
    pub tau: f64,
    /// Overrides the derived number of hash functions `R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
}

impl HbeParams {
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
        if !(self.eps > 0.0 && self.eps < 0.1) {
            return Err(Error::param("eps", format!("must lie in (0, 0.1), got {}", self.eps)));
        }
        open_unit("delta", self.delta)?;
        open_unit("tau", self.tau)?;
        if self.repetitions == Some(0) {
            return Err(Error::param("repetitions", "must be at least 1"));
        }
        Ok(())
    }

    /// `R`: the override if set, otherwise `m_max·L_max` with
    /// `m_max = ⌈6ε⁻²V(τ)⌉` and `L_max = ⌈9·ln(1/δ)⌉`.
    pub fn repetitions(&self, vprof: &VarianceProfile) -> Result<usize> {
        self.validate()?;
        match self.repetitions {
            Some(r) => Ok(r),
            None => {
                let (m, l) = repetition_factors(self.eps, self.delta, self.tau, vprof)?;
                Ok(m * l)
            }
        }
    }
}

/// `(m_max, L_max)` for the given construction parameters.
pub fn repetition_factors(
    eps: f64,
    delta: f64,
    tau: f64,
    vprof: &VarianceProfile,
) -> Result<(usize, usize)> {
    Ok((group_size(eps, vprof.eval(tau)?), group_count(delta)))
}

pub(crate) fn open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in (0, 1), got {v}")))
    }
}

/// Parameters derived from `(α, τ)` for the μ-schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuerySchedule {
    pub alpha: f64,
    pub tau: f64,
    /// `ε = 2α/7`
    pub eps: f64,
    /// `c = ε/2`
    pub c: f64,
    /// `γ = ε/7`
    pub gamma: f64,
    /// `δ₀ = min(2α/(49·ln(1/τ)), 1/2)`
    pub delta0: f64,
    /// Last schedule index `Q = max(0, ⌊ln(τ/(1−(c+ε))) / ln(1−γ)⌋)`.
    pub last_index: usize,
    /// Break indices above `49·ln(1/τ)/(2α)` return zero.
    pub cutoff: f64,
}

impl QuerySchedule {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1], got {alpha}")));
        }
        open_unit("tau", tau)?;
        let eps = 2.0 * alpha / 7.0;
        let c = eps / 2.0;
        let gamma = eps / 7.0;
        let log_inv_tau = (1.0 / tau).ln();
        let delta0 = (2.0 * alpha / (49.0 * log_inv_tau)).min(0.5);
        let q = ((tau / (1.0 - (c + eps))).ln() / (1.0 - gamma).ln()).floor();
        Ok(Self {
            alpha,
            tau,
            eps,
            c,
            gamma,
            delta0,
            last_index: q.max(0.0) as usize,
            cutoff: 49.0 * log_inv_tau / (2.0 * alpha),
        })
    }

    /// `μ_i = (1−γ)^i`
    pub fn mu(&self, i: usize) -> f64 {
        (1.0 - self.gamma).powi(i as i32)
    }

    /// Accuracy handed to each sub-query.
    pub fn subquery_eps(&self) -> f64 {
        self.eps / 3.0
    }
}

/// Output of a query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Set when the query concluded `μ < τ`; the value is then 0.
    pub zero_flag: bool,
    /// Schedule index at which the loop stopped (`Q + 1` when it ran out).
    pub schedule_index: usize,
    /// Bucket draws consumed.
    pub samples_used: u64,
}

impl Estimate {
    pub fn zero(schedule_index: usize, samples_used: u64) -> Self {
        Self {
            value: 0.0,
            zero_flag: true,
            schedule_index,
            samples_used,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubqueryOutcome {
    pub value: f64,
    /// `m`
    pub group_size: usize,
    /// `L`
    pub groups: usize,
    pub samples_used: u64,
}

/// Lower median: element `⌊(len−1)/2⌋` of the sorted values.
pub fn lower_median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = values.to_vec();
    let k = (v.len() - 1) / 2;
    let (_, m, _) = v.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*m)
}

/// A repeated estimator whose `r`-th repetition can be evaluated at a query.
pub(crate) trait Sampler {
    type Probe<'a>: Probe
    where
        Self: 'a;
    fn repetitions(&self) -> usize;
    fn variance_profile(&self) -> &VarianceProfile;
    /// Bucket draws per estimator evaluation.
    fn draws_per_estimate(&self) -> u64;
    /// Per-query view that looks up the query's bucket under each repetition
    /// at most once, however many draws reuse it.
    fn probe<'a>(&'a self, q: &'a [f64]) -> Self::Probe<'a>;
}

pub(crate) trait Probe {
    /// One estimator evaluation using repetition `r`.
    fn estimate<R: Rng + ?Sized>(&mut self, r: usize, rng: &mut R) -> f64;
}

pub(crate) fn run_subquery<S: Sampler, R: Rng + ?Sized>(
    s: &S,
    probe: &mut S::Probe<'_>,
    mu: f64,
    eps: f64,
    delta0: f64,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<SubqueryOutcome> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::param("mu", format!("must lie in (0, 1], got {mu}")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param("eps", format!("must lie in (0, 1], got {eps}")));
    }
    open_unit("delta0", delta0)?;
    let m = group_size(eps, s.variance_profile().eval(mu)?);
    let l = group_count(delta0);
    let reps = s.repetitions();
    let means: Vec<f64> = match mode {
        SamplingMode::WithReplacement => (0..l)
            .map(|_| {
                let r = rng.random_range(0..reps);
                let sum: f64 = (0..m).map(|_| probe.estimate(r, rng)).sum();
                sum / m as f64
            })
            .collect(),
        SamplingMode::Fresh => {
            let mut cursor = rng.random_range(0..reps);
            (0..l)
                .map(|_| {
                    let mut sum = 0.0;
                    for _ in 0..m {
                        sum += probe.estimate(cursor, rng);
                        cursor = (cursor + 1) % reps;
                    }
                    sum / m as f64
                })
                .collect()
        }
    };
    Ok(SubqueryOutcome {
        value: lower_median(&means)?,
        group_size: m,
        groups: l,
        samples_used: (m * l) as u64 * s.draws_per_estimate(),
    })
}

pub(crate) fn run_query<S: Sampler, R: Rng + ?Sized>(
    s: &S,
    q: &[f64],
    alpha: f64,
    tau: f64,
    delta: f64,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<Estimate> {
    let sched = QuerySchedule::new(alpha, tau)?;
    open_unit("delta", delta)?;
    let mut probe = s.probe(q);
    let mut samples = 0u64;
    for i in 0..=sched.last_index {
        let mu = sched.mu(i);
        let out = run_subquery(s, &mut probe, mu, sched.subquery_eps(), sched.delta0, mode, rng)?;
        samples += out.samples_used;
        if (out.value - mu).abs() <= sched.c * mu {
            if i as f64 <= sched.cutoff {
                return Ok(Estimate {
                    value: out.value,
                    zero_flag: false,
                    schedule_index: i,
                    samples_used: samples,
                });
            }
            return Ok(Estimate::zero(i, samples));
        }
    }
    Ok(Estimate::zero(sched.last_index + 1, samples))
}
