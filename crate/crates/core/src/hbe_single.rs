//! Dynamic single-resolution hashing-based estimator.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{check_dim, check_finite, Dataset, Point, PointId};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::lsh::{build_table, sample_function, HashFamily, HashFunction, HashTable, P_MIN};
use crate::schedule::{run_query, run_subquery, Estimate, HbeParams, Probe, Sampler, SamplingMode, SubqueryOutcome};
use crate::variance::VarianceProfile;

/// Generator that draws the hash functions of a structure built from `seed`.
pub(crate) fn function_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `R` sampled hash functions, each with a table over the live dataset.
#[derive(Debug)]
pub struct SingleHbe {
    data: Dataset,
    kernel: KernelSpec,
    vprof: VarianceProfile,
    family: HashFamily,
    params: HbeParams,
    seed: u64,
    mode: SamplingMode,
    functions: Vec<HashFunction>,
    tables: Vec<HashTable>,
    hash_evals: u64,
    samples_drawn: AtomicU64,
}

impl SingleHbe {
    /// Samples `R` functions from `family` using `seed` and hashes every point
    /// of `data` with each of them.
    pub fn initialize(
        data: Dataset,
        kernel: KernelSpec,
        vprof: VarianceProfile,
        family: HashFamily,
        params: HbeParams,
        seed: u64,
    ) -> Result<Self> {
        vprof.validate()?;
        let reps = params.repetitions(&vprof)?;
        let mut rng = function_rng(seed);
        let functions = (0..reps).map(|_| sample_function(&family, &mut rng)).collect();
        Self::with_functions(data, kernel, vprof, family, params, seed, functions)
    }

    /// Builds tables for explicitly supplied functions.
    pub fn with_functions(
        data: Dataset,
        kernel: KernelSpec,
        vprof: VarianceProfile,
        family: HashFamily,
        params: HbeParams,
        seed: u64,
        functions: Vec<HashFunction>,
    ) -> Result<Self> {
        kernel.validate()?;
        vprof.validate()?;
        params.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if family.dim != data.dim() {
            return Err(Error::DimensionMismatch {
                expected: data.dim(),
                got: family.dim,
            });
        }
        if functions.is_empty() {
            return Err(Error::param("repetitions", "at least one hash function is required"));
        }
        if let Some(h) = functions.iter().find(|h| h.family() != &family) {
            return Err(Error::param("functions", format!("function from {:?}", h.family())));
        }
        let tables = functions
            .iter()
            .map(|h| build_table(h, &data))
            .collect::<Result<Vec<_>>>()?;
        let hash_evals = (data.len() * functions.len()) as u64;
        Ok(Self {
            data,
            kernel,
            vprof,
            family,
            params,
            seed,
            mode: SamplingMode::default(),
            functions,
            tables,
            hash_evals,
            samples_drawn: AtomicU64::new(0),
        })
    }

    /// Reassembles a persisted structure; functions are re-derived from `seed`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn restore(
        data: Dataset,
        kernel: KernelSpec,
        vprof: VarianceProfile,
        family: HashFamily,
        params: HbeParams,
        seed: u64,
        tables: Vec<HashTable>,
        hash_evals: u64,
    ) -> Result<Self> {
        let mut rng = function_rng(seed);
        let functions = (0..tables.len()).map(|_| sample_function(&family, &mut rng)).collect();
        Ok(Self {
            data,
            kernel,
            vprof,
            family,
            params,
            seed,
            mode: SamplingMode::default(),
            functions,
            tables,
            hash_evals,
            samples_drawn: AtomicU64::new(0),
        })
    }

    pub fn set_sampling_mode(&mut self, mode: SamplingMode) {
        self.mode = mode;
    }

    pub fn sampling_mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn variance(&self) -> &VarianceProfile {
        &self.vprof
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn params(&self) -> &HbeParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of hash functions `R`.
    pub fn repetitions(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> &[HashFunction] {
        &self.functions
    }

    pub fn tables(&self) -> &[HashTable] {
        &self.tables
    }

    /// Data-point hash evaluations performed by construction and updates.
    pub fn hash_evals(&self) -> u64 {
        self.hash_evals
    }

    /// Bucket draws performed by all queries so far.
    pub fn samples_drawn(&self) -> u64 {
        self.samples_drawn.load(Ordering::Relaxed)
    }

    /// Ids in the bucket of `q` under function `r`.
    pub fn bucket_of(&self, q: &[f64], r: usize) -> Result<&[PointId]> {
        self.check_query(q)?;
        self.check_index(r)?;
        Ok(self.tables[r].bucket(&self.functions[r].hash_unchecked(q)))
    }

    /// `(1/n)·(w(q,y)/p(q,y))·|H|` for a sampled `y` from a bucket of size `bucket_size`.
    pub fn estimator_value(&self, q: &[f64], y: PointId, bucket_size: usize) -> Result<f64> {
        self.check_query(q)?;
        let x = self.data.get(y).ok_or(Error::UnknownPoint(y))?;
        Ok(self.term(q, x, bucket_size) / self.data.len() as f64)
    }

    #[inline]
    fn term(&self, q: &[f64], y: &[f64], bucket_size: usize) -> f64 {
        let w = self.kernel.eval_unchecked(q, y);
        let p = self.family.probability_unchecked(q, y).max(P_MIN);
        (w / p) * bucket_size as f64
    }

    /// Draws a uniform member of `bucket`; an empty bucket gives 0 and
    /// consumes no randomness.
    #[inline]
    fn draw<R: Rng + ?Sized>(&self, q: &[f64], bucket: &[PointId], rng: &mut R) -> f64 {
        if bucket.is_empty() {
            return 0.0;
        }
        let y = bucket[rng.random_range(0..bucket.len())];
        let x = self.data.get(y).expect("table ids are live");
        self.term(q, x, bucket.len()) / self.data.len() as f64
    }

    /// One draw of the estimator using function `r`.
    pub fn estimate_once<R: Rng + ?Sized>(&self, q: &[f64], r: usize, rng: &mut R) -> Result<f64> {
        self.check_query(q)?;
        self.check_index(r)?;
        self.samples_drawn.fetch_add(1, Ordering::Relaxed);
        let bucket = self.tables[r].bucket(&self.functions[r].hash_unchecked(q));
        Ok(self.draw(q, bucket, rng))
    }

    /// Median over `⌈9·ln(1/δ₀)⌉` groups of means of `⌈6ε⁻²V(μ)⌉` draws.
    pub fn subquery<R: Rng + ?Sized>(
        &self,
        q: &[f64],
        mu: f64,
        eps: f64,
        delta0: f64,
        rng: &mut R,
    ) -> Result<SubqueryOutcome> {
        self.check_query(q)?;
        let out = run_subquery(self, &mut self.probe(q), mu, eps, delta0, self.mode, rng)?;
        self.samples_drawn.fetch_add(out.samples_used, Ordering::Relaxed);
        Ok(out)
    }

    /// Walks `μ_i = (1−γ)^i` down until a sub-query agrees with its guess.
    pub fn query<R: Rng + ?Sized>(
        &self,
        q: &[f64],
        alpha: f64,
        tau: f64,
        delta: f64,
        rng: &mut R,
    ) -> Result<Estimate> {
        self.check_query(q)?;
        let est = run_query(self, q, alpha, tau, delta, self.mode, rng)?;
        self.samples_drawn.fetch_add(est.samples_used, Ordering::Relaxed);
        Ok(est)
    }

    /// Adds `x` to the dataset and every table; `R` hash evaluations.
    pub fn insert(&mut self, x: &[f64]) -> Result<PointId> {
        let id = self.data.insert(x)?;
        for (h, t) in self.functions.iter().zip(&mut self.tables) {
            t.insert_key(h.hash_unchecked(x), id)?;
        }
        self.hash_evals += self.functions.len() as u64;
        Ok(id)
    }

    /// Removes point `id` from the dataset and every table; `R` hash evaluations.
    pub fn delete(&mut self, id: PointId) -> Result<Point> {
        let x = self.data.get(id).ok_or(Error::UnknownPoint(id))?;
        for (h, t) in self.functions.iter().zip(&mut self.tables) {
            t.delete_key(&h.hash_unchecked(x), id)?;
        }
        self.hash_evals += self.functions.len() as u64;
        self.data.remove(id)
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        check_dim(self.data.dim(), q)?;
        check_finite(q)
    }

    fn check_index(&self, r: usize) -> Result<()> {
        if r >= self.functions.len() {
            return Err(Error::param("r", format!("{r} out of range for R = {}", self.functions.len())));
        }
        Ok(())
    }
}

impl Sampler for SingleHbe {
    type Probe<'a> = SingleProbe<'a>;

    fn repetitions(&self) -> usize {
        self.functions.len()
    }

    fn variance_profile(&self) -> &VarianceProfile {
        &self.vprof
    }

    fn draws_per_estimate(&self) -> u64 {
        1
    }

    fn probe<'a>(&'a self, q: &'a [f64]) -> SingleProbe<'a> {
        SingleProbe {
            hbe: self,
            q,
            buckets: vec![None; self.functions.len()],
        }
    }
}

pub(crate) struct SingleProbe<'a> {
    hbe: &'a SingleHbe,
    q: &'a [f64],
    buckets: Vec<Option<&'a [PointId]>>,
}

impl Probe for SingleProbe<'_> {
    fn estimate<R: Rng + ?Sized>(&mut self, r: usize, rng: &mut R) -> f64 {
        let (hbe, q) = (self.hbe, self.q);
        let bucket = *self.buckets[r].get_or_insert_with(|| hbe.tables[r].bucket(&hbe.functions[r].hash_unchecked(q)));
        hbe.draw(q, bucket, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsh::HashFamily;
    use crate::schedule::{group_count, group_size, QuerySchedule};

    fn unit_square() -> Dataset {
        Dataset::from_rows(2, [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap()
    }

    fn build(ds: Dataset, reps: usize, seed: u64) -> SingleHbe {
        SingleHbe::initialize(
            ds,
            KernelSpec::gaussian(1.0).unwrap(),
            VarianceProfile::Reciprocal,
            HashFamily::srp(1, 2).unwrap(),
            HbeParams::new(0.05, 0.1, 0.25).with_repetitions(reps),
            seed,
        )
        .unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn initialize_counts_hash_work() {
        let s = build(unit_square(), 50, 1);
        assert_eq!(s.repetitions(), 50);
        assert_eq!(s.hash_evals(), 4 * 50);
        assert!(s.tables().iter().all(|t| t.total_count() == 4));
    }

    #[test]
    fn default_repetitions_follow_formula() {
        let ds = Dataset::from_rows(2, [[1.0, 0.0]]).unwrap();
        let s = SingleHbe::initialize(
            ds,
            KernelSpec::gaussian(1.0).unwrap(),
            VarianceProfile::Constant { v: 0.01 },
            HashFamily::srp(1, 2).unwrap(),
            HbeParams::new(0.09, 0.5, 0.25),
            0,
        )
        .unwrap();
        // m_max = ⌈6·0.01/0.0081⌉ = 8, L_max = ⌈9·ln 2⌉ = 7
        assert_eq!(s.repetitions(), 56);
        assert!(s.tables().iter().all(|t| t.total_count() == 1));
    }

    #[test]
    fn initialize_rejects_bad_input() {
        let k = KernelSpec::gaussian(1.0).unwrap();
        let f = HashFamily::srp(1, 2).unwrap();
        let v = VarianceProfile::Reciprocal;
        let bad_eps = SingleHbe::initialize(unit_square(), k.clone(), v.clone(), f.clone(), HbeParams::new(0.2, 0.1, 0.25), 0);
        assert!(matches!(bad_eps, Err(Error::InvalidParameter { name: "eps", .. })));
        let empty = SingleHbe::initialize(Dataset::new(2).unwrap(), k.clone(), v.clone(), f, HbeParams::new(0.05, 0.1, 0.25).with_repetitions(3), 0);
        assert!(matches!(empty, Err(Error::EmptyDataset)));
        let wrong_dim = SingleHbe::initialize(unit_square(), k, v, HashFamily::srp(1, 3).unwrap(), HbeParams::new(0.05, 0.1, 0.25).with_repetitions(3), 0);
        assert!(matches!(wrong_dim, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn single_point_hit_gives_one() {
        let ds = Dataset::from_rows(2, [[0.6, 0.8]]).unwrap();
        let s = build(ds, 10, 2);
        for r in 0..10 {
            assert_eq!(s.estimate_once(&[0.6, 0.8], r, &mut rng(r as u64)).unwrap(), 1.0);
        }
    }

    #[test]
    fn empty_bucket_gives_zero() {
        let ds = Dataset::from_rows(2, [[1.0, 0.0]]).unwrap();
        let s = build(ds, 10, 3);
        for r in 0..10 {
            assert!(s.bucket_of(&[-1.0, 0.0], r).unwrap().is_empty());
            assert_eq!(s.estimate_once(&[-1.0, 0.0], r, &mut rng(0)).unwrap(), 0.0);
        }
        assert!(s.estimate_once(&[1.0, 0.0], 10, &mut rng(0)).is_err());
        assert!(s.estimate_once(&[1.0], 0, &mut rng(0)).is_err());
    }

    #[test]
    fn degenerate_subquery_returns_constant() {
        let ds = Dataset::from_rows(2, [[0.6, 0.8]]).unwrap();
        let s = build(ds, 20, 4);
        let out = s.subquery(&[0.6, 0.8], 0.5, 0.1, 0.01, &mut rng(1)).unwrap();
        assert_eq!(out.value, 1.0);
        assert_eq!((out.group_size, out.groups), (1200, 42));
        assert_eq!(out.samples_used, 1200 * 42);
        assert_eq!(s.samples_drawn(), 1200 * 42);
    }

    #[test]
    fn subquery_parameter_errors() {
        let s = build(unit_square(), 5, 0);
        let q = [1.0, 0.0];
        assert!(s.subquery(&q, 0.0, 0.1, 0.1, &mut rng(0)).is_err());
        assert!(s.subquery(&q, 0.5, 0.0, 0.1, &mut rng(0)).is_err());
        assert!(s.subquery(&q, 0.5, 0.1, 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn exact_single_point_query_breaks_immediately() {
        let ds = Dataset::from_rows(2, [[0.6, 0.8]]).unwrap();
        let s = build(ds, 20, 5);
        let est = s.query(&[0.6, 0.8], 0.7, 0.1, 0.1, &mut rng(2)).unwrap();
        assert_eq!(est.value, 1.0);
        assert!(!est.zero_flag);
        assert_eq!(est.schedule_index, 0);
        let sched = QuerySchedule::new(0.7, 0.1).unwrap();
        let m = group_size(sched.subquery_eps(), 1.0);
        assert_eq!(est.samples_used, (m * group_count(sched.delta0)) as u64);
    }

    #[test]
    fn unreachable_query_is_zero_flagged() {
        let ds = Dataset::from_rows(2, [[1.0, 0.0]]).unwrap();
        let s = build(ds, 20, 6);
        let est = s.query(&[-1.0, 0.0], 1.0, 0.25, 0.1, &mut rng(3)).unwrap();
        assert!(est.zero_flag);
        assert_eq!(est.value, 0.0);
        let sched = QuerySchedule::new(1.0, 0.25).unwrap();
        assert_eq!(est.schedule_index, sched.last_index + 1);
    }

    #[test]
    fn query_parameter_errors() {
        let s = build(unit_square(), 5, 0);
        let q = [1.0, 0.0];
        assert!(s.query(&q, 0.0, 0.5, 0.1, &mut rng(0)).is_err());
        assert!(s.query(&q, 0.5, 1.0, 0.1, &mut rng(0)).is_err());
        assert!(s.query(&q, 0.5, 0.5, 0.0, &mut rng(0)).is_err());
    }

    #[test]
    fn insert_delete_restores_tables() {
        let mut s = build(unit_square(), 30, 7);
        let before = s.tables().to_vec();
        let evals = s.hash_evals();
        let id = s.insert(&[0.3, -0.4]).unwrap();
        assert_eq!(s.hash_evals() - evals, 30);
        assert!(s.tables().iter().all(|t| t.total_count() == 5));
        s.delete(id).unwrap();
        assert_eq!(s.hash_evals() - evals, 60);
        assert_eq!(s.tables(), &before[..]);
        assert!(matches!(s.delete(id), Err(Error::UnknownPoint(_))));
        assert!(s.insert(&[1.0]).is_err());
        assert_eq!(s.hash_evals() - evals, 60);
    }

    #[test]
    fn same_seed_same_estimate() {
        let a = build(unit_square(), 40, 9);
        let b = build(unit_square(), 40, 9);
        let q = [0.8, 0.6];
        let ea = a.query(&q, 0.7, 0.2, 0.1, &mut rng(11)).unwrap();
        let eb = b.query(&q, 0.7, 0.2, 0.1, &mut rng(11)).unwrap();
        assert_eq!(ea, eb);
    }

    #[test]
    fn literal_mode_shares_one_function_per_group() {
        let ds = Dataset::from_rows(2, [[0.6, 0.8]]).unwrap();
        let mut s = build(ds, 20, 4);
        s.set_sampling_mode(SamplingMode::WithReplacement);
        let out = s.subquery(&[0.6, 0.8], 0.5, 0.1, 0.01, &mut rng(1)).unwrap();
        assert_eq!(out.value, 1.0);
        assert_eq!(out.samples_used, 1200 * 42);
    }
}
