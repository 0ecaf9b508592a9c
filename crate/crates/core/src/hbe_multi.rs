//! Dynamic multi-resolution hashing-based estimator: `G` hash families per
//! repetition, combined with weights `p_g² / Σ_i p_i²`.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use smallvec::SmallVec;

use crate::dataset::{check_dim, check_finite, norm, Dataset, Point, PointId, SPHERE_TOLERANCE};
use crate::error::{Error, Result};
use crate::hbe_single::function_rng;
use crate::kernel::KernelSpec;
use crate::lsh::{build_table, sample_function, HashFamily, HashFunction, HashTable, P_MIN};
use crate::schedule::{run_query, run_subquery, Estimate, HbeParams, Probe, Sampler, SamplingMode, SubqueryOutcome};
use crate::variance::VarianceProfile;

#[derive(Debug)]
pub struct MultiHbe {
    data: Dataset,
    kernel: KernelSpec,
    vprof: VarianceProfile,
    families: Vec<HashFamily>,
    params: HbeParams,
    seed: u64,
    mode: SamplingMode,
    /// Indexed `[g][r]`.
    functions: Vec<Vec<HashFunction>>,
    /// Indexed `[g][r]`.
    tables: Vec<Vec<HashTable>>,
    hash_evals: u64,
    samples_drawn: AtomicU64,
    degenerate_pairs: AtomicU64,
}

fn check_sphere(x: &[f64]) -> Result<()> {
    let n = norm(x);
    if (n - 1.0).abs() > SPHERE_TOLERANCE {
        return Err(Error::OffSphere(n));
    }
    Ok(())
}

/// `p_g² / Σ_i p_i²`, computed relative to the largest `p_i` so that tiny
/// probabilities do not underflow. `None` when every `p_i` is zero.
fn normalized_weight(probs: &[f64], g: usize) -> Option<f64> {
    let top = probs.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return None;
    }
    let total: f64 = probs.iter().map(|p| (p / top) * (p / top)).sum();
    let own = probs[g] / top;
    Some(own * own / total)
}

impl MultiHbe {
    /// Samples `R` functions from each family (family-major order from `seed`)
    /// and builds all `R·G` tables. Data points must lie on the unit sphere.
    pub fn initialize(
        data: Dataset,
        kernel: KernelSpec,
        vprof: VarianceProfile,
        families: Vec<HashFamily>,
        params: HbeParams,
        seed: u64,
    ) -> Result<Self> {
        kernel.validate()?;
        vprof.validate()?;
        let reps = params.repetitions(&vprof)?;
        if families.is_empty() {
            return Err(Error::param("families", "at least one hash family is required"));
        }
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for f in &families {
            if f.dim != data.dim() {
                return Err(Error::DimensionMismatch {
                    expected: data.dim(),
                    got: f.dim,
                });
            }
        }
        for (_, x) in data.iter() {
            check_sphere(x)?;
        }
        let mut rng = function_rng(seed);
        let functions: Vec<Vec<HashFunction>> = families
            .iter()
            .map(|f| (0..reps).map(|_| sample_function(f, &mut rng)).collect())
            .collect();
        let tables = functions
            .iter()
            .map(|row| row.iter().map(|h| build_table(h, &data)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let hash_evals = (data.len() * reps * families.len()) as u64;
        Ok(Self {
            data,
            kernel,
            vprof,
            families,
            params,
            seed,
            mode: SamplingMode::default(),
            functions,
            tables,
            hash_evals,
            samples_drawn: AtomicU64::new(0),
            degenerate_pairs: AtomicU64::new(0),
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn restore(
        data: Dataset,
        kernel: KernelSpec,
        vprof: VarianceProfile,
        families: Vec<HashFamily>,
        params: HbeParams,
        seed: u64,
        tables: Vec<Vec<HashTable>>,
        hash_evals: u64,
    ) -> Result<Self> {
        let reps = tables.first().map_or(0, Vec::len);
        if tables.len() != families.len() || tables.iter().any(|t| t.len() != reps) || reps == 0 {
            return Err(Error::Format("table grid does not match families".into()));
        }
        let mut rng = function_rng(seed);
        let functions = families
            .iter()
            .map(|f| (0..reps).map(|_| sample_function(f, &mut rng)).collect())
            .collect();
        Ok(Self {
            data,
            kernel,
            vprof,
            families,
            params,
            seed,
            mode: SamplingMode::default(),
            functions,
            tables,
            hash_evals,
            samples_drawn: AtomicU64::new(0),
            degenerate_pairs: AtomicU64::new(0),
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

    pub fn families(&self) -> &[HashFamily] {
        &self.families
    }

    pub fn params(&self) -> &HbeParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn repetitions(&self) -> usize {
        self.functions[0].len()
    }

    /// Number of hash schemes `G`.
    pub fn schemes(&self) -> usize {
        self.families.len()
    }

    pub fn function(&self, r: usize, g: usize) -> &HashFunction {
        &self.functions[g][r]
    }

    pub fn table(&self, r: usize, g: usize) -> &HashTable {
        &self.tables[g][r]
    }

    /// All tables, indexed `[g][r]`.
    pub fn tables(&self) -> &[Vec<HashTable>] {
        &self.tables
    }

    pub fn hash_evals(&self) -> u64 {
        self.hash_evals
    }

    pub fn samples_drawn(&self) -> u64 {
        self.samples_drawn.load(Ordering::Relaxed)
    }

    /// Sampled pairs whose collision probabilities all vanished.
    pub fn degenerate_pairs(&self) -> u64 {
        self.degenerate_pairs.load(Ordering::Relaxed)
    }

    /// Weight `w̃_{r,g}(x, y) = p_{r,g}² / Σ_i p_{r,i}²`.
    pub fn weight(&self, r: usize, g: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_index(r)?;
        if g >= self.families.len() {
            return Err(Error::param("g", format!("{g} out of range for G = {}", self.families.len())));
        }
        self.check_query(x)?;
        self.check_query(y)?;
        let probs: Vec<f64> = self.families.iter().map(|f| f.probability_unchecked(x, y)).collect();
        normalized_weight(&probs, g).ok_or(Error::ZeroWeights)
    }

    /// `w̃_g·(w/p_g)·|H_g|` for `y` drawn from the bucket of scheme `g`.
    #[inline]
    fn term(&self, q: &[f64], y: &[f64], g: usize, bucket_size: usize) -> f64 {
        let probs: SmallVec<[f64; 8]> = self
            .families
            .iter()
            .map(|f| f.probability_unchecked(q, y))
            .collect();
        match normalized_weight(&probs, g) {
            Some(wt) => {
                let w = self.kernel.eval_unchecked(q, y);
                wt * ((w / probs[g].max(P_MIN)) * bucket_size as f64)
            }
            None => {
                self.degenerate_pairs.fetch_add(1, Ordering::Relaxed);
                0.0
            }
        }
    }

    /// Samples one point from each scheme's bucket; empty buckets contribute
    /// 0 and consume no randomness.
    fn draw<R: Rng + ?Sized>(&self, q: &[f64], buckets: &[&[PointId]], rng: &mut R) -> f64 {
        let mut acc = 0.0;
        for (g, bucket) in buckets.iter().enumerate() {
            if !bucket.is_empty() {
                let y = bucket[rng.random_range(0..bucket.len())];
                let x = self.data.get(y).expect("table ids are live");
                acc += self.term(q, x, g, bucket.len());
            }
        }
        acc / self.data.len() as f64
    }

    fn buckets_into<'a>(&'a self, q: &[f64], r: usize, out: &mut [&'a [PointId]]) {
        for (g, slot) in out.iter_mut().enumerate() {
            *slot = self.tables[g][r].bucket(&self.functions[g][r].hash_unchecked(q));
        }
    }

    /// One draw of the combined estimator using repetition `r`; samples one
    /// point per scheme.
    pub fn estimate_once<R: Rng + ?Sized>(&self, q: &[f64], r: usize, rng: &mut R) -> Result<f64> {
        self.check_query(q)?;
        self.check_index(r)?;
        self.samples_drawn
            .fetch_add(self.families.len() as u64, Ordering::Relaxed);
        let mut buckets: SmallVec<[&[PointId]; 8]> = SmallVec::from_elem(&[][..], self.families.len());
        self.buckets_into(q, r, &mut buckets);
        Ok(self.draw(q, &buckets, rng))
    }

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

    /// Adds a unit-norm point to the dataset and all `R·G` tables.
    pub fn insert(&mut self, x: &[f64]) -> Result<PointId> {
        check_dim(self.data.dim(), x)?;
        check_finite(x)?;
        check_sphere(x)?;
        let id = self.data.insert(x)?;
        let reps = self.repetitions();
        for r in 0..reps {
            for g in 0..self.families.len() {
                let key = self.functions[g][r].hash_unchecked(x);
                self.tables[g][r].insert_key(key, id)?;
            }
        }
        self.hash_evals += (reps * self.families.len()) as u64;
        Ok(id)
    }

    /// Removes point `id` from the dataset and all `R·G` tables.
    pub fn delete(&mut self, id: PointId) -> Result<Point> {
        let x = self.data.get(id).ok_or(Error::UnknownPoint(id))?;
        let reps = self.repetitions();
        for r in 0..reps {
            for g in 0..self.families.len() {
                let key = self.functions[g][r].hash_unchecked(x);
                self.tables[g][r].delete_key(&key, id)?;
            }
        }
        self.hash_evals += (reps * self.families.len()) as u64;
        self.data.remove(id)
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        check_dim(self.data.dim(), q)?;
        check_finite(q)
    }

    fn check_index(&self, r: usize) -> Result<()> {
        if r >= self.repetitions() {
            return Err(Error::param("r", format!("{r} out of range for R = {}", self.repetitions())));
        }
        Ok(())
    }
}

impl Sampler for MultiHbe {
    type Probe<'a> = MultiProbe<'a>;

    fn repetitions(&self) -> usize {
        MultiHbe::repetitions(self)
    }

    fn variance_profile(&self) -> &VarianceProfile {
        &self.vprof
    }

    fn draws_per_estimate(&self) -> u64 {
        self.families.len() as u64
    }

    fn probe<'a>(&'a self, q: &'a [f64]) -> MultiProbe<'a> {
        let g = self.families.len();
        MultiProbe {
            hbe: self,
            q,
            ready: vec![false; self.repetitions()],
            buckets: vec![&[][..]; self.repetitions() * g],
        }
    }
}

pub(crate) struct MultiProbe<'a> {
    hbe: &'a MultiHbe,
    q: &'a [f64],
    ready: Vec<bool>,
    /// `G` buckets per repetition, repetition-major.
    buckets: Vec<&'a [PointId]>,
}

impl Probe for MultiProbe<'_> {
    fn estimate<R: Rng + ?Sized>(&mut self, r: usize, rng: &mut R) -> f64 {
        let g = self.hbe.families.len();
        let row = &mut self.buckets[r * g..(r + 1) * g];
        if !self.ready[r] {
            self.hbe.buckets_into(self.q, r, row);
            self.ready[r] = true;
        }
        self.hbe.draw(self.q, row, rng)
    }
}
