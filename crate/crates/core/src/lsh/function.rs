use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use smallvec::SmallVec;

use super::family::{FamilyKind, HashFamily};
use crate::dataset::{check_dim, dot};
use crate::error::{Error, Result};

/// The tuple of component hashes. SRP packs its bits into one word, with
/// component `j` at bit `j`; the discretized family stores one cell index per
/// component.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BucketKey(SmallVec<[i64; 2]>);

impl BucketKey {
    pub fn from_components(components: &[i64]) -> Self {
        BucketKey(components.into())
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }
}

/// One function sampled from a [`HashFamily`].
#[derive(Debug, Clone, PartialEq)]
pub struct HashFunction {
    family: HashFamily,
    /// ℓ rows of `dim` entries.
    projections: Vec<f64>,
    /// One offset per row; empty for SRP.
    offsets: Vec<f64>,
}

impl HashFunction {
    /// Builds a function from explicit parameters.
    pub fn from_parts(family: HashFamily, projections: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        let l = family.concatenation();
        if projections.len() != l * family.dim {
            return Err(Error::param("projections", "expected ℓ·dim entries"));
        }
        let want_offsets = match family.kind {
            FamilyKind::Srp { .. } => 0,
            FamilyKind::DiscretizedGaussian { .. } => l,
        };
        if offsets.len() != want_offsets {
            return Err(Error::param("offsets", format!("expected {want_offsets} entries")));
        }
        Ok(Self {
            family,
            projections,
            offsets,
        })
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.family.dim
    }

    pub fn projections(&self) -> &[f64] {
        &self.projections
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn hash(&self, x: &[f64]) -> Result<BucketKey> {
        check_dim(self.family.dim, x)?;
        Ok(self.hash_unchecked(x))
    }

    #[inline]
    pub fn hash_unchecked(&self, x: &[f64]) -> BucketKey {
        let rows = self.projections.chunks_exact(self.family.dim);
        match self.family.kind {
            FamilyKind::Srp { .. } => {
                let mut bits = 0i64;
                for (j, g) in rows.enumerate() {
                    if dot(g, x) > 0.0 {
                        bits |= 1 << j;
                    }
                }
                BucketKey(SmallVec::from_elem(bits, 1))
            }
            FamilyKind::DiscretizedGaussian { width, .. } => BucketKey(
                rows.zip(&self.offsets)
                    .map(|(a, b)| ((dot(a, x) + b) / width).floor() as i64)
                    .collect(),
            ),
        }
    }
}

/// Draws an independent function from `family`.
pub fn sample_function<R: Rng + ?Sized>(family: &HashFamily, rng: &mut R) -> HashFunction {
    let l = family.concatenation();
    let projections: Vec<f64> = (0..l * family.dim)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let offsets = match family.kind {
        FamilyKind::Srp { .. } => Vec::new(),
        FamilyKind::DiscretizedGaussian { width, .. } => {
            (0..l).map(|_| rng.random::<f64>() * width).collect()
        }
    };
    HashFunction {
        family: family.clone(),
        projections,
        offsets,
    }
}

/// Free-function form of [`HashFunction::hash`].
pub fn hash_point(h: &HashFunction, x: &[f64]) -> Result<BucketKey> {
    h.hash(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn probe_points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn same_seed_same_keys() {
        let fam = HashFamily::srp(8, 5).unwrap();
        let h1 = sample_function(&fam, &mut ChaCha8Rng::seed_from_u64(3));
        let h2 = sample_function(&fam, &mut ChaCha8Rng::seed_from_u64(3));
        for p in probe_points(50, 5, 1) {
            assert_eq!(h1.hash(&p).unwrap(), h2.hash(&p).unwrap());
        }
    }

    #[test]
    fn different_seeds_differ_somewhere() {
        for fam in [
            HashFamily::srp(4, 5).unwrap(),
            HashFamily::discretized_gaussian(2, 0.5, 5).unwrap(),
        ] {
            let h1 = sample_function(&fam, &mut ChaCha8Rng::seed_from_u64(1));
            let h2 = sample_function(&fam, &mut ChaCha8Rng::seed_from_u64(2));
            let differing = probe_points(100, 5, 9)
                .iter()
                .filter(|p| h1.hash(p).unwrap() != h2.hash(p).unwrap())
                .count();
            assert!(differing >= 1);
        }
    }

    #[test]
    fn srp_sign_bits() {
        let fam = HashFamily::srp(1, 2).unwrap();
        let h = HashFunction::from_parts(fam, vec![1.0, 2.0], vec![]).unwrap();
        assert_eq!(hash_point(&h, &[1.0, 0.0]).unwrap().components(), &[1]);
        assert_eq!(hash_point(&h, &[-1.0, 0.0]).unwrap().components(), &[0]);
    }

    #[test]
    fn srp_three_bit_key() {
        let fam = HashFamily::srp(3, 2).unwrap();
        let h = HashFunction::from_parts(fam, vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0], vec![]).unwrap();
        let key = h.hash(&[1.0, 1.0]).unwrap();
        assert_eq!(key.components(), &[0b011]);
        assert!(key.components()[0] < 8);
    }

    #[test]
    fn antipodes_get_opposite_keys() {
        let fam = HashFamily::srp(1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in probe_points(100, 3, 4) {
            let h = sample_function(&fam, &mut rng);
            let neg: Vec<f64> = p.iter().map(|v| -v).collect();
            assert_ne!(h.hash(&p).unwrap(), h.hash(&neg).unwrap());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let fam = HashFamily::srp(1, 3).unwrap();
        let h = sample_function(&fam, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(h.hash(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn from_parts_validates_shapes() {
        let fam = HashFamily::discretized_gaussian(2, 1.0, 2).unwrap();
        assert!(HashFunction::from_parts(fam.clone(), vec![0.0; 4], vec![0.0]).is_err());
        assert!(HashFunction::from_parts(fam.clone(), vec![0.0; 3], vec![0.0; 2]).is_err());
        assert!(HashFunction::from_parts(fam, vec![0.0; 4], vec![0.0; 2]).is_ok());
    }
}
