use std::collections::HashMap;

use rand::Rng;

use super::function::{BucketKey, HashFunction};
use crate::dataset::{Dataset, PointId};
use crate::error::{Error, Result};

/// Buckets of point ids under one hash function.
///
/// Buckets are multisets: equality ignores the order of ids inside a bucket.
/// Empty buckets are dropped, so an absent key and an empty bucket coincide.
#[derive(Debug, Clone, Default)]
pub struct HashTable {
    buckets: HashMap<BucketKey, Vec<PointId>>,
    total: usize,
}

impl HashTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of ids stored across all buckets.
    pub fn total_count(&self) -> usize {
        self.total
    }

    pub fn num_buckets(&self) -> usize {
        self.buckets.len()
    }

    pub fn bucket(&self, key: &BucketKey) -> &[PointId] {
        self.buckets.get(key).map_or(&[], Vec::as_slice)
    }

    /// Adds `id` to the bucket of `x` under `h`.
    ///
    /// Only the destination bucket is checked for a duplicate id; callers
    /// hand out fresh ids.
    pub fn insert(&mut self, h: &HashFunction, id: PointId, x: &[f64]) -> Result<()> {
        let key = h.hash(x)?;
        self.insert_key(key, id)
    }

    pub(crate) fn insert_key(&mut self, key: BucketKey, id: PointId) -> Result<()> {
        let bucket = self.buckets.entry(key).or_default();
        if bucket.contains(&id) {
            return Err(Error::DuplicatePoint(id));
        }
        bucket.push(id);
        self.total += 1;
        Ok(())
    }

    /// Removes `id` from the bucket of `x` under `h`.
    pub fn delete(&mut self, h: &HashFunction, id: PointId, x: &[f64]) -> Result<()> {
        let key = h.hash(x)?;
        self.delete_key(&key, id)
    }

    pub(crate) fn delete_key(&mut self, key: &BucketKey, id: PointId) -> Result<()> {
        let bucket = self.buckets.get_mut(key).ok_or(Error::UnknownPoint(id))?;
        let pos = bucket
            .iter()
            .position(|&v| v == id)
            .ok_or(Error::UnknownPoint(id))?;
        bucket.swap_remove(pos);
        if bucket.is_empty() {
            self.buckets.remove(key);
        }
        self.total -= 1;
        Ok(())
    }

    /// Uniform draw from the bucket at `key`, with the bucket size.
    /// An absent bucket yields `(None, 0)` and consumes no randomness.
    pub fn sample_bucket<R: Rng + ?Sized>(&self, key: &BucketKey, rng: &mut R) -> (Option<PointId>, usize) {
        let bucket = self.bucket(key);
        if bucket.is_empty() {
            return (None, 0);
        }
        (Some(bucket[rng.random_range(0..bucket.len())]), bucket.len())
    }

    /// Buckets sorted by key, ids in stored order.
    pub fn sorted_buckets(&self) -> Vec<(&BucketKey, &[PointId])> {
        let mut out: Vec<_> = self.buckets.iter().map(|(k, v)| (k, v.as_slice())).collect();
        out.sort_by(|a, b| a.0.cmp(b.0));
        out
    }

    /// Rebuilds a table from persisted buckets, preserving id order.
    pub fn from_buckets(buckets: Vec<(BucketKey, Vec<PointId>)>) -> Result<Self> {
        let mut table = HashTable::new();
        for (key, ids) in buckets {
            if ids.is_empty() {
                continue;
            }
            table.total += ids.len();
            if table.buckets.insert(key, ids).is_some() {
                return Err(Error::Format("repeated bucket key".into()));
            }
        }
        Ok(table)
    }

    /// Canonical form: sorted keys, sorted ids.
    pub fn canonical(&self) -> Vec<(BucketKey, Vec<PointId>)> {
        let mut out: Vec<_> = self
            .buckets
            .iter()
            .map(|(k, v)| {
                let mut ids = v.clone();
                ids.sort_unstable();
                (k.clone(), ids)
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

impl PartialEq for HashTable {
    fn eq(&self, other: &Self) -> bool {
        self.total == other.total && self.canonical() == other.canonical()
    }
}

/// Hashes every live point of `ds` into a fresh table.
pub fn build_table(h: &HashFunction, ds: &Dataset) -> Result<HashTable> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ds.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: ds.dim(),
        });
    }
    let mut table = HashTable::new();
    for (id, x) in ds.iter() {
        table.insert_key(h.hash_unchecked(x), id)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsh::{sample_function, HashFamily};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn srp(seed: u64) -> HashFunction {
        let fam = HashFamily::srp(2, 2).unwrap();
        sample_function(&fam, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn single_point_table() {
        let ds = Dataset::from_rows(2, [[1.0, 0.0]]).unwrap();
        let t = build_table(&srp(0), &ds).unwrap();
        assert_eq!((t.num_buckets(), t.total_count()), (1, 1));
    }

    #[test]
    fn duplicates_share_a_bucket() {
        let ds = Dataset::from_rows(2, [[0.6, 0.8], [0.6, 0.8]]).unwrap();
        let h = srp(1);
        let t = build_table(&h, &ds).unwrap();
        let key = h.hash(&[0.6, 0.8]).unwrap();
        assert_eq!(t.bucket(&key).len(), 2);
        assert_eq!(build_table(&h, &ds).unwrap(), t);
    }

    #[test]
    fn insert_delete_roundtrip() {
        let ds = Dataset::from_rows(2, [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.2]]).unwrap();
        let h = srp(2);
        let original = build_table(&h, &ds).unwrap();
        let mut t = original.clone();
        t.insert(&h, 10, &[0.3, -0.9]).unwrap();
        assert_eq!(t.total_count(), 4);
        t.delete(&h, 10, &[0.3, -0.9]).unwrap();
        assert_eq!(t, original);
        assert_eq!(t.sorted_buckets(), original.sorted_buckets());
    }

    #[test]
    fn delete_absent_and_insert_duplicate() {
        let h = srp(3);
        let mut t = HashTable::new();
        t.insert(&h, 0, &[1.0, 0.0]).unwrap();
        assert_eq!(t.total_count(), 1);
        assert!(matches!(t.insert(&h, 0, &[1.0, 0.0]), Err(Error::DuplicatePoint(0))));
        assert!(matches!(t.delete(&h, 5, &[1.0, 0.0]), Err(Error::UnknownPoint(5))));
        assert!(matches!(t.delete(&h, 0, &[-1.0, 0.0]), Err(Error::UnknownPoint(0))));
        assert_eq!(t.total_count(), 1);
    }

    #[test]
    fn sample_singleton_and_absent() {
        let h = srp(4);
        let mut t = HashTable::new();
        t.insert(&h, 7, &[1.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let key = h.hash(&[1.0, 0.0]).unwrap();
        assert_eq!(t.sample_bucket(&key, &mut rng), (Some(7), 1));
        let absent = BucketKey::from_components(&[99]);
        assert_eq!(t.sample_bucket(&absent, &mut rng), (None, 0));
    }

    #[test]
    fn bucket_sampling_is_uniform_over_the_multiset() {
        // Bucket {a, a, b} as ids {0, 1, 2} where 0 and 1 both stand for `a`.
        let key = BucketKey::from_components(&[0]);
        let t = HashTable::from_buckets(vec![(key.clone(), vec![0, 1, 2])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 30_000;
        let hits_a = (0..draws)
            .filter(|_| matches!(t.sample_bucket(&key, &mut rng).0, Some(0 | 1)))
            .count();
        let freq = hits_a as f64 / draws as f64;
        assert!((freq - 2.0 / 3.0).abs() <= 0.02, "freq={freq}");
    }

    #[test]
    fn build_rejects_empty_dataset() {
        let ds = Dataset::new(2).unwrap();
        assert!(matches!(build_table(&srp(0), &ds), Err(Error::EmptyDataset)));
    }
}
