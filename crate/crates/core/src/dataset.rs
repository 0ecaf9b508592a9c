//! Point storage with stable, never-reused ids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PointId = u64;

/// Tolerance on `‖x‖₂ = 1` for inputs that must lie on the unit sphere.
pub const SPHERE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: PointId,
    pub coords: Vec<f64>,
}

pub fn check_finite(coords: &[f64]) -> Result<()> {
    match coords.iter().position(|c| !c.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub fn check_dim(expected: usize, coords: &[f64]) -> Result<()> {
    if coords.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: coords.len(),
        });
    }
    Ok(())
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[inline]
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn is_on_unit_sphere(x: &[f64]) -> bool {
    (norm(x) - 1.0).abs() <= SPHERE_TOLERANCE
}

/// A mutable set of `dim`-dimensional points.
///
/// Ids are handed out in increasing order and never reused after a removal,
/// so slot `id` either holds the point or is a tombstone.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    slots: Vec<Option<Box<[f64]>>>,
    live: usize,
}

impl Dataset {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        Ok(Self {
            dim,
            slots: Vec::new(),
            live: 0,
        })
    }

    /// Builds a dataset with ids `0..rows.len()` in row order.
    pub fn from_rows<I, R>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        let mut ds = Self::new(dim)?;
        for row in rows {
            ds.insert(row.as_ref())?;
        }
        Ok(ds)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of live points.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// The id the next insert will receive.
    pub fn next_id(&self) -> PointId {
        self.slots.len() as PointId
    }

    pub fn insert(&mut self, coords: &[f64]) -> Result<PointId> {
        check_dim(self.dim, coords)?;
        check_finite(coords)?;
        let id = self.next_id();
        self.slots.push(Some(coords.into()));
        self.live += 1;
        Ok(id)
    }

    /// Inserts under an explicit id, which must not have been issued yet.
    /// Used when restoring a persisted dataset.
    pub(crate) fn insert_with_id(&mut self, id: PointId, coords: &[f64]) -> Result<()> {
        check_dim(self.dim, coords)?;
        check_finite(coords)?;
        if id < self.next_id() {
            return Err(Error::DuplicatePoint(id));
        }
        self.slots.resize(id as usize, None);
        self.slots.push(Some(coords.into()));
        self.live += 1;
        Ok(())
    }

    /// Advances the id counter past tombstones at the tail.
    pub(crate) fn reserve_ids(&mut self, next_id: PointId) {
        if next_id > self.next_id() {
            self.slots.resize(next_id as usize, None);
        }
    }

    pub fn remove(&mut self, id: PointId) -> Result<Point> {
        let slot = self
            .slots
            .get_mut(id as usize)
            .and_then(Option::take)
            .ok_or(Error::UnknownPoint(id))?;
        self.live -= 1;
        Ok(Point {
            id,
            coords: slot.into_vec(),
        })
    }

    pub fn get(&self, id: PointId) -> Option<&[f64]> {
        self.slots.get(id as usize).and_then(|s| s.as_deref())
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.get(id).is_some()
    }

    /// Live points in increasing id order.
    pub fn iter(&self) -> impl Iterator<Item = (PointId, &[f64])> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_deref().map(|c| (i as PointId, c)))
    }

    pub fn points(&self) -> Vec<Point> {
        self.iter()
            .map(|(id, c)| Point {
                id,
                coords: c.to_vec(),
            })
            .collect()
    }

    pub fn all_on_unit_sphere(&self) -> bool {
        self.iter().all(|(_, c)| is_on_unit_sphere(c))
    }
}
