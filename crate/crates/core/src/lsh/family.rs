use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{check_dim, dot};
use crate::error::{Error, Result};

/// Floor applied to collision probabilities before they are used as divisors.
pub const P_MIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// Concatenation of `bits` sign-of-random-projection hashes.
    Srp { bits: usize },
    /// Concatenation of `components` hashes `⌊(⟨a,x⟩ + b) / width⌋` with
    /// Gaussian `a` and `b ~ U[0, width)`.
    DiscretizedGaussian { components: usize, width: f64 },
}

impl FamilyKind {
    /// Concatenation length ℓ.
    pub fn concatenation(&self) -> usize {
        match *self {
            FamilyKind::Srp { bits } => bits,
            FamilyKind::DiscretizedGaussian { components, .. } => components,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashFamily {
    pub kind: FamilyKind,
    pub dim: usize,
}

impl HashFamily {
    pub fn new(kind: FamilyKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "must be positive"));
        }
        match kind {
            FamilyKind::Srp { bits } => {
                if !(1..=63).contains(&bits) {
                    return Err(Error::param("bits", format!("must be in 1..=63, got {bits}")));
                }
            }
            FamilyKind::DiscretizedGaussian { components, width } => {
                if components == 0 {
                    return Err(Error::param("components", "must be at least 1"));
                }
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::param("width", "must be positive"));
                }
            }
        }
        Ok(Self { kind, dim })
    }

    pub fn srp(bits: usize, dim: usize) -> Result<Self> {
        Self::new(FamilyKind::Srp { bits }, dim)
    }

    pub fn discretized_gaussian(components: usize, width: f64, dim: usize) -> Result<Self> {
        Self::new(FamilyKind::DiscretizedGaussian { components, width }, dim)
    }

    pub fn concatenation(&self) -> usize {
        self.kind.concatenation()
    }

    /// Collision probability without argument validation.
    ///
    /// Under SRP the zero vector hashes to the all-zero key (`⟨g,0⟩ > 0` is
    /// false), so it collides with any nonzero point with probability `2^-ℓ`.
    #[inline]
    pub fn probability_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            FamilyKind::Srp { bits } => {
                if x == y {
                    return 1.0;
                }
                let nx = dot(x, x).sqrt();
                let ny = dot(y, y).sqrt();
                let per_bit = match (nx == 0.0, ny == 0.0) {
                    (true, true) => 1.0,
                    (true, false) | (false, true) => 0.5,
                    (false, false) => {
                        let cos = (dot(x, y) / (nx * ny)).clamp(-1.0, 1.0);
                        1.0 - cos.acos() / PI
                    }
                };
                per_bit.powi(bits as i32)
            }
            FamilyKind::DiscretizedGaussian { components, width } => {
                let c = crate::dataset::distance(x, y);
                discretized_collision(c, width).powi(components as i32)
            }
        }
    }
}

/// Single-component collision probability of `⌊(⟨a,x⟩ + b) / w⌋` at distance `c`:
/// `1 − 2Φ(−w/c) − (2/(√(2π)·w/c))·(1 − e^{−(w/c)²/2})`.
fn discretized_collision(c: f64, w: f64) -> f64 {
    if c == 0.0 {
        return 1.0;
    }
    let r = w / c;
    let phi_neg = 0.5 * libm::erfc(r / std::f64::consts::SQRT_2);
    let p = 1.0 - 2.0 * phi_neg - 2.0 / ((2.0 * PI).sqrt() * r) * (1.0 - (-r * r / 2.0).exp());
    p.clamp(0.0, 1.0)
}

/// Probability that a function drawn from `family` maps `x` and `y` to the
/// same bucket.
pub fn collision_probability(family: &HashFamily, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(family.dim, x)?;
    check_dim(family.dim, y)?;
    crate::dataset::check_finite(x)?;
    crate::dataset::check_finite(y)?;
    Ok(family.probability_unchecked(x, y))
}
