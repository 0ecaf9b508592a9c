//! Radial pairwise functions `w(x, y) ∈ [0, 1]` with an explicit Lipschitz constant.

use serde::{Deserialize, Serialize};

use crate::dataset::{check_dim, check_finite, distance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(-(scale·r)²)`
    Gaussian { scale: f64 },
    /// `exp(-scale·r)`
    Exponential { scale: f64 },
    /// `(1 + r^p)^(-q)`
    TStudent { p: f64, q: f64 },
    /// Piecewise-linear profile over distance, given as `(distance, value)`
    /// knots sorted by distance. Constant beyond the end knots.
    Tabulated { knots: Vec<(f64, f64)> },
}

/// A kernel together with the Lipschitz constant of `q ↦ w(x, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    pub lipschitz_k: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Result<Self> {
        validate(&kind)?;
        let lipschitz_k = default_lipschitz(&kind);
        Ok(Self { kind, lipschitz_k })
    }

    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian { scale })
    }

    pub fn exponential(scale: f64) -> Result<Self> {
        Self::new(KernelKind::Exponential { scale })
    }

    pub fn t_student(p: f64, q: f64) -> Result<Self> {
        Self::new(KernelKind::TStudent { p, q })
    }

    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(KernelKind::Tabulated { knots })
    }

    /// Replaces the derived Lipschitz constant.
    pub fn with_lipschitz(mut self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::param("lipschitz_k", "must be positive and finite"));
        }
        self.lipschitz_k = k;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        validate(&self.kind)?;
        if !(self.lipschitz_k.is_finite() && self.lipschitz_k > 0.0) {
            return Err(Error::param("lipschitz_k", "must be positive and finite"));
        }
        Ok(())
    }

    /// Kernel value as a function of the distance `r ≥ 0`.
    #[inline]
    pub fn profile(&self, r: f64) -> f64 {
        match &self.kind {
            KernelKind::Gaussian { scale } => {
                let t = scale * r;
                (-t * t).exp()
            }
            KernelKind::Exponential { scale } => (-scale * r).exp(),
            KernelKind::TStudent { p, q } => (1.0 + r.powf(*p)).powf(-q),
            KernelKind::Tabulated { knots } => interpolate(knots, r),
        }
    }

    /// `w(x, y)` without dimension or finiteness checks.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.profile(distance(x, y))
    }
}

/// Evaluates `w(x, y)`.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y)?;
    check_finite(x)?;
    check_finite(y)?;
    Ok(spec.eval_unchecked(x, y))
}

fn validate(kind: &KernelKind) -> Result<()> {
    let positive = |name, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::param(name, format!("must be positive and finite, got {v}")))
        }
    };
    match kind {
        KernelKind::Gaussian { scale } | KernelKind::Exponential { scale } => {
            positive("scale", *scale)
        }
        KernelKind::TStudent { p, q } => {
            positive("q", *q)?;
            // p < 1 has an unbounded slope at r = 0.
            if !(p.is_finite() && *p >= 1.0) {
                return Err(Error::param("p", format!("must be at least 1, got {p}")));
            }
            Ok(())
        }
        KernelKind::Tabulated { knots } => {
            if knots.is_empty() {
                return Err(Error::param("knots", "at least one knot is required"));
            }
            for (i, &(r, v)) in knots.iter().enumerate() {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::param("knots", format!("knot {i} has bad distance {r}")));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::param("knots", format!("knot {i} value {v} outside [0, 1]")));
                }
            }
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::param("knots", "distances must be strictly increasing"));
            }
            Ok(())
        }
    }
}

fn interpolate(knots: &[(f64, f64)], r: f64) -> f64 {
    let first = knots[0];
    if r <= first.0 {
        return first.1;
    }
    let idx = knots.partition_point(|&(d, _)| d <= r);
    if idx == knots.len() {
        return knots[idx - 1].1;
    }
    let (r0, v0) = knots[idx - 1];
    let (r1, v1) = knots[idx];
    v0 + (v1 - v0) * (r - r0) / (r1 - r0)
}

/// Upper bound on `|d w / d r|`, which bounds the Lipschitz constant of
/// `q ↦ w(x, q)` because `|r(q₁) − r(q₂)| ≤ ‖q₁ − q₂‖₂`.
fn default_lipschitz(kind: &KernelKind) -> f64 {
    match kind {
        // max_r 2s²r·exp(-s²r²) is reached at r = 1/(s√2).
        KernelKind::Gaussian { scale } => scale * (2.0 / std::f64::consts::E).sqrt(),
        KernelKind::Exponential { scale } => *scale,
        KernelKind::TStudent { p, q } => {
            // slope(r) = p·q·r^(p-1) / (1 + r^p)^(q+1); its maximiser has
            // r^p = (p - 1) / (p·q + 1).
            let u = (p - 1.0) / (p * q + 1.0);
            let r = u.powf(1.0 / p);
            let rp1 = if *p == 1.0 { 1.0 } else { r.powf(p - 1.0) };
            p * q * rp1 / (1.0 + u).powf(q + 1.0)
        }
        KernelKind::Tabulated { knots } => knots
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
            // A flat table is 0-Lipschitz; keep k positive for the net radius.
            .max(f64::MIN_POSITIVE),
    }
}
