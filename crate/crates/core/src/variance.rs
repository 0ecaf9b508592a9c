//! Relative-variance bounds `V(μ)` for V-bounded estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarianceProfile {
    /// `V(μ) = 1/μ`
    Reciprocal,
    /// `V(μ) = M·μ^(-β)`
    ScaleFree { beta: f64, m: f64 },
    /// `V(μ) = v`
    Constant { v: f64 },
}

impl VarianceProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VarianceProfile::Reciprocal => Ok(()),
            VarianceProfile::ScaleFree { beta, m } => {
                if !(beta.is_finite() && beta >= 0.0) {
                    return Err(Error::param("beta", "must be non-negative"));
                }
                if !(m.is_finite() && m > 0.0) {
                    return Err(Error::param("m", "must be positive"));
                }
                Ok(())
            }
            VarianceProfile::Constant { v } => {
                if v.is_finite() && v > 0.0 {
                    Ok(())
                } else {
                    Err(Error::param("v", "must be positive"))
                }
            }
        }
    }

    /// `V(μ)` for `μ ∈ (0, 1]`.
    pub fn eval(&self, mu: f64) -> Result<f64> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::param("mu", format!("must lie in (0, 1], got {mu}")));
        }
        Ok(match *self {
            VarianceProfile::Reciprocal => 1.0 / mu,
            VarianceProfile::ScaleFree { beta, m } => m * mu.powf(-beta),
            VarianceProfile::Constant { v } => v,
        })
    }
}

/// Free-function form of [`VarianceProfile::eval`].
pub fn variance_eval(profile: &VarianceProfile, mu: f64) -> Result<f64> {
    profile.eval(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = VarianceProfile::Reciprocal;
        assert_eq!(variance_eval(&r, 1.0).unwrap(), 1.0);
        assert_eq!(variance_eval(&r, 0.25).unwrap(), 4.0);
        let s = VarianceProfile::ScaleFree { beta: 0.5, m: 2.0 };
        assert_eq!(variance_eval(&s, 0.25).unwrap(), 4.0);
        let c = VarianceProfile::Constant { v: 0.3 };
        assert_eq!(variance_eval(&c, 0.01).unwrap(), 0.3);
    }

    #[test]
    fn rejects_mu_outside_unit_interval() {
        let r = VarianceProfile::Reciprocal;
        for mu in [0.0, -0.1, 1.0 + 1e-12, f64::NAN] {
            assert!(r.eval(mu).is_err(), "mu={mu}");
        }
    }

    #[test]
    fn non_increasing_in_mu() {
        let profiles = [
            VarianceProfile::Reciprocal,
            VarianceProfile::ScaleFree { beta: 0.7, m: 3.0 },
            VarianceProfile::Constant { v: 2.0 },
        ];
        for p in &profiles {
            let mut prev = f64::INFINITY;
            for i in 1..=1000 {
                let v = p.eval(i as f64 / 1000.0).unwrap();
                assert!(v > 0.0 && v <= prev);
                prev = v;
            }
        }
    }
}
