//! Exact pairwise-summation values by direct summation.

use crate::dataset::{check_dim, check_finite, Dataset};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}

/// `(1/n)·Σ_x w(x, q)` over the live points of `ds`.
pub fn pse_bruteforce(ds: &Dataset, spec: &KernelSpec, q: &[f64]) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_dim(ds.dim(), q)?;
    check_finite(q)?;
    let acc: CompensatedSum = ds.iter().map(|(_, x)| spec.eval_unchecked(x, q)).collect();
    Ok(acc.value() / ds.len() as f64)
}
