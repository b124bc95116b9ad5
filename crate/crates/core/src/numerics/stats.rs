//! Monte-Carlo summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::{Cx, Scalar};

/// Mean with its standard error over `n_samples` draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCStat<T: Scalar> {
    pub mean: Cx<T>,
    pub stderr: T,
    pub n_samples: usize,
}

impl<T: Scalar> MCStat<T> {
    /// Plain sample mean and standard error.
    pub fn from_samples(values: &[Cx<T>]) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::EmptyBatch);
        }
        let n = values.len();
        let nf = T::from_usize_lossy(n);
        let mean = values.iter().fold(Cx::new(T::zero(), T::zero()), |a, &v| a + v) / nf;
        let ss: T = values.iter().map(|&v| (v - mean).norm_sqr()).sum();
        let stderr = if n > 1 {
            (ss / (nf * (nf - T::one()))).sqrt()
        } else {
            T::infinity()
        };
        Ok(MCStat {
            mean,
            stderr,
            n_samples: n,
        })
    }

    /// Self-normalized importance-sampling estimate; the standard error uses
    /// the delta method.
    pub fn from_weighted(values: &[Cx<T>], log_weights: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::EmptyBatch);
        }
        if values.len() != log_weights.len() {
            return Err(LabError::param("values and log_weights differ in length"));
        }
        if log_weights.iter().all(|&w| w == T::zero()) {
            return Self::from_samples(values);
        }
        let lmax = log_weights
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max);
        let w: Vec<T> = log_weights.iter().map(|&l| (l - lmax).exp()).collect();
        let wsum: T = w.iter().copied().sum();
        let mean = values
            .iter()
            .zip(&w)
            .fold(Cx::new(T::zero(), T::zero()), |a, (&v, &wi)| a + v * wi)
            / wsum;
        let n = values.len();
        let nf = T::from_usize_lossy(n);
        let var: T = values
            .iter()
            .zip(&w)
            .map(|(&v, &wi)| wi * wi * (v - mean).norm_sqr())
            .sum::<T>()
            / (wsum * wsum);
        let correction = if n > 1 { nf / (nf - T::one()) } else { T::infinity() };
        Ok(MCStat {
            mean,
            stderr: (var * correction).sqrt(),
            n_samples: n,
        })
    }

    /// Ratio estimator `Σ w f / Σ w` with complex weights given as logarithms.
    pub fn from_cx_log_weighted(values: &[Cx<T>], log_weights: &[Cx<T>]) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::EmptyBatch);
        }
        if values.len() != log_weights.len() {
            return Err(LabError::param("values and log_weights differ in length"));
        }
        let lmax = log_weights
            .iter()
            .map(|l| l.re)
            .fold(T::neg_infinity(), T::max);
        let w: Vec<Cx<T>> = log_weights
            .iter()
            .map(|&l| (l - Cx::new(lmax, T::zero())).exp())
            .collect();
        let wsum = w.iter().fold(Cx::new(T::zero(), T::zero()), |a, &b| a + b);
        let mean = values
            .iter()
            .zip(&w)
            .fold(Cx::new(T::zero(), T::zero()), |a, (&v, &wi)| a + v * wi)
            / wsum;
        let n = values.len();
        let nf = T::from_usize_lossy(n);
        let var: T = values
            .iter()
            .zip(&w)
            .map(|(&v, &wi)| wi.norm_sqr() * (v - mean).norm_sqr())
            .sum::<T>()
            / wsum.norm_sqr();
        let correction = if n > 1 { nf / (nf - T::one()) } else { T::infinity() };
        Ok(MCStat {
            mean,
            stderr: (var * correction).sqrt(),
            n_samples: n,
        })
    }

    /// `|mean| <= k * stderr`.
    pub fn within(&self, k: T) -> bool {
        self.mean.norm() <= k * self.stderr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn unweighted_matches_textbook() {
        let v: Vec<Complex64> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let s = MCStat::from_samples(&v).unwrap();
        assert!((s.mean.re - 2.5).abs() < 1e-15);
        // sample variance 5/3, stderr sqrt(5/12)
        assert!((s.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn equal_weights_reduce_to_plain() {
        let v: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let a = MCStat::from_samples(&v).unwrap();
        let b = MCStat::from_weighted(&v, &[0.3; 10]).unwrap();
        assert!((a.mean - b.mean).norm() < 1e-14);
        assert!((a.stderr - b.stderr).abs() < 1e-14);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(
            MCStat::<f64>::from_samples(&[]).unwrap_err(),
            LabError::EmptyBatch
        );
    }
}
