//! General-β log-gases: sampling, small-N quadrature and the Virasoro / BPZ
//! identities as numerical residuals.
//!
//! The target density is `|Δ(x)|^β exp(-Σ V(x_i))`. Polynomial couplings use
//! `V(x) = -Σ t_k x^k`; the Gaussian spec with scale `a` is `t_2 = -1/(2a²)`,
//! so one eigenvalue has the moments of `N(0, a²)`.

mod bpz;
mod identities;
mod quadrature;
pub(crate) mod sample;

pub use bpz::{bpz_ode_residual, confluent_bpz_residual, AlphaChoice, BpzResidual};
pub use identities::{loop_identity_residual, reweight_alpha, virasoro_quadrature, virasoro_residual};
pub use quadrature::{default_domain, quadrature_integral, quadrature_integral_cx, Domain, QuadOptions, QuadValue};
pub use sample::{sample_gbeta, tridiagonal_draw, SampleBatch};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::{Cx, Scalar};

/// Potential defining the one-body weight `exp(-V(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec<T> {
    /// `V(x) = -Σ_k t_k x^k`, `couplings[k] = t_k`.
    PolynomialCouplings { couplings: Vec<T> },
    /// `V(x) = C Σ_l m_l ln|x - w_l| + g x²/2`.
    ///
    /// `confinement = g` is zero for the pure multi-Penner weight; a positive
    /// value allows single-singularity configurations on a half-line.
    MultiPenner {
        masses: Vec<T>,
        positions: Vec<T>,
        c: T,
        confinement: T,
    },
    /// `V(x) = x²/(2a²)`.
    Gaussian { scale: T },
}

impl<T: Scalar> PotentialSpec<T> {
    pub fn gaussian(scale: T) -> Self {
        PotentialSpec::Gaussian { scale }
    }

    pub fn polynomial(couplings: Vec<T>) -> Self {
        PotentialSpec::PolynomialCouplings { couplings }
    }

    pub fn multi_penner(masses: Vec<T>, positions: Vec<T>, c: T) -> Self {
        PotentialSpec::MultiPenner {
            masses,
            positions,
            c,
            confinement: T::zero(),
        }
    }

    /// Polynomial couplings `t_k` if the potential is polynomial.
    pub fn couplings(&self) -> Option<Vec<T>> {
        match self {
            PotentialSpec::PolynomialCouplings { couplings } => Some(couplings.clone()),
            PotentialSpec::Gaussian { scale } => Some(vec![
                T::zero(),
                T::zero(),
                -T::one() / (T::lit(2.0) * *scale * *scale),
            ]),
            PotentialSpec::MultiPenner { .. } => None,
        }
    }

    /// `V(x)` on the real line.
    pub fn v(&self, x: T) -> T {
        match self {
            PotentialSpec::PolynomialCouplings { couplings } => {
                -couplings
                    .iter()
                    .rev()
                    .fold(T::zero(), |acc, &t| acc * x + t)
            }
            PotentialSpec::Gaussian { scale } => x * x / (T::lit(2.0) * *scale * *scale),
            PotentialSpec::MultiPenner {
                masses,
                positions,
                c,
                confinement,
            } => {
                let logs: T = masses
                    .iter()
                    .zip(positions)
                    .map(|(&m, &w)| m * (x - w).abs().ln())
                    .sum();
                *c * logs + *confinement * x * x / T::lit(2.0)
            }
        }
    }

    /// `V'(z)` at a complex point.
    pub fn dv(&self, z: Cx<T>) -> Cx<T> {
        match self {
            PotentialSpec::PolynomialCouplings { couplings } => {
                let mut acc = Cx::new(T::zero(), T::zero());
                for (k, &t) in couplings.iter().enumerate().skip(1).rev() {
                    acc = acc * z + Cx::new(T::from_usize_lossy(k) * t, T::zero());
                }
                -acc
            }
            PotentialSpec::Gaussian { scale } => z / (*scale * *scale),
            PotentialSpec::MultiPenner {
                masses,
                positions,
                c,
                confinement,
            } => {
                let mut acc = z * *confinement;
                for (&m, &w) in masses.iter().zip(positions) {
                    acc = acc + Cx::new(*c * m, T::zero()) / (z - Cx::new(w, T::zero()));
                }
                acc
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::PolynomialCouplings { couplings } => {
                if couplings.iter().any(|t| !t.is_finite()) {
                    return Err(LabError::param("couplings must be finite"));
                }
            }
            PotentialSpec::Gaussian { scale } => {
                if !(*scale > T::zero() && scale.is_finite()) {
                    return Err(LabError::param("Gaussian scale must be positive"));
                }
            }
            PotentialSpec::MultiPenner {
                masses,
                positions,
                c,
                confinement,
            } => {
                if masses.len() != positions.len() || masses.is_empty() {
                    return Err(LabError::param(
                        "multi-Penner masses and positions must be non-empty and of equal length",
                    ));
                }
                for (i, &a) in positions.iter().enumerate() {
                    for &b in &positions[i + 1..] {
                        if a == b {
                            return Err(LabError::param(
                                "multi-Penner positions must be pairwise distinct",
                            ));
                        }
                    }
                }
                if !c.is_finite() || *confinement < T::zero() {
                    return Err(LabError::param(
                        "multi-Penner constant must be finite and confinement nonnegative",
                    ));
                }
            }
        }
        Ok(())
    }

    /// True when the polynomial weight is integrable on the real line.
    pub fn is_confining_polynomial(&self) -> bool {
        match self.couplings() {
            Some(t) => {
                let lead = t.iter().rposition(|&c| c != T::zero());
                matches!(lead, Some(k) if k >= 2 && k % 2 == 0 && t[k] < T::zero())
            }
            None => false,
        }
    }
}

/// β-ensemble definition. `κ = β/2` is derived from `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec<T> {
    pub n_eigen: usize,
    pub beta: T,
    pub potential: PotentialSpec<T>,
}

impl<T: Scalar> EnsembleSpec<T> {
    pub fn new(n_eigen: usize, beta: T, potential: PotentialSpec<T>) -> Result<Self> {
        let s = EnsembleSpec {
            n_eigen,
            beta,
            potential,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn gaussian(n_eigen: usize, beta: T, scale: T) -> Result<Self> {
        Self::new(n_eigen, beta, PotentialSpec::gaussian(scale))
    }

    pub fn kappa(&self) -> T {
        self.beta / T::lit(2.0)
    }

    /// `c = 1 - 6(1-κ)²/κ`.
    pub fn central_charge(&self) -> T {
        let k = self.kappa();
        T::one() - T::lit(6.0) * (T::one() - k) * (T::one() - k) / k
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_eigen < 1 {
            return Err(LabError::param("n_eigen must be at least 1"));
        }
        if !(self.beta > T::zero() && self.beta.is_finite()) {
            return Err(LabError::param("beta must be positive"));
        }
        self.potential.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_couplings_and_derivative() {
        let p = PotentialSpec::gaussian(2.0f64);
        assert_eq!(p.couplings().unwrap(), vec![0.0, 0.0, -0.125]);
        assert!((p.v(3.0) - 9.0 / 8.0).abs() < 1e-15);
        let q = PotentialSpec::polynomial(p.couplings().unwrap());
        assert!((q.v(3.0) - p.v(3.0)).abs() < 1e-15);
        let z = Cx::new(0.3, -1.2);
        assert!((q.dv(z) - p.dv(z)).norm() < 1e-15);
    }

    #[test]
    fn central_charge_at_beta_two_is_one() {
        let s = EnsembleSpec::gaussian(3, 2.0f64, 1.0).unwrap();
        assert_eq!(s.kappa(), 1.0);
        assert!((s.central_charge() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn penner_positions_distinct() {
        let p = PotentialSpec::multi_penner(vec![1.0f64, 1.0], vec![0.5, 0.5], -1.0);
        assert!(p.validate().is_err());
        assert!(EnsembleSpec::new(0, 2.0, PotentialSpec::gaussian(1.0)).is_err());
        assert!(EnsembleSpec::new(2, -1.0, PotentialSpec::gaussian(1.0)).is_err());
    }

    #[test]
    fn quartic_is_confining() {
        assert!(PotentialSpec::polynomial(vec![0.0f64, 0.3, 0.1, 0.0, -0.25]).is_confining_polynomial());
        assert!(!PotentialSpec::polynomial(vec![0.0f64, 0.0, 0.5]).is_confining_polynomial());
    }
}
