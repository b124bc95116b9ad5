use rayon::prelude::*;

use super::quadrature::{quadrature_integral, QuadOptions};
use super::{EnsembleSpec, SampleBatch};
use crate::error::{LabError, Result};
use crate::numerics::stats::MCStat;
use crate::scalar::{cre, Cx, Scalar};

fn power_sums<T: Scalar>(x: &[T], max: usize) -> Vec<T> {
    let mut p = vec![T::zero(); max + 1];
    p[0] = T::from_usize_lossy(x.len());
    for &xi in x {
        let mut pw = T::one();
        for pk in p.iter_mut().skip(1) {
            pw *= xi;
            *pk += pw;
        }
    }
    p
}

/// Per-configuration value of `L_n` expressed in power sums:
/// `κ Σ_{m=0}^{n} p_m p_{n-m} + Σ_{m>=1} m t_m p_{n+m} + (1-κ)(n+1) p_n`.
pub(crate) fn virasoro_sample<T: Scalar>(x: &[T], t: &[T], kappa: T, n: i64) -> T {
    let kmax = t.len().saturating_sub(1);
    let top = (n + kmax as i64).max(n).max(0) as usize;
    let p = power_sums(x, top);
    let mut acc = T::zero();
    if n >= 0 {
        let nu = n as usize;
        for m in 0..=nu {
            acc += kappa * p[m] * p[nu - m];
        }
        acc += (T::one() - kappa) * T::from_usize_lossy(nu + 1) * p[nu];
    }
    for (m, &tm) in t.iter().enumerate().skip(1) {
        let idx = n + m as i64;
        if idx >= 0 {
            acc += T::from_usize_lossy(m) * tm * p[idx as usize];
        }
    }
    acc
}

/// Monte-Carlo estimate of `L_n I / I`; the exact value is 0.
pub fn virasoro_residual<T: Scalar>(batch: &SampleBatch<T>, n: i64) -> Result<MCStat<T>> {
    batch.validate()?;
    if n < -1 {
        return Err(LabError::param("Virasoro index must be >= -1"));
    }
    let t = batch
        .spec
        .potential
        .couplings()
        .ok_or_else(|| LabError::param("Virasoro residual needs polynomial or Gaussian couplings"))?;
    let kappa = batch.spec.kappa();
    let values: Vec<Cx<T>> = batch
        .configs
        .par_iter()
        .map(|x| cre(virasoro_sample(x, &t, kappa, n)))
        .collect();
    MCStat::from_weighted(&values, &batch.log_weights)
}

/// Quadrature value of `⟨L_n⟩ = ∫ L_n w / ∫ w` for `n_eigen <= 3`; the exact
/// value is 0. The error combines both integrals' estimates.
pub fn virasoro_quadrature<T: Scalar>(spec: &EnsembleSpec<T>, n: i64, opts: QuadOptions<T>) -> Result<(T, T)> {
    if n < -1 {
        return Err(LabError::param("Virasoro index must be >= -1"));
    }
    let t = spec
        .potential
        .couplings()
        .ok_or_else(|| LabError::param("Virasoro residual needs polynomial or Gaussian couplings"))?;
    let kappa = spec.kappa();
    let z = quadrature_integral(spec, |_| T::one(), None, opts)?;
    let ln = quadrature_integral(spec, |x| virasoro_sample(x, &t, kappa, n), None, opts)?;
    let zr = z.value.re;
    let value = ln.value.re / zr;
    let error = ln.error / zr.abs() + value.abs() * z.error / zr.abs();
    Ok((value, error))
}

fn is_integer<T: Scalar>(a: T) -> bool {
    a == a.round()
}

/// `α Σ_k ln(z - x_k)` for one configuration.
fn alpha_log_factor<T: Scalar>(x: &[T], z: Cx<T>, alpha: T) -> Result<Cx<T>> {
    let mut acc = Cx::new(T::zero(), T::zero());
    for &xk in x {
        let d = z - cre(xk);
        if d.norm() == T::zero() {
            return Err(LabError::Conditioning("z coincides with an eigenvalue".into()));
        }
        if d.im == T::zero() && d.re < T::zero() && !is_integer(alpha) {
            return Err(LabError::Conditioning(
                "real z inside the eigenvalue support with non-integer alpha".into(),
            ));
        }
        acc = acc + d.ln() * alpha;
    }
    Ok(acc)
}

/// Copies `batch` with the insertion `Π(z - x_k)^α` added to the log-weights.
///
/// Requires `z` to the right of every sampled eigenvalue so that the factor is
/// positive.
pub fn reweight_alpha<T: Scalar>(batch: &SampleBatch<T>, z: T, alpha: T) -> Result<SampleBatch<T>> {
    batch.validate()?;
    let mut out = batch.clone();
    for (x, lw) in out.configs.iter().zip(out.log_weights.iter_mut()) {
        if x.iter().any(|&xk| xk >= z) {
            return Err(LabError::Conditioning(
                "z lies inside the sampled support; use a complex z".into(),
            ));
        }
        *lw += alpha * x.iter().map(|&xk| (z - xk).ln()).sum::<T>();
    }
    Ok(out)
}

/// Loop-equation residual under the α-weighted measure:
/// `⟨Σ_k (1-α)/(z-x_k)² + β Σ_{j<k} 1/((z-x_j)(z-x_k)) - V'(x_k)/(z-x_k)⟩_α`.
///
/// The pair sum is the symmetrized form of `Σ_{j≠k} β/((z-x_k)(x_k-x_j))`.
/// The α insertion is applied as a (complex) log-weight on top of the batch's
/// own log-weights.
pub fn loop_identity_residual<T: Scalar>(batch: &SampleBatch<T>, z: Cx<T>, alpha: T) -> Result<MCStat<T>> {
    batch.validate()?;
    let beta = batch.spec.beta;
    let pot = &batch.spec.potential;
    let one_minus_alpha = T::one() - alpha;
    let rows: Vec<Result<(Cx<T>, Cx<T>)>> = batch
        .configs
        .par_iter()
        .zip(batch.log_weights.par_iter())
        .map(|(x, &lw)| {
            let lf = alpha_log_factor(x, z, alpha)? + cre(lw);
            let inv: Vec<Cx<T>> = x.iter().map(|&xk| (z - cre(xk)).inv()).collect();
            let mut f = Cx::new(T::zero(), T::zero());
            for (k, &xk) in x.iter().enumerate() {
                f = f + inv[k] * inv[k] * one_minus_alpha - pot.dv(cre(xk)) * inv[k];
                for j in 0..k {
                    f = f + inv[k] * inv[j] * beta;
                }
            }
            Ok((f, lf))
        })
        .collect();
    let mut values = Vec::with_capacity(rows.len());
    let mut logs = Vec::with_capacity(rows.len());
    for r in rows {
        let (f, l) = r?;
        values.push(f);
        logs.push(l);
    }
    MCStat::from_cx_log_weighted(&values, &logs)
}
