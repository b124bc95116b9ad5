use serde::{Deserialize, Serialize};

use super::{EnsembleSpec, PotentialSpec};
use crate::error::{LabError, Result};
use crate::numerics::quad;
use crate::scalar::{cre, Cx, Scalar};

/// Log-weight drop below the peak at which the domain is truncated.
const LOG_DROP: f64 = 72.0;

/// Integration interval applied to every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain<T> {
    pub lo: T,
    pub hi: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_depth: usize,
}

impl<T: Scalar> Default for QuadOptions<T> {
    fn default() -> Self {
        QuadOptions {
            abs_tol: T::lit(1e-13),
            rel_tol: T::lit(1e-12),
            max_depth: 40,
        }
    }
}

/// Quadrature value with its error estimate and a bound on the truncated tail
/// (relative to the value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadValue<T: Scalar> {
    pub value: Cx<T>,
    pub error: T,
    pub tail_bound: T,
    pub evaluations: usize,
}

/// Truncated integration domain for the spec's weight.
///
/// Gaussian: `|x| <= 12a`. Polynomial: where `V` exceeds its minimum by 72 plus
/// a logarithmic allowance for the Vandermonde and polynomial observables.
/// Multi-Penner: `[w_min, w_max]`, or `[w_max, ∞)` truncated when confined.
pub fn default_domain<T: Scalar>(spec: &EnsembleSpec<T>) -> Result<Domain<T>> {
    let twelve = T::lit(12.0);
    match &spec.potential {
        PotentialSpec::Gaussian { scale } => Ok(Domain {
            lo: -twelve * *scale,
            hi: twelve * *scale,
        }),
        PotentialSpec::PolynomialCouplings { .. } => {
            if !spec.potential.is_confining_polynomial() {
                return Err(LabError::param(
                    "polynomial weight is not integrable: leading even coupling must be negative",
                ));
            }
            let (x0, vmin) = argmin_v(&spec.potential, T::lit(-50.0), T::lit(50.0));
            let lo = walk_out(spec, x0, vmin, -T::one());
            let hi = walk_out(spec, x0, vmin, T::one());
            Ok(Domain { lo, hi })
        }
        PotentialSpec::MultiPenner {
            positions,
            confinement,
            ..
        } => {
            let wmin = positions.iter().copied().fold(T::infinity(), T::min);
            let wmax = positions.iter().copied().fold(T::neg_infinity(), T::max);
            if *confinement > T::zero() {
                let step = T::lit(1e-3);
                let (x0, vmin) = argmin_v(&spec.potential, wmax + step, wmax + T::lit(100.0));
                let hi = walk_out(spec, x0, vmin, T::one());
                Ok(Domain { lo: wmax, hi })
            } else if positions.len() < 2 {
                Err(LabError::param(
                    "a single Penner singularity needs a positive confinement",
                ))
            } else {
                Ok(Domain { lo: wmin, hi: wmax })
            }
        }
    }
}

fn argmin_v<T: Scalar>(p: &PotentialSpec<T>, lo: T, hi: T) -> (T, T) {
    let n = 4000;
    let mut best = (lo, p.v(lo));
    for i in 0..=n {
        let x = lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
        let v = p.v(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

fn walk_out<T: Scalar>(spec: &EnsembleSpec<T>, x0: T, vmin: T, dir: T) -> T {
    let growth = spec.beta * T::from_usize_lossy(spec.n_eigen - 1) + T::lit(8.0);
    let step = T::lit(0.05);
    let mut x = x0;
    for _ in 0..200_000 {
        x += dir * step;
        let allowance = growth * (T::one() + x.abs()).ln();
        if spec.potential.v(x) - vmin >= T::lit(LOG_DROP) + allowance {
            break;
        }
    }
    x
}

struct Nested<'a, T: Scalar, F> {
    spec: &'a EnsembleSpec<T>,
    domain: Domain<T>,
    opts: QuadOptions<T>,
    observable: &'a F,
    breaks: Vec<T>,
    inner_error: T,
    converged: bool,
    evaluations: usize,
}

impl<T: Scalar, F: Fn(&[T]) -> Cx<T>> Nested<'_, T, F> {
    fn integrand(&self, xs: &[T]) -> Cx<T> {
        let mut log_w = T::zero();
        for (i, &x) in xs.iter().enumerate() {
            log_w -= self.spec.potential.v(x);
            for &y in &xs[..i] {
                log_w += self.spec.beta * (x - y).abs().ln();
            }
        }
        (self.observable)(xs) * log_w.exp()
    }

    /// Integrates out coordinate `xs.len()`; returns the value and its error.
    fn level(&mut self, xs: &mut Vec<T>) -> (Cx<T>, T) {
        let m = self.spec.n_eigen;
        let depth = xs.len();
        let width = self.domain.hi - self.domain.lo;
        let shrink = (T::one() / width.max(T::one())).powi(depth as i32);
        let mut breaks = self.breaks.clone();
        breaks.extend(xs.iter().copied());
        let abs_tol = self.opts.abs_tol * shrink;
        let rel_tol = self.opts.rel_tol * T::lit(0.1).powi(depth as i32);
        let (lo, hi, max_depth) = (self.domain.lo, self.domain.hi, self.opts.max_depth);
        let r = quad::integrate(
            |x| {
                xs.push(x);
                let v = if xs.len() == m {
                    self.evaluations += 1;
                    self.integrand(xs)
                } else {
                    let (v, e) = self.level(xs);
                    self.inner_error = self.inner_error.max(e);
                    v
                };
                xs.pop();
                v
            },
            lo,
            hi,
            &breaks,
            abs_tol,
            rel_tol,
            max_depth,
        );
        if !r.converged {
            self.converged = false;
        }
        (r.value, r.error)
    }
}

/// `∫ observable(x) |Δ(x)|^β exp(-Σ V(x_i)) dx` over `domain^M` for complex
/// observables, by nested adaptive Gauss–Legendre quadrature (`M <= 3`).
///
/// `extra_breaks` are added to the panel boundaries of every coordinate
/// (e.g. the real part of a nearby singularity).
pub fn quadrature_integral_cx<T, F>(
    spec: &EnsembleSpec<T>,
    observable: F,
    domain: Option<Domain<T>>,
    opts: QuadOptions<T>,
    extra_breaks: &[T],
) -> Result<QuadValue<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Cx<T>,
{
    spec.validate()?;
    if spec.n_eigen > 3 {
        return Err(LabError::UnsupportedDimension(spec.n_eigen));
    }
    let domain = match domain {
        Some(d) => d,
        None => default_domain(spec)?,
    };
    if !(domain.lo < domain.hi) {
        return Err(LabError::param("domain must satisfy lo < hi"));
    }
    let mut breaks: Vec<T> = extra_breaks.to_vec();
    if let PotentialSpec::MultiPenner { positions, .. } = &spec.potential {
        breaks.extend(positions.iter().copied());
    }
    let mut nested = Nested {
        spec,
        domain,
        opts,
        observable: &observable,
        breaks,
        inner_error: T::zero(),
        converged: true,
        evaluations: 0,
    };
    let (value, outer_error) = nested.level(&mut Vec::with_capacity(spec.n_eigen));
    let error = outer_error + nested.inner_error * (domain.hi - domain.lo);
    let tail_bound = T::from_usize_lossy(spec.n_eigen) * (-T::lit(LOG_DROP)).exp();
    if !nested.converged || !value.re.is_finite() || !value.im.is_finite() {
        return Err(LabError::Accuracy {
            estimate: value.re.to_f64_lossy(),
            error: error.to_f64_lossy(),
        });
    }
    Ok(QuadValue {
        value,
        error,
        tail_bound,
        evaluations: nested.evaluations,
    })
}

/// Real-observable form of [`quadrature_integral_cx`].
pub fn quadrature_integral<T, F>(
    spec: &EnsembleSpec<T>,
    observable: F,
    domain: Option<Domain<T>>,
    opts: QuadOptions<T>,
) -> Result<QuadValue<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> T,
{
    quadrature_integral_cx(spec, |x| cre(observable(x)), domain, opts, &[])
}
