//! Local Taylor models of the pole fields in (t, x).
//!
//! A [`Series`] holds t-Taylor coefficients of `Q_k`, `Q_k'` and `U` around a
//! state; [`Local`] turns them into bivariate jets at a point `x₀` from which
//! every field and every mixed partial derivative is read off exactly.

use crate::error::{LabError, Result};
use crate::numerics::jet::Jet;
use crate::scalar::{cre, Cx, Scalar};

use super::{propagate, PoleState};

/// Relative distance to the nearest pole below which evaluation is refused.
pub(crate) const POLE_GUARD: f64 = 1e-3;

/// t-Taylor coefficients around `t0`.
#[derive(Debug, Clone)]
pub(crate) struct Series<T: Scalar> {
    pub kappa: usize,
    pub t0: T,
    pub q: Vec<Vec<Cx<T>>>,
    pub qdot: Vec<Vec<Cx<T>>>,
    pub u: Vec<Cx<T>>,
}

type J1<T, const N: usize> = Jet<T, N, 1>;

impl<T: Scalar> Series<T> {
    /// Coefficients up to order `order` by Taylor recursion of the equations
    /// of motion (exact up to rounding).
    pub fn analytic(state: &PoleState<T>, order: usize) -> Result<Self> {
        state.validate()?;
        // N must be a compile-time size; 8 covers every use (order <= 5).
        if order + 2 > 8 {
            return Err(LabError::param("Taylor order too large"));
        }
        let n = state.kappa;
        let k = T::from_usize_lossy(n);
        let mut q: Vec<Vec<Cx<T>>> = (0..n).map(|i| vec![state.q[i], state.qdot[i]]).collect();
        let mut u = vec![state.u];
        let t = J1::<T, 8>::var_t(cre(state.t));
        for m in 0..=order {
            let qj: Vec<J1<T, 8>> = q.iter().map(|c| J1::from_t_coeffs(c)).collect();
            let mut usum = J1::<T, 8>::zero();
            for i in 0..n {
                let mut f = -(qj[i] * (t - qj[i] * qj[i])) * T::lit(2.0) + cre(k - T::lit(2.0));
                for j in 0..n {
                    if j != i {
                        let d = (qj[i] - qj[j]).recip();
                        f -= d * d * d * T::lit(8.0);
                    }
                }
                let f = f * (T::one() / (k * k));
                let denom = T::from_usize_lossy((m + 1) * (m + 2));
                q[i].push(f.coeff(m, 0) / denom);
                usum += qj[i] * qj[i];
            }
            u.push(-usum.coeff(m, 0) / (k * T::from_usize_lossy(m + 1)));
        }
        let qdot = q
            .iter()
            .map(|c| (1..c.len()).map(|i| c[i] * T::from_usize_lossy(i)).collect())
            .collect();
        Ok(Series {
            kappa: n,
            t0: state.t,
            q,
            qdot,
            u,
        })
    }

    /// Coefficients up to order 2 from states at `t0 ± h`, `t0 ± 2h` obtained
    /// by integrating the trajectory (fourth-order central differences).
    pub fn differenced(state: &PoleState<T>, h: T, tol: T) -> Result<Self> {
        state.validate()?;
        let m1 = propagate(state, state.t - h, tol)?;
        let p1 = propagate(state, state.t + h, tol)?;
        let m2 = propagate(&m1, state.t - h - h, tol)?.to_vec();
        let p2 = propagate(&p1, state.t + h + h, tol)?.to_vec();
        let (m1, p1, mid) = (m1.to_vec(), p1.to_vec(), state.to_vec());
        let c = |v: f64| T::lit(v);
        let fit = |i: usize| {
            vec![
                mid[i],
                (m2[i] - m1[i] * c(8.0) + p1[i] * c(8.0) - p2[i]) / (c(12.0) * h),
                (-m2[i] + m1[i] * c(16.0) - mid[i] * c(30.0) + p1[i] * c(16.0) - p2[i]) / (c(24.0) * h * h),
            ]
        };
        let n = state.kappa;
        Ok(Series {
            kappa: n,
            t0: state.t,
            q: (0..n).map(fit).collect(),
            qdot: (n..2 * n).map(fit).collect(),
            u: fit(2 * n),
        })
    }
}

/// Bivariate jets of the pole data and of `t`, `x` at `(t0, x0)`.
pub(crate) struct Local<T: Scalar, const NT: usize, const NX: usize> {
    pub kappa: usize,
    pub t: Jet<T, NT, NX>,
    pub x: Jet<T, NT, NX>,
    pub q: Vec<Jet<T, NT, NX>>,
    pub qdot: Vec<Jet<T, NT, NX>>,
    pub u: Jet<T, NT, NX>,
    /// `1/(x - Q_k)`.
    pub inv: Vec<Jet<T, NT, NX>>,
}

impl<T: Scalar, const NT: usize, const NX: usize> Local<T, NT, NX> {
    pub fn new(series: &Series<T>, x0: Cx<T>) -> Result<Self> {
        for c in series.q.iter().chain(&series.qdot).chain(std::iter::once(&series.u)) {
            if c.len() < NT {
                return Err(LabError::param("Taylor series shorter than the jet order"));
            }
        }
        for c in &series.q {
            let d = (x0 - c[0]).norm();
            if d < T::lit(POLE_GUARD) * (T::one() + x0.norm()) {
                return Err(LabError::PoleEvaluation(format!(
                    "x = {} lies within {:e} of the pole {}",
                    x0,
                    d.to_f64_lossy(),
                    c[0]
                )));
            }
        }
        let x = Jet::var_x(x0);
        let q: Vec<_> = series.q.iter().map(|c| Jet::from_t_coeffs(c)).collect();
        let inv = q.iter().map(|&qk| (x - qk).recip()).collect();
        Ok(Local {
            kappa: series.kappa,
            t: Jet::var_t(cre(series.t0)),
            x,
            qdot: series.qdot.iter().map(|c| Jet::from_t_coeffs(c)).collect(),
            u: Jet::from_t_coeffs(&series.u),
            q,
            inv,
        })
    }

    pub fn k(&self) -> T {
        T::from_usize_lossy(self.kappa)
    }

    fn c(&self, v: f64) -> Jet<T, NT, NX> {
        Jet::constant(cre(T::lit(v)))
    }

    /// `v = t - x²`.
    pub fn v(&self) -> Jet<T, NT, NX> {
        self.t - self.x * self.x
    }

    /// `Y = Π (x - Q_k)`.
    pub fn y(&self) -> Jet<T, NT, NX> {
        self.q.iter().fold(self.c(1.0), |acc, &qk| acc * (self.x - qk))
    }

    /// `P = Σ 1/(x - Q_k) = -κ b₊`.
    pub fn p(&self) -> Jet<T, NT, NX> {
        self.inv.iter().fold(Jet::zero(), |acc, &v| acc + v)
    }

    /// `R_k = Σ_{j≠k} 1/(Q_k - Q_j)`.
    pub fn r(&self, k: usize) -> Jet<T, NT, NX> {
        let mut s = Jet::zero();
        for j in 0..self.kappa {
            if j != k {
                s += (self.q[k] - self.q[j]).recip();
            }
        }
        s
    }

    /// `b₁` from `2b₁ = (1/κ)Σ (κQ_k' + t - Q_k² - 2R_k)/(x - Q_k) - (1/κ)ΣQ_k - (1/κ)(t²/2 + U)`.
    pub fn b_one(&self) -> Jet<T, NT, NX> {
        let k = self.k();
        let mut s = Jet::zero();
        for i in 0..self.kappa {
            let num = self.qdot[i] * k + self.t - self.q[i] * self.q[i] - self.r(i) * T::lit(2.0);
            s += num * self.inv[i];
            s -= self.q[i];
        }
        s -= self.t * self.t * T::lit(0.5) + self.u;
        s * (T::one() / (T::lit(2.0) * k))
    }

    /// `V = (3/4)Σ 1/(x-Q_k)² + (1/2)Σ (κQ_k' - R_k)/(x-Q_k) - U/2 + (κ-2)x/2 - tx²/2 + x⁴/4`.
    pub fn schrodinger_v(&self) -> Jet<T, NT, NX> {
        let k = self.k();
        let half = T::lit(0.5);
        let mut s = Jet::zero();
        for i in 0..self.kappa {
            let w = self.inv[i];
            s += w * w * T::lit(0.75);
            s += (self.qdot[i] * k - self.r(i)) * w * half;
        }
        let x2 = self.x * self.x;
        s - self.u * half + self.x * ((k - T::lit(2.0)) * half) - self.t * x2 * half + x2 * x2 * T::lit(0.25)
    }

    /// `exp(∫_{t0}^{t} (s²/2 + U(s))/κ ds)`, the time gauge of the Hirota form.
    pub fn time_gauge(&self) -> Jet<T, NT, NX> {
        let g = (self.t * self.t * T::lit(0.5) + self.u) * (T::one() / self.k());
        let mut integral = Jet::zero();
        for i in 1..NT {
            integral.set_coeff(i, 0, g.coeff(i - 1, 0) / T::from_usize_lossy(i));
        }
        integral.exp()
    }
}
