//! Embedded Dormand–Prince 5(4) integrator over complex state vectors.

use crate::error::{LabError, Result};
use crate::scalar::{Cx, Scalar};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Counters reported by an integration run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl StepStats {
    pub fn merge(&mut self, other: StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.evaluations += other.evaluations;
    }
}

/// Adaptive step-size controller settings.
#[derive(Debug, Clone, Copy)]
pub struct DormandPrince<T> {
    pub rtol: T,
    pub atol: T,
    pub h_init: Option<T>,
    pub h_max: Option<T>,
    pub max_steps: usize,
}

impl<T: Scalar> DormandPrince<T> {
    pub fn new(tol: T) -> Self {
        DormandPrince {
            rtol: tol,
            atol: tol,
            h_init: None,
            h_max: None,
            max_steps: 2_000_000,
        }
    }

    pub fn with_h_max(mut self, h_max: T) -> Self {
        self.h_max = Some(h_max);
        self
    }

    pub fn with_h_init(mut self, h: T) -> Self {
        self.h_init = Some(h);
        self
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
    ///
    /// `observe` is called after every accepted step with the new time and state.
    pub fn integrate<F, O>(
        &self,
        mut f: F,
        t0: T,
        y0: &[Cx<T>],
        t1: T,
        mut observe: O,
    ) -> Result<(Vec<Cx<T>>, StepStats)>
    where
        F: FnMut(T, &[Cx<T>], &mut [Cx<T>]) -> Result<()>,
        O: FnMut(T, &[Cx<T>]) -> Result<()>,
    {
        let n = y0.len();
        let mut stats = StepStats::default();
        let mut y = y0.to_vec();
        if t1 == t0 {
            return Ok((y, stats));
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let h_max = self.h_max.unwrap_or(span).min(span);
        let mut h = self
            .h_init
            .unwrap_or_else(|| (span * T::lit(1e-3)).min(h_max))
            .abs()
            .min(h_max);

        let mut k: Vec<Vec<Cx<T>>> = vec![vec![Cx::new(T::zero(), T::zero()); n]; 7];
        let mut tmp = vec![Cx::new(T::zero(), T::zero()); n];
        let mut y_new = vec![Cx::new(T::zero(), T::zero()); n];
        let mut t = t0;
        f(t, &y, &mut k[0])?;
        stats.evaluations += 1;
        let eps = T::epsilon();

        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= eps * (T::one() + t.abs()) {
                break;
            }
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(LabError::Integration {
                    at: t.to_f64_lossy(),
                    reason: "step budget exhausted".into(),
                });
            }
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            let hs = h * dir;

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc = acc + kj[i] * (hs * T::lit(a));
                        }
                    }
                    tmp[i] = acc;
                }
                let ts = t + hs * T::lit(C[s]);
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                f(ts, &tmp, &mut tail[0])?;
                stats.evaluations += 1;
            }
            // stage 7 input is the 5th-order solution (FSAL)
            let mut err = T::zero();
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(6) {
                    let a = A[6][j];
                    if a != 0.0 {
                        acc = acc + kj[i] * (hs * T::lit(a));
                    }
                }
                y_new[i] = acc;
            }
            // k[6] currently holds f at tmp from stage 6 which equals y_new
            for i in 0..n {
                let mut e = Cx::new(T::zero(), T::zero());
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e = e + kj[i] * T::lit(E[j]);
                    }
                }
                let e = (e * hs).norm();
                let scale = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                let r = e / scale;
                if !r.is_finite() {
                    err = T::infinity();
                } else if r > err {
                    err = r;
                }
            }

            if err <= T::one() {
                t = if last { t1 } else { t + hs };
                std::mem::swap(&mut y, &mut y_new);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                stats.accepted += 1;
                observe(t, &y)?;
                let fac = if err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
                };
                h = (h * fac).min(h_max);
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1))
                } else {
                    T::lit(0.1)
                };
                h = h * fac;
            }
            if h <= eps * T::lit(16.0) * (T::one() + t.abs()) {
                return Err(LabError::Integration {
                    at: t.to_f64_lossy(),
                    reason: "step size underflow".into(),
                });
            }
        }
        Ok((y, stats))
    }
}

/// Convenience wrapper without an observer.
pub fn solve<T, F>(tol: T, f: F, t0: T, y0: &[Cx<T>], t1: T) -> Result<Vec<Cx<T>>>
where
    T: Scalar,
    F: FnMut(T, &[Cx<T>], &mut [Cx<T>]) -> Result<()>,
{
    DormandPrince::new(tol)
        .integrate(f, t0, y0, t1, |_, _| Ok(()))
        .map(|(y, _)| y)
}
