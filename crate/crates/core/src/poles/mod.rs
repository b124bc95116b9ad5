//! κ-pole Calogero dynamics in the time-dependent cubic field and the
//! rational fields `b₊, b₁, P, b, V` they generate.

pub(crate) mod fields;
pub(crate) mod local;

pub use fields::{
    eval_fields, governing_residual, governing_residual_with, hirota_residual, hirota_residual_scaled,
    hirota_residual_with,
    DtMode, FieldEval, GoverningResidual,
};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io::{fmt_float, CsvTable};
use crate::numerics::linalg::solve_dense;
use crate::numerics::rk::{DormandPrince, StepStats};
use crate::scalar::{cre, Cx, Scalar};

/// Smallest admissible pole separation.
pub const COLLISION_EPS: f64 = 1e-6;

/// Positions `Q_k`, velocities `Q_k'` and the auxiliary potential `U` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleState<T> {
    pub kappa: usize,
    pub t: T,
    pub q: Vec<Cx<T>>,
    pub qdot: Vec<Cx<T>>,
    pub u: Cx<T>,
}

impl<T: Scalar> PoleState<T> {
    pub fn new(kappa: usize, t: T, q: Vec<Cx<T>>, qdot: Vec<Cx<T>>, u: Cx<T>) -> Result<Self> {
        let s = PoleState {
            kappa,
            t,
            q,
            qdot,
            u,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa == 0 {
            return Err(LabError::param("kappa must be a positive integer"));
        }
        if self.q.len() != self.kappa || self.qdot.len() != self.kappa {
            return Err(LabError::param(format!(
                "need {} positions and velocities, got {} and {}",
                self.kappa,
                self.q.len(),
                self.qdot.len()
            )));
        }
        let fin = |z: &Cx<T>| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.t.is_finite() && fin(&self.u) && self.q.iter().chain(&self.qdot).all(fin);
        if !all_finite {
            return Err(LabError::param("non-finite pole state"));
        }
        self.check_separation()
    }

    /// `min |Q_k - Q_j|` (infinite for a single pole).
    pub fn min_separation(&self) -> T {
        min_separation(&self.q)
    }

    fn check_separation(&self) -> Result<()> {
        let sep = self.min_separation();
        if sep < T::lit(COLLISION_EPS) {
            return Err(LabError::Collision {
                t: self.t.to_f64_lossy(),
                separation: sep.to_f64_lossy(),
            });
        }
        Ok(())
    }

    fn kf(&self) -> T {
        T::from_usize_lossy(self.kappa)
    }

    /// `R_k = Σ_{j≠k} 1/(Q_k - Q_j)`.
    pub fn r(&self, k: usize) -> Cx<T> {
        let mut s = cre(T::zero());
        for (j, &qj) in self.q.iter().enumerate() {
            if j != k {
                s += (self.q[k] - qj).inv();
            }
        }
        s
    }

    /// Flattened `[Q_1..Q_κ, Q'_1..Q'_κ, U]`.
    pub fn to_vec(&self) -> Vec<Cx<T>> {
        let mut y = Vec::with_capacity(2 * self.kappa + 1);
        y.extend_from_slice(&self.q);
        y.extend_from_slice(&self.qdot);
        y.push(self.u);
        y
    }

    pub fn from_vec(kappa: usize, t: T, y: &[Cx<T>]) -> Self {
        PoleState {
            kappa,
            t,
            q: y[..kappa].to_vec(),
            qdot: y[kappa..2 * kappa].to_vec(),
            u: y[2 * kappa],
        }
    }

    /// The same state with `U` shifted so that the first integrals have zero mean.
    pub fn normalize_u(&self) -> Result<Self> {
        let i = first_integrals(self)?;
        let mean = i.iter().fold(cre(T::zero()), |a, &b| a + b) / cre(self.kf());
        let mut s = self.clone();
        s.u -= mean;
        Ok(s)
    }

    /// Solves for velocities that put the state on the constraint surface
    /// `I_1 = … = I_κ = 0` at the given positions and `U` (Newton's method).
    /// Without a guess each velocity starts from the root of its own
    /// quadratic with the couplings to the other velocities dropped.
    pub fn on_shell(
        kappa: usize,
        t: T,
        q: Vec<Cx<T>>,
        u: Cx<T>,
        guess: Option<Vec<Cx<T>>>,
    ) -> Result<Self> {
        let k = T::from_usize_lossy(kappa);
        let mut s = PoleState::new(kappa, t, q, vec![cre(T::zero()); kappa], u)?;
        let base = first_integrals(&s)?;
        s.qdot = match guess {
            Some(g) if g.len() == kappa => g,
            Some(_) => return Err(LabError::param("velocity guess has the wrong length")),
            None => (0..kappa)
                .map(|i| {
                    // κ²z²/2 - κR_i z + I_i(0) = 0
                    let a = cre(k * k / T::lit(2.0));
                    let b = -s.r(i) * k;
                    let disc = (b * b - a * base[i] * T::lit(4.0)).sqrt();
                    (-b + disc) / (a * T::lit(2.0))
                })
                .collect(),
        };
        let tol = T::lit(1e3) * T::epsilon();
        let mut last = T::infinity();
        for _ in 0..60 {
            let i = first_integrals(&s)?;
            let scale = s.qdot.iter().map(|v| v.norm() * v.norm()).fold(T::one(), T::max) * k * k;
            let res = i.iter().map(|v| v.norm()).fold(T::zero(), T::max);
            last = res;
            if res <= tol * scale {
                return Ok(s);
            }
            let mut jac = vec![cre(T::zero()); kappa * kappa];
            for a in 0..kappa {
                for b in 0..kappa {
                    jac[a * kappa + b] = if a == b {
                        s.qdot[a] * k * k - s.r(a) * k
                    } else {
                        -cre(k) / (s.q[a] - s.q[b])
                    };
                }
            }
            let step = solve_dense(&jac, &i).ok_or_else(|| {
                LabError::Numerical("singular Jacobian in on-shell velocity solve".into())
            })?;
            for (v, d) in s.qdot.iter_mut().zip(step) {
                *v -= d;
            }
        }
        Err(LabError::Solver {
            iterations: 60,
            residual: last.to_f64_lossy(),
            last_iterate: s.qdot.iter().map(|z| (z.re.to_f64_lossy(), z.im.to_f64_lossy())).collect(),
        })
    }

    /// Default initial data: `Q_k` equally spaced on the circle of radius 1/2
    /// around `i` (rotated off the imaginary axis), `U = 0`, `t = 0`, and
    /// velocities on the constraint surface.
    pub fn demo(kappa: usize) -> Result<Self> {
        if kappa == 0 {
            return Err(LabError::param("kappa must be a positive integer"));
        }
        let q = (0..kappa)
            .map(|k| {
                let th = T::lit(0.3) + T::TAU() * T::from_usize_lossy(k) / T::from_usize_lossy(kappa);
                let r = if kappa == 1 { T::zero() } else { T::lit(0.5) };
                Cx::new(r * th.cos(), T::one() + r * th.sin())
            })
            .collect();
        PoleState::on_shell(kappa, T::zero(), q, cre(T::zero()), None)
    }
}

fn min_separation<T: Scalar>(q: &[Cx<T>]) -> T {
    let mut m = T::infinity();
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            m = m.min((q[i] - q[j]).norm());
        }
    }
    m
}

/// Right-hand side of the equations of motion:
/// `κ²Q_k'' = -2Q_k(t - Q_k²) + κ - 2 - Σ_{j≠k} 8/(Q_k - Q_j)³`, `κU' = -Σ Q_k²`.
pub fn poles_rhs<T: Scalar>(state: &PoleState<T>) -> Result<(Vec<Cx<T>>, Vec<Cx<T>>, Cx<T>)> {
    state.validate()?;
    let n = state.kappa;
    let mut dy = vec![cre(T::zero()); 2 * n + 1];
    rhs_flat(n, state.t, &state.to_vec(), &mut dy)?;
    Ok((dy[..n].to_vec(), dy[n..2 * n].to_vec(), dy[2 * n]))
}

pub(crate) fn rhs_flat<T: Scalar>(kappa: usize, t: T, y: &[Cx<T>], dy: &mut [Cx<T>]) -> Result<()> {
    let q = &y[..kappa];
    let sep = min_separation(q);
    if sep < T::lit(COLLISION_EPS) {
        return Err(LabError::Collision {
            t: t.to_f64_lossy(),
            separation: sep.to_f64_lossy(),
        });
    }
    let k = T::from_usize_lossy(kappa);
    let k2 = k * k;
    let mut usum = cre(T::zero());
    for i in 0..kappa {
        let qi = q[i];
        let mut f = -(qi * (cre(t) - qi * qi)) * T::lit(2.0) + cre(k - T::lit(2.0));
        for (j, &qj) in q.iter().enumerate() {
            if j != i {
                let d = qi - qj;
                f -= (d * d * d).inv() * T::lit(8.0);
            }
        }
        dy[i] = y[kappa + i];
        dy[kappa + i] = f / k2;
        usum += qi * qi;
    }
    dy[2 * kappa] = -usum / k;
    Ok(())
}

/// The κ first integrals
/// `(κQ_k')²/2 + tQ_k² - Q_k⁴/2 - (κ-2)Q_k - Σ_{j≠k} 2/(Q_k-Q_j)² + U
///  - Σ_{j≠k} κ(Q_k'+Q_j')/(Q_k-Q_j) + Σ_{j≠k} Σ_{l≠k,j} 2/((Q_k-Q_j)(Q_j-Q_l))`.
pub fn first_integrals<T: Scalar>(state: &PoleState<T>) -> Result<Vec<Cx<T>>> {
    state.check_separation()?;
    let k = state.kf();
    let two = T::lit(2.0);
    let t = cre(state.t);
    let q = &state.q;
    let p = &state.qdot;
    let n = state.kappa;
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let kp = p[a] * k;
        let mut s = kp * kp / two + t * q[a] * q[a] - q[a].powi(4) / two - q[a] * (k - two) + state.u;
        for j in 0..n {
            if j == a {
                continue;
            }
            let d = q[a] - q[j];
            s -= (d * d).inv() * two;
            s -= (p[a] + p[j]) * k / d;
            for l in 0..n {
                if l != a && l != j {
                    s += (d * (q[j] - q[l])).inv() * two;
                }
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// Time-ordered integration output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub states: Vec<PoleState<T>>,
    pub stats: StepStats,
    pub tol: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn kappa(&self) -> usize {
        self.states.first().map_or(0, |s| s.kappa)
    }

    /// Columns `t, re_Q1, im_Q1, …, re_Qdot1, im_Qdot1, …, re_U, im_U`.
    pub fn to_csv(&self) -> CsvTable {
        let n = self.kappa();
        let mut header = vec!["t".to_string()];
        for k in 1..=n {
            header.push(format!("re_Q{k}"));
            header.push(format!("im_Q{k}"));
        }
        for k in 1..=n {
            header.push(format!("re_Qdot{k}"));
            header.push(format!("im_Qdot{k}"));
        }
        header.push("re_U".into());
        header.push("im_U".into());
        let mut table = CsvTable::new(header)
            .with_meta("kappa", &n.to_string())
            .with_meta("tol", &fmt_float(self.tol.to_f64_lossy()))
            .with_meta("accepted_steps", &self.stats.accepted.to_string())
            .with_meta("rejected_steps", &self.stats.rejected.to_string());
        for s in &self.states {
            let mut row = vec![fmt_float(s.t.to_f64_lossy())];
            for z in s.to_vec() {
                row.push(fmt_float(z.re.to_f64_lossy()));
                row.push(fmt_float(z.im.to_f64_lossy()));
            }
            table.push_row(row);
        }
        table
    }
}

/// Integrates the pole system from `initial.t` to `t_final > initial.t` with
/// the adaptive Dormand–Prince pair (`rtol = atol = tol`), recording every
/// accepted step.
pub fn integrate_poles<T: Scalar>(initial: &PoleState<T>, t_final: T, tol: T) -> Result<Trajectory<T>> {
    initial.validate()?;
    if !(t_final > initial.t) {
        return Err(LabError::param("t_final must exceed the initial time"));
    }
    if !(tol > T::zero()) {
        return Err(LabError::param("tol must be positive"));
    }
    let kappa = initial.kappa;
    let mut states = vec![initial.clone()];
    let (_, stats) = DormandPrince::new(tol).integrate(
        |t, y, dy| rhs_flat(kappa, t, y, dy),
        initial.t,
        &initial.to_vec(),
        t_final,
        |t, y| {
            states.push(PoleState::from_vec(kappa, t, y));
            Ok(())
        },
    )?;
    Ok(Trajectory { states, stats, tol })
}

/// Integrates to each of the increasing `times` (all at or after `initial.t`)
/// and returns the states there.
pub fn integrate_poles_at<T: Scalar>(initial: &PoleState<T>, times: &[T], tol: T) -> Result<Trajectory<T>> {
    initial.validate()?;
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|&t| t < initial.t) {
        return Err(LabError::param("output times must increase from the initial time"));
    }
    let mut stats = StepStats::default();
    let mut states = Vec::with_capacity(times.len());
    let mut cur = initial.clone();
    for &t in times {
        let (next, st) = propagate_with_stats(&cur, t, tol)?;
        stats.merge(st);
        states.push(next.clone());
        cur = next;
    }
    Ok(Trajectory { states, stats, tol })
}

/// State at time `t1` (either direction).
pub fn propagate<T: Scalar>(state: &PoleState<T>, t1: T, tol: T) -> Result<PoleState<T>> {
    propagate_with_stats(state, t1, tol).map(|(s, _)| s)
}

fn propagate_with_stats<T: Scalar>(state: &PoleState<T>, t1: T, tol: T) -> Result<(PoleState<T>, StepStats)> {
    let kappa = state.kappa;
    let (y, st) = DormandPrince::new(tol).integrate(
        |t, y, dy| rhs_flat(kappa, t, y, dy),
        state.t,
        &state.to_vec(),
        t1,
        |_, _| Ok(()),
    )?;
    Ok((PoleState::from_vec(kappa, t1, &y), st))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_pole_equation() {
        let s = PoleState::new(1, 0.4, vec![c(0.3, 0.7)], vec![c(-0.2, 0.1)], c(0.0, 0.0)).unwrap();
        let (_, acc, ud) = poles_rhs(&s).unwrap();
        let q = s.q[0];
        let expect = -q * (c(0.4, 0.0) - q * q) * 2.0 - 1.0;
        assert!((acc[0] - expect).norm() < 1e-15);
        assert!((ud + q * q).norm() < 1e-15);
    }

    #[test]
    fn collision_is_reported() {
        let s = PoleState {
            kappa: 2,
            t: 1.5,
            q: vec![c(0.0, 1.0), c(0.0, 1.0 + 1e-8)],
            qdot: vec![c(0.0, 0.0); 2],
            u: c(0.0, 0.0),
        };
        assert!(matches!(poles_rhs(&s), Err(LabError::Collision { t, .. }) if t == 1.5));
    }

    #[test]
    fn on_shell_zeroes_the_first_integrals() {
        for kappa in 1..=4 {
            let s = PoleState::<f64>::demo(kappa).unwrap();
            let i = first_integrals(&s).unwrap();
            assert!(i.iter().all(|v| v.norm() < 1e-11), "kappa {kappa}: {i:?}");
        }
    }
}
