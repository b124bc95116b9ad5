//! Explicit 2×2 Lax pair of the pole solution for integer κ: evaluation,
//! zero curvature, and reconstruction of the QPII solution `ℱ` from the
//! linear system `∂_x(ℱ, G) = L(ℱ, G)`, `∂_t(ℱ, G) = B(ℱ, G)`.

mod linear;

pub use linear::{
    detour_path, monodromy_around_pole, reconstruct_f, schrodinger_gauge, separation_check, LinSolution,
    MonodromyCheck, SchrodingerCheck, SeparationCheck,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::jet::Jet;
use crate::poles::local::{Local, Series};
use crate::poles::{DtMode, PoleState, Trajectory};
use crate::scalar::{cre, Cx, Scalar};

/// 2×2 complex matrix `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2<T> {
    pub a11: Cx<T>,
    pub a12: Cx<T>,
    pub a21: Cx<T>,
    pub a22: Cx<T>,
}

impl<T: Scalar> Matrix2<T> {
    pub fn identity() -> Self {
        let (o, z) = (cre(T::one()), cre(T::zero()));
        Matrix2 {
            a11: o,
            a12: z,
            a21: z,
            a22: o,
        }
    }

    pub fn trace(&self) -> Cx<T> {
        self.a11 + self.a22
    }

    pub fn det(&self) -> Cx<T> {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn mul(&self, o: &Self) -> Self {
        Matrix2 {
            a11: self.a11 * o.a11 + self.a12 * o.a21,
            a12: self.a11 * o.a12 + self.a12 * o.a22,
            a21: self.a21 * o.a11 + self.a22 * o.a21,
            a22: self.a21 * o.a12 + self.a22 * o.a22,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Matrix2 {
            a11: self.a11 + o.a11,
            a12: self.a12 + o.a12,
            a21: self.a21 + o.a21,
            a22: self.a22 + o.a22,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Matrix2 {
            a11: self.a11 - o.a11,
            a12: self.a12 - o.a12,
            a21: self.a21 - o.a21,
            a22: self.a22 - o.a22,
        }
    }

    pub fn apply(&self, v: [Cx<T>; 2]) -> [Cx<T>; 2] {
        [self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]]
    }

    pub fn frobenius(&self) -> T {
        (self.a11.norm_sqr() + self.a12.norm_sqr() + self.a21.norm_sqr() + self.a22.norm_sqr()).sqrt()
    }
}

type JM<T, const NT: usize, const NX: usize> = [Jet<T, NT, NX>; 4];

/// Jets of the entries of `L` and `B` (row-major). `B₂₁` contains `∂_tL_d`
/// and `∂_xB_d`, so its jet is exact only below the top t- and x-orders.
pub(crate) fn lax_jets<T: Scalar, const NT: usize, const NX: usize>(
    l: &Local<T, NT, NX>,
) -> (JM<T, NT, NX>, JM<T, NT, NX>) {
    let n = l.kappa;
    let k = l.k();
    let half = T::lit(0.5);
    let one = Jet::constant(cre(T::one()));
    let lin: Vec<_> = l.q.iter().map(|&q| l.x - q).collect();
    // Π_{j∉skip}(x - Q_j)
    let prod_except = |skip: &[usize]| {
        (0..n)
            .filter(|j| !skip.contains(j))
            .fold(one, |acc, j| acc * lin[j])
    };
    let y = prod_except(&[]);
    let dy = (0..n).fold(Jet::zero(), |acc, m| acc + prod_except(&[m]));
    let mut l_d = Jet::zero();
    let mut l_d_x = Jet::zero();
    let mut kb_d = Jet::zero();
    for i in 0..n {
        let c = l.qdot[i] * k - l.r(i) * T::lit(2.0);
        let denom = (0..n)
            .filter(|&j| j != i)
            .fold(one, |acc, j| acc * (l.q[i] - l.q[j]));
        let w = c * denom.recip();
        l_d -= w * prod_except(&[i]);
        for m in 0..n {
            if m != i {
                l_d_x -= w * prod_except(&[i, m]);
            }
        }
        kb_d += c * l.inv[i] * (dy * denom.recip() - one);
    }
    let v = l.v();
    let x = l.x;
    let f_v = -(x * x * x * x) * half + l.t * x * x - x * (k - T::lit(2.0)) + l.u;
    let y_inv = y.recip();
    let l21 = -(kb_d + l_d_x + l_d * l_d * half + f_v) * y_inv * half;
    let lmat = [(l_d - v) * half, y, l21, -(v + l_d) * half];
    let b_d = kb_d * (T::one() / k);
    let diag = -x + (l.u + l.t * l.t * half) * (T::one() / k);
    let b21 = -(l21 * dy * T::lit(2.0) + l_d.dt() * k - b_d.dx() * k) * y_inv * (half / k);
    let bmat = [(diag + b_d) * half, dy * (-T::one() / k), b21, (diag - b_d) * half];
    (lmat, bmat)
}

fn values<T: Scalar, const NT: usize, const NX: usize>(m: &JM<T, NT, NX>) -> Matrix2<T> {
    Matrix2 {
        a11: m[0].value(),
        a12: m[1].value(),
        a21: m[2].value(),
        a22: m[3].value(),
    }
}

/// `L(x)` at the state's time.
pub fn eval_l<T: Scalar>(state: &PoleState<T>, x: Cx<T>) -> Result<Matrix2<T>> {
    let series = Series::analytic(state, 1)?;
    Ok(values(&lax_jets(&Local::<T, 2, 2>::new(&series, x)?).0))
}

/// `B(x)` at the state's time; `∂_tL_d` uses `Q_k''` from the equations of motion.
pub fn eval_b<T: Scalar>(state: &PoleState<T>, x: Cx<T>) -> Result<Matrix2<T>> {
    let series = Series::analytic(state, 1)?;
    Ok(values(&lax_jets(&Local::<T, 2, 2>::new(&series, x)?).1))
}

/// `(L, ∂_xL)` from a precomputed series.
pub(crate) fn l_and_dx<T: Scalar>(series: &Series<T>, x: Cx<T>) -> Result<(Matrix2<T>, Matrix2<T>)> {
    let (l, _) = lax_jets(&Local::<T, 1, 2>::new(series, x)?);
    let d = |j: &Jet<T, 1, 2>| j.deriv(0, 1);
    Ok((
        values(&l),
        Matrix2 {
            a11: d(&l[0]),
            a12: d(&l[1]),
            a21: d(&l[2]),
            a22: d(&l[3]),
        },
    ))
}

/// `B` from a precomputed series.
pub(crate) fn b_from_series<T: Scalar>(series: &Series<T>, x: Cx<T>) -> Result<Matrix2<T>> {
    Ok(values(&lax_jets(&Local::<T, 2, 2>::new(series, x)?).1))
}

/// Frobenius norm of `∂_tL - ∂_xB + LB - BL` at one point.
fn curvature_at<T: Scalar>(series: &Series<T>, x: Cx<T>) -> Result<T> {
    let (l, b) = lax_jets(&Local::<T, 2, 3>::new(series, x)?);
    let lt = Matrix2 {
        a11: l[0].deriv(1, 0),
        a12: l[1].deriv(1, 0),
        a21: l[2].deriv(1, 0),
        a22: l[3].deriv(1, 0),
    };
    let bx = Matrix2 {
        a11: b[0].deriv(0, 1),
        a12: b[1].deriv(0, 1),
        a21: b[2].deriv(0, 1),
        a22: b[3].deriv(0, 1),
    };
    let (lv, bv) = (values(&l), values(&b));
    Ok(lt.sub(&bx).add(&lv.mul(&bv)).sub(&bv.mul(&lv)).frobenius())
}

/// Largest zero-curvature residual over the trajectory and grid.
pub fn zero_curvature_residual_with<T: Scalar>(
    traj: &Trajectory<T>,
    x_grid: &[Cx<T>],
    mode: DtMode<T>,
) -> Result<T> {
    let mut worst = T::zero();
    crate::poles::fields::over_grid(traj, x_grid, 1, mode, curvature_at, |r| worst = worst.max(r))?;
    Ok(worst)
}

/// [`zero_curvature_residual_with`] with `∂_t` from differences of step `fd_step`.
pub fn zero_curvature_residual<T: Scalar>(traj: &Trajectory<T>, x_grid: &[Cx<T>], fd_step: T) -> Result<T> {
    zero_curvature_residual_with(traj, x_grid, DtMode::Differenced { step: fd_step })
}
