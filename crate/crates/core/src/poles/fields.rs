use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scalar::{cre, Cx, Scalar};

use super::local::{Local, Series};
use super::{PoleState, Trajectory};

/// Field values at one point `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldEval<T> {
    pub x: Cx<T>,
    pub b_plus: Cx<T>,
    pub b_one: Cx<T>,
    /// `P = -κ b₊`.
    pub p: Cx<T>,
    /// `b = κ b₁`.
    pub b: Cx<T>,
    /// Schrödinger potential.
    pub v: Cx<T>,
}

/// `b₊`, `b₁`, `P`, `b` and `V` of the state at `x`.
pub fn eval_fields<T: Scalar>(state: &PoleState<T>, x: Cx<T>) -> Result<FieldEval<T>> {
    let series = Series::analytic(state, 0)?;
    let l = Local::<T, 1, 1>::new(&series, x)?;
    let k = cre(l.k());
    let p = l.p().value();
    let b_one = l.b_one().value();
    Ok(FieldEval {
        x,
        b_plus: -p / k,
        b_one,
        p,
        b: b_one * k,
        v: l.schrodinger_v().value(),
    })
}

/// Source of the time derivatives in the identity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtMode<T> {
    /// Taylor recursion of the equations of motion (chain rule, on-shell).
    Analytic,
    /// Central differences of states integrated to `t ± step`.
    Differenced { step: T },
}

/// Tolerance of the short integrations behind [`DtMode::Differenced`].
const DIFF_TOL: f64 = 1e-13;

impl<T: Scalar> DtMode<T> {
    fn series(&self, state: &PoleState<T>, order: usize) -> Result<Series<T>> {
        match *self {
            DtMode::Analytic => Series::analytic(state, order),
            DtMode::Differenced { step } => {
                if !(step > T::zero()) {
                    return Err(LabError::param("fd_step must be positive"));
                }
                if order > 2 {
                    return Err(LabError::param("differencing supplies at most second t-derivatives"));
                }
                Series::differenced(state, step, T::lit(DIFF_TOL).max(T::epsilon() * T::lit(100.0)))
            }
        }
    }
}

/// Largest residuals of the governing system in both of its forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoverningResidual<T> {
    /// `κ∂_t(P - v) + ∂_x(∂_xP + P(P - v) + 2b)`.
    pub p_equation: T,
    /// `κ∂_tb + ∂_xxb + v∂_xb + 2b∂_xP`.
    pub b_equation: T,
    /// `κ∂_tV + P∂_xV + 2V∂_xP - ∂_xxxP/2`.
    pub v_transport: T,
    /// `κ∂_tP + 2∂_xxP + P∂_xP + 2x(t - x²) - (κ - 2) + 2∂_xV`.
    pub p_transport: T,
}

impl<T: Scalar> GoverningResidual<T> {
    pub fn max(&self) -> T {
        self.p_equation
            .max(self.b_equation)
            .max(self.v_transport)
            .max(self.p_transport)
    }

    fn merge(&mut self, o: &Self) {
        self.p_equation = self.p_equation.max(o.p_equation);
        self.b_equation = self.b_equation.max(o.b_equation);
        self.v_transport = self.v_transport.max(o.v_transport);
        self.p_transport = self.p_transport.max(o.p_transport);
    }
}

fn governing_at<T: Scalar>(series: &Series<T>, x0: Cx<T>) -> Result<GoverningResidual<T>> {
    let l = Local::<T, 2, 4>::new(series, x0)?;
    let k = l.k();
    let two = T::lit(2.0);
    let v = l.v();
    let p = l.p();
    let b = l.b_one() * k;
    let pot = l.schrodinger_v();
    let px = p.dx();
    let r1 = (p - v).dt() * k + (px + p * (p - v) + b * two).dx();
    let r2 = b.dt() * k + b.dx().dx() + v * b.dx() + b * px * two;
    let r3 = pot.dt() * k + p * pot.dx() + pot * px * two - px.dx().dx() * T::lit(0.5);
    let r4 = p.dt() * k + px.dx() * two + p * px + l.x * v * two - cre(k - two) + pot.dx() * two;
    Ok(GoverningResidual {
        p_equation: r1.value().norm(),
        b_equation: r2.value().norm(),
        v_transport: r3.value().norm(),
        p_transport: r4.value().norm(),
    })
}

pub(crate) fn over_grid<T: Scalar, R>(
    traj: &Trajectory<T>,
    x_grid: &[Cx<T>],
    order: usize,
    mode: DtMode<T>,
    mut at: impl FnMut(&Series<T>, Cx<T>) -> Result<R>,
    mut fold: impl FnMut(R),
) -> Result<()> {
    if traj.states.is_empty() || x_grid.is_empty() {
        return Err(LabError::param("empty trajectory or grid"));
    }
    for s in &traj.states {
        let series = mode.series(s, order)?;
        for &x in x_grid {
            let r = at(&series, x).map_err(|e| match e {
                LabError::PoleEvaluation(m) => LabError::Conditioning(format!("t = {}: {m}", s.t)),
                other => other,
            })?;
            fold(r);
        }
    }
    Ok(())
}

/// Residuals of the governing system over every trajectory state and grid point.
pub fn governing_residual_with<T: Scalar>(
    traj: &Trajectory<T>,
    x_grid: &[Cx<T>],
    mode: DtMode<T>,
) -> Result<GoverningResidual<T>> {
    let mut worst = GoverningResidual {
        p_equation: T::zero(),
        b_equation: T::zero(),
        v_transport: T::zero(),
        p_transport: T::zero(),
    };
    over_grid(traj, x_grid, 1, mode, governing_at, |r| worst.merge(&r))?;
    Ok(worst)
}

/// Largest residual of the governing system with `∂_t` from central
/// differences of step `fd_step` along the trajectory and `∂_x` exact.
pub fn governing_residual<T: Scalar>(traj: &Trajectory<T>, x_grid: &[Cx<T>], fd_step: T) -> Result<T> {
    governing_residual_with(traj, x_grid, DtMode::Differenced { step: fd_step }).map(|r| r.max())
}

fn hirota_at<T: Scalar>(series: &Series<T>, x0: Cx<T>, scale: Cx<T>) -> Result<T> {
    let l = Local::<T, 3, 5>::new(series, x0)?;
    let k = l.k();
    let two = T::lit(2.0);
    let y = (l.time_gauge() * l.y()) * scale;
    let d = |f: crate::numerics::jet::Jet<T, 3, 5>| f.dt() * k + f.dx().dx();
    let dy = d(y);
    let ddy = d(dy);
    let (yx, yxx) = (y.dx(), y.dx().dx());
    let v = l.v();
    let f = -(l.x * (k - two)) - v * v * T::lit(0.5);
    let r = y * ddy - dy * dy - yx * dy.dx() * two + yxx * dy * two + y * (f.dt() * k * y + f.dx() * yx)
        + f * (y * yxx - yx * yx) * two;
    Ok(r.value().norm() / (y.value().norm() * y.value().norm()))
}

/// Largest residual of the bilinear equation
/// `Y D²Y - (DY)² - 2Y_x(DY)_x + 2Y_xx DY + Y(κf_tY + f_xY_x) + 2f(YY_xx - Y_x²) = 0`,
/// `D = κ∂_t + ∂_xx`, `f = -(κ-2)x - (t-x²)²/2`, for
/// `Y = exp(∫(t²/2 + U)/κ dt) Π(x - Q_k)`, divided by `|Y|²` (the equation
/// is homogeneous of degree 2).
pub fn hirota_residual_with<T: Scalar>(traj: &Trajectory<T>, x_grid: &[Cx<T>], mode: DtMode<T>) -> Result<T> {
    hirota_residual_scaled(traj, x_grid, mode, cre(T::one()))
}

/// [`hirota_residual_with`] with differenced time derivatives.
pub fn hirota_residual<T: Scalar>(traj: &Trajectory<T>, x_grid: &[Cx<T>], fd_step: T) -> Result<T> {
    hirota_residual_with(traj, x_grid, DtMode::Differenced { step: fd_step })
}

/// [`hirota_residual_with`] with `Y` multiplied by the constant `scale`.
pub fn hirota_residual_scaled<T: Scalar>(
    traj: &Trajectory<T>,
    x_grid: &[Cx<T>],
    mode: DtMode<T>,
    scale: Cx<T>,
) -> Result<T> {
    let mut worst = T::zero();
    over_grid(traj, x_grid, 2, mode, |s, x| hirota_at(s, x, scale), |r| worst = worst.max(r))?;
    Ok(worst)
}
