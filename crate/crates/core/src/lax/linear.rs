use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::rk::DormandPrince;
use crate::poles::local::Series;
use crate::poles::{eval_fields, rhs_flat, PoleState};
use crate::scalar::{cre, Cx, Scalar};

use super::{b_from_series, l_and_dx, Matrix2};

/// Tolerance of the x- and t-integrations of the linear system.
const LIN_TOL: f64 = 1e-12;

fn lin_tol<T: Scalar>() -> T {
    T::lit(LIN_TOL).max(T::epsilon() * T::lit(1e3))
}

/// `(ℱ, G)` along a piecewise-linear contour at fixed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinSolution<T> {
    pub x_grid: Vec<Cx<T>>,
    pub values: Vec<[Cx<T>; 2]>,
    pub t: T,
    pub state: PoleState<T>,
}

/// Integrates `∂_x(ℱ, G) = L(ℱ, G)` along the straight segments joining
/// consecutive `x_grid` points, starting from `init` at `x_grid[0]`.
pub fn reconstruct_f<T: Scalar>(state: &PoleState<T>, x_grid: &[Cx<T>], init: [Cx<T>; 2]) -> Result<LinSolution<T>> {
    if x_grid.is_empty() {
        return Err(LabError::param("empty contour"));
    }
    if init[0].norm() + init[1].norm() == T::zero() {
        return Err(LabError::param("initial vector must be nonzero"));
    }
    let series = Series::analytic(state, 1)?;
    let mut values = vec![init];
    let mut cur = vec![init[0], init[1]];
    for w in x_grid.windows(2) {
        let (x0, dx) = (w[0], w[1] - w[0]);
        let (y, _) = DormandPrince::new(lin_tol()).integrate(
            |s, y, dy| {
                let (l, _) = l_and_dx(&series, x0 + dx * s)?;
                let r = l.apply([y[0], y[1]]);
                dy[0] = r[0] * dx;
                dy[1] = r[1] * dx;
                Ok(())
            },
            T::zero(),
            &cur,
            T::one(),
            |_, _| Ok(()),
        )?;
        values.push([y[0], y[1]]);
        cur = y;
    }
    Ok(LinSolution {
        x_grid: x_grid.to_vec(),
        values,
        t: state.t,
        state: state.clone(),
    })
}

/// `(ℱ, ℱ', ℱ'')` at grid point `i` from the linear system and `∂_xL`.
fn derivatives<T: Scalar>(series: &Series<T>, x: Cx<T>, v: [Cx<T>; 2]) -> Result<[Cx<T>; 3]> {
    let (l, lx) = l_and_dx(series, x)?;
    let [f, g] = v;
    let fx = l.a11 * f + l.a12 * g;
    let gx = l.a21 * f + l.a22 * g;
    let fxx = lx.a11 * f + l.a11 * fx + lx.a12 * g + l.a12 * gx;
    Ok([f, fx, fxx])
}

/// Sum of term magnitudes over which a residual is normalized.
fn rel<T: Scalar>(terms: &[Cx<T>]) -> T {
    let total = terms.iter().fold(cre(T::zero()), |a, &b| a + b).norm();
    let scale = terms.iter().map(|z| z.norm()).fold(T::zero(), |a, b| a + b);
    if scale == T::zero() {
        T::zero()
    } else {
        total / scale
    }
}

impl<T: Scalar> LinSolution<T> {
    /// Largest relative residual of `ℱ'' + (t - x² + κb₊)ℱ' - κb₁ℱ = 0` over the grid.
    pub fn ode_residual(&self) -> Result<T> {
        let series = Series::analytic(&self.state, 1)?;
        let k = cre(T::from_usize_lossy(self.state.kappa));
        let mut worst = T::zero();
        for (&x, &v) in self.x_grid.iter().zip(&self.values) {
            let [f, fx, fxx] = derivatives(&series, x, v)?;
            let fe = eval_fields(&self.state, x)?;
            let vv = cre(self.t) - x * x;
            worst = worst.max(rel(&[fxx, (vv + k * fe.b_plus) * fx, -k * fe.b_one * f]));
        }
        Ok(worst)
    }
}

/// Relative residuals of the effective separation of variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck<T> {
    /// Second-order ODE in x.
    pub ode: T,
    /// `∂_tℱ - b₊∂_xℱ + b₁ℱ`.
    pub first_order: T,
    /// `κ∂_tℱ + ∂_xxℱ + (t - x²)∂_xℱ`.
    pub qpii: T,
}

/// Propagates `(pole state, ℱ, G)` in t at fixed `x0` with `∂_t(ℱ, G) = B(ℱ, G)`.
fn propagate_in_t<T: Scalar>(
    state: &PoleState<T>,
    x0: Cx<T>,
    init: [Cx<T>; 2],
    t1: T,
) -> Result<(PoleState<T>, [Cx<T>; 2])> {
    let n = state.kappa;
    let mut y0 = state.to_vec();
    y0.extend_from_slice(&init);
    let (y, _) = DormandPrince::new(lin_tol()).integrate(
        |t, y, dy| {
            rhs_flat(n, t, &y[..2 * n + 1], &mut dy[..2 * n + 1])?;
            let cur = PoleState::from_vec(n, t, &y[..2 * n + 1]);
            let b = b_from_series(&Series::analytic(&cur, 1)?, x0)?;
            let r = b.apply([y[2 * n + 1], y[2 * n + 2]]);
            dy[2 * n + 1] = r[0];
            dy[2 * n + 2] = r[1];
            Ok(())
        },
        state.t,
        &y0,
        t1,
        |_, _| Ok(()),
    )?;
    Ok((PoleState::from_vec(n, t1, &y[..2 * n + 1]), [y[2 * n + 1], y[2 * n + 2]]))
}

/// Reconstructs `ℱ` at `t` and `t ± h, t ± 2h` (the initial vector carried in t
/// by `B` at `x_grid[0]`) and measures the x-ODE, the first-order PDE and the
/// QPII equation with a fourth-order central difference for `∂_t`.
pub fn separation_check<T: Scalar>(
    state: &PoleState<T>,
    x_grid: &[Cx<T>],
    init: [Cx<T>; 2],
    h: T,
) -> Result<SeparationCheck<T>> {
    if !(h > T::zero()) {
        return Err(LabError::param("time step must be positive"));
    }
    let x0 = *x_grid.first().ok_or_else(|| LabError::param("empty contour"))?;
    let centre = reconstruct_f(state, x_grid, init)?;
    let mut shifted = Vec::with_capacity(4);
    for j in [-2.0, -1.0, 1.0, 2.0] {
        let (s, v) = propagate_in_t(state, x0, init, state.t + h * T::lit(j))?;
        shifted.push(reconstruct_f(&s, x_grid, v)?);
    }
    let series = Series::analytic(state, 1)?;
    let k = cre(T::from_usize_lossy(state.kappa));
    let mut out = SeparationCheck {
        ode: centre.ode_residual()?,
        first_order: T::zero(),
        qpii: T::zero(),
    };
    for (i, &x) in x_grid.iter().enumerate() {
        let f = |s: &LinSolution<T>| s.values[i][0];
        let ft = (f(&shifted[0]) - f(&shifted[1]) * T::lit(8.0) + f(&shifted[2]) * T::lit(8.0) - f(&shifted[3]))
            / (h * T::lit(12.0));
        let [fv, fx, fxx] = derivatives(&series, x, centre.values[i])?;
        let fe = eval_fields(state, x)?;
        let vv = cre(state.t) - x * x;
        out.first_order = out.first_order.max(rel(&[ft, -fe.b_plus * fx, fe.b_one * fv]));
        out.qpii = out.qpii.max(rel(&[k * ft, fxx, vv * fx]));
    }
    Ok(out)
}

/// Schrödinger-gauge samples `Ψ = ℱ Y^{-1/2} e^{(tx - x³/3)/2}` and the
/// largest relative residual of `Ψ'' - VΨ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerCheck<T> {
    pub psi: Vec<Cx<T>>,
    pub residual: T,
}

/// Applies the gauge to a reconstructed solution. The branch of `Y^{1/2}` is
/// principal at the first grid point and continued along the contour; a jump
/// of more than π/4 in its phase between neighbours is a gauge error.
pub fn schrodinger_gauge<T: Scalar>(sol: &LinSolution<T>) -> Result<SchrodingerCheck<T>> {
    let state = &sol.state;
    let series = Series::analytic(state, 1)?;
    let t = cre(sol.t);
    let half = T::lit(0.5);
    let mut prev: Option<Cx<T>> = None;
    let mut psi = Vec::with_capacity(sol.values.len());
    let mut worst = T::zero();
    for (&x, &v) in sol.x_grid.iter().zip(&sol.values) {
        let y = state.q.iter().fold(cre(T::one()), |acc, &q| acc * (x - q));
        let mut s = y.sqrt();
        if let Some(p) = prev {
            if (s - p).norm() > (s + p).norm() {
                s = -s;
            }
            if (s / p).arg().abs() > T::FRAC_PI_4() {
                return Err(LabError::Gauge(format!(
                    "phase of Y^(1/2) jumps by more than pi/4 before x = {x}; refine the contour"
                )));
            }
        }
        prev = Some(s);
        let gauge = ((t * x - x * x * x / T::lit(3.0)) * half).exp() / s;
        psi.push(v[0] * gauge);
        let [f, fx, fxx] = derivatives(&series, x, v)?;
        let fe = eval_fields(state, x)?;
        let p_x = -state.q.iter().fold(cre(T::zero()), |a, &q| a + (x - q).powi(-2));
        let w = (t - x * x - fe.p) * half;
        let wx = (-x * T::lit(2.0) - p_x) * half;
        worst = worst.max(rel(&[fxx, w * fx * T::lit(2.0), (wx + w * w) * f, -fe.v * f]));
    }
    Ok(SchrodingerCheck { psi, residual: worst })
}

/// Monodromy of the linear system around one pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyCheck<T> {
    /// Fundamental matrix after one positive loop (identity for an apparent singularity).
    pub matrix: Matrix2<T>,
    /// `‖matrix - I‖_F`.
    pub identity_error: T,
    /// Factor picked up by `Ψ` (from the continued `Y^{-1/2}`).
    pub psi_factor: Cx<T>,
}

/// Integrates `∂_x Φ = LΦ` from the identity once around the circle of
/// `radius` about `Q_k`, continuing `Y^{1/2}` along the way.
pub fn monodromy_around_pole<T: Scalar>(state: &PoleState<T>, k: usize, radius: T) -> Result<MonodromyCheck<T>> {
    if k >= state.kappa {
        return Err(LabError::param("pole index out of range"));
    }
    let centre = state.q[k];
    let nearest = state
        .q
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, &q)| (q - centre).norm())
        .fold(T::infinity(), T::min);
    if !(radius > T::zero()) || radius * T::lit(2.0) >= nearest {
        return Err(LabError::param("radius must be positive and below half the distance to other poles"));
    }
    let series = Series::analytic(state, 1)?;
    let on_circle = |th: T| centre + Cx::from_polar(radius, th);
    let y_at = |x: Cx<T>| state.q.iter().fold(cre(T::one()), |acc, &q| acc * (x - q));
    let s0 = y_at(on_circle(T::zero())).sqrt();
    let one = cre(T::one());
    let zero = cre(T::zero());
    let (y, _) = DormandPrince::new(lin_tol()).integrate(
        |th, y, dy| {
            let x = on_circle(th);
            let dx = Cx::new(T::zero(), T::one()) * (x - centre);
            let (l, _) = l_and_dx(&series, x)?;
            let c1 = l.apply([y[0], y[1]]);
            let c2 = l.apply([y[2], y[3]]);
            let p = state.q.iter().fold(zero, |a, &q| a + (x - q).inv());
            dy[0] = c1[0] * dx;
            dy[1] = c1[1] * dx;
            dy[2] = c2[0] * dx;
            dy[3] = c2[1] * dx;
            dy[4] = y[4] * p * dx * T::lit(0.5);
            Ok(())
        },
        T::zero(),
        &[one, zero, zero, one, s0],
        T::TAU(),
        |_, _| Ok(()),
    )?;
    let matrix = Matrix2 {
        a11: y[0],
        a12: y[2],
        a21: y[1],
        a22: y[3],
    };
    Ok(MonodromyCheck {
        matrix,
        identity_error: matrix.sub(&Matrix2::identity()).frobenius(),
        psi_factor: matrix.a11 * s0 / y[4],
    })
}

/// Straight path from `from` to `to`, with waypoints inserted so that every
/// segment stays at least `clearance` away from the poles.
pub fn detour_path<T: Scalar>(state: &PoleState<T>, from: Cx<T>, to: Cx<T>, clearance: T) -> Vec<Cx<T>> {
    let mut path = vec![from];
    detour_segment(&state.q, from, to, clearance, 0, &mut path);
    path
}

fn detour_segment<T: Scalar>(q: &[Cx<T>], a: Cx<T>, b: Cx<T>, clearance: T, depth: usize, out: &mut Vec<Cx<T>>) {
    let d = b - a;
    let len2 = d.norm_sqr();
    let hit = q
        .iter()
        .filter_map(|&p| {
            let s = if len2 > T::zero() {
                ((p - a) * d.conj()).re / len2
            } else {
                T::zero()
            };
            let s = s.max(T::zero()).min(T::one());
            let foot = a + d * s;
            let dist = (p - foot).norm();
            (dist < clearance).then_some((dist, p, foot))
        })
        .min_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    match hit {
        Some((dist, p, foot)) if depth < 16 && len2 > T::zero() => {
            let normal = if dist > T::zero() {
                (foot - p) / cre(dist)
            } else {
                Cx::new(T::zero(), T::one()) * d / cre(len2.sqrt())
            };
            let w = p + normal * (clearance * T::lit(2.0));
            detour_segment(q, a, w, clearance, depth + 1, out);
            detour_segment(q, w, b, clearance, depth + 1, out);
        }
        _ => out.push(b),
    }
}
