//! Quantum Painlevé II Fokker–Planck equation
//! `(κ∂_t + ∂_xx + (t - x²)∂_x) F = 0` and Tracy–Widom-β extraction.

mod oracle;

pub use oracle::{empirical_soft_edge_cdf, SoftEdgeScaling};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io::{fmt_float, CsvTable};
use crate::numerics::tridiag::solve_tridiagonal;
use crate::scalar::Scalar;

/// Uniform rectangular grid in (t, x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D<T> {
    pub t_min: T,
    pub t_max: T,
    pub x_min: T,
    pub x_max: T,
    pub n_t: usize,
    pub n_x: usize,
}

impl<T: Scalar> Grid2D<T> {
    pub fn new(t_min: T, t_max: T, x_min: T, x_max: T, n_t: usize, n_x: usize) -> Result<Self> {
        let g = Grid2D {
            t_min,
            t_max,
            x_min,
            x_max,
            n_t,
            n_x,
        };
        g.validate()?;
        Ok(g)
    }

    /// `t ∈ [-10, 8]`, `x ∈ [-8, 8]`, 800 × 800.
    pub fn standard() -> Self {
        Grid2D {
            t_min: T::lit(-10.0),
            t_max: T::lit(8.0),
            x_min: T::lit(-8.0),
            x_max: T::lit(8.0),
            n_t: 800,
            n_x: 800,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min < self.t_max) || !(self.x_min < self.x_max) {
            return Err(LabError::param("grid bounds must satisfy min < max"));
        }
        if self.n_t < 8 || self.n_x < 8 {
            return Err(LabError::param("grid needs at least 8 points per axis"));
        }
        Ok(())
    }

    pub fn dt(&self) -> T {
        (self.t_max - self.t_min) / T::from_usize_lossy(self.n_t - 1)
    }

    pub fn dx(&self) -> T {
        (self.x_max - self.x_min) / T::from_usize_lossy(self.n_x - 1)
    }

    pub fn t(&self, i: usize) -> T {
        self.t_min + self.dt() * T::from_usize_lossy(i)
    }

    pub fn x(&self, j: usize) -> T {
        self.x_min + self.dx() * T::from_usize_lossy(j)
    }
}

/// `F(t_i, x_j)` stored row-major by time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D<T> {
    pub grid: Grid2D<T>,
    pub values: Vec<T>,
    pub kappa: T,
}

impl<T: Scalar> Field2D<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.grid.n_x + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.grid.n_x..(i + 1) * self.grid.n_x]
    }

    /// Builds a field by sampling `f(t, x)` on the grid.
    pub fn from_fn(grid: Grid2D<T>, kappa: T, f: impl Fn(T, T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.n_t * grid.n_x);
        for i in 0..grid.n_t {
            for j in 0..grid.n_x {
                values.push(f(grid.t(i), grid.x(j)));
            }
        }
        Field2D { grid, values, kappa }
    }

    /// Largest violations of `0 <= F <= 1` and of monotonicity in x and t
    /// (zero when the maximum principle holds exactly on the grid).
    pub fn monotonicity(&self) -> Monotonicity<T> {
        let g = self.grid;
        let mut m = Monotonicity {
            bounds: T::zero(),
            in_x: T::zero(),
            in_t: T::zero(),
        };
        for i in 0..g.n_t {
            for j in 0..g.n_x {
                let v = self.get(i, j);
                m.bounds = m.bounds.max(-v).max(v - T::one());
                if j > 0 {
                    m.in_x = m.in_x.max(self.get(i, j - 1) - v);
                }
                if i > 0 {
                    m.in_t = m.in_t.max(self.get(i - 1, j) - v);
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monotonicity<T> {
    pub bounds: T,
    pub in_x: T,
    pub in_t: T,
}

/// Tracy–Widom table `F_β(t)`; `stderr` is present for the sampling route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TWTable<T> {
    pub t_values: Vec<T>,
    pub cdf_values: Vec<T>,
    pub stderr: Option<Vec<T>>,
    pub beta: T,
    /// Rows where the large-x plateau test failed.
    pub plateau_flags: Vec<bool>,
}

impl<T: Scalar> TWTable<T> {
    /// Columns `t, F_beta, stderr` (stderr empty for the PDE route).
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["t", "F_beta", "stderr"])
            .with_meta("beta", &fmt_float(self.beta.to_f64_lossy()));
        for (k, (&tv, &f)) in self.t_values.iter().zip(&self.cdf_values).enumerate() {
            let se = match &self.stderr {
                Some(s) => fmt_float(s[k].to_f64_lossy()),
                None => String::new(),
            };
            t.push_row(vec![fmt_float(tv.to_f64_lossy()), fmt_float(f.to_f64_lossy()), se]);
        }
        t
    }

    /// Linear interpolation of the CDF at `t` (clamped to the table range).
    pub fn interpolate(&self, t: T) -> T {
        let ts = &self.t_values;
        let n = ts.len();
        if t <= ts[0] {
            return self.cdf_values[0];
        }
        if t >= ts[n - 1] {
            return self.cdf_values[n - 1];
        }
        let k = ts.partition_point(|&v| v <= t).max(1);
        let (t0, t1) = (ts[k - 1], ts[k]);
        let w = (t - t0) / (t1 - t0);
        self.cdf_values[k - 1] * (T::one() - w) + self.cdf_values[k] * w
    }

    /// `max |self - other|` over this table's abscissae inside `[lo, hi]`,
    /// with `other` interpolated.
    pub fn sup_distance(&self, other: &TWTable<T>, lo: T, hi: T) -> T {
        self.t_values
            .iter()
            .zip(&self.cdf_values)
            .filter(|(&t, _)| t >= lo && t <= hi)
            .map(|(&t, &f)| (f - other.interpolate(t)).abs())
            .fold(T::zero(), T::max)
    }
}

/// Terminal data at `t = t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal<T> {
    /// `σ(c (x + √t_max))` with the logistic σ.
    Sigmoid { steepness: T },
    /// Heaviside step at `x = -√t_max`.
    Step,
}

impl<T: Scalar> Default for Terminal<T> {
    fn default() -> Self {
        Terminal::Sigmoid {
            steepness: T::lit(2.0),
        }
    }
}

impl<T: Scalar> Terminal<T> {
    pub fn eval(&self, t_max: T, x: T) -> T {
        let x0 = -t_max.max(T::zero()).sqrt();
        match *self {
            Terminal::Sigmoid { steepness } => T::one() / (T::one() + (-steepness * (x - x0)).exp()),
            Terminal::Step => {
                if x >= x0 {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpiiOptions<T> {
    /// Largest implicit-Euler substep in `s = t_max - t`.
    pub max_ds: T,
}

impl<T: Scalar> Default for QpiiOptions<T> {
    fn default() -> Self {
        QpiiOptions { max_ds: T::lit(2.5e-3) }
    }
}

/// Solves the QPII equation backward from `t_max`.
///
/// In `s = t_max - t` the problem is forward parabolic:
/// `κ F_s = F_xx + (t - x²) F_x`. Each substep is implicit Euler; the
/// advection term is centred where the cell Péclet number `|t - x²| dx / 2`
/// is at most 1 and upwinded elsewhere, which keeps the system an M-matrix
/// (discrete maximum principle). `F(x_min) = 0`, `∂_x F(x_max) = 0`.
pub fn solve_qpii<T: Scalar>(
    kappa: T,
    grid: Grid2D<T>,
    terminal: Terminal<T>,
    opts: QpiiOptions<T>,
) -> Result<Field2D<T>> {
    grid.validate()?;
    if !(kappa > T::zero()) {
        return Err(LabError::param("kappa must be positive"));
    }
    if !(opts.max_ds > T::zero()) {
        return Err(LabError::param("max_ds must be positive"));
    }
    let (nt, nx) = (grid.n_t, grid.n_x);
    let h = grid.dx();
    let dt = grid.dt();
    let sub_steps = (dt / opts.max_ds).ceil().to_usize().unwrap_or(1).max(1);
    let ds = dt / T::from_usize_lossy(sub_steps);
    let mut values = vec![T::zero(); nt * nx];
    let mut f: Vec<T> = (0..nx).map(|j| terminal.eval(grid.t_max, grid.x(j))).collect();
    f[0] = T::zero();
    values[(nt - 1) * nx..].copy_from_slice(&f);

    let two = T::lit(2.0);
    let inv_h2 = T::one() / (h * h);
    let mut sub = vec![T::zero(); nx];
    let mut diag = vec![T::zero(); nx];
    let mut sup = vec![T::zero(); nx];
    let mut rhs = vec![T::zero(); nx];
    let lam = kappa / ds;
    for i in (0..nt - 1).rev() {
        for k in 0..sub_steps {
            // time level reached at the end of this substep
            let t_new = grid.t(i + 1) - ds * T::from_usize_lossy(k + 1);
            diag[0] = T::one();
            sup[0] = T::zero();
            rhs[0] = T::zero();
            for j in 1..nx - 1 {
                let x = grid.x(j);
                let a = t_new - x * x;
                let (lo, mid, hi) = if (a * h).abs() <= two {
                    let c = a / (two * h);
                    (inv_h2 - c, -two * inv_h2, inv_h2 + c)
                } else if a > T::zero() {
                    let c = a / h;
                    (inv_h2, -two * inv_h2 - c, inv_h2 + c)
                } else {
                    let c = a / h;
                    (inv_h2 - c, -two * inv_h2 + c, inv_h2)
                };
                sub[j] = -lo;
                diag[j] = lam - mid;
                sup[j] = -hi;
                rhs[j] = lam * f[j];
            }
            let j = nx - 1;
            sub[j] = -two * inv_h2;
            diag[j] = lam + two * inv_h2;
            rhs[j] = lam * f[j];
            f = solve_tridiagonal(&sub, &diag, &sup, &rhs).ok_or_else(|| {
                LabError::Numerical(format!("singular implicit system at t = {}", t_new))
            })?;
            if f.iter().any(|v| !v.is_finite()) {
                return Err(LabError::Numerical(format!("non-finite solution at t = {}", t_new)));
            }
        }
        values[i * nx..(i + 1) * nx].copy_from_slice(&f);
    }
    Ok(Field2D {
        grid,
        values,
        kappa,
    })
}

/// Max over interior points of `|κ∂_tF + ∂_xxF + (t - x²)∂_xF|` by central
/// differences.
pub fn qpii_residual<T: Scalar>(field: &Field2D<T>) -> T {
    let g = field.grid;
    qpii_residual_in(field, g.t_max, g.x_min, g.x_max)
}

/// Same residual restricted to interior points with `t <= t_cut` and
/// `x_lo <= x <= x_hi`, i.e. away from the terminal layer and from the
/// boundary layer that the Neumann condition creates at `x_max`.
pub fn qpii_residual_in<T: Scalar>(field: &Field2D<T>, t_cut: T, x_lo: T, x_hi: T) -> T {
    let g = field.grid;
    let (dt, h) = (g.dt(), g.dx());
    let two = T::lit(2.0);
    let mut worst = T::zero();
    for i in 1..g.n_t - 1 {
        let t = g.t(i);
        if t > t_cut {
            break;
        }
        for j in 1..g.n_x - 1 {
            let x = g.x(j);
            if x < x_lo || x > x_hi {
                continue;
            }
            let ft = (field.get(i + 1, j) - field.get(i - 1, j)) / (two * dt);
            let fx = (field.get(i, j + 1) - field.get(i, j - 1)) / (two * h);
            let fxx = (field.get(i, j + 1) - two * field.get(i, j) + field.get(i, j - 1)) / (h * h);
            let r = (field.kappa * ft + fxx + (t - x * x) * fx).abs();
            worst = worst.max(r);
        }
    }
    worst
}

/// How `F_β(t)` is read off the large-x end of the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    /// `F_β(t) = F(t, x_max)`.
    Boundary,
    /// `F_β(t) = F(t + κ/x_max, x_max)`: for large x the equation reduces to
    /// `κ∂_t F = x² ∂_x F`, whose characteristics reach `x` from `x = ∞` after
    /// a time `κ/x`, so `F(t, x) = F_β(t - κ/x) + o(1/x)`.
    CharacteristicShift,
}

/// Extraction mode and the plateau test of [`extract_tw`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions<T> {
    pub mode: Extraction,
    /// Distance inside `x_max` compared against the boundary value.
    pub plateau_width: T,
    pub plateau_tol: T,
}

impl<T: Scalar> Default for ExtractOptions<T> {
    fn default() -> Self {
        ExtractOptions {
            mode: Extraction::CharacteristicShift,
            plateau_width: T::lit(2.0),
            plateau_tol: T::lit(1e-3),
        }
    }
}

impl<T: Scalar> Field2D<T> {
    /// Linear interpolation in t at grid column `j` (clamped to the grid).
    pub fn at_time(&self, t: T, j: usize) -> T {
        let g = self.grid;
        let last = T::from_usize_lossy(g.n_t - 1);
        let u = ((t - g.t_min) / g.dt()).max(T::zero()).min(last);
        let i = u.floor().to_usize().unwrap_or(0).min(g.n_t - 2);
        let w = u - T::from_usize_lossy(i);
        self.get(i, j) * (T::one() - w) + self.get(i + 1, j) * w
    }

    fn large_x_value(&self, t: T, j: usize, mode: Extraction) -> T {
        match mode {
            Extraction::Boundary => self.at_time(t, j),
            Extraction::CharacteristicShift => {
                let x = self.grid.x(j);
                self.at_time(t + self.kappa / x, j)
            }
        }
    }
}

/// Tracy–Widom table from the large-x end of a QPII field, one row per grid
/// time. Rows are flagged when the value at `x_max - plateau_width` differs
/// from the one at `x_max` by more than `plateau_tol`, or when the shifted
/// time leaves the grid.
pub fn extract_tw<T: Scalar>(field: &Field2D<T>) -> TWTable<T> {
    extract_tw_with(field, ExtractOptions::default())
}

/// [`extract_tw`] with an explicit extraction mode and plateau test.
pub fn extract_tw_with<T: Scalar>(field: &Field2D<T>, opts: ExtractOptions<T>) -> TWTable<T> {
    let g = field.grid;
    let back = (opts.plateau_width / g.dx())
        .round()
        .to_usize()
        .unwrap_or(1)
        .clamp(1, g.n_x - 1);
    let (jn, ji) = (g.n_x - 1, g.n_x - 1 - back);
    let mut t_values = Vec::with_capacity(g.n_t);
    let mut cdf_values = Vec::with_capacity(g.n_t);
    let mut flags = Vec::with_capacity(g.n_t);
    for i in 0..g.n_t {
        let t = g.t(i);
        let end = field.large_x_value(t, jn, opts.mode);
        let inner = field.large_x_value(t, ji, opts.mode);
        let off_grid = opts.mode == Extraction::CharacteristicShift
            && g.x(ji) > T::zero()
            && t + field.kappa / g.x(ji) > g.t_max;
        t_values.push(t);
        cdf_values.push(end);
        flags.push(off_grid || (end - inner).abs() > opts.plateau_tol);
    }
    TWTable {
        t_values,
        cdf_values,
        stderr: None,
        beta: field.kappa * T::lit(2.0),
        plateau_flags: flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> Grid2D<f64> {
        Grid2D::new(-6.0, 6.0, -7.0, 7.0, 121, 281).unwrap()
    }

    #[test]
    fn constants_and_linear_fields() {
        let g = small_grid();
        let one = Field2D::from_fn(g, 1.0, |_, _| 1.0);
        assert_eq!(qpii_residual(&one), 0.0);
        let lin = Field2D::from_fn(g, 1.0, |_, x| x);
        let expect = (g.t_min - g.x(1) * g.x(1)).abs();
        assert!(qpii_residual(&lin) >= expect * 0.99);
    }

    #[test]
    fn solution_obeys_maximum_principle() {
        // F_4 is still O(0.1) at t = -4, so the lower edge needs room
        let g = Grid2D::new(-10.0, 6.0, -7.0, 7.0, 161, 281).unwrap();
        let f = solve_qpii(2.0, g, Terminal::default(), QpiiOptions::default()).unwrap();
        let m = f.monotonicity();
        assert!(m.bounds <= 1e-12 && m.in_x <= 1e-12, "{m:?}");
        let tw = extract_tw(&f);
        assert!(tw.cdf_values[0] < 1e-3);
        assert!(*tw.cdf_values.last().unwrap() > 0.999);
    }

    #[test]
    fn f32_solver_runs() {
        let g = Grid2D::new(-4.0f32, 4.0, -6.0, 6.0, 41, 121).unwrap();
        let f = solve_qpii(1.0f32, g, Terminal::default(), QpiiOptions { max_ds: 1e-2 }).unwrap();
        assert!(f.values.iter().all(|v| v.is_finite() && *v >= -1e-5 && *v <= 1.0 + 1e-5));
    }

    #[test]
    fn interpolation_and_distance() {
        let a: TWTable<f64> = TWTable {
            t_values: vec![0.0, 1.0, 2.0],
            cdf_values: vec![0.0, 0.5, 1.0],
            stderr: None,
            beta: 2.0,
            plateau_flags: vec![false; 3],
        };
        assert!((a.interpolate(0.5) - 0.25).abs() < 1e-15);
        assert_eq!(a.sup_distance(&a, -1.0, 3.0), 0.0);
    }
}
