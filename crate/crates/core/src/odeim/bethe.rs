use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::linalg::solve_dense;
use crate::scalar::{cre, Cx, Scalar};

/// Solution of the Bethe equations of an excited-state potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheRoots<T> {
    pub alpha: T,
    pub l: T,
    /// Roots sorted by real part, then imaginary part.
    pub z: Vec<Cx<T>>,
    /// Largest modulus of the equations at `z`.
    pub residual: T,
}

impl<T: Scalar> BetheRoots<T> {
    /// Number of roots `L`.
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// `κ = 1/(1+α)`.
    pub fn kappa(&self) -> T {
        T::one() / (T::one() + self.alpha)
    }
}

fn check_alpha<T: Scalar>(alpha: T, l: T) -> Result<()> {
    if !alpha.is_finite() || !l.is_finite() {
        return Err(LabError::param("alpha and l must be finite"));
    }
    if alpha <= T::one() {
        return Err(LabError::OutOfValidity(format!("alpha = {alpha} must exceed 1")));
    }
    Ok(())
}

/// Pair term `a(a² + A ab + B b²)/(a - b)³` and its partials in `a` and `b`.
fn pair<T: Scalar>(alpha: T, a: Cx<T>, b: Cx<T>) -> (Cx<T>, Cx<T>, Cx<T>) {
    let big_a = (T::lit(3.0) + alpha) * (T::one() + T::lit(2.0) * alpha);
    let big_b = alpha * (T::one() + T::lit(2.0) * alpha);
    let n = a * a * a + a * a * b * big_a + a * b * b * big_b;
    let na = a * a * T::lit(3.0) + a * b * (T::lit(2.0) * big_a) + b * b * big_b;
    let nb = a * a * big_a + a * b * (T::lit(2.0) * big_b);
    let d = (a - b).inv();
    let d3 = d * d * d;
    let d4 = d3 * d;
    (n * d3, na * d3 - n * d4 * T::lit(3.0), nb * d3 + n * d4 * T::lit(3.0))
}

fn constants<T: Scalar>(alpha: T, l: T) -> (T, T) {
    let a1 = T::one() + alpha;
    let lin = alpha / (T::lit(4.0) * a1);
    let two_l = T::lit(2.0) * l + T::one();
    let c = (two_l * two_l - T::lit(4.0) * alpha * alpha) / (T::lit(16.0) * a1);
    (lin, c)
}

/// Left-hand sides of the L Bethe equations
/// `Σ_{j≠k} z_k(z_k² + (3+α)(1+2α)z_kz_j + α(1+2α)z_j²)/(z_k-z_j)³ - αz_k/(4(1+α)) + ((2l+1)² - 4α²)/(16(1+α))`.
pub fn bethe_residual<T: Scalar>(alpha: T, l: T, z: &[Cx<T>]) -> Vec<Cx<T>> {
    let (lin, c) = constants(alpha, l);
    (0..z.len())
        .map(|k| {
            let s = (0..z.len())
                .filter(|&j| j != k)
                .fold(cre(T::zero()), |acc, j| acc + pair(alpha, z[k], z[j]).0);
            s - z[k] * lin + c
        })
        .collect()
}

fn jacobian<T: Scalar>(alpha: T, l: T, z: &[Cx<T>]) -> Vec<Cx<T>> {
    let n = z.len();
    let (lin, _) = constants(alpha, l);
    let mut jac = vec![cre(T::zero()); n * n];
    for k in 0..n {
        jac[k * n + k] = cre(-lin);
        for j in 0..n {
            if j != k {
                let (_, da, db) = pair(alpha, z[k], z[j]);
                jac[k * n + k] += da;
                jac[k * n + j] = db;
            }
        }
    }
    jac
}

fn max_norm<T: Scalar>(v: &[Cx<T>]) -> T {
    v.iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

fn min_separation<T: Scalar>(z: &[Cx<T>]) -> T {
    let mut m = T::infinity();
    for i in 0..z.len() {
        for j in 0..i {
            m = m.min((z[i] - z[j]).norm());
        }
    }
    m
}

/// Starting points spread around the single-root value on the real axis.
pub fn default_bethe_init<T: Scalar>(alpha: T, l: T, n_roots: usize) -> Vec<Cx<T>> {
    let two_l = T::lit(2.0) * l + T::one();
    let z1 = (two_l * two_l - T::lit(4.0) * alpha * alpha) / (T::lit(4.0) * alpha);
    let spread = T::lit(4.0) * (T::one() + z1.abs());
    let mid = T::from_usize_lossy(n_roots.saturating_sub(1)) / T::lit(2.0);
    (0..n_roots)
        .map(|k| cre(z1 + (T::from_usize_lossy(k) - mid) * spread))
        .collect()
}

/// Damped Newton solution of the Bethe equations from `init`.
pub fn bethe_solve<T: Scalar>(alpha: T, l: T, n_roots: usize, init: &[Cx<T>]) -> Result<BetheRoots<T>> {
    check_alpha(alpha, l)?;
    if n_roots == 0 || init.len() != n_roots {
        return Err(LabError::param("init must hold L >= 1 starting points"));
    }
    if init.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(LabError::param("init must be finite"));
    }
    let scale = T::one() + max_norm(init);
    if min_separation(init) <= T::lit(1e-10) * scale {
        return Err(LabError::param("init points must be pairwise distinct"));
    }
    let mut z = init.to_vec();
    let mut f = bethe_residual(alpha, l, &z);
    let mut res = max_norm(&f);
    let target = T::lit(1e-13).max(T::epsilon() * T::lit(100.0));
    let fail = |z: &[Cx<T>], res: T, it: usize| LabError::Solver {
        iterations: it,
        residual: res.to_f64_lossy(),
        last_iterate: z.iter().map(|v| (v.re.to_f64_lossy(), v.im.to_f64_lossy())).collect(),
    };
    let mut it = 0;
    while res > target * (T::one() + max_norm(&z)) {
        if it == 100 {
            return Err(fail(&z, res, it));
        }
        it += 1;
        let step = solve_dense(&jacobian(alpha, l, &z), &f).ok_or_else(|| fail(&z, res, it))?;
        let mut lambda = T::one();
        loop {
            let trial: Vec<Cx<T>> = z.iter().zip(&step).map(|(a, d)| a - d * lambda).collect();
            let ft = bethe_residual(alpha, l, &trial);
            let rt = max_norm(&ft);
            if rt.is_finite() && (rt < res || lambda < T::lit(1e-3)) {
                z = trial;
                f = ft;
                res = rt;
                break;
            }
            lambda = lambda * T::lit(0.5);
        }
        if min_separation(&z) <= T::lit(1e-10) * (T::one() + max_norm(&z)) {
            return Err(fail(&z, res, it));
        }
    }
    z.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let residual = max_norm(&bethe_residual(alpha, l, &z));
    if residual > T::lit(1e-10) {
        return Err(fail(&z, residual, it));
    }
    Ok(BetheRoots { alpha, l, z, residual })
}

/// `V(x) = x^{2α} + l(l+1)/x² - 2 d²/dx² Σ ln(x^{2α+2} - z_k)`.
pub fn excited_potential<T: Scalar>(roots: &BetheRoots<T>, x: T) -> Result<Cx<T>> {
    if !(x > T::zero()) {
        return Err(LabError::param("x must be positive"));
    }
    let a = roots.alpha;
    let two = T::lit(2.0);
    let p = two * a + two;
    let w = x.powf(p);
    let w1 = p * x.powf(p - T::one());
    let w2 = p * (p - T::one()) * x.powf(p - two);
    let mut v = cre(x.powf(two * a) + roots.l * (roots.l + T::one()) / (x * x));
    for &zk in &roots.z {
        let d = cre(w) - zk;
        if d.norm() <= T::lit(1e-12) * (T::one() + zk.norm()) {
            return Err(LabError::PoleEvaluation(format!("x = {x} hits the root {zk}")));
        }
        let inv = d.inv();
        v -= (inv * w2 - inv * inv * (w1 * w1)) * two;
    }
    Ok(v)
}

/// Potential `W` of `-ψ_zz + Wψ = 0` after `z = x^{2α+2}`, `Ψ = z^{(κ-2)/4}ψ`:
/// `[κ²l(l+1) + (κ-2)(κ+2)/4]/(4z²) + κ²/(4z) + Σ(2/(z-z_k)² + (κ-2)/(z(z-z_k))) - κ²E z^{κ-2}/4`.
pub fn transformed_potential<T: Scalar>(roots: &BetheRoots<T>, e: Cx<T>, z: Cx<T>) -> Result<Cx<T>> {
    let k = roots.kappa();
    let two = T::lit(2.0);
    if z.norm() == T::zero() {
        return Err(LabError::PoleEvaluation("z = 0".into()));
    }
    let k2 = k * k;
    let mut w = cre(k2 * roots.l * (roots.l + T::one()) + (k - two) * (k + two) / T::lit(4.0)) / (z * z * T::lit(4.0))
        + cre(k2 / T::lit(4.0)) / z
        - e * z.powf(k - two) * (k2 / T::lit(4.0));
    for &zk in &roots.z {
        let d = z - zk;
        if d.norm() <= T::lit(1e-12) * (T::one() + zk.norm()) {
            return Err(LabError::PoleEvaluation(format!("z = {z} hits the root {zk}")));
        }
        w += cre(two) / (d * d) + cre(k - two) / (z * d);
    }
    Ok(w)
}

/// Residuals of the change of variables on a grid, relative to the size of
/// the terms: writing `(-∂_xx + V - E)(g ψ(z(x)))` with `g = z^{(κ-2)/4}` as
/// `c₀ψ + c₁ψ_z + c₂ψ_zz`, `first_order = |c₁|` and `potential = |c₀ - z'²gW|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfVariables<T> {
    pub first_order: T,
    pub potential: T,
}

pub fn change_of_variables_residual<T: Scalar>(
    roots: &BetheRoots<T>,
    e: Cx<T>,
    xs: &[T],
) -> Result<ChangeOfVariables<T>> {
    if xs.is_empty() {
        return Err(LabError::param("empty grid"));
    }
    let k = roots.kappa();
    let two = T::lit(2.0);
    let pz = two / k;
    let pg = (k - two) / (T::lit(4.0) * k) * two;
    let mut out = ChangeOfVariables {
        first_order: T::zero(),
        potential: T::zero(),
    };
    for &x in xs {
        let z = x.powf(pz);
        let z1 = pz * x.powf(pz - T::one());
        let z2 = pz * (pz - T::one()) * x.powf(pz - two);
        let g = x.powf(pg);
        let g1 = pg * x.powf(pg - T::one());
        let g2 = pg * (pg - T::one()) * x.powf(pg - two);
        let v = excited_potential(roots, x)? - e;
        let w = transformed_potential(roots, e, cre(z))?;
        let c0 = v * g - cre(g2);
        let c1 = -two * g1 * z1 - g * z2;
        let target = w * (z1 * z1 * g);
        let s1 = (two * g1 * z1).abs() + (g * z2).abs();
        let s0 = g2.abs() + v.norm() * g + target.norm();
        out.first_order = out.first_order.max(c1.abs() / s1);
        out.potential = out.potential.max((c0 - target).norm() / s0);
    }
    Ok(out)
}
