//! Half-line Schrödinger problem `-ψ'' + (x^{2α} + l(l+1)/x²)ψ = Eψ`:
//! shooting solutions normalized at the origin and at infinity, spectral
//! determinants, discrete symmetries, the quantum Wronskian, and the Bethe
//! equations of the excited-state potentials.

mod bethe;
mod spectrum;

pub use bethe::{
    bethe_residual, bethe_solve, change_of_variables_residual, default_bethe_init, excited_potential,
    transformed_potential, BetheRoots, ChangeOfVariables,
};
pub use spectrum::{determinant_table, eigenvalues, fd_eigenvalues, psi_nodes, spectrum_table, MAX_LEVELS};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::numerics::jet::Jet;
use crate::numerics::quad;
use crate::numerics::rk::DormandPrince;
use crate::numerics::special::gamma;
use crate::scalar::{cre, Cx, Scalar};

/// Number of WKB corrections beyond `P^{-1/4}` in the large-x data of `χ`.
const WKB_ORDER: usize = 6;
/// Growth allowed between renormalizations of an integrated solution (`e^20`).
const CHUNK_GROWTH: f64 = 20.0;

/// Integration settings shared by every shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions<T> {
    /// Largest starting point of the small-x series (reduced for large |E|).
    pub x_start: T,
    /// Matching point of the Wronskians.
    pub x_match: T,
    /// Lower bound of the automatic large-x starting point.
    pub x_far_min: T,
    /// Fixed large-x starting point overriding the automatic choice.
    pub x_far: Option<T>,
    /// Dormand–Prince tolerance.
    pub tol: T,
}

impl<T: Scalar> Default for ShootOptions<T> {
    fn default() -> Self {
        ShootOptions {
            x_start: T::lit(0.1),
            x_match: T::one(),
            x_far_min: T::lit(6.0),
            x_far: None,
            tol: T::lit(1e-12).max(T::epsilon() * T::lit(100.0)),
        }
    }
}

/// Degree parameter `α > 1` and angular parameter `l` of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralProblem<T> {
    pub alpha: T,
    pub l: T,
    pub opts: ShootOptions<T>,
}

impl<T: Scalar> SpectralProblem<T> {
    pub fn new(alpha: T, l: T) -> Result<Self> {
        if !alpha.is_finite() || !l.is_finite() {
            return Err(LabError::param("alpha and l must be finite"));
        }
        if alpha <= T::one() {
            return Err(LabError::OutOfValidity(format!(
                "alpha = {alpha} must exceed 1 (kappa = 1/(1+alpha) < 1/2)"
            )));
        }
        Ok(SpectralProblem {
            alpha,
            l,
            opts: ShootOptions::default(),
        })
    }

    pub fn with_options(mut self, opts: ShootOptions<T>) -> Result<Self> {
        let o = &opts;
        if !(o.x_start > T::zero() && o.x_match > o.x_start && o.x_far_min > o.x_match && o.tol > T::zero()) {
            return Err(LabError::param("need 0 < x_start < x_match < x_far_min and tol > 0"));
        }
        if let Some(xf) = o.x_far {
            if !(xf > o.x_match) {
                return Err(LabError::param("x_far must exceed x_match"));
            }
        }
        self.opts = opts;
        Ok(self)
    }

    /// `κ = 1/(1+α)`.
    pub fn kappa(&self) -> T {
        T::one() / (T::one() + self.alpha)
    }

    /// `q = e^{iπκ}`.
    pub fn q(&self) -> Cx<T> {
        Cx::from_polar(T::one(), T::PI() * self.kappa())
    }

    /// `q^s` for real `s`.
    pub fn q_pow(&self, s: T) -> Cx<T> {
        Cx::from_polar(T::one(), T::PI() * self.kappa() * s)
    }

    /// `ρ = (2/κ)^{2-2κ} Γ(1-κ)²`.
    pub fn rho(&self) -> T {
        let k = self.kappa();
        (T::lit(2.0) / k).powf(T::lit(2.0) - k * T::lit(2.0)) * gamma(T::one() - k).powi(2)
    }

    /// The problem with `l → -l-1`.
    pub fn reflected(&self) -> Self {
        SpectralProblem {
            l: -self.l - T::one(),
            ..*self
        }
    }

    /// `l(l+1)`.
    fn centrifugal(&self) -> T {
        self.l * (self.l + T::one())
    }

    /// `x^{2α} + l(l+1)/x² - E` at complex `z` (principal branch).
    fn potential(&self, e: Cx<T>, z: Cx<T>) -> Cx<T> {
        z.powf(self.alpha * T::lit(2.0)) + cre(self.centrifugal()) / (z * z) - e
    }

    /// Large-x starting point used for energy `e`.
    pub fn x_far_for(&self, e: Cx<T>) -> T {
        if let Some(x) = self.opts.x_far {
            return x;
        }
        let need = (T::lit(16.0) * (e.norm() + self.centrifugal().abs() + T::one()))
            .powf(T::one() / (self.alpha * T::lit(2.0)));
        need.max(self.opts.x_far_min).max(self.opts.x_match * T::lit(1.5))
    }

    /// Constant `N` in `ψ ~ N x^{l+1}`:
    /// `√(2π/(1+α)) (2+2α)^{-ν} / Γ(1+ν)`, `ν = (2l+1)/(2+2α)`, the placement
    /// fixed by `W[ψ(l), ψ(-l-1)] = 2i(q^{l+1/2} - q^{-l-1/2})`.
    pub fn psi_normalization(&self) -> T {
        let two = T::lit(2.0);
        let a1 = T::one() + self.alpha;
        let nu = (two * self.l + T::one()) / (two * a1);
        (T::TAU() / a1).sqrt() * (two * a1).powf(-nu) / gamma(T::one() + nu)
    }
}

/// A solution and its derivative at a real point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveValue<T> {
    pub x: T,
    pub psi: Cx<T>,
    pub dpsi: Cx<T>,
}

/// `W[f, g] = f g' - g f'`.
pub fn wronskian<T: Scalar>(f: &WaveValue<T>, g: &WaveValue<T>) -> Cx<T> {
    f.psi * g.dpsi - g.psi * f.dpsi
}

/// `e^{log} (v₀, v₁)`, kept renormalized so the vector stays O(1).
#[derive(Debug, Clone, Copy)]
struct Wave<T: Scalar> {
    log: Cx<T>,
    v: [Cx<T>; 2],
}

impl<T: Scalar> Wave<T> {
    fn normalized(mut self) -> Self {
        let m = self.v[0].norm().max(self.v[1].norm());
        if m > T::zero() && m.is_finite() {
            self.log += cre(m.ln());
            self.v = [self.v[0] / m, self.v[1] / m];
        }
        self
    }

    fn value(&self, x: T) -> WaveValue<T> {
        let s = self.log.exp();
        WaveValue {
            x,
            psi: self.v[0] * s,
            dpsi: self.v[1] * s,
        }
    }
}

/// Integrates `ψ'' = P(z)ψ` along the polyline `path`.
fn propagate<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, path: &[Cx<T>], mut w: Wave<T>) -> Result<Wave<T>> {
    for seg in path.windows(2) {
        let (z0, dz) = (seg[0], seg[1] - seg[0]);
        let (y, _) = DormandPrince::new(p.opts.tol).integrate(
            |s, y, dy| {
                let z = z0 + dz * s;
                dy[0] = y[1] * dz;
                dy[1] = p.potential(e, z) * y[0] * dz;
                Ok(())
            },
            T::zero(),
            &w.v,
            T::one(),
            |_, _| Ok(()),
        )?;
        if !(y[0].norm().is_finite() && y[1].norm().is_finite()) {
            return Err(LabError::Integration {
                at: seg[1].re.to_f64_lossy(),
                reason: "overflow in scaled shooting".into(),
            });
        }
        w = Wave { log: w.log, v: [y[0], y[1]] }.normalized();
    }
    Ok(w)
}

/// Real points from `a` to `b` spaced so that `x^{1+α}/(1+α)` changes by at
/// most [`CHUNK_GROWTH`] between neighbours.
fn chunked<T: Scalar>(alpha: T, a: T, b: T) -> Vec<Cx<T>> {
    let a1 = T::one() + alpha;
    let g = |x: T| x.powf(a1) / a1;
    let n = ((g(a) - g(b)).abs() / T::lit(CHUNK_GROWTH)).ceil().max(T::one());
    let n = n.to_usize().unwrap_or(1).max(1);
    (0..=n)
        .map(|j| {
            let s = T::from_usize_lossy(j) / T::from_usize_lossy(n);
            let gj = g(a) + (g(b) - g(a)) * s;
            cre((gj * a1).powf(T::one() / a1))
        })
        .collect()
}

/// Small-x data of `ψ(x, E, l)` from its generalized Frobenius series
/// `N x^{l+1} Σ c_{m,n} x^{2m + (2α+2)n}`.
fn psi_start<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, x: T) -> Result<Wave<T>> {
    let two = T::lit(2.0);
    let step = two * (p.alpha + T::one());
    let lp1 = p.l + T::one();
    let tiny = T::epsilon() * T::lit(1e-2);
    let mut rows: Vec<Vec<Cx<T>>> = Vec::new();
    let (mut sum, mut dsum) = (cre(T::zero()), cre(T::zero()));
    for n in 0..64 {
        let mut row: Vec<Cx<T>> = Vec::new();
        let mut row_max = T::zero();
        for m in 0..400 {
            let ex = two * T::from_usize_lossy(m) + step * T::from_usize_lossy(n);
            let c = if m == 0 && n == 0 {
                cre(T::one())
            } else {
                let den = ex * (ex + two * p.l + T::one());
                if den.abs() < T::lit(1e-8) * (T::one() + ex * ex) {
                    return Err(LabError::param(format!(
                        "l = {} makes the small-x exponents resonant",
                        p.l
                    )));
                }
                let from_e = if m > 0 { -e * row[m - 1] } else { cre(T::zero()) };
                let from_v = if n > 0 && m < rows[n - 1].len() {
                    rows[n - 1][m]
                } else {
                    cre(T::zero())
                };
                (from_e + from_v) / den
            };
            row.push(c);
            let term = c * x.powf(ex);
            sum += term;
            dsum += term * (lp1 + ex);
            let mag = term.norm();
            row_max = row_max.max(mag);
            if m > 2 && T::from_usize_lossy(m) > e.norm() * x * x && mag <= tiny * sum.norm() {
                break;
            }
        }
        rows.push(row);
        if n > 0 && row_max <= tiny * sum.norm() {
            break;
        }
    }
    let norm = p.psi_normalization();
    if !norm.is_finite() || norm == T::zero() {
        return Err(LabError::param("psi normalization is singular at this l"));
    }
    Ok(Wave {
        log: cre(norm).ln() + cre(lp1 * x.ln()),
        v: [sum, dsum / x],
    }
    .normalized())
}

fn start_point<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>) -> T {
    p.opts.x_start.min(T::lit(0.5) / (T::one() + e.norm()).sqrt())
}

/// `ψ(x, E, l) ~ N x^{l+1}` integrated out to `x_match`.
pub fn shoot_psi<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, x_match: T) -> Result<WaveValue<T>> {
    let x0 = start_point(p, e).min(x_match * T::lit(0.5));
    if !(x_match > T::zero()) {
        return Err(LabError::param("x_match must be positive"));
    }
    let w = propagate(p, e, &chunked(p.alpha, x0, x_match), psi_start(p, e, x0)?)?;
    Ok(w.value(x_match))
}

/// Taylor jet of `P(s + ε) = (s+ε)^{2α} + l(l+1)(s+ε)^{-2} - E`.
fn p_jet<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, s: T) -> Jet<T, 1, { WKB_ORDER + 1 }> {
    let mut j = Jet::constant(-e);
    let two_a = p.alpha * T::lit(2.0);
    let (mut b1, mut b2) = (T::one(), T::one());
    for n in 0..=WKB_ORDER {
        let nn = T::from_usize_lossy(n);
        if n > 0 {
            b1 = b1 * (two_a - nn + T::one()) / nn;
            b2 = b2 * (-T::lit(2.0) - nn + T::one()) / nn;
        }
        let v = b1 * s.powf(two_a - nn) + p.centrifugal() * b2 * s.powf(-T::lit(2.0) - nn);
        j.set_coeff(0, n, j.coeff(0, n) + cre(v));
    }
    j
}

/// `√P` and the WKB corrections `a_1 … a_K` of `χ'/χ = -√P + Σ a_n` at `s`.
fn wkb_terms<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, s: T) -> (Cx<T>, [Cx<T>; WKB_ORDER]) {
    let pj = p_jet(p, e, s);
    let sq = pj.sqrt();
    let inv2 = (sq * T::lit(2.0)).recip();
    let mut a = [Jet::zero(); WKB_ORDER];
    a[0] = pj.dx() * pj.recip() * T::lit(-0.25);
    for n in 1..WKB_ORDER {
        let mut acc = a[n - 1].dx();
        for i in 0..n {
            // a_{i+1} a_{n-i}
            acc += a[i] * a[n - 1 - i];
        }
        a[n] = acc * inv2;
    }
    (sq.value(), a.map(|j| j.value()))
}

/// `ln χ(X)` and `χ'(X)/χ(X)` from the WKB expansion with the tail integral
/// fixing `χ ~ x^{-α/2} exp(-x^{1+α}/(1+α))`.
fn chi_far<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, xf: T) -> Result<(Cx<T>, Cx<T>)> {
    let a = p.alpha;
    let a1 = a + T::one();
    let two = T::lit(2.0);
    let c = cre(p.centrifugal());
    let w = |s: T| (c * s.powi(-2) - e) * s.powf(-two * a);
    if w(xf).norm() > T::lit(0.25) {
        return Err(LabError::AsymptoticRegime {
            x_far: xf.to_f64_lossy(),
        });
    }
    // ∫_X^∞ (√P - s^α) ds: the part linear in w in closed form, the rest numerically
    let linear = c * (xf.powf(-a1) / (two * a1)) - e * (xf.powf(T::one() - a) / (two * (a - T::one())));
    let integrand = |u: T| {
        let s = xf / u;
        let ws = w(s);
        let root = (cre(T::one()) + ws).sqrt() + T::one();
        let rem = -ws * ws / (root * root * two) * s.powf(a);
        let (_, terms) = wkb_terms(p, e, s);
        let higher = terms[1..].iter().fold(cre(T::zero()), |acc, &t| acc + t);
        (rem - higher) * (xf / (u * u))
    };
    let tiny = T::epsilon();
    let q = quad::integrate(integrand, T::zero(), T::one(), &[], tiny, tiny * T::lit(10.0), 40);
    if !q.converged {
        return Err(LabError::Accuracy {
            estimate: q.value.norm().to_f64_lossy(),
            error: q.error.to_f64_lossy(),
        });
    }
    let (sq, terms) = wkb_terms(p, e, xf);
    let pval = p.potential(e, cre(xf));
    let log = linear + q.value - pval.ln() * T::lit(0.25) - cre(xf.powf(a1) / a1);
    let phi = terms.iter().fold(-sq, |acc, &t| acc + t);
    Ok((log, phi))
}

/// `χ(z, E)` at `z = x e^{iθ}`: inward along the real axis from `x_far`,
/// then along the arc `|z| = x`. The derivative is with respect to `z`.
fn chi_wave<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, x_far: T, x: T, theta: T) -> Result<Wave<T>> {
    if !(x_far > x && x > T::zero()) {
        return Err(LabError::param("need 0 < x_match < x_far"));
    }
    let (log, phi) = chi_far(p, e, x_far)?;
    let mut path = chunked(p.alpha, x_far, x);
    let n = (theta.abs() / (T::PI() / T::lit(32.0))).ceil().to_usize().unwrap_or(0);
    for j in 1..=n {
        let th = theta * T::from_usize_lossy(j) / T::from_usize_lossy(n);
        path.push(Cx::from_polar(x, th));
    }
    propagate(p, e, &path, Wave { log, v: [cre(T::one()), phi] })
}

/// The solution decaying at large x, `χ ~ x^{-α/2} exp(-x^{1+α}/(1+α))`.
pub fn shoot_chi<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, x_match: T, x_far: T) -> Result<WaveValue<T>> {
    Ok(chi_wave(p, e, x_far, x_match, T::zero())?.value(x_match))
}

/// `χ⁻(x, E) = i q^{-1/2} χ(qx, q^{-2}E)` at real `x_match`.
pub fn shoot_chi_minus<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, x_match: T) -> Result<WaveValue<T>> {
    rotated_chi(p, e, x_match, 1)
}

/// `i q^{-1/2} χ(q^k x, q^{-2k}E)` as a function of real x (`k = 1`: `χ⁻`;
/// `k = 2`: `Ω̂χ⁻`).
fn rotated_chi<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>, x: T, k: usize) -> Result<WaveValue<T>> {
    let kk = T::from_usize_lossy(k);
    let e_rot = e * p.q_pow(-T::lit(2.0) * kk);
    let theta = T::PI() * p.kappa() * kk;
    let w = chi_wave(p, e_rot, p.x_far_for(e_rot), x, theta)?;
    let v = w.value(x);
    let pre = Cx::new(T::zero(), T::one()) * p.q_pow(-T::lit(0.5));
    Ok(WaveValue {
        x,
        psi: pre * v.psi,
        dpsi: pre * p.q_pow(kk) * v.dpsi,
    })
}

/// `D(E, l) = ½ W[χ, ψ]` at the configured matching point.
pub fn spectral_d<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>) -> Result<Cx<T>> {
    let xm = p.opts.x_match;
    let psi = shoot_psi(p, e, xm)?;
    let chi = shoot_chi(p, e, xm, p.x_far_for(e))?;
    Ok(wronskian(&chi, &psi) * T::lit(0.5))
}

/// `D` at several `(problem, E)` pairs in parallel.
fn spectral_d_many<T: Scalar>(jobs: &[(SpectralProblem<T>, Cx<T>)]) -> Result<Vec<Cx<T>>> {
    jobs.par_iter().map(|(p, e)| spectral_d(p, *e)).collect()
}

/// `q^{l+1/2}D(q²E,l)D(E,-l-1) - q^{-l-1/2}D(E,l)D(q²E,-l-1) - (q^{l+1/2} - q^{-l-1/2})`.
pub fn quantum_wronskian_residual<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>) -> Result<Cx<T>> {
    let r = p.reflected();
    let e2 = e * p.q_pow(T::lit(2.0));
    let d = spectral_d_many(&[(*p, e2), (r, e), (*p, e), (r, e2)])?;
    let h = p.l + T::lit(0.5);
    let (qp, qm) = (p.q_pow(h), p.q_pow(-h));
    Ok(qp * d[0] * d[1] - qm * d[2] * d[3] - (qp - qm))
}

/// Residuals of the relations among `ψ^±`, `χ`, `χ⁻` at one energy, each
/// `|computed - expected| / max(1, |expected|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport<T> {
    /// `W[χ, χ⁻] = 2`.
    pub chi_wronskian: T,
    /// `W[ψ⁺, ψ⁻] = 2i(q^{l+1/2} - q^{-l-1/2})`.
    pub psi_wronskian: T,
    /// D from `ψ⁺ = Cχ + Dχ⁻` against [`spectral_d`].
    pub d_consistency: T,
    /// `C(E,l) = -i q^{-l-1/2} D(q^{-2}E, l)`.
    pub c_relation: T,
    /// `ψ⁻ = D(E,-l-1)χ⁻ - i q^{l+1/2} D(q^{-2}E,-l-1)χ`.
    pub psi_minus_expansion: T,
    /// χ-coefficient of `Ω̂χ⁻` against `-i q^{1/2}`.
    pub omega_action: T,
    /// χ⁻-coefficient `u` of `Ω̂χ⁻` (reported only).
    pub u: Cx<T>,
}

fn rel_err<T: Scalar>(a: Cx<T>, b: Cx<T>) -> T {
    (a - b).norm() / b.norm().max(T::one())
}

pub fn symmetry_checks<T: Scalar>(p: &SpectralProblem<T>, e: Cx<T>) -> Result<SymmetryReport<T>> {
    let xm = p.opts.x_match;
    let r = p.reflected();
    let i = Cx::new(T::zero(), T::one());
    let h = p.l + T::lit(0.5);
    let psi_p = shoot_psi(p, e, xm)?;
    let psi_m = shoot_psi(&r, e, xm)?;
    let chi = shoot_chi(p, e, xm, p.x_far_for(e))?;
    let chi_m = shoot_chi_minus(p, e, xm)?;
    let omega_chi_m = rotated_chi(p, e, xm, 2)?;
    let e_down = e * p.q_pow(-T::lit(2.0));
    let d = spectral_d_many(&[(*p, e), (*p, e_down), (r, e), (r, e_down)])?;
    let w = wronskian(&chi, &chi_m);
    let c = wronskian(&psi_p, &chi_m) / w;
    let dd = wronskian(&chi, &psi_p) / w;
    let a_m = wronskian(&chi, &psi_m) / w;
    let b_m = wronskian(&psi_m, &chi_m) / w;
    let two = T::lit(2.0);
    Ok(SymmetryReport {
        chi_wronskian: rel_err(w, cre(two)),
        psi_wronskian: rel_err(wronskian(&psi_p, &psi_m), i * two * (p.q_pow(h) - p.q_pow(-h))),
        d_consistency: rel_err(dd, d[0]),
        c_relation: rel_err(c, -i * p.q_pow(-h) * d[1]),
        psi_minus_expansion: rel_err(a_m, d[2]).max(rel_err(b_m, -i * p.q_pow(h) * d[3])),
        omega_action: rel_err(wronskian(&omega_chi_m, &chi_m) / w, -i * p.q_pow(T::lit(0.5))),
        u: wronskian(&chi, &omega_chi_m) / w,
    })
}

/// `A(λ, p) = D(ρλ², 2p/κ - 1/2)` with `κ = 1/(1+α)` from `problem`.
pub fn blz_a<T: Scalar>(problem: &SpectralProblem<T>, lambda: Cx<T>, p: T) -> Result<Cx<T>> {
    let k = problem.kappa();
    if k >= T::lit(0.5) {
        return Err(LabError::OutOfValidity("kappa must be below 1/2".into()));
    }
    let mut sub = *problem;
    sub.l = T::lit(2.0) * p / k - T::lit(0.5);
    spectral_d(&sub, lambda * lambda * problem.rho())
}
