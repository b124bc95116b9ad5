use serde::{Deserialize, Serialize};

use super::quadrature::{default_domain, quadrature_integral_cx, Domain, QuadOptions, QuadValue};
use super::{EnsembleSpec, PotentialSpec};
use crate::error::{LabError, Result};
use crate::scalar::{cre, Cx, Scalar};

/// Degenerate-insertion exponent in `Π(z - x_i)^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaChoice {
    One,
    MinusHalfBeta,
}

impl AlphaChoice {
    pub fn value<T: Scalar>(self, beta: T) -> T {
        match self {
            AlphaChoice::One => T::one(),
            AlphaChoice::MinusHalfBeta => -beta / T::lit(2.0),
        }
    }
}

/// BPZ-type residual normalized by `|Z|`, with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpzResidual<T: Scalar> {
    /// `|R| / |Z|`.
    pub residual: T,
    /// Finite-difference truncation plus quadrature noise, same normalization.
    pub error_estimate: T,
    /// Signed `R / Z`.
    pub value: Cx<T>,
    pub z_norm: T,
}

/// Central differences of a sampled function: first and second derivative,
/// each with `|D(h) - D(2h)|/3` plus the propagated sample noise.
struct Stencil<T: Scalar> {
    d1: Cx<T>,
    d1_err: T,
    d2: Cx<T>,
    d2_err: T,
}

fn stencil<T: Scalar>(f: [QuadValue<T>; 5], h: T) -> Stencil<T> {
    // f = [x-2h, x-h, x, x+h, x+2h]
    let two = T::lit(2.0);
    let noise = f.iter().map(|q| q.error).fold(T::zero(), T::max);
    let d1h = (f[3].value - f[1].value) / (two * h);
    let d1_2h = (f[4].value - f[0].value) / (T::lit(4.0) * h);
    let d2h = (f[3].value - f[2].value * two + f[1].value) / (h * h);
    let d2_2h = (f[4].value - f[2].value * two + f[0].value) / (T::lit(4.0) * h * h);
    Stencil {
        d1: d1h,
        d1_err: (d1h - d1_2h).norm() / T::lit(3.0) + noise / h,
        d2: d2h,
        d2_err: (d2h - d2_2h).norm() / T::lit(3.0) + T::lit(4.0) * noise / (h * h),
    }
}

fn offsets<T: Scalar>(h: T) -> [T; 5] {
    let two = T::lit(2.0);
    [-two * h, -h, T::zero(), h, two * h]
}

struct Setup<T: Scalar> {
    alpha: T,
    z: Cx<T>,
    opts: QuadOptions<T>,
}

impl<T: Scalar> Setup<T> {
    fn check_z(&self, domain: Domain<T>) -> Result<()> {
        let a = self.alpha;
        // non-integer alpha has a branch cut on the domain, negative alpha a non-integrable pole
        let singular = a != a.round() || a < T::zero();
        if singular && self.z.im == T::zero() && self.z.re >= domain.lo && self.z.re <= domain.hi {
            return Err(LabError::Conditioning(
                "non-integer or negative alpha needs Im z != 0 or z outside the integration domain".into(),
            ));
        }
        Ok(())
    }

    fn z_integral(&self, spec: &EnsembleSpec<T>, z: Cx<T>, domain: Domain<T>) -> Result<QuadValue<T>> {
        let alpha = self.alpha;
        let integer_alpha = alpha == alpha.round() && alpha.abs() < T::lit(64.0);
        let obs = move |x: &[T]| {
            if integer_alpha {
                let mut p = cre(T::one());
                for &xi in x {
                    p = p * (z - cre(xi));
                }
                p.powi(alpha.to_i32().unwrap_or(0))
            } else {
                let mut l = Cx::new(T::zero(), T::zero());
                for &xi in x {
                    l = l + (z - cre(xi)).ln();
                }
                (l * alpha).exp()
            }
        };
        let breaks = if z.im.abs() < T::one() { vec![z.re] } else { vec![] };
        quadrature_integral_cx(spec, obs, Some(domain), self.opts, &breaks)
    }

    /// Z at z + {-2h,..,2h} for a fixed spec.
    fn z_scan(&self, spec: &EnsembleSpec<T>, h: T, domain: Domain<T>) -> Result<[QuadValue<T>; 5]> {
        let o = offsets(h);
        Ok([
            self.z_integral(spec, self.z + cre(o[0]), domain)?,
            self.z_integral(spec, self.z + cre(o[1]), domain)?,
            self.z_integral(spec, self.z, domain)?,
            self.z_integral(spec, self.z + cre(o[3]), domain)?,
            self.z_integral(spec, self.z + cre(o[4]), domain)?,
        ])
    }
}

/// Assembles the residual given Z, its z-derivatives and the Penner/coupling
/// term `S = ⟨Σ_k (V'(z) - V'(x_k))/(z - x_k)⟩` (unnormalized).
#[allow(clippy::too_many_arguments)]
fn assemble<T: Scalar>(
    choice: AlphaChoice,
    beta: T,
    dv_z: Cx<T>,
    z0: QuadValue<T>,
    st: &Stencil<T>,
    s: Cx<T>,
    s_err: T,
    z_norm_noise: T,
) -> BpzResidual<T> {
    let half_beta = beta / T::lit(2.0);
    let (r, err) = match choice {
        AlphaChoice::One => (
            st.d2 * half_beta - dv_z * st.d1 + s,
            half_beta * st.d2_err + dv_z.norm() * st.d1_err + s_err,
        ),
        AlphaChoice::MinusHalfBeta => (
            st.d2 + dv_z * st.d1 + s * half_beta,
            st.d2_err + dv_z.norm() * st.d1_err + half_beta * s_err,
        ),
    };
    let zn = z0.value.norm();
    BpzResidual {
        residual: r.norm() / zn,
        error_estimate: (err + z_norm_noise) / zn,
        value: r / z0.value,
        z_norm: zn,
    }
}

fn validate_common<T: Scalar>(spec: &EnsembleSpec<T>, fd_step: T) -> Result<()> {
    spec.validate()?;
    if spec.n_eigen > 3 {
        return Err(LabError::UnsupportedDimension(spec.n_eigen));
    }
    if !(fd_step > T::zero()) {
        return Err(LabError::param("fd_step must be positive"));
    }
    Ok(())
}

/// Residual of the Fuchsian BPZ equation for the multi-Penner weight.
///
/// `α = 1`: `(β/2) Z_zz - V'(z) Z_z + S`;
/// `α = -β/2`: `Z_zz + V'(z) Z_z + (β/2) S`, with
/// `S = -Σ_l (z - w_l)^{-1} ∂_{w_l} Z + g N Z` (g is the optional confinement).
/// All derivatives are central differences of nested quadrature.
pub fn bpz_ode_residual<T: Scalar>(
    spec: &EnsembleSpec<T>,
    alpha_choice: AlphaChoice,
    z: Cx<T>,
    fd_step: T,
    opts: QuadOptions<T>,
) -> Result<BpzResidual<T>> {
    validate_common(spec, fd_step)?;
    let (masses, positions, c, g) = match &spec.potential {
        PotentialSpec::MultiPenner {
            masses,
            positions,
            c,
            confinement,
        } => (masses.clone(), positions.clone(), *c, *confinement),
        _ => return Err(LabError::param("bpz_ode_residual requires a multi-Penner potential")),
    };
    let h = fd_step;
    for &w in &positions {
        if (z - cre(w)).norm() < T::lit(4.0) * h {
            return Err(LabError::Conditioning(format!(
                "z within 4 fd_step of the Penner point {w}"
            )));
        }
    }
    let base_domain = default_domain(spec)?;
    // Weight must vanish at the moving endpoints.
    for (&m, &w) in masses.iter().zip(&positions) {
        let is_end = w == base_domain.lo || w == base_domain.hi;
        if is_end && !(-c * m > T::zero()) {
            return Err(LabError::param(
                "Penner exponents -C m_l at domain endpoints must be positive",
            ));
        }
    }
    let setup = Setup {
        alpha: alpha_choice.value(spec.beta),
        z,
        opts,
    };
    setup.check_z(base_domain)?;

    let domain_for = |pos: &[T]| -> Domain<T> {
        let wmin = pos.iter().copied().fold(T::infinity(), T::min);
        let wmax = pos.iter().copied().fold(T::neg_infinity(), T::max);
        if g > T::zero() {
            Domain {
                lo: wmax,
                hi: base_domain.hi,
            }
        } else {
            Domain { lo: wmin, hi: wmax }
        }
    };

    let zs = setup.z_scan(spec, h, base_domain)?;
    let st = stencil(zs, h);
    let z0 = zs[2];

    let mut s = z0.value * (g * T::from_usize_lossy(spec.n_eigen));
    let mut s_err = z0.error * g * T::from_usize_lossy(spec.n_eigen);
    for l in 0..positions.len() {
        let o = offsets(h);
        let mut vals = [z0; 5];
        for (slot, &d) in o.iter().enumerate() {
            if slot == 2 {
                continue;
            }
            let mut pos = positions.clone();
            pos[l] += d;
            let mut sp = spec.clone();
            sp.potential = PotentialSpec::MultiPenner {
                masses: masses.clone(),
                positions: pos.clone(),
                c,
                confinement: g,
            };
            vals[slot] = setup.z_integral(&sp, z, domain_for(&pos))?;
        }
        let dw = stencil(vals, h);
        let inv = (z - cre(positions[l])).inv();
        s = s - dw.d1 * inv;
        s_err += dw.d1_err * inv.norm();
    }
    Ok(assemble(
        alpha_choice,
        spec.beta,
        spec.potential.dv(z),
        z0,
        &st,
        s,
        s_err,
        z0.error,
    ))
}

/// Residual of the confluent BPZ equation for polynomial couplings
/// (`V = -Σ t_k x^k`), where
/// `S = -Σ_l l t_l Σ_{j=0}^{l-2} z^j ∂_{t_{l-2-j}} Z`
/// and the coupling derivatives are central differences.
pub fn confluent_bpz_residual<T: Scalar>(
    spec: &EnsembleSpec<T>,
    alpha_choice: AlphaChoice,
    z: Cx<T>,
    fd_step: T,
    opts: QuadOptions<T>,
) -> Result<BpzResidual<T>> {
    validate_common(spec, fd_step)?;
    let couplings = match &spec.potential {
        PotentialSpec::MultiPenner { .. } => {
            return Err(LabError::param(
                "confluent_bpz_residual requires polynomial or Gaussian couplings",
            ))
        }
        p => p.couplings().unwrap_or_default(),
    };
    let poly_spec = EnsembleSpec {
        n_eigen: spec.n_eigen,
        beta: spec.beta,
        potential: PotentialSpec::PolynomialCouplings {
            couplings: couplings.clone(),
        },
    };
    let h = fd_step;
    let domain = default_domain(&poly_spec)?;
    let setup = Setup {
        alpha: alpha_choice.value(spec.beta),
        z,
        opts,
    };
    setup.check_z(domain)?;

    let zs = setup.z_scan(&poly_spec, h, domain)?;
    let st = stencil(zs, h);
    let z0 = zs[2];

    // ∂_{t_m} Z for m = 0..=K-2
    let kmax = couplings.len().saturating_sub(1);
    let mut dt = Vec::new();
    for m in 0..kmax.saturating_sub(1) {
        let mut vals = [z0; 5];
        for (slot, &d) in offsets(h).iter().enumerate() {
            if slot == 2 {
                continue;
            }
            let mut t = couplings.clone();
            t[m] += d;
            let sp = EnsembleSpec {
                n_eigen: spec.n_eigen,
                beta: spec.beta,
                potential: PotentialSpec::PolynomialCouplings { couplings: t },
            };
            vals[slot] = setup.z_integral(&sp, z, domain)?;
        }
        dt.push(stencil(vals, h));
    }
    let mut s = Cx::new(T::zero(), T::zero());
    let mut s_err = T::zero();
    for (l, &tl) in couplings.iter().enumerate().skip(2) {
        let lt = T::from_usize_lossy(l) * tl;
        let mut zj = cre(T::one());
        for j in 0..=(l - 2) {
            let d = &dt[l - 2 - j];
            s = s - d.d1 * zj * lt;
            s_err += (lt * zj.norm()).abs() * d.d1_err;
            zj = zj * z;
        }
    }
    Ok(assemble(
        alpha_choice,
        spec.beta,
        poly_spec.potential.dv(z),
        z0,
        &st,
        s,
        s_err,
        z0.error,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> QuadOptions<f64> {
        QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_depth: 40,
        }
    }

    #[test]
    fn gaussian_reduction_alpha_one() {
        // Z = z sqrt(2π) exactly at M = 1
        let spec = EnsembleSpec::gaussian(1, 2.0, 1.0).unwrap();
        let r = confluent_bpz_residual(&spec, AlphaChoice::One, Cx::new(0.7, 0.0), 1e-2, opts()).unwrap();
        assert!(r.residual <= 10.0 * r.error_estimate, "{r:?}");
        let r2 = confluent_bpz_residual(&spec, AlphaChoice::One, Cx::new(0.7, 0.0), 5e-3, opts()).unwrap();
        let ratio = r.residual / r2.residual;
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn single_confined_penner_alpha_one() {
        let spec = EnsembleSpec::new(
            1,
            2.0,
            PotentialSpec::MultiPenner {
                masses: vec![1.0],
                positions: vec![0.0],
                c: -2.0,
                confinement: 1.0,
            },
        )
        .unwrap();
        let r = bpz_ode_residual(&spec, AlphaChoice::One, Cx::new(1.3, 0.0), 1e-2, opts()).unwrap();
        assert!(r.residual <= 10.0 * r.error_estimate, "{r:?}");
        // The opposite sign of the Penner term would leave an O(1) residual.
        assert!(r.residual < 1e-3);
    }

    #[test]
    fn z_on_singularity_is_conditioning_error() {
        let spec = EnsembleSpec::new(
            1,
            2.0,
            PotentialSpec::MultiPenner {
                masses: vec![1.0, 1.0],
                positions: vec![0.0, 1.0],
                c: -1.5,
                confinement: 0.0,
            },
        )
        .unwrap();
        assert!(matches!(
            bpz_ode_residual(&spec, AlphaChoice::One, Cx::new(1.0, 0.0), 1e-2, opts()),
            Err(LabError::Conditioning(_))
        ));
    }

    #[test]
    fn negative_alpha_on_the_real_line_is_conditioning_error() {
        let spec = EnsembleSpec::new(1, 2.0, PotentialSpec::polynomial(vec![0.0, 0.3, -0.2, 0.1, -0.25])).unwrap();
        assert!(matches!(
            confluent_bpz_residual(&spec, AlphaChoice::MinusHalfBeta, Cx::new(0.6, 0.0), 1e-2, opts()),
            Err(LabError::Conditioning(_))
        ));
        let r = confluent_bpz_residual(&spec, AlphaChoice::MinusHalfBeta, Cx::new(0.6, 0.8), 1e-2, opts()).unwrap();
        assert!(r.residual <= 10.0 * r.error_estimate, "{r:?}");
    }
}
