use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::io::{fmt_float, CsvTable};
use crate::numerics::rk::DormandPrince;
use crate::numerics::special::gamma;
use crate::numerics::tridiag::lowest_eigenvalues;
use crate::scalar::{cre, Cx, Scalar};

use super::{chunked, psi_start, spectral_d, start_point, SpectralProblem};

/// Largest number of levels [`eigenvalues`] resolves.
pub const MAX_LEVELS: usize = 40;

/// Bohr–Sommerfeld level spacing `dE/dn` at energy `e`.
fn wkb_spacing<T: Scalar>(alpha: T, e: T) -> T {
    // n(E) ≈ c E^{(α+1)/(2α)}/π with c = ∫₀¹ √(1 - y^{2α}) dy = B(1/(2α), 3/2)/(2α)
    let two_a = alpha * T::lit(2.0);
    let b = gamma(T::one() / two_a) * gamma(T::lit(1.5)) / gamma(T::one() / two_a + T::lit(1.5));
    let c = b / two_a;
    let expo = (alpha + T::one()) / two_a;
    T::PI() / (c * expo * e.max(T::one()).powf(expo - T::one()))
}

fn d_real<T: Scalar>(p: &SpectralProblem<T>, e: T) -> Result<T> {
    Ok(spectral_d(p, cre(e))?.re)
}

/// Illinois-modified regula falsi on a sign-change bracket.
fn refine<T: Scalar>(p: &SpectralProblem<T>, mut a: T, mut fa: T, mut b: T, mut fb: T) -> Result<T> {
    for _ in 0..200 {
        let c = b - fb * (b - a) / (fb - fa);
        let fc = d_real(p, c)?;
        if fc == T::zero() {
            return Ok(c);
        }
        if (fc < T::zero()) != (fb < T::zero()) {
            a = b;
            fa = fb;
        } else {
            fa = fa * T::lit(0.5);
        }
        b = c;
        fb = fc;
        if (b - a).abs() <= T::lit(1e-13).max(T::epsilon() * T::lit(8.0)) * b.abs().max(T::one()) {
            return Ok(b);
        }
    }
    Err(LabError::Solver {
        iterations: 200,
        residual: fb.abs().to_f64_lossy(),
        last_iterate: vec![(b.to_f64_lossy(), 0.0)],
    })
}

/// Number of sign changes of `ψ(x, E, l)` for real `E` on `(0, x_max)`.
pub fn psi_nodes<T: Scalar>(p: &SpectralProblem<T>, e: T, x_max: T) -> Result<usize> {
    let ec = cre(e);
    let x0 = start_point(p, ec);
    let mut w = psi_start(p, ec, x0)?;
    let h_max = T::PI() / (T::lit(4.0) * (e.abs() + T::one()).sqrt());
    let mut nodes = 0;
    let mut last = w.v[0].re;
    for seg in chunked(p.alpha, x0, x_max).windows(2) {
        let (z0, dz) = (seg[0].re, seg[1].re - seg[0].re);
        let (y, _) = DormandPrince::new(p.opts.tol).with_h_max(h_max / dz).integrate(
            |s, y, dy| {
                let z = cre(z0 + dz * s);
                dy[0] = y[1] * dz;
                dy[1] = p.potential(ec, z) * y[0] * dz;
                Ok(())
            },
            T::zero(),
            &w.v,
            T::one(),
            |_, y| {
                let v = y[0].re;
                if v != T::zero() {
                    if last != T::zero() && (v < T::zero()) != (last < T::zero()) {
                        nodes += 1;
                    }
                    last = v;
                }
                Ok(())
            },
        )?;
        w = super::Wave { log: w.log, v: [y[0], y[1]] }.normalized();
        last = w.v[0].re;
    }
    Ok(nodes)
}

/// The lowest `count` zeros of `D(·, l)` on the real axis, bracketed on a
/// grid of a sixth of the WKB level spacing and refined by regula falsi. The
/// number of nodes of `ψ` just above the last level must equal `count`.
pub fn eigenvalues<T: Scalar>(p: &SpectralProblem<T>, count: usize) -> Result<Vec<T>> {
    if count == 0 || count > MAX_LEVELS {
        return Err(LabError::param(format!("count must be in 1..={MAX_LEVELS}")));
    }
    let batch = 16;
    let mut grid = vec![T::zero()];
    let mut values = vec![d_real(p, T::zero())?];
    let mut levels = Vec::with_capacity(count);
    let mut next_bracket = None;
    let mut checked = 0;
    while next_bracket.is_none() {
        let mut e = *grid.last().expect("grid starts non-empty");
        let mut pts = Vec::with_capacity(batch);
        for _ in 0..batch {
            e = e + wkb_spacing(p.alpha, e) / T::lit(6.0);
            pts.push(e);
        }
        let vals: Vec<T> = pts.par_iter().map(|&e| d_real(p, e)).collect::<Result<_>>()?;
        grid.extend(pts);
        values.extend(vals);
        for i in checked..grid.len() - 1 {
            if (values[i] < T::zero()) != (values[i + 1] < T::zero()) || values[i + 1] == T::zero() {
                if levels.len() < count {
                    levels.push((grid[i], values[i], grid[i + 1], values[i + 1]));
                } else {
                    next_bracket = Some(grid[i]);
                    break;
                }
            }
        }
        checked = grid.len() - 1;
        if grid.len() > 200 * (count + 1) {
            return Err(LabError::Numerical(format!(
                "found {} sign changes of D below E = {}",
                levels.len(),
                e
            )));
        }
    }
    let refined: Vec<T> = levels
        .par_iter()
        .map(|&(a, fa, b, fb)| if fb == T::zero() { Ok(b) } else { refine(p, a, fa, b, fb) })
        .collect::<Result<_>>()?;
    let top = *refined.last().expect("count > 0");
    let probe = (top + next_bracket.expect("loop exits with a bracket")) * T::lit(0.5);
    let x_max = p.x_far_for(cre(probe));
    let nodes = psi_nodes(p, probe, x_max)?;
    if nodes != count {
        return Err(LabError::Numerical(format!(
            "completeness check failed: {count} levels below E = {probe} but psi has {nodes} nodes"
        )));
    }
    Ok(refined)
}

/// Independent oracle: lowest `count` eigenvalues of the finite-difference
/// operator for `u = ψ/x^{l+1}` in the symmetric form
/// `-(x^{2l+2}u')' + x^{2l+2}x^{2α}u = E x^{2l+2}u` on `n` cells of `(0, length)`
/// (flux-free at 0, Dirichlet at `length`), Romberg-extrapolated in `h²`, `h⁴`
/// from `n`, `2n` and `4n` cells. Requires `l > -1/2`.
pub fn fd_eigenvalues<T: Scalar>(p: &SpectralProblem<T>, count: usize, n: usize, length: T) -> Result<Vec<T>> {
    if count == 0 || n < 4 * count || !(length > T::zero()) {
        return Err(LabError::param("need count > 0, n >= 4 count and a positive length"));
    }
    if !(p.l > -T::lit(0.5)) {
        return Err(LabError::param("the oracle needs l > -1/2"));
    }
    let g = T::lit(2.0) * p.l + T::lit(2.0);
    let levels = |m: usize| {
        let h = length / T::from_usize_lossy(m);
        let h2 = h * h;
        let mass: Vec<T> = (0..m).map(|i| ((T::from_usize_lossy(i) + T::lit(0.5)) * h).powf(g)).collect();
        let flux = |i: usize| (T::from_usize_lossy(i + 1) * h).powf(g);
        let d: Vec<T> = (0..m)
            .map(|i| {
                let left = if i == 0 { T::zero() } else { flux(i - 1) };
                let right = if i + 1 == m { T::lit(2.0) * length.powf(g) } else { flux(i) };
                let x = (T::from_usize_lossy(i) + T::lit(0.5)) * h;
                (left + right) / (h2 * mass[i]) + x.powf(p.alpha * T::lit(2.0))
            })
            .collect();
        let e2: Vec<T> = (0..m - 1)
            .map(|i| flux(i) * flux(i) / (h2 * h2 * mass[i] * mass[i + 1]))
            .collect();
        lowest_eigenvalues(&d, &e2, count)
    };
    let sizes = [n, 2 * n, 4 * n];
    let runs: Vec<Vec<T>> = sizes.par_iter().map(|&m| levels(m)).collect();
    Ok((0..count)
        .map(|k| {
            let (e1, e2, e3) = (runs[0][k], runs[1][k], runs[2][k]);
            (T::lit(64.0) * e3 - T::lit(20.0) * e2 + e1) / T::lit(45.0)
        })
        .collect())
}

/// Levels with `D` re-evaluated at each: columns `n, E, re_D, im_D`.
pub fn spectrum_table<T: Scalar>(p: &SpectralProblem<T>, levels: &[T]) -> Result<CsvTable> {
    let mut t = CsvTable::new(["n", "E", "re_D", "im_D"])
        .with_meta("alpha", &fmt_float(p.alpha.to_f64_lossy()))
        .with_meta("l", &fmt_float(p.l.to_f64_lossy()));
    for (k, &e) in levels.iter().enumerate() {
        let d = spectral_d(p, cre(e))?;
        t.push_row(vec![
            (k + 1).to_string(),
            fmt_float(e.to_f64_lossy()),
            fmt_float(d.re.to_f64_lossy()),
            fmt_float(d.im.to_f64_lossy()),
        ]);
    }
    Ok(t)
}

/// `D(E, l)` at the given energies: columns `re_E, im_E, re_D, im_D`.
pub fn determinant_table<T: Scalar>(p: &SpectralProblem<T>, energies: &[Cx<T>]) -> Result<CsvTable> {
    let ds: Vec<Cx<T>> = energies.par_iter().map(|&e| spectral_d(p, e)).collect::<Result<_>>()?;
    let mut t = CsvTable::new(["re_E", "im_E", "re_D", "im_D"])
        .with_meta("alpha", &fmt_float(p.alpha.to_f64_lossy()))
        .with_meta("l", &fmt_float(p.l.to_f64_lossy()));
    for (e, d) in energies.iter().zip(ds) {
        t.push_floats(&[
            e.re.to_f64_lossy(),
            e.im.to_f64_lossy(),
            d.re.to_f64_lossy(),
            d.im.to_f64_lossy(),
        ]);
    }
    Ok(t)
}
