//! Adaptive Gauss–Legendre quadrature with bisection error control.

use std::sync::OnceLock;

use crate::scalar::{Cx, Scalar};

const NODES: usize = 15;

fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T: Scalar> {
    pub value: Cx<T>,
    pub error: T,
    pub evaluations: usize,
    pub converged: bool,
}

/// Gauss–Legendre value on `[a, b]` together with the same rule applied to `|f|`.
fn fixed_rule<T: Scalar, F: FnMut(T) -> Cx<T>>(f: &mut F, a: T, b: T) -> (Cx<T>, T) {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let mut acc = Cx::new(T::zero(), T::zero());
    let mut acc_abs = T::zero();
    for &(x, w) in legendre_rule() {
        let v = f(mid + half * T::lit(x));
        acc = acc + v * T::lit(w);
        acc_abs += v.norm() * T::lit(w);
    }
    (acc * half, acc_abs * half.abs())
}

/// Integrates `f` over `[a, b]`, splitting first at `breakpoints` inside the interval.
///
/// Intervals are bisected until the panel-vs-halves difference is below the
/// share `tol * len / (b - a)` of the requested tolerance, with
/// `tol = max(abs_tol, rel_tol * ∫|f|)` (the absolute integral is estimated
/// from the initial panels, so cancellations do not make the target unattainable).
pub fn integrate<T, F>(
    mut f: F,
    a: T,
    b: T,
    breakpoints: &[T],
    abs_tol: T,
    rel_tol: T,
    max_depth: usize,
) -> QuadResult<T>
where
    T: Scalar,
    F: FnMut(T) -> Cx<T>,
{
    let mut cuts: Vec<T> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    edges.dedup();

    let mut evaluations = 0usize;
    let mut panels: Vec<(T, T, Cx<T>, usize)> = Vec::new();
    let mut coarse_abs = T::zero();
    for w in edges.windows(2) {
        let (v, va) = fixed_rule(&mut f, w[0], w[1]);
        evaluations += NODES;
        coarse_abs += va;
        panels.push((w[0], w[1], v, 0));
    }
    let total_len = b - a;
    let tol = abs_tol.max(rel_tol * coarse_abs);

    let mut value = Cx::new(T::zero(), T::zero());
    let mut error = T::zero();
    let mut converged = true;
    while let Some((lo, hi, whole, depth)) = panels.pop() {
        let mid = (lo + hi) * T::lit(0.5);
        let (left, _) = fixed_rule(&mut f, lo, mid);
        let (right, _) = fixed_rule(&mut f, mid, hi);
        evaluations += 2 * NODES;
        let refined = left + right;
        let diff = (refined - whole).norm();
        let share = tol * (hi - lo) / total_len;
        if diff <= share || depth >= max_depth || !diff.is_finite() {
            if diff > share {
                converged = false;
            }
            value = value + refined;
            error += diff;
        } else {
            panels.push((lo, mid, left, depth + 1));
            panels.push((mid, hi, right, depth + 1));
        }
    }
    QuadResult {
        value,
        error,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre(15);
        let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(28)).sum();
        assert!((s - 2.0 / 29.0).abs() < 1e-14);
        let wsum: f64 = rule.iter().map(|r| r.1).sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_integral() {
        let r = integrate(
            |x: f64| Complex64::new((-x * x / 2.0).exp(), 0.0),
            -12.0,
            12.0,
            &[],
            1e-14,
            0.0,
            40,
        );
        assert!(r.converged);
        assert!((r.value.re - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kink_handled_with_breakpoint() {
        let r = integrate(
            |x: f64| Complex64::new((x - 0.3).abs().powf(1.5), 0.0),
            -1.0,
            1.0,
            &[0.3],
            1e-13,
            0.0,
            40,
        );
        let exact = (1.3f64.powf(2.5) + 0.7f64.powf(2.5)) / 2.5;
        assert!((r.value.re - exact).abs() < 1e-12);
    }
}
