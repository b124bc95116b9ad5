//! Truncated bivariate Taylor jets in (t, x) with complex coefficients.
//!
//! `Jet<T, NT, NX>` stores `c[i][j]`, the coefficient of `εt^i εx^j`, for
//! `i < NT`, `j < NX`. Products are truncated to the same box, so every stored
//! coefficient is exact.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::scalar::{Cx, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T: Scalar, const NT: usize, const NX: usize> {
    c: [[Cx<T>; NX]; NT],
}

fn czero<T: Scalar>() -> Cx<T> {
    Cx::new(T::zero(), T::zero())
}

fn factorial<T: Scalar>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from_usize_lossy(k))
}

impl<T: Scalar, const NT: usize, const NX: usize> Jet<T, NT, NX> {
    pub fn zero() -> Self {
        Jet {
            c: [[czero(); NX]; NT],
        }
    }

    pub fn constant(v: Cx<T>) -> Self {
        let mut j = Self::zero();
        j.c[0][0] = v;
        j
    }

    /// The independent variable `t` expanded around `t0`.
    pub fn var_t(t0: Cx<T>) -> Self {
        let mut j = Self::constant(t0);
        if NT > 1 {
            j.c[1][0] = Cx::new(T::one(), T::zero());
        }
        j
    }

    /// The independent variable `x` expanded around `x0`.
    pub fn var_x(x0: Cx<T>) -> Self {
        let mut j = Self::constant(x0);
        if NX > 1 {
            j.c[0][1] = Cx::new(T::one(), T::zero());
        }
        j
    }

    /// Builds a jet from a function of `t` alone given its Taylor coefficients.
    pub fn from_t_coeffs(coeffs: &[Cx<T>]) -> Self {
        let mut j = Self::zero();
        for (i, &v) in coeffs.iter().take(NT).enumerate() {
            j.c[i][0] = v;
        }
        j
    }

    pub fn value(&self) -> Cx<T> {
        self.c[0][0]
    }

    /// Taylor coefficient of `εt^i εx^j`.
    pub fn coeff(&self, i: usize, j: usize) -> Cx<T> {
        self.c[i][j]
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, v: Cx<T>) {
        self.c[i][j] = v;
    }

    /// Mixed partial derivative `∂t^i ∂x^j` at the expansion point.
    pub fn deriv(&self, i: usize, j: usize) -> Cx<T> {
        self.c[i][j] * (factorial::<T>(i) * factorial::<T>(j))
    }

    /// `∂x` of the jet; the highest x-order becomes unknown and is set to zero.
    pub fn dx(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..NT {
            for j in 0..NX.saturating_sub(1) {
                out.c[i][j] = self.c[i][j + 1] * T::from_usize_lossy(j + 1);
            }
        }
        out
    }

    /// `∂t` of the jet; the highest t-order becomes unknown and is set to zero.
    pub fn dt(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..NT.saturating_sub(1) {
            for j in 0..NX {
                out.c[i][j] = self.c[i + 1][j] * T::from_usize_lossy(i + 1);
            }
        }
        out
    }

    /// Copies the overlapping coefficient box into a jet of another shape.
    pub fn reshape<const MT: usize, const MX: usize>(&self) -> Jet<T, MT, MX> {
        let mut out = Jet::<T, MT, MX>::zero();
        for i in 0..NT.min(MT) {
            for j in 0..NX.min(MX) {
                out.c[i][j] = self.c[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: Cx<T>) -> Self {
        let mut out = *self;
        for row in out.c.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let a = self.c[0][0];
        let inv = Cx::new(T::one(), T::zero()) / a;
        let mut r = *self;
        r.c[0][0] = czero();
        let r = r.scale(-inv);
        // 1/(a(1+r/a)) = (1/a) Σ (-r/a)^n; r is nilpotent of order NT+NX-1.
        let mut term = Self::constant(Cx::new(T::one(), T::zero()));
        let mut sum = term;
        for _ in 0..(NT + NX).saturating_sub(2) {
            term = term * r;
            sum += term;
        }
        sum.scale(inv)
    }

    pub fn exp(&self) -> Self {
        let e0 = self.c[0][0].exp();
        let mut r = *self;
        r.c[0][0] = czero();
        let mut term = Self::constant(Cx::new(T::one(), T::zero()));
        let mut sum = term;
        for n in 1..(NT + NX).saturating_sub(1) {
            term = (term * r).scale(Cx::new(T::one() / T::from_usize_lossy(n), T::zero()));
            sum += term;
        }
        sum.scale(e0)
    }

    /// Principal square root (the constant term must be nonzero).
    pub fn sqrt(&self) -> Self {
        let a = self.c[0][0];
        let s0 = a.sqrt();
        let mut r = *self;
        r.c[0][0] = czero();
        let r = r.scale(Cx::new(T::one(), T::zero()) / a);
        // √a Σ binom(1/2, n) (r/a)^n
        let half = T::lit(0.5);
        let mut coef = T::one();
        let mut term = Self::constant(Cx::new(T::one(), T::zero()));
        let mut sum = term;
        for n in 1..(NT + NX).saturating_sub(1) {
            coef = coef * (half - T::from_usize_lossy(n - 1)) / T::from_usize_lossy(n);
            term = term * r;
            sum += term.scale(Cx::new(coef, T::zero()));
        }
        sum.scale(s0)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(Cx::new(T::one(), T::zero()));
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    pub fn max_norm(&self) -> T {
        let mut m = T::zero();
        for row in self.c.iter() {
            for v in row.iter() {
                m = m.max(v.norm());
            }
        }
        m
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Add for Jet<T, NT, NX> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> AddAssign for Jet<T, NT, NX> {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..NT {
            for j in 0..NX {
                self.c[i][j] = self.c[i][j] + rhs.c[i][j];
            }
        }
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Sub for Jet<T, NT, NX> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> SubAssign for Jet<T, NT, NX> {
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..NT {
            for j in 0..NX {
                self.c[i][j] = self.c[i][j] - rhs.c[i][j];
            }
        }
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Neg for Jet<T, NT, NX> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(Cx::new(-T::one(), T::zero()))
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Mul for Jet<T, NT, NX> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for i1 in 0..NT {
            for j1 in 0..NX {
                let a = self.c[i1][j1];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for i2 in 0..NT - i1 {
                    for j2 in 0..NX - j1 {
                        out.c[i1 + i2][j1 + j2] = out.c[i1 + i2][j1 + j2] + a * rhs.c[i2][j2];
                    }
                }
            }
        }
        out
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> MulAssign for Jet<T, NT, NX> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Div for Jet<T, NT, NX> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Add<Cx<T>> for Jet<T, NT, NX> {
    type Output = Self;
    fn add(mut self, rhs: Cx<T>) -> Self {
        self.c[0][0] = self.c[0][0] + rhs;
        self
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Sub<Cx<T>> for Jet<T, NT, NX> {
    type Output = Self;
    fn sub(mut self, rhs: Cx<T>) -> Self {
        self.c[0][0] = self.c[0][0] - rhs;
        self
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Mul<Cx<T>> for Jet<T, NT, NX> {
    type Output = Self;
    fn mul(self, rhs: Cx<T>) -> Self {
        self.scale(rhs)
    }
}

impl<T: Scalar, const NT: usize, const NX: usize> Mul<T> for Jet<T, NT, NX> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(Cx::new(rhs, T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type J = Jet<f64, 3, 5>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_rule_and_derivatives() {
        let t0 = c(0.7, 0.0);
        let x0 = c(1.3, -0.4);
        let t = J::var_t(t0);
        let x = J::var_x(x0);
        // f = t^2 x^3
        let f = t * t * x.powi(3);
        let d = f.deriv(1, 2); // 2t * 6x
        assert!((d - c(2.0, 0.0) * t0 * c(6.0, 0.0) * x0).norm() < 1e-13);
        let d = f.deriv(2, 3);
        assert!((d - c(12.0, 0.0)).norm() < 1e-13);
        assert!((f.dx().dt().value() - f.deriv(1, 1)).norm() < 1e-13);
    }

    #[test]
    fn reciprocal_matches_closed_form() {
        let t = J::var_t(c(0.2, 0.1));
        let x = J::var_x(c(-0.5, 0.9));
        let g = x - t * t; // 1/g
        let inv = g.recip();
        let g0 = c(-0.5, 0.9) - c(0.2, 0.1) * c(0.2, 0.1);
        // d^4/dx^4 (1/g) = 24/g^5
        assert!((inv.deriv(0, 4) - c(24.0, 0.0) / g0.powi(5)).norm() < 1e-9);
        // d/dt (1/g) = 2t/g^2
        assert!((inv.deriv(1, 0) - c(2.0, 0.0) * c(0.2, 0.1) / (g0 * g0)).norm() < 1e-12);
        let one = inv * g;
        assert!((one - J::constant(c(1.0, 0.0))).max_norm() < 1e-12);
    }

    #[test]
    fn exponential_matches_closed_form() {
        let (t0, x0) = (c(0.3, -0.2), c(0.8, 0.5));
        let a = J::var_t(t0) * J::var_x(x0) + J::var_x(x0) * J::var_x(x0);
        let e = a.exp();
        let a0 = t0 * x0 + x0 * x0;
        let ax = t0 + c(2.0, 0.0) * x0;
        // d^2/dx^2 e^a = (a_x^2 + a_xx) e^a
        assert!((e.deriv(0, 2) - (ax * ax + c(2.0, 0.0)) * a0.exp()).norm() < 1e-12);
        // d/dt e^a = x e^a
        assert!((e.deriv(1, 0) - x0 * a0.exp()).norm() < 1e-12);
        let back = e * (-a).exp();
        assert!((back - J::constant(c(1.0, 0.0))).max_norm() < 1e-12);
    }

    #[test]
    fn square_root_squares_back() {
        let (t0, x0) = (c(0.3, -0.2), c(0.8, 0.5));
        let a = J::var_t(t0) * J::var_x(x0) + J::var_x(x0).powi(3) + c(1.5, 0.0);
        let r = a.sqrt();
        assert!((r * r - a).max_norm() < 1e-12);
        assert!((r.value() - a.value().sqrt()).norm() < 1e-15);
    }
}
