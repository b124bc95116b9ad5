//! Gamma function (Lanczos, g = 7).

use crate::scalar::Scalar;

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line (poles at non-positive integers return ±inf).
pub fn gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        // reflection
        let s = (T::PI() * x).sin();
        if s == T::zero() {
            return T::infinity();
        }
        return T::PI() / (s * gamma(T::one() - x));
    }
    let x = x - T::one();
    let mut a = T::lit(LANCZOS[0]);
    let t = x + T::lit(7.5);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += T::lit(c) / (x + T::from_usize_lossy(i));
    }
    (T::TAU()).sqrt() * t.powf(x + half) * (-t).exp() * a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((gamma(5.0f64) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5f64) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
        // Gamma(2/3)
        assert!((gamma(2.0f64 / 3.0) - 1.354_117_939_426_400_4).abs() < 1e-13);
        // reflection branch: Gamma(-0.5) = -2 sqrt(pi)
        assert!((gamma(-0.5f64) + 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
