//! Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

use crate::scalar::Scalar;

/// Number of eigenvalues strictly below `x` for the matrix with diagonal `d`
/// and squared off-diagonal `e2` (`e2.len() == d.len() - 1`).
pub fn sturm_count<T: Scalar>(d: &[T], e2: &[T], x: T) -> usize {
    let tiny = T::min_positive_value().sqrt();
    let mut count = 0;
    let mut q = d[0] - x;
    if q < T::zero() {
        count += 1;
    }
    for i in 1..d.len() {
        let qq = if q.abs() < tiny { tiny } else { q };
        q = d[i] - x - e2[i - 1] / qq;
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// Gershgorin enclosure of the spectrum.
pub fn gershgorin<T: Scalar>(d: &[T], e2: &[T]) -> (T, T) {
    let n = d.len();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let mut r = T::zero();
        if i > 0 {
            r += e2[i - 1].sqrt();
        }
        if i + 1 < n {
            r += e2[i].sqrt();
        }
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue (0-based).
pub fn kth_eigenvalue<T: Scalar>(d: &[T], e2: &[T], k: usize, bounds: (T, T)) -> T {
    let (mut lo, mut hi) = bounds;
    let two = T::lit(2.0);
    let scale = lo.abs().max(hi.abs()).max(T::one());
    let eps = T::epsilon() * two * scale;
    for _ in 0..200 {
        let mid = (lo + hi) / two;
        if hi - lo <= eps || mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e2, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) / two
}

/// All eigenvalues in ascending order.
pub fn eigenvalues<T: Scalar>(d: &[T], e2: &[T]) -> Vec<T> {
    if d.len() == 1 {
        return vec![d[0]];
    }
    let b = gershgorin(d, e2);
    (0..d.len()).map(|k| kth_eigenvalue(d, e2, k, b)).collect()
}

/// Largest eigenvalue.
pub fn largest_eigenvalue<T: Scalar>(d: &[T], e2: &[T]) -> T {
    if d.len() == 1 {
        return d[0];
    }
    let b = gershgorin(d, e2);
    kth_eigenvalue(d, e2, d.len() - 1, b)
}

/// Lowest `count` eigenvalues.
pub fn lowest_eigenvalues<T: Scalar>(d: &[T], e2: &[T], count: usize) -> Vec<T> {
    let b = gershgorin(d, e2);
    (0..count.min(d.len()))
        .map(|k| kth_eigenvalue(d, e2, k, b))
        .collect()
}

/// Solves a tridiagonal system by the Thomas algorithm.
///
/// `sub[i]` multiplies `x[i-1]` in row `i` (`sub[0]` unused), `sup[i]`
/// multiplies `x[i+1]` (`sup[n-1]` unused). Returns `None` on a zero pivot.
pub fn solve_tridiagonal<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Option<Vec<T>> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut piv = diag[0];
    if piv == T::zero() {
        return None;
    }
    c[0] = sup[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        if piv == T::zero() || !piv.is_finite() {
            return None;
        }
        if i + 1 < n {
            c[i] = sup[i] / piv;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    Some(d)
}
