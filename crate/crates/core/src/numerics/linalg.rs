//! Dense complex linear algebra for small systems.

use crate::scalar::{Cx, Scalar};

/// Solves `A y = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major `n × n`. Returns `None` for a (numerically) singular matrix.
pub fn solve_dense<T: Scalar>(a: &[Cx<T>], b: &[Cx<T>]) -> Option<Vec<Cx<T>>> {
    let n = b.len();
    if a.len() != n * n {
        return None;
    }
    let mut m = a.to_vec();
    let mut y = b.to_vec();
    let scale = m.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    if scale == T::zero() {
        return None;
    }
    let tiny = scale * T::epsilon() * T::from_usize_lossy(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            m[i * n + col]
                .norm()
                .partial_cmp(&m[j * n + col].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(m[piv * n + col].norm() > tiny) {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            y.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / d;
            if f.norm() == T::zero() {
                continue;
            }
            for k in col..n {
                let v = m[col * n + k];
                m[r * n + k] = m[r * n + k] - f * v;
            }
            let v = y[col];
            y[r] = y[r] - f * v;
        }
    }
    for col in (0..n).rev() {
        let mut s = y[col];
        for k in col + 1..n {
            s = s - m[col * n + k] * y[k];
        }
        y[col] = s / m[col * n + col];
    }
    Some(y)
}
