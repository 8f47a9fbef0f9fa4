//! Dense linear solves for the small systems that show up in this crate:
//! Markov-chain stationary distributions and reduced Newton (KKT) systems.
//! Matrices are at most a few dozen rows, so LU with partial pivoting on a
//! row-major buffer is all that is needed.

use crate::scalar::Real;

/// A matrix was numerically singular during factorization.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("singular matrix at pivot {pivot}")]
pub struct SingularMatrix {
    pub pivot: usize,
}

/// Solves `A x = b` in place (`a` is row-major `n x n`, destroyed; `b`
/// becomes the solution). Partial pivoting keeps the solve deterministic.
pub fn solve_in_place<R: Real>(a: &mut [R], b: &mut [R], n: usize) -> Result<(), SingularMatrix> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == R::zero() || !best.is_finite() {
            return Err(SingularMatrix { pivot: col });
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let inv = R::one() / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor == R::zero() {
                continue;
            }
            a[row * n + col] = R::zero();
            for k in col + 1..n {
                let upd = a[col * n + k] * factor;
                a[row * n + k] = a[row * n + k] - upd;
            }
            b[row] = b[row] - b[col] * factor;
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc - a[row * n + k] * b[k];
        }
        b[row] = acc / a[row * n + row];
    }
    Ok(())
}
