use crate::error::{check_dim, Result};

use super::dense::{axpy, dot, norm2, DenseMatrix};
use super::eigen::symmetric_evd;
use super::sparse::SparseSpdMatrix;

/// Largest `|λ|` of a symmetric operator by Lanczos with full reorthogonalization.
/// Exact (up to rounding) when `steps >= n`.
pub fn lanczos_norm(n: usize, steps: usize, mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let steps = steps.clamp(1, n);
    let mut q: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662).sin()).collect();
    let s = norm2(&q);
    q.iter_mut().for_each(|v| *v /= s);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for _ in 0..steps {
        let mut w = apply(&q);
        check_dim(n, w.len())?;
        let a = dot(&q, &w);
        alpha.push(a);
        basis.push(q.clone());
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        let b = norm2(&w);
        let scale = alpha.iter().map(|v| v.abs()).fold(b, f64::max);
        if b <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        beta.push(b);
        q = w.into_iter().map(|v| v / b).collect();
    }
    let k = alpha.len();
    let t = DenseMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let evd = symmetric_evd(&t)?;
    Ok(evd.values.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

impl SparseSpdMatrix {
    /// `‖self − other‖₂` estimated by Lanczos on the difference operator.
    pub fn difference_norm(&self, other: &SparseSpdMatrix, steps: usize) -> Result<f64> {
        check_dim(self.n(), other.n())?;
        if self == other {
            return Ok(0.0);
        }
        lanczos_norm(self.n(), steps, |x| {
            let a = self.apply_uncounted(x);
            let b = other.apply_uncounted(x);
            a.iter().zip(&b).map(|(u, v)| u - v).collect()
        })
    }
}
