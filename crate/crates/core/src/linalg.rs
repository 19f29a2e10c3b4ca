//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration cap for [`spectral_radius`].
pub const MAX_POWER_ITERATIONS: usize = 1000;
const POWER_TOL: f64 = 1e-10;

/// Largest eigenvalue magnitude by power iteration.
///
/// Each iteration applies `m` twice from a deterministic start vector and
/// takes the Ritz values of the two-dimensional Krylov space `{x, m x}`.
/// The squared step removes sign alternation between `+lambda` and
/// `-lambda`, and the 2x2 Ritz problem resolves a dominant complex
/// conjugate pair, which a plain Rayleigh quotient cannot.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i + 1) as f64).sin());
    x.normalize_mut();
    let mut prev = f64::NAN;
    let mut estimate = 0.0;
    let mut stable = 0;
    for _ in 0..MAX_POWER_ITERATIONS {
        let y = m * &x;
        let ny = y.norm();
        if ny == 0.0 {
            return Ok(0.0);
        }
        let z = m * &y;
        let alpha = x.dot(&y);
        let q2 = &y - &x * alpha;
        let n2 = q2.norm();
        if n2 <= 1e-14 * ny {
            // x is already an eigenvector
            return Ok(alpha.abs());
        }
        let q2 = q2 / n2;
        let mq2 = (&z - &y * alpha) / n2;
        let h = [[alpha, x.dot(&mq2)], [q2.dot(&y), q2.dot(&mq2)]];
        estimate = ritz_radius(h);

        let nz = z.norm();
        if nz == 0.0 {
            return Ok(estimate);
        }
        x = z / nz;
        if (estimate - prev).abs() <= POWER_TOL * estimate {
            stable += 1;
            if stable >= 3 {
                return Ok(estimate);
            }
        } else {
            stable = 0;
        }
        prev = estimate;
    }
    Err(Error::NoConvergence { iterations: MAX_POWER_ITERATIONS, estimate })
}

/// Largest modulus among the eigenvalues of a 2x2 matrix.
fn ritz_radius(h: [[f64; 2]; 2]) -> f64 {
    let tr = h[0][0] + h[1][1];
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        det.sqrt()
    }
}

/// Spectral radius from a full Schur decomposition, O(n^3).
pub fn spectral_radius_dense(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Solve `a x = b` for symmetric positive definite `a`.
///
/// Fails when the Cholesky factorisation breaks down or a pivot falls below
/// `1e-12` of the largest diagonal entry, which flags a numerically singular
/// Gram matrix.
pub fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let scale = a.diagonal().iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    let chol = Cholesky::new(a)
        .ok_or_else(|| Error::SingularSystem("matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    let min_pivot = (0..n).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * scale) {
        return Err(Error::SingularSystem(format!(
            "pivot {min_pivot:e} against diagonal scale {scale:e}"
        )));
    }
    Ok(chol.solve(b))
}
