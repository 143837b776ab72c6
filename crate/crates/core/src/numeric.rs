//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// `x^e`, using integer powers when the exponent is integral.
#[inline]
pub fn pow(x: f64, e: f64) -> f64 {
    if e == e.trunc() && e.abs() < 64.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Clips to the nonnegative orthant and rescales to unit norm; `None` if nothing is left.
pub fn project_to_sphere(x: &mut [f64]) -> Option<()> {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let n = norm(x);
    if n <= 0.0 || !n.is_finite() {
        return None;
    }
    x.iter_mut().for_each(|v| *v /= n);
    Some(())
}

/// Solves the dense system `a x = b` (row-major `a`) by LU with partial pivoting.
pub fn lu_solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mat = DMatrix::from_row_slice(n, n, a);
    let lu = mat.lu();
    let sol = lu.solve(&DVector::from_column_slice(b))?;
    sol.iter().all(|v| v.is_finite()).then(|| sol.iter().cloned().collect())
}

/// Minimum-norm least-squares solution of `a x = b` via SVD, discarding
/// singular values below `rel_tol * σ_max`.
pub fn pinv_solve(n: usize, a: &[f64], b: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let svd = DMatrix::from_row_slice(n, n, a).svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0 && smax.is_finite()) {
        return None;
    }
    let sol = svd.solve(&DVector::from_column_slice(b), rel_tol * smax).ok()?;
    sol.iter().all(|v| v.is_finite()).then(|| sol.iter().cloned().collect())
}

/// Thomas algorithm for a symmetric tridiagonal system with constant off-diagonal.
pub fn solve_tridiagonal(diag: &[f64], off: f64, rhs: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    let mut denom = diag[0];
    scratch[0] = off / denom;
    out[0] = rhs[0] / denom;
    for k in 1..n {
        denom = diag[k] - off * scratch[k - 1];
        scratch[k] = off / denom;
        out[k] = (rhs[k] - off * out[k - 1]) / denom;
    }
    for k in (0..n - 1).rev() {
        out[k] -= scratch[k] * out[k + 1];
    }
}
