//! Small dense matrix helpers on top of nalgebra's fixed-size types.
//!
//! Problem dimensions are fixed (4 states, 2 measurements), so everything here
//! works on `SMatrix`/`SVector`. The SVD-based helpers copy into a dynamic
//! matrix; they are not on any per-step path.

use nalgebra::{DMatrix, SMatrix, SVector};

use crate::error::{Error, Result};

pub type Vector2 = SVector<f64, 2>;
pub type Vector4 = SVector<f64, 4>;
pub type Matrix2 = SMatrix<f64, 2, 2>;
pub type Matrix4 = SMatrix<f64, 4, 4>;
pub type Matrix2x4 = SMatrix<f64, 2, 4>;

/// Pivots below `-NEGATIVE_PIVOT_TOL * max|m|` are reported as a failure.
pub const NEGATIVE_PIVOT_TOL: f64 = 1e-8;
/// Pivots at or below `ZERO_PIVOT_TOL * max|m|` are treated as exact zeros.
const ZERO_PIVOT_TOL: f64 = 1e-14;

/// Lower-triangular factor `S` with `S * S^T = m` for a symmetric positive
/// semidefinite `m`.
///
/// Only the lower triangle of `m` is read. Rank-deficient inputs are accepted:
/// a pivot within rounding distance of zero (or slightly negative) is clamped
/// to zero and its column below the diagonal is zeroed.
pub fn cholesky_factor<const N: usize>(m: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    let scale = m.amax();
    let mut l = SMatrix::<f64, N, N>::zeros();
    if scale == 0.0 {
        return Ok(l);
    }
    if !scale.is_finite() {
        return Err(Error::NotPositiveSemidefinite {
            index: 0,
            pivot: f64::NAN,
        });
    }

    for j in 0..N {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot < -NEGATIVE_PIVOT_TOL * scale || pivot.is_nan() {
            return Err(Error::NotPositiveSemidefinite { index: j, pivot });
        }
        if pivot <= ZERO_PIVOT_TOL * scale {
            // rank-deficient direction; leave the column at zero
            continue;
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..N {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Moore-Penrose pseudo-inverse via SVD.
pub fn pseudo_inverse<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> SMatrix<f64, C, R> {
    let svd = DMatrix::from_column_slice(R, C, m.as_slice()).svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = (R.max(C) as f64) * sigma_max * f64::EPSILON;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");

    let mut out = SMatrix::<f64, C, R>::zeros();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            out += (v_t.row(k).transpose() / s) * u.column(k).transpose();
        }
    }
    out
}

fn norm1<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

/// Inverse together with its 1-norm condition number `|m|_1 |m^-1|_1`.
/// Returns `None` when `m` is exactly singular or the result is not finite.
pub fn inverse_with_condition<const N: usize>(m: &SMatrix<f64, N, N>) -> Option<(SMatrix<f64, N, N>, f64)> {
    let inv = m.try_inverse()?;
    let cond = norm1(m) * norm1(&inv);
    cond.is_finite().then_some((inv, cond))
}

/// Replace `m` by `(m + m^T) / 2`.
pub fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// Ratio of largest to smallest singular value; infinite for singular input.
pub fn condition_number<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let sv = DMatrix::from_column_slice(N, N, m.as_slice()).singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn is_finite<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> bool {
    m.iter().all(|v| v.is_finite())
}
