//! Small dense helpers shared by the state and oracle code. Everything here
//! works on symmetric matrices of the sizes this crate cares about (a handful
//! of particles), so simplicity wins over cleverness.

use nalgebra::{DMatrix, DVector};

/// Relative pivot tolerance for the positive-definiteness test: the smallest
/// Cholesky pivot must exceed this fraction of the largest diagonal entry.
pub(crate) const SPD_PIVOT_REL_TOL: f64 = 1e-12;

/// Copy the upper triangle onto the lower one so the result is symmetric to
/// the last bit, not just to rounding.
pub(crate) fn mirror_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
}

/// Maximum absolute deviation from symmetry.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Cholesky factorization (lower factor) with an explicit pivot floor:
/// fails when any pivot drops below `SPD_PIVOT_REL_TOL` times the largest
/// diagonal entry of the input, which is the crate-wide definition of
/// "positive definite enough to invert".
pub(crate) fn cholesky_lower(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0f64, f64::max);
    if !(max_diag > 0.0) || !max_diag.is_finite() {
        return None;
    }
    let floor = SPD_PIVOT_REL_TOL * max_diag;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
/// The result is mirrored so it is exactly symmetric.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = cholesky_lower(m)?;
    let n = m.nrows();
    // Solve L Y = I column by column, then L^T X = Y.
    let mut inv = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut y = DVector::zeros(n);
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        inv.set_column(col, &y);
    }
    mirror_upper(&mut inv);
    Some(inv)
}

pub(crate) fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let l = cholesky_lower(m)?;
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Eigenvalues (ascending) and matching eigenvectors of a symmetric matrix.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vectors.set_column(new, &eig.eigenvectors.column(old));
    }
    (values, vectors)
}

/// Apply a scalar function to a symmetric matrix through its eigensystem.
pub(crate) fn sym_apply(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (values, q) = sym_eigen(m);
    let n = m.nrows();
    let mut scaled = q.clone();
    for (k, &v) in values.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, k)] *= fv;
        }
    }
    let mut out = &scaled * q.transpose();
    // the product is symmetric in exact arithmetic; make it so in floats too
    let t = out.transpose();
    out = (&out + &t) * 0.5;
    out
}

/// 2-norm condition estimate from singular values.
pub(crate) fn condition(m: &DMatrix<f64>) -> f64 {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let min = svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min <= 0.0 { f64::INFINITY } else { max / min }
}
