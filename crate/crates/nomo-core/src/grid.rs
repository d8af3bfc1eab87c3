//! Independent numerical check of ground energies: diagonalize the
//! relative-motion Hamiltonian on a uniform grid with walls.
//!
//! This path shares no formulas with the normal-mode route beyond the
//! internal-frame split itself: second derivatives become three-point
//! stencils, the mixed derivative from the non-diagonal kinetic metric
//! becomes the four-point cross stencil, and the lowest eigenvalue of the
//! resulting matrix is the estimate. Accuracy is O(h^2) in the spacing as
//! long as the box holds the ground state; both knobs are caller-visible on
//! purpose.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::HarmonicModel;
use crate::oracle::relative_hamiltonian;
use crate::transform::CoordinateTransform;

/// Above this many grid points the dense eigensolver is replaced by a
/// Lanczos iteration; below it the dense route is both faster and exact to
/// rounding.
const DENSE_LIMIT: usize = 2048;

const LANCZOS_MAX_ITER: usize = 500;
const LANCZOS_TOL: f64 = 1e-10;

struct Stencil {
    points: usize,
    dims: usize,
    diag: Vec<f64>,
    cx: f64,
    cy: f64,
    cross: f64,
}

impl Stencil {
    fn total(&self) -> usize {
        self.points.pow(self.dims as u32)
    }

    fn apply(&self, psi: &[f64], out: &mut [f64]) {
        let n = self.points;
        match self.dims {
            1 => {
                for i in 0..n {
                    let mut v = self.diag[i] * psi[i];
                    if i > 0 {
                        v -= self.cx * psi[i - 1];
                    }
                    if i + 1 < n {
                        v -= self.cx * psi[i + 1];
                    }
                    out[i] = v;
                }
            }
            2 => {
                for ix in 0..n {
                    for iy in 0..n {
                        let idx = ix * n + iy;
                        let mut v = self.diag[idx] * psi[idx];
                        if ix > 0 {
                            v -= self.cx * psi[idx - n];
                        }
                        if ix + 1 < n {
                            v -= self.cx * psi[idx + n];
                        }
                        if iy > 0 {
                            v -= self.cy * psi[idx - 1];
                        }
                        if iy + 1 < n {
                            v -= self.cy * psi[idx + 1];
                        }
                        if self.cross != 0.0 {
                            if ix + 1 < n && iy + 1 < n {
                                v -= self.cross * psi[idx + n + 1];
                            }
                            if ix > 0 && iy > 0 {
                                v -= self.cross * psi[idx - n - 1];
                            }
                            if ix + 1 < n && iy > 0 {
                                v += self.cross * psi[idx + n - 1];
                            }
                            if ix > 0 && iy + 1 < n {
                                v += self.cross * psi[idx - n + 1];
                            }
                        }
                        out[idx] = v;
                    }
                }
            }
            _ => unreachable!("stencil dimensions checked at construction"),
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let total = self.total();
        let mut m = DMatrix::zeros(total, total);
        let mut unit = vec![0.0; total];
        let mut col = vec![0.0; total];
        for j in 0..total {
            unit[j] = 1.0;
            self.apply(&unit, &mut col);
            unit[j] = 0.0;
            for i in 0..total {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

/// Ground energy of the relative motion on a `points^d` grid covering
/// `[-box_half_width, box_half_width]` per internal coordinate, with the
/// wavefunction pinned to zero beyond the walls. Supports one or two
/// internal coordinates (up to three particles).
pub fn grid_ground_energy(
    model: &HarmonicModel,
    transform: &CoordinateTransform,
    box_half_width: f64,
    points_per_axis: usize,
) -> Result<f64> {
    if !(box_half_width > 0.0) || !box_half_width.is_finite() {
        return Err(Error::precondition(format!(
            "box half-width must be positive and finite, got {box_half_width}"
        )));
    }
    if points_per_axis < 32 {
        return Err(Error::precondition(format!(
            "need at least 32 grid points per axis for a meaningful estimate, got {points_per_axis}"
        )));
    }
    let dims = transform.internal_dim();
    if dims > 2 {
        return Err(Error::DimensionTooLarge(dims));
    }
    let (g, v) = relative_hamiltonian(model, transform)?;
    let gm = g.matrix();
    let vm = v.matrix();
    let n = points_per_axis;
    let h = 2.0 * box_half_width / (n - 1) as f64;
    let coord = |k: usize| -box_half_width + k as f64 * h;
    let stencil = match dims {
        1 => {
            let cx = gm[(0, 0)] / (h * h);
            let diag: Vec<f64> = (0..n)
                .map(|i| {
                    let x = coord(i);
                    2.0 * cx + vm[(0, 0)] * x * x
                })
                .collect();
            Stencil {
                points: n,
                dims,
                diag,
                cx,
                cy: 0.0,
                cross: 0.0,
            }
        }
        2 => {
            let cx = gm[(0, 0)] / (h * h);
            let cy = gm[(1, 1)] / (h * h);
            let cross = gm[(0, 1)] / (2.0 * h * h);
            let mut diag = vec![0.0; n * n];
            for ix in 0..n {
                for iy in 0..n {
                    let (x, y) = (coord(ix), coord(iy));
                    diag[ix * n + iy] = 2.0 * cx
                        + 2.0 * cy
                        + vm[(0, 0)] * x * x
                        + 2.0 * vm[(0, 1)] * x * y
                        + vm[(1, 1)] * y * y;
                }
            }
            Stencil {
                points: n,
                dims,
                diag,
                cx,
                cy,
                cross,
            }
        }
        _ => unreachable!(),
    };
    if stencil.total() <= DENSE_LIMIT {
        let dense = stencil.to_dense();
        let (eigs, _) = crate::linalg::sym_eigen(&dense);
        Ok(eigs[0])
    } else {
        lanczos_smallest(
            stencil.total(),
            |psi, out| stencil.apply(psi, out),
            LANCZOS_MAX_ITER,
            LANCZOS_TOL,
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn smallest_ritz(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    (eig.eigenvalues[best], eig.eigenvectors[(k - 1, best)])
}

/// Smallest eigenvalue of a symmetric operator given only matrix-vector
/// products. Lanczos with full reorthogonalization; the residual bound
/// `|beta * s_k|` (last eigenvector component of the tridiagonal times the
/// next off-diagonal) controls convergence.
pub(crate) fn lanczos_smallest(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    max_iter: usize,
    tol: f64,
) -> Result<f64> {
    let mut q = vec![1.0 / (n as f64).sqrt(); n];
    let mut q_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = (f64::NAN, f64::NAN);
    for k in 0..max_iter {
        basis.push(q.clone());
        apply(&q, &mut w);
        let alpha = dot(&q, &w);
        alphas.push(alpha);
        for i in 0..n {
            w[i] -= alpha * q[i];
            if k > 0 {
                w[i] -= betas[k - 1] * q_prev[i];
            }
        }
        // two passes of full reorthogonalization keep the basis clean even
        // after the extreme Ritz values start to converge
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for i in 0..n {
                    w[i] -= c * b[i];
                }
            }
        }
        let beta = dot(&w, &w).sqrt();
        let scale = alphas.iter().fold(0.0f64, |acc, &a| acc.max(a.abs()));
        if beta <= 1e-13 * scale.max(1.0) {
            // hit an invariant subspace: the tridiagonal spectrum is exact
            let (theta, _) = smallest_ritz(&alphas, &betas);
            return Ok(theta);
        }
        if k >= 4 && (k % 5 == 0 || k + 1 == max_iter) {
            let (theta, s_last) = smallest_ritz(&alphas, &betas);
            let residual = (beta * s_last).abs();
            last = (theta, residual);
            if residual <= tol * theta.abs().max(1.0) {
                return Ok(theta);
            }
        }
        betas.push(beta);
        std::mem::swap(&mut q_prev, &mut q);
        for i in 0..n {
            q[i] = w[i] / beta;
        }
    }
    Err(Error::NonConvergent {
        residual: last.1,
        iterations: max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const SQRT3: f64 = 1.7320508075688772;

    fn family(lambda: f64) -> (HarmonicModel, CoordinateTransform) {
        let model = HarmonicModel::lambda_family(lambda).unwrap();
        let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
        (model, t)
    }

    fn family_energy(lambda: f64) -> f64 {
        (SQRT3 + (2.0 * lambda + 1.0).sqrt()) / 2.0
    }

    #[test]
    fn two_body_line_matches_exact_to_stencil_accuracy() {
        // one internal coordinate: H = p^2 + x^2/2, ground energy sqrt(2)/2
        let model = HarmonicModel::new(
            vec![1.0, 1.0],
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        )
        .unwrap();
        let t = CoordinateTransform::heavy_center(&model, 0).unwrap();
        let e = grid_ground_energy(&model, &t, 6.0, 1024).unwrap();
        assert_abs_diff_eq!(e, std::f64::consts::SQRT_2 / 2.0, epsilon = 1e-5);
    }

    #[test]
    fn symmetric_family_on_the_reference_grid() {
        let (model, t) = family(1.0);
        let e = grid_ground_energy(&model, &t, 8.0, 96).unwrap();
        // the h^2 truncation error happens to nearly cancel here, so the
        // match is much tighter than the generic stencil accuracy
        assert_abs_diff_eq!(e, family_energy(1.0), epsilon = 1e-4);
        assert_abs_diff_eq!(e, 1.73200348, epsilon = 2e-6);
    }

    #[test]
    fn decoupled_and_strong_coupling_grid_errors_stay_quadratic_size() {
        for (lambda, bound) in [(0.0, 1.5e-3), (3.0, 3.0e-3)] {
            let (model, t) = family(lambda);
            let e = grid_ground_energy(&model, &t, 8.0, 96).unwrap();
            assert!(
                (e - family_energy(lambda)).abs() < bound,
                "lambda {lambda}: error {}",
                (e - family_energy(lambda)).abs()
            );
        }
    }

    #[test]
    fn refinement_halves_spacing_quarters_error() {
        // decoupled point: clean O(h^2) without the symmetric-point
        // cancellation; slope of log2(error) per refinement should be ~2
        let (model, t) = family(0.0);
        let exact = family_energy(0.0);
        let errs: Vec<f64> = [33usize, 65, 129]
            .iter()
            .map(|&n| (grid_ground_energy(&model, &t, 8.0, n).unwrap() - exact).abs())
            .collect();
        let s1 = (errs[0] / errs[1]).log2();
        let s2 = (errs[1] / errs[2]).log2();
        let slope = 0.5 * (s1 + s2);
        assert!(
            (slope - 2.0).abs() < 0.2,
            "slope {slope}, errors {errs:?}"
        );
    }

    #[test]
    fn dense_and_lanczos_agree_on_the_same_operator() {
        let (model, t) = family(2.0);
        // 40^2 = 1600 points: dense path
        let dense = grid_ground_energy(&model, &t, 7.0, 40).unwrap();
        // replay the same stencil through the iterative path
        let (g, v) = relative_hamiltonian(&model, &t).unwrap();
        let (gm, vm) = (g.matrix().clone(), v.matrix().clone());
        let n = 40;
        let h = 14.0 / 39.0;
        let coord = |k: usize| -7.0 + k as f64 * h;
        let mut diag = vec![0.0; n * n];
        for ix in 0..n {
            for iy in 0..n {
                let (x, y) = (coord(ix), coord(iy));
                diag[ix * n + iy] = 2.0 * gm[(0, 0)] / (h * h)
                    + 2.0 * gm[(1, 1)] / (h * h)
                    + vm[(0, 0)] * x * x
                    + 2.0 * vm[(0, 1)] * x * y
                    + vm[(1, 1)] * y * y;
            }
        }
        let stencil = Stencil {
            points: n,
            dims: 2,
            diag,
            cx: gm[(0, 0)] / (h * h),
            cy: gm[(1, 1)] / (h * h),
            cross: gm[(0, 1)] / (2.0 * h * h),
        };
        let iterative = lanczos_smallest(
            stencil.total(),
            |psi, out| stencil.apply(psi, out),
            LANCZOS_MAX_ITER,
            LANCZOS_TOL,
        )
        .unwrap();
        assert_abs_diff_eq!(dense, iterative, epsilon = 1e-8);
    }

    #[test]
    fn lanczos_recovers_a_small_dense_spectrum() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0],
        );
        let e = lanczos_smallest(
            3,
            |x, out| {
                for i in 0..3 {
                    out[i] = (0..3).map(|j| m[(i, j)] * x[j]).sum();
                }
            },
            50,
            1e-12,
        )
        .unwrap();
        assert_abs_diff_eq!(e, 2.0 - std::f64::consts::SQRT_2, epsilon = 1e-10);
    }

    #[test]
    fn rejects_bad_grids_and_high_dimensions() {
        let (model, t) = family(1.0);
        assert!(grid_ground_energy(&model, &t, 0.0, 96).is_err());
        assert!(grid_ground_energy(&model, &t, -3.0, 96).is_err());
        assert!(grid_ground_energy(&model, &t, 8.0, 16).is_err());

        let four = HarmonicModel::from_pairs(
            vec![1.0; 4],
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)],
        )
        .unwrap();
        let t4 = CoordinateTransform::heavy_center(&four, 0).unwrap();
        assert!(matches!(
            grid_ground_energy(&four, &t4, 8.0, 96),
            Err(Error::DimensionTooLarge(3))
        ));
    }
}
