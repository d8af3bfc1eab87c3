//! Gaussian trial states and densities: expectation values, polynomial
//! moments, frame changes and marginals.
//!
//! A state is `psi(x) ~ exp(-x.Ax/2)` with `A` symmetric positive definite.
//! Everything downstream needs only two facts about it:
//! `<x_i x_j> = (A^{-1})_ij / 2` and `<p_i p_j> = A_ij / 2`, so the energy of
//! a kinetic/potential form pair is `tr(G A)/2 + tr(V A^{-1})/2`. Densities
//! are kept as `rho(x) ~ exp(-x.Bx)`; for `psi^2` simply `B = A`.
//!
//! Normalization constants are carried nowhere except
//! [`GaussianDensity::normalized_value`]: every formula in this module is
//! invariant under scaling of the state, which keeps the algebra honest.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{Frame, FrameMap};
use crate::linalg;
use crate::quadratic::{FormKind, QuadraticForm};
use crate::transform::CoordinateTransform;

fn check_exponent(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::precondition(format!(
            "exponent matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::precondition(
            "exponent matrix has non-finite entries".to_string(),
        ));
    }
    if linalg::asymmetry(m) > 1e-12 * scale.max(1.0) {
        return Err(Error::precondition(
            "exponent matrix is not symmetric".to_string(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GaussianState {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    frame: Frame,
}

impl GaussianState {
    /// Build a state from its exponent matrix. The matrix must be symmetric
    /// and positive definite (smallest Cholesky pivot above `1e-12` times the
    /// largest diagonal entry); the inverse is computed once and cached.
    pub fn new(mut a: DMatrix<f64>, frame: Frame) -> Result<Self> {
        check_exponent(&a)?;
        linalg::mirror_upper(&mut a);
        let a_inv = linalg::spd_inverse(&a).ok_or(Error::NotPositiveDefinite)?;
        Ok(GaussianState { a, a_inv, frame })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn exponent(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Coordinate covariance `<x x^T> = A^{-1} / 2`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.a_inv * 0.5
    }

    fn check_frame(&self, other: &Frame) -> Result<()> {
        if self.frame != *other {
            return Err(Error::FrameMismatch {
                left: self.frame.label(),
                right: other.label(),
            });
        }
        Ok(())
    }

    /// Expectation of a single quadratic form in this state:
    /// `tr(M A)/2` for kinetic forms, `tr(M A^{-1})/2` for potential forms.
    pub fn quadratic_expectation(&self, form: &QuadraticForm) -> Result<f64> {
        self.check_frame(form.frame())?;
        if form.dim() != self.dim() {
            return Err(Error::precondition(format!(
                "form dimension {} does not match state dimension {}",
                form.dim(),
                self.dim()
            )));
        }
        let with = match form.kind() {
            FormKind::Kinetic => &self.a,
            FormKind::Potential => &self.a_inv,
        };
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += form.matrix()[(i, j)] * with[(j, i)];
            }
        }
        Ok(0.5 * acc)
    }

    /// Variational energy `<p.Gp> + <x.Vx>` for a kinetic/potential pair in
    /// this state's frame.
    pub fn energy_expectation(
        &self,
        kinetic: &QuadraticForm,
        potential: &QuadraticForm,
    ) -> Result<f64> {
        if kinetic.kind() != FormKind::Kinetic {
            return Err(Error::KindMismatch {
                expected: FormKind::Kinetic,
                got: kinetic.kind(),
            });
        }
        if potential.kind() != FormKind::Potential {
            return Err(Error::KindMismatch {
                expected: FormKind::Potential,
                got: potential.kind(),
            });
        }
        Ok(self.quadratic_expectation(kinetic)? + self.quadratic_expectation(potential)?)
    }

    /// Expectation of a polynomial observable in the coordinates, via Wick
    /// pairings of the covariance. Odd-degree terms vanish by parity; degree
    /// is capped at four because that is all the correlation diagnostics
    /// need, and the pairing count explodes beyond it.
    pub fn observable_expectation(&self, poly: &Polynomial) -> Result<f64> {
        let n = self.dim();
        let c = self.covariance();
        let mut acc = 0.0;
        for (coeff, vars) in &poly.terms {
            for &v in vars {
                if v >= n {
                    return Err(Error::IndexOutOfRange { index: v, len: n });
                }
            }
            acc += coeff
                * match vars.len() {
                    0 => 1.0,
                    1 | 3 => 0.0,
                    2 => c[(vars[0], vars[1])],
                    4 => {
                        let (a, b, d, e) = (vars[0], vars[1], vars[2], vars[3]);
                        c[(a, b)] * c[(d, e)] + c[(a, d)] * c[(b, e)] + c[(a, e)] * c[(b, d)]
                    }
                    deg => return Err(Error::UnsupportedDegree(deg)),
                };
        }
        Ok(acc)
    }

    /// Probability density `psi^2`, which for a Gaussian state is just the
    /// same exponent with the 1/2 absorbed.
    pub fn density(&self) -> GaussianDensity {
        GaussianDensity {
            b: self.a.clone(),
            frame: self.frame.clone(),
        }
    }

    /// Re-express the state in another frame: with `x = S y`,
    /// the exponent becomes `S^T A S`.
    pub fn reexpress(&self, map: &FrameMap) -> Result<GaussianState> {
        self.check_frame(map.source())?;
        let a = map.matrix().transpose() * &self.a * map.matrix();
        GaussianState::new(a, map.target().clone())
    }
}

/// Unnormalized probability density `rho(x) ~ exp(-x.Bx)`, `B` SPD.
#[derive(Debug, Clone)]
pub struct GaussianDensity {
    b: DMatrix<f64>,
    frame: Frame,
}

impl GaussianDensity {
    pub fn new(mut b: DMatrix<f64>, frame: Frame) -> Result<Self> {
        check_exponent(&b)?;
        linalg::mirror_upper(&mut b);
        if linalg::cholesky_lower(&b).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(GaussianDensity { b, frame })
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn exponent(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Value of the unit-normalized density at a point:
    /// `sqrt(det B / pi^n) exp(-x.Bx)`.
    pub fn normalized_value(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        assert_eq!(x.len(), n, "point dimension must match the density");
        let log_det = linalg::log_det_spd(&self.b).expect("exponent is SPD by construction");
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += x[i] * self.b[(i, j)] * x[j];
            }
        }
        (0.5 * (log_det - n as f64 * std::f64::consts::PI.ln()) - q).exp()
    }

    /// Re-express the density in another frame (same congruence rule as for
    /// states; the constant Jacobian of a linear map only touches the
    /// normalization, which is not stored).
    pub fn reexpress(&self, map: &FrameMap) -> Result<GaussianDensity> {
        if self.frame != *map.source() {
            return Err(Error::FrameMismatch {
                left: self.frame.label(),
                right: map.source().label(),
            });
        }
        let b = map.matrix().transpose() * &self.b * map.matrix();
        GaussianDensity::new(b, map.target().clone())
    }

    /// Integrate out the listed coordinates. For a Gaussian the marginal
    /// exponent over the kept block is the Schur complement
    /// `B_kk - B_dk^T B_dd^{-1} B_dk`, which stays positive definite.
    pub fn marginalize(&self, drop: &[usize]) -> Result<GaussianDensity> {
        let n = self.dim();
        if drop.is_empty() {
            return Err(Error::precondition(
                "marginalization needs at least one coordinate to drop".to_string(),
            ));
        }
        let mut dropped = drop.to_vec();
        dropped.sort_unstable();
        for &d in &dropped {
            if d >= n {
                return Err(Error::IndexOutOfRange { index: d, len: n });
            }
        }
        if dropped.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::precondition(
                "marginalization indices must be distinct".to_string(),
            ));
        }
        if dropped.len() == n {
            return Err(Error::precondition(
                "cannot marginalize every coordinate away".to_string(),
            ));
        }
        let kept: Vec<usize> = (0..n).filter(|i| !dropped.contains(i)).collect();
        let pick = |rows: &[usize], cols: &[usize]| -> DMatrix<f64> {
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.b[(rows[i], cols[j])])
        };
        let b_dd = pick(&dropped, &dropped);
        let b_dk = pick(&dropped, &kept);
        let b_kk = pick(&kept, &kept);
        let dd_inv = linalg::spd_inverse(&b_dd).ok_or(Error::NotPositiveDefinite)?;
        let mut marg = &b_kk - b_dk.transpose() * dd_inv * &b_dk;
        linalg::mirror_upper(&mut marg);
        let frame = match (&self.frame, dropped.as_slice()) {
            // integrating the leading auxiliary coordinate out of an
            // augmented frame lands exactly on the internal frame
            (Frame::Anchored { transform, .. }, [0]) | (Frame::Transformed { transform }, [0]) => {
                Frame::Internal {
                    transform: transform.clone(),
                }
            }
            _ => Frame::Subset {
                base: self.frame.label(),
                kept: kept.clone(),
            },
        };
        GaussianDensity::new(marg, frame)
    }

    /// Read a symmetric two-coordinate density as the pair
    /// `exp[-alpha (u^2 + v^2) + beta u v]`. Fails unless the density is
    /// two-dimensional with equal diagonal entries.
    pub fn alpha_beta(&self) -> Result<AlphaBeta> {
        if self.dim() != 2 {
            return Err(Error::precondition(format!(
                "alpha/beta read-off needs a 2-coordinate density, got {}",
                self.dim()
            )));
        }
        let gap = (self.b[(0, 0)] - self.b[(1, 1)]).abs();
        let scale = self.b[(0, 0)].abs().max(self.b[(1, 1)].abs()).max(1.0);
        if gap > 1e-10 * scale {
            return Err(Error::NotSymmetricPair(gap));
        }
        AlphaBeta::new(self.b[(0, 0)], -2.0 * self.b[(0, 1)])
    }
}

/// Exponent parameters of a symmetric correlated pair density
/// `exp[-alpha (u^2 + v^2) + beta u v]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

impl AlphaBeta {
    /// Normalizability demands `alpha > 0` and `2 alpha > |beta|`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(2.0 * alpha > beta.abs()) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(AlphaBeta { alpha, beta })
    }
}

/// Sparse polynomial in the coordinates: a sum of `coeff * x_{i1} .. x_{ik}`
/// terms, each listing its variable indices with repetition (degree = list
/// length, at most four).
#[derive(Debug, Clone)]
pub struct Polynomial {
    terms: Vec<(f64, Vec<usize>)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, Vec<usize>)>) -> Self {
        Polynomial { terms }
    }

    pub fn monomial(coeff: f64, vars: Vec<usize>) -> Self {
        Polynomial {
            terms: vec![(coeff, vars)],
        }
    }

    /// `(x_i - x_j)^2`, the workhorse pair-separation observable.
    pub fn separation_squared(i: usize, j: usize) -> Self {
        Polynomial {
            terms: vec![(1.0, vec![i, i]), (1.0, vec![j, j]), (-2.0, vec![i, j])],
        }
    }

    /// `(x_i - x_j)^4`, for kurtosis-level checks of pair correlation.
    pub fn separation_fourth(i: usize, j: usize) -> Self {
        Polynomial {
            terms: vec![
                (1.0, vec![i, i, i, i]),
                (-4.0, vec![i, i, i, j]),
                (6.0, vec![i, i, j, j]),
                (-4.0, vec![i, j, j, j]),
                (1.0, vec![j, j, j, j]),
            ],
        }
    }

    pub fn terms(&self) -> &[(f64, Vec<usize>)] {
        &self.terms
    }
}

/// Correlation diagnostic for absolute-frame states: re-express the density
/// in `(x_anchor, q_2, .., q_N)` and integrate out the anchor particle,
/// leaving a density over the internal coordinates alone.
pub fn marginal_over_particle(
    state: &GaussianState,
    transform: &CoordinateTransform,
    anchor: usize,
) -> Result<GaussianDensity> {
    if *state.frame() != Frame::Absolute {
        return Err(Error::FrameMismatch {
            left: Frame::Absolute.label(),
            right: state.frame().label(),
        });
    }
    let map = transform.anchored_map(anchor)?;
    state.density().reexpress(&map)?.marginalize(&[0])
}
