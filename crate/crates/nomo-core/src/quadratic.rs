//! Symmetric quadratic forms with a kind and a frame attached.
//!
//! A kinetic form `M` stands for the operator `p . M p` (contracted with
//! momenta), a potential form for `x . M x` (contracted with coordinates).
//! The distinction matters because the two transform oppositely under a
//! change of coordinates, and because a Gaussian expectation reads
//! `<p.Mp> = tr(M A)/2` but `<x.Mx> = tr(M A^{-1})/2`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormKind {
    Kinetic,
    Potential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    kind: FormKind,
    matrix: DMatrix<f64>,
    frame: Frame,
}

impl QuadraticForm {
    /// Build a form from a square matrix. The matrix must be symmetric to
    /// within rounding; the upper triangle is then mirrored onto the lower so
    /// the stored matrix is exactly symmetric.
    pub fn new(kind: FormKind, mut matrix: DMatrix<f64>, frame: Frame) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::precondition(format!(
                "quadratic form matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::precondition(
                "quadratic form matrix has non-finite entries".to_string(),
            ));
        }
        if linalg::asymmetry(&matrix) > 1e-12 * scale.max(1.0) {
            return Err(Error::precondition(
                "quadratic form matrix is not symmetric".to_string(),
            ));
        }
        linalg::mirror_upper(&mut matrix);
        Ok(QuadraticForm {
            kind,
            matrix,
            frame,
        })
    }

    /// Internal constructor for matrices that are symmetric by construction.
    pub(crate) fn from_symmetric(kind: FormKind, mut matrix: DMatrix<f64>, frame: Frame) -> Self {
        linalg::mirror_upper(&mut matrix);
        QuadraticForm {
            kind,
            matrix,
            frame,
        }
    }

    pub fn zero(kind: FormKind, dim: usize, frame: Frame) -> Self {
        QuadraticForm {
            kind,
            matrix: DMatrix::zeros(dim, dim),
            frame,
        }
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.kind != other.kind {
            return Err(Error::KindMismatch {
                expected: self.kind,
                got: other.kind,
            });
        }
        if self.frame != other.frame {
            return Err(Error::FrameMismatch {
                left: self.frame.label(),
                right: other.frame.label(),
            });
        }
        if self.dim() != other.dim() {
            return Err(Error::precondition(format!(
                "form dimensions differ: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// Sum of two forms of the same kind, frame and size.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(QuadraticForm {
            kind: self.kind,
            matrix: &self.matrix + &other.matrix,
            frame: self.frame.clone(),
        })
    }

    /// Difference of two forms of the same kind, frame and size. Used to
    /// strip the center-of-mass kinetic energy out of the full kinetic form.
    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(QuadraticForm {
            kind: self.kind,
            matrix: &self.matrix - &other.matrix,
            frame: self.frame.clone(),
        })
    }

    /// Evaluate the classical quadratic `v . M v` at a plain vector. Handy in
    /// tests and for the grid potential; no frame check is possible on a bare
    /// slice, so the caller owns that.
    pub fn evaluate(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length must match the form dimension");
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += v[i] * self.matrix[(i, j)] * v[j];
            }
        }
        acc
    }
}
