//! One-dimensional few-body harmonic models.
//!
//! A model is a set of point masses on a line, pairwise coupled by springs:
//! `H = sum_i p_i^2 / (2 m_i) + sum_{i<j} K_ij (x_i - x_j)^2 / 2`. The
//! potential depends on coordinate differences only, so the center of mass is
//! free and every valid model has exactly one translational zero mode.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg;
use crate::quadratic::{FormKind, QuadraticForm};

/// Spring constant between particles 1-2 and 1-3 in the one-parameter family.
const FAMILY_BASE_SPRING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicModel {
    masses: Vec<f64>,
    springs: DMatrix<f64>,
}

impl HarmonicModel {
    /// Validate and build a model from masses and a full spring matrix.
    /// The matrix must be symmetric with zero diagonal and nonnegative
    /// entries, and the interaction graph must be connected.
    pub fn new(masses: Vec<f64>, springs: DMatrix<f64>) -> Result<Self> {
        Self::build(masses, springs, true)
    }

    /// Build from an explicit pair list `(i, j, k)`. Listing a pair twice is
    /// an error rather than an accumulation, since it is always a typo.
    pub fn from_pairs(masses: Vec<f64>, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let n = masses.len();
        let mut springs = DMatrix::zeros(n, n);
        let mut seen = std::collections::HashSet::new();
        for &(i, j, k) in pairs {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, len: n });
                }
            }
            if i == j {
                return Err(Error::SelfSpring(i));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::DuplicateSpring { i: key.0, j: key.1 });
            }
            springs[(i, j)] = k;
            springs[(j, i)] = k;
        }
        Self::build(masses, springs, true)
    }

    /// Three unit masses; particle 1 is tied to particles 2 and 3 with unit
    /// springs and the 2-3 spring carries the family parameter. Negative
    /// `lambda` is rejected here; see [`HarmonicModel::lambda_family_extended`]
    /// for the documented escape hatch.
    pub fn lambda_family(lambda: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::NegativeSpring {
                i: 1,
                j: 2,
                value: lambda,
            });
        }
        Self::lambda_family_unchecked(lambda)
    }

    /// Same family, but negative couplings are admitted as long as the
    /// internal Hamiltonian stays bounded below, which holds for
    /// `lambda > -1/2`. At or below the boundary construction fails with the
    /// instability error. Prefer [`HarmonicModel::lambda_family`] unless you
    /// specifically need the `(-1/2, 0)` range.
    pub fn lambda_family_extended(lambda: f64) -> Result<Self> {
        let model = Self::lambda_family_unchecked(lambda)?;
        if lambda < 0.0 {
            // sign check skipped above; insist on spectral stability instead
            let (omega2, _) = model.mass_weighted_hessian_eigen();
            let scale = omega2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let tol = 1e-10 * scale.max(1.0);
            if let Some(&low) = omega2.iter().find(|&&w| w < -tol) {
                return Err(Error::UnstableModel(low));
            }
            // a second (near-)zero mode means the stability boundary was hit
            if omega2.iter().filter(|&&w| w.abs() <= tol).count() > 1 {
                return Err(Error::UnstableModel(0.0));
            }
        }
        Ok(model)
    }

    fn lambda_family_unchecked(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::precondition(format!(
                "family parameter must be finite, got {lambda}"
            )));
        }
        let mut springs = DMatrix::zeros(3, 3);
        springs[(0, 1)] = FAMILY_BASE_SPRING;
        springs[(1, 0)] = FAMILY_BASE_SPRING;
        springs[(0, 2)] = FAMILY_BASE_SPRING;
        springs[(2, 0)] = FAMILY_BASE_SPRING;
        springs[(1, 2)] = lambda;
        springs[(2, 1)] = lambda;
        Self::build(vec![1.0, 1.0, 1.0], springs, false)
    }

    fn build(masses: Vec<f64>, springs: DMatrix<f64>, check_signs: bool) -> Result<Self> {
        let n = masses.len();
        if n < 2 {
            return Err(Error::TooFewParticles(n));
        }
        for (index, &value) in masses.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::BadMass { index, value });
            }
        }
        if springs.nrows() != n || springs.ncols() != n {
            return Err(Error::precondition(format!(
                "spring matrix must be {n}x{n}, got {}x{}",
                springs.nrows(),
                springs.ncols()
            )));
        }
        let scale = springs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::precondition(
                "spring matrix has non-finite entries".to_string(),
            ));
        }
        for i in 0..n {
            if springs[(i, i)] != 0.0 {
                return Err(Error::SelfSpring(i));
            }
            for j in (i + 1)..n {
                if (springs[(i, j)] - springs[(j, i)]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(Error::AsymmetricSprings { i, j });
                }
                if check_signs && springs[(i, j)] < 0.0 {
                    return Err(Error::NegativeSpring {
                        i,
                        j,
                        value: springs[(i, j)],
                    });
                }
            }
        }
        let mut springs = springs;
        linalg::mirror_upper(&mut springs);
        let model = HarmonicModel { masses, springs };
        if !model.is_connected() {
            return Err(Error::DisconnectedModel);
        }
        Ok(model)
    }

    fn is_connected(&self) -> bool {
        let n = self.masses.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && self.springs[(i, j)] != 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn particle_count(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn springs(&self) -> &DMatrix<f64> {
        &self.springs
    }

    pub fn spring(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.masses.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
        }
        Ok(self.springs[(i, j)])
    }

    /// Momentum-space form of the kinetic energy: diag(1/(2 m_i)).
    pub fn kinetic_form(&self) -> QuadraticForm {
        let n = self.masses.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            g[(i, i)] = 0.5 / self.masses[i];
        }
        QuadraticForm::from_symmetric(FormKind::Kinetic, g, Frame::Absolute)
    }

    /// Coordinate-space form of the potential: `x . V x` with
    /// `V_ii = sum_j K_ij / 2` and `V_ij = -K_ij / 2`. Row sums vanish, which
    /// is exactly the translation invariance the rest of the crate leans on.
    pub fn potential_form(&self) -> QuadraticForm {
        let n = self.masses.len();
        let mut v = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    diag += 0.5 * self.springs[(i, j)];
                    v[(i, j)] = -0.5 * self.springs[(i, j)];
                }
            }
            v[(i, i)] = diag;
        }
        QuadraticForm::from_symmetric(FormKind::Potential, v, Frame::Absolute)
    }

    /// Eigenvalues (ascending) and vectors of the mass-weighted Hessian
    /// `M^{-1/2} (2V) M^{-1/2}`; the eigenvalues are the squared normal-mode
    /// frequencies.
    pub(crate) fn mass_weighted_hessian_eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.masses.len();
        let v = self.potential_form();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] =
                    2.0 * v.entry(i, j) / (self.masses[i].sqrt() * self.masses[j].sqrt());
            }
        }
        linalg::mirror_upper(&mut d);
        linalg::sym_eigen(&d)
    }
}
