//! Exact ground state of a coupled harmonic model by normal-mode analysis,
//! plus the matrix square-root construction of the exact relative-motion
//! Gaussian exponent.
//!
//! The two routes cross-check each other: the mode frequencies come from the
//! mass-weighted spring matrix, while the relative exponent `Omega` solves
//! `Omega G Omega = V` in internal coordinates and reproduces the same
//! energy as `tr(G Omega)`.

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::linalg;
use crate::model::HarmonicModel;
use crate::quadratic::{FormKind, QuadraticForm};
use crate::transform::CoordinateTransform;

/// Exact spectrum and ground-state data for one model.
#[derive(Debug, Clone)]
pub struct NormalModeSolution {
    /// All mode angular frequencies, ascending, including the zero
    /// translation mode.
    pub frequencies: Vec<f64>,
    /// Ground energy of the relative motion: half the sum of the nonzero
    /// frequencies.
    pub relative_ground_energy: f64,
    /// Exact relative ground state in the internal frame of the reference
    /// transform.
    pub relative_exponent: GaussianState,
}

/// Split a model Hamiltonian into its internal-coordinate kinetic and
/// potential blocks under the given transform. The center-of-mass kinetic
/// share is discarded here by construction.
pub fn relative_hamiltonian(
    model: &HarmonicModel,
    transform: &CoordinateTransform,
) -> Result<(QuadraticForm, QuadraticForm)> {
    let (_, relative) = transform.push_kinetic(&model.kinetic_form())?;
    let potential = transform.push_potential(&model.potential_form())?;
    Ok((relative, potential))
}

/// Ground-state exponent of `H = p.Gp + x.Vx` for SPD `G` and `V`:
/// `Omega = G^{-1/2} (G^{1/2} V G^{1/2})^{1/2} G^{-1/2}` is the unique SPD
/// solution of `Omega G Omega = V`, and `exp(-x.Omega x / 2)` is exact.
pub fn ground_state_exponent(
    kinetic: &QuadraticForm,
    potential: &QuadraticForm,
) -> Result<GaussianState> {
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
    if kinetic.frame() != potential.frame() {
        return Err(Error::FrameMismatch {
            left: kinetic.frame().label(),
            right: potential.frame().label(),
        });
    }
    if kinetic.dim() != potential.dim() {
        return Err(Error::precondition(format!(
            "kinetic dimension {} vs potential dimension {}",
            kinetic.dim(),
            potential.dim()
        )));
    }
    let g = kinetic.matrix();
    if linalg::cholesky_lower(g).is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let g_half = linalg::sym_apply(g, f64::sqrt);
    let g_neg_half = linalg::sym_apply(g, |x| 1.0 / x.sqrt());
    let w = &g_half * potential.matrix() * &g_half;
    let (eigs, _) = linalg::sym_eigen(&w);
    let scale = eigs.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()));
    if let Some(&low) = eigs.iter().find(|&&e| e <= 1e-12 * scale.max(1.0)) {
        // a flat or unstable direction has no normalizable ground state
        return Err(Error::UnstableModel(low));
    }
    let w_half = linalg::sym_apply(&w, f64::sqrt);
    let mut omega = &g_neg_half * w_half * &g_neg_half;
    linalg::mirror_upper(&mut omega);
    GaussianState::new(omega, kinetic.frame().clone())
}

/// Exact relative ground state of a model in the internal frame of the
/// given transform.
pub fn exact_exponent(
    model: &HarmonicModel,
    transform: &CoordinateTransform,
) -> Result<GaussianState> {
    let (g, v) = relative_hamiltonian(model, transform)?;
    ground_state_exponent(&g, &v)
}

/// Full normal-mode solution. The spectrum must contain exactly one zero
/// mode (overall translation); more means the model fell apart, fewer never
/// happens for a translation-invariant potential.
pub fn solve_normal_modes(model: &HarmonicModel) -> Result<NormalModeSolution> {
    let (omega_sq, _) = model.mass_weighted_hessian_eigen();
    let scale = omega_sq.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()));
    let tol = 1e-10 * scale.max(1.0);
    if let Some(&neg) = omega_sq.iter().find(|&&e| e < -tol) {
        return Err(Error::UnstableModel(neg));
    }
    let zero_count = omega_sq.iter().filter(|&&e| e.abs() <= tol).count();
    if zero_count != 1 {
        return Err(Error::DisconnectedModel);
    }
    let frequencies: Vec<f64> = omega_sq
        .iter()
        .map(|&e| if e.abs() <= tol { 0.0 } else { e.sqrt() })
        .collect();
    let relative_ground_energy = 0.5 * frequencies.iter().sum::<f64>();
    let transform = CoordinateTransform::heavy_center(model, 0)?;
    let relative_exponent = exact_exponent(model, &transform)?;
    Ok(NormalModeSolution {
        frequencies,
        relative_ground_energy,
        relative_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Frame;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

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
    fn family_ground_energies_close_under_root() {
        for lambda in [0.0, 1.0, 3.0] {
            let sol = solve_normal_modes(&HarmonicModel::lambda_family(lambda).unwrap()).unwrap();
            assert_abs_diff_eq!(
                sol.relative_ground_energy,
                family_energy(lambda),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn family_frequencies_are_root_three_and_coupling_root() {
        let sol = solve_normal_modes(&HarmonicModel::lambda_family(2.0).unwrap()).unwrap();
        assert_eq!(sol.frequencies.len(), 3);
        assert_eq!(sol.frequencies[0], 0.0);
        assert_abs_diff_eq!(sol.frequencies[1], SQRT3, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.frequencies[2], 5.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn exponent_matches_closed_form_across_couplings() {
        // the internal-frame exponent is [[2a, -b], [-b, 2a]] with
        // a and b fixed by the two mode frequencies
        for k in 0..20 {
            let lambda = 0.25 * k as f64;
            let (_, t) = family(lambda);
            let state = exact_exponent(&HarmonicModel::lambda_family(lambda).unwrap(), &t).unwrap();
            let r = (2.0 * lambda + 1.0).sqrt();
            let a = (1.0 / SQRT3 + r) / 4.0;
            let b = (r - 1.0 / SQRT3) / 2.0;
            let m = state.exponent();
            assert_abs_diff_eq!(m[(0, 0)], 2.0 * a, epsilon = 1e-10);
            assert_abs_diff_eq!(m[(1, 1)], 2.0 * a, epsilon = 1e-10);
            assert_abs_diff_eq!(m[(0, 1)], -b, epsilon = 1e-10);
        }
    }

    #[test]
    fn symmetric_family_exponent_is_proportional_to_metric() {
        let (model, t) = family(1.0);
        let state = exact_exponent(&model, &t).unwrap();
        let expect = 2.0 / SQRT3;
        assert_abs_diff_eq!(state.exponent()[(0, 0)], expect, epsilon = 1e-12);
        assert_abs_diff_eq!(state.exponent()[(0, 1)], -0.5 * expect, epsilon = 1e-12);
        assert_eq!(*state.frame(), t.internal_frame());
    }

    #[test]
    fn decoupled_forms_give_identity_exponent() {
        let g = QuadraticForm::new(
            FormKind::Kinetic,
            DMatrix::identity(2, 2) * 0.5,
            Frame::Absolute,
        )
        .unwrap();
        let v = QuadraticForm::new(
            FormKind::Potential,
            DMatrix::identity(2, 2) * 0.5,
            Frame::Absolute,
        )
        .unwrap();
        let state = ground_state_exponent(&g, &v).unwrap();
        assert_abs_diff_eq!(state.exponent()[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(state.exponent()[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn exponent_energy_agrees_with_mode_sum() {
        for lambda in [0.3, 1.0, 2.7, 6.0] {
            let (model, t) = family(lambda);
            let (g, v) = relative_hamiltonian(&model, &t).unwrap();
            let state = ground_state_exponent(&g, &v).unwrap();
            let e = state.energy_expectation(&g, &v).unwrap();
            assert_abs_diff_eq!(e, family_energy(lambda), epsilon = 1e-11);
        }
    }

    #[test]
    fn exact_state_is_virial_balanced() {
        let (model, t) = family(1.7);
        let (g, v) = relative_hamiltonian(&model, &t).unwrap();
        let state = ground_state_exponent(&g, &v).unwrap();
        let kin = state.quadratic_expectation(&g).unwrap();
        let pot = state.quadratic_expectation(&v).unwrap();
        assert_abs_diff_eq!(kin, pot, epsilon = 1e-11);
        assert_abs_diff_eq!(kin + pot, family_energy(1.7), epsilon = 1e-11);
    }

    #[test]
    fn exponent_transforms_covariantly_between_transforms() {
        // solve in one internal frame, map to another, compare with a
        // direct solve there
        let lambda = 2.4;
        let model = HarmonicModel::lambda_family(lambda).unwrap();
        let t0 = CoordinateTransform::heavy_center(&model, 0).unwrap();
        let t1 = CoordinateTransform::heavy_center(&model, 1).unwrap();
        let in_t0 = exact_exponent(&model, &t0).unwrap();
        let mapped = in_t0.reexpress(&t0.internal_map_to(&t1).unwrap()).unwrap();
        let direct = exact_exponent(&model, &t1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(
                    mapped.exponent()[(i, j)],
                    direct.exponent()[(i, j)],
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn unstable_potential_is_rejected() {
        let g = QuadraticForm::new(
            FormKind::Kinetic,
            DMatrix::identity(2, 2) * 0.5,
            Frame::Absolute,
        )
        .unwrap();
        let v = QuadraticForm::new(
            FormKind::Potential,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]),
            Frame::Absolute,
        )
        .unwrap();
        assert!(matches!(
            ground_state_exponent(&g, &v),
            Err(Error::UnstableModel(_))
        ));
    }

    #[test]
    fn mode_solution_rejects_split_models() {
        // two disjoint pairs: two zero modes
        let model = HarmonicModel::from_pairs(
            vec![1.0; 4],
            &[(0, 1, 1.0), (2, 3, 1.0)],
        );
        // construction already rejects the disconnected graph
        assert!(matches!(model, Err(Error::DisconnectedModel)));
    }
}
