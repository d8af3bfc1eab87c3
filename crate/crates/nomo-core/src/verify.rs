//! Built-in self-checks: recompute a battery of closed-form results through
//! the full numerical pipeline and report each comparison.
//!
//! The quick level exercises the variational engine, the normal-mode route,
//! the coordinate machinery and the marginals; the full level adds grid
//! diagonalizations, which dominate the runtime. Every check carries a name,
//! the two values and the tolerance, so a failure pinpoints the broken
//! stage.

use serde::Serialize;

use crate::error::Result;
use crate::grid::grid_ground_energy;
use crate::model::HarmonicModel;
use crate::oracle;
use crate::transform::CoordinateTransform;
use crate::variational::{AnsatzFamily, MinimizeOptions, Variant, minimize, run_variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub expected: f64,
    pub got: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn eq_check(name: &str, expected: f64, got: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        expected,
        got,
        tolerance,
        pass: (got - expected).abs() <= tolerance,
    }
}

/// Margin check: `got` is a signed margin that must not drop below
/// `-tolerance`. Positive margins are healthy, not failures.
fn margin_check(name: &str, got: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        expected: 0.0,
        got,
        tolerance,
        pass: got >= -tolerance,
    }
}

const SQRT3: f64 = 1.7320508075688772;
const SQRT2: f64 = std::f64::consts::SQRT_2;

fn exact_energy(lambda: f64) -> f64 {
    (SQRT3 + (2.0 * lambda + 1.0).sqrt()) / 2.0
}

fn tf_energy(lambda: f64) -> f64 {
    (6.0 * (lambda + 1.0)).sqrt() / 3.0 + SQRT3 / 3.0
}

fn tc_energy(lambda: f64) -> f64 {
    (lambda + 1.0).sqrt() + SQRT2 / 2.0
}

fn ctc_energy(lambda: f64) -> f64 {
    5.0 * SQRT2 / 12.0 + 5.0 / 6.0 * (1.0 + lambda).sqrt()
}

fn rel_unc_energy(lambda: f64) -> f64 {
    (2.0 * lambda + 2.0).sqrt()
}

/// The two-spring family, optionally with every spring rescaled. The scale
/// is a deliberate fault-injection hook: the closed forms above are always
/// evaluated unscaled, so any `scale != 1` must make checks fail. It proves
/// the harness can actually catch a broken pipeline.
fn family(lambda: f64, scale: f64) -> Result<HarmonicModel> {
    if scale == 1.0 {
        HarmonicModel::lambda_family(lambda)
    } else {
        HarmonicModel::from_pairs(
            vec![1.0, 1.0, 1.0],
            &[
                (0, 1, scale),
                (0, 2, scale),
                (1, 2, lambda * scale),
            ],
        )
    }
}

fn quick_checks(scale: f64, out: &mut Vec<CheckResult>) -> Result<()> {
    let options = MinimizeOptions::default();

    // normal-mode route against the closed-form spectrum (never scaled:
    // this side is the reference)
    for lambda in [1.0, 3.0] {
        let sol = oracle::solve_normal_modes(&HarmonicModel::lambda_family(lambda)?)?;
        out.push(eq_check(
            &format!("exact_energy_lambda{lambda}"),
            exact_energy(lambda),
            sol.relative_ground_energy,
            1e-12,
        ));
    }

    // exact exponent entries against the frequency combination
    {
        let lambda = 2.0;
        let model = HarmonicModel::lambda_family(lambda)?;
        let t = CoordinateTransform::heavy_center(&model, 0)?;
        let state = oracle::exact_exponent(&model, &t)?;
        let r = (2.0 * lambda + 1.0).sqrt();
        out.push(eq_check(
            "exact_exponent_diag_lambda2",
            2.0 * (1.0 / SQRT3 + r) / 4.0,
            state.exponent()[(0, 0)],
            1e-10,
        ));
        out.push(eq_check(
            "exact_exponent_offdiag_lambda2",
            -(r - 1.0 / SQRT3) / 2.0,
            state.exponent()[(0, 1)],
            1e-10,
        ));
    }

    // variational route (this is the side the fault hook rescales)
    {
        let lambda = 2.0;
        let model = family(lambda, scale)?;
        let tf = minimize(&model, Variant::Tf, AnsatzFamily::ProductAbsolute, &options)?;
        out.push(eq_check("tf_energy_lambda2", tf_energy(lambda), tf.energy, 1e-10));
        out.push(eq_check("tf_param_a_lambda2", SQRT3 / 2.0, tf.params[0], 1e-8));
        out.push(eq_check(
            "tf_param_b_lambda2",
            (6.0 * (lambda + 1.0)).sqrt() / 4.0,
            tf.params[1],
            1e-8,
        ));
        let tc = minimize(&model, Variant::Tc, AnsatzFamily::ProductAbsolute, &options)?;
        out.push(eq_check("tc_energy_lambda2", tc_energy(lambda), tc.energy, 1e-10));
    }
    {
        let model = family(3.0, scale)?;
        let ctc = run_variant(&model, Variant::Ctc, &options)?;
        out.push(eq_check("ctc_energy_lambda3", ctc_energy(3.0), ctc.energy, 1e-10));
    }
    {
        let model = family(1.0, scale)?;
        let ru = run_variant(&model, Variant::RelUnc, &options)?;
        out.push(eq_check(
            "rel_unc_energy_lambda1",
            rel_unc_energy(1.0),
            ru.energy,
            1e-10,
        ));

        let tf = run_variant(&model, Variant::Tf, &options)?;
        let m = tf.marginal.expect("three-particle marginal");
        out.push(eq_check("tf_marginal_alpha_lambda1", 2.0 * SQRT3 / 3.0, m.alpha, 1e-8));
        out.push(eq_check("tf_marginal_beta_lambda1", 2.0 * SQRT3 / 3.0, m.beta, 1e-8));
        out.push(eq_check("tf_cm_share_lambda1", SQRT3 / 4.0, tf.tcm_expectation, 1e-9));

        let tc = run_variant(&model, Variant::Tc, &options)?;
        let m = tc.marginal.expect("three-particle marginal");
        out.push(eq_check("tc_marginal_alpha_lambda1", 2.0 * SQRT2 / 3.0, m.alpha, 1e-8));

        let exact = run_variant(&HarmonicModel::lambda_family(1.0)?, Variant::Exact, &options)?;
        let m = exact.marginal.expect("exact marginal");
        out.push(eq_check("exact_marginal_alpha_lambda1", 2.0 / SQRT3, m.alpha, 1e-10));
    }

    // ordering chain: minimum signed margin over a coupling scan; the
    // variational energies come from the (possibly rescaled) pipeline while
    // the reference energy does not, so a fault shows up as a negative
    // margin with the culprit named
    {
        let mut m_exact_tf = f64::INFINITY;
        let mut m_tf_ctc = f64::INFINITY;
        let mut m_ctc_tc = f64::INFINITY;
        let mut m_tf_relunc = f64::INFINITY;
        for i in 0..21 {
            let lambda = 0.25 * i as f64;
            let model = family(lambda, scale)?;
            let tf = run_variant(&model, Variant::Tf, &options)?.energy;
            let tc = run_variant(&model, Variant::Tc, &options)?.energy;
            let ctc = run_variant(&model, Variant::Ctc, &options)?.energy;
            let ru = run_variant(&model, Variant::RelUnc, &options)?.energy;
            m_exact_tf = m_exact_tf.min(tf - exact_energy(lambda));
            m_tf_ctc = m_tf_ctc.min(ctc - tf);
            m_ctc_tc = m_ctc_tc.min(tc - ctc);
            m_tf_relunc = m_tf_relunc.min(ru - tf);
        }
        out.push(margin_check("ordering_exact_le_tf", m_exact_tf, 1e-10));
        out.push(margin_check("ordering_tf_le_ctc", m_tf_ctc, 1e-10));
        out.push(margin_check("ordering_ctc_le_tc", m_ctc_tc, 1e-10));
        out.push(margin_check("ordering_tf_le_relunc", m_tf_relunc, 1e-10));
    }

    // coordinate machinery
    {
        let model = HarmonicModel::lambda_family(1.0)?;
        let t = CoordinateTransform::heavy_center(&model, 0)?;
        let ident = t.matrix() * t.inverse();
        let mut residual = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                residual = residual.max((ident[(i, j)] - want).abs());
            }
        }
        out.push(eq_check("transform_roundtrip_identity", 0.0, residual, 1e-12));

        let g = model.kinetic_form();
        let pushed = t.matrix() * g.matrix() * t.matrix().transpose();
        let mut coupling = 0.0f64;
        for j in 1..3 {
            coupling = coupling.max(pushed[(0, j)].abs());
        }
        out.push(eq_check("kinetic_cm_decoupling", 0.0, coupling, 1e-13));
    }

    // virial balance of the exact state
    {
        let model = HarmonicModel::lambda_family(1.7)?;
        let t = CoordinateTransform::heavy_center(&model, 0)?;
        let (g, v) = oracle::relative_hamiltonian(&model, &t)?;
        let state = oracle::ground_state_exponent(&g, &v)?;
        let kin = state.quadratic_expectation(&g)?;
        let pot = state.quadratic_expectation(&v)?;
        out.push(eq_check("virial_balance_lambda1.7", 0.0, kin - pot, 1e-10));
    }

    Ok(())
}

fn full_checks(out: &mut Vec<CheckResult>) -> Result<()> {
    // grid diagonalization never sees the fault hook: it is a reference
    // pipeline, compared against the other reference
    for lambda in [0.0, 1.0, 2.0, 3.0, 5.0] {
        let model = HarmonicModel::lambda_family(lambda)?;
        let t = CoordinateTransform::heavy_center(&model, 0)?;
        let e = grid_ground_energy(&model, &t, 8.0, 96)?;
        out.push(eq_check(
            &format!("grid_energy_lambda{lambda}_points96"),
            exact_energy(lambda),
            e,
            8e-3,
        ));
    }
    // O(h^2) convergence, measured where no symmetry accelerates it
    {
        let model = HarmonicModel::lambda_family(0.0)?;
        let t = CoordinateTransform::heavy_center(&model, 0)?;
        let exact = exact_energy(0.0);
        let errs: Vec<f64> = [33usize, 65, 129]
            .iter()
            .map(|&n| Ok((grid_ground_energy(&model, &t, 8.0, n)? - exact).abs()))
            .collect::<Result<_>>()?;
        let slope = 0.5 * ((errs[0] / errs[1]).log2() + (errs[1] / errs[2]).log2());
        out.push(eq_check("grid_convergence_slope_lambda0", 2.0, slope, 0.2));
    }
    Ok(())
}

/// Run the self-check battery. `potential_scale` rescales every spring fed
/// to the variational side (1.0 = no fault injected); reference formulas
/// and reference solvers are never rescaled.
pub fn run_checks(level: VerifyLevel, potential_scale: f64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    quick_checks(potential_scale, &mut out)?;
    if level == VerifyLevel::Full {
        full_checks(&mut out)?;
    }
    Ok(out)
}
