//! Variational treatments of a harmonic model with Gaussian trial states,
//! with and without the center-of-mass kinetic share.
//!
//! The catalogue of treatments:
//!
//! * `Exact` - normal-mode ground state of the relative motion (no
//!   variational content, included as the reference).
//! * `Tf` - product of single-particle Gaussians, minimizing the
//!   translation-free energy `<H - T_cm>`.
//! * `Tc` - the same ansatz minimizing the full `<H>`, center of mass
//!   included.
//! * `Ctc` - the `Tc` state re-scored translation-free: its `<H - T_cm>`,
//!   no re-minimization.
//! * `RelUnc` - uncorrelated Gaussian in the internal coordinates,
//!   minimizing the relative-motion energy.
//!
//! All minimizations run in log space for the width parameters, so the
//! positivity constraint disappears and quasi-Newton steps are safe.

use nalgebra::DMatrix;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::gaussian::{AlphaBeta, GaussianState, marginal_over_particle};
use crate::linalg;
use crate::model::HarmonicModel;
use crate::optimize;
use crate::oracle;
use crate::transform::{CoordinateTransform, tcm_absolute};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Exact,
    Tf,
    Tc,
    Ctc,
    RelUnc,
}

impl Variant {
    pub fn all() -> [Variant; 5] {
        [
            Variant::Exact,
            Variant::Tf,
            Variant::Tc,
            Variant::Ctc,
            Variant::RelUnc,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::Tf => "tf",
            Variant::Tc => "tc",
            Variant::Ctc => "ctc",
            Variant::RelUnc => "rel-unc",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Variant::Exact),
            "tf" => Ok(Variant::Tf),
            "tc" => Ok(Variant::Tc),
            "ctc" => Ok(Variant::Ctc),
            "rel-unc" | "rel_unc" | "relunc" => Ok(Variant::RelUnc),
            other => Err(Error::precondition(format!(
                "unknown variant '{other}' (expected exact, tf, tc, ctc or rel-unc)"
            ))),
        }
    }
}

/// Shape of the Gaussian trial exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzFamily {
    /// One width for a designated particle, a shared width for the rest:
    /// `A = diag(2a, 2b, .., 2b)` in absolute coordinates.
    ProductAbsolute,
    /// An independent width per particle.
    ProductAbsoluteFull,
    /// A single width on every internal coordinate: `A = 2a I`.
    UncorrelatedRelative,
    /// Arbitrary SPD exponent over the internal coordinates, parametrized
    /// by its Cholesky factor.
    FullGaussian,
}

impl AnsatzFamily {
    pub fn param_count(&self, model: &HarmonicModel) -> usize {
        let n = model.particle_count();
        match self {
            AnsatzFamily::ProductAbsolute => 2,
            AnsatzFamily::ProductAbsoluteFull => n,
            AnsatzFamily::UncorrelatedRelative => 1,
            AnsatzFamily::FullGaussian => {
                let d = n - 1;
                d * (d + 1) / 2
            }
        }
    }

    fn is_absolute(&self) -> bool {
        matches!(
            self,
            AnsatzFamily::ProductAbsolute | AnsatzFamily::ProductAbsoluteFull
        )
    }

    /// Indices of parameters that must stay strictly positive (and are
    /// therefore optimized in log space).
    fn positive_params(&self, count: usize) -> Vec<bool> {
        match self {
            AnsatzFamily::FullGaussian => {
                let mut mask = vec![false; count];
                let mut idx = 0;
                let mut row = 0;
                while idx < count {
                    idx += row; // skip the sub-diagonal entries of this row
                    if idx < count {
                        mask[idx] = true; // the diagonal entry
                    }
                    idx += 1;
                    row += 1;
                }
                mask
            }
            _ => vec![true; count],
        }
    }

    fn validate(&self, model: &HarmonicModel, params: &[f64]) -> Result<()> {
        let want = self.param_count(model);
        if params.len() != want {
            return Err(Error::precondition(format!(
                "expected {want} parameters for this ansatz, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InfeasibleParams(
                "parameters must be finite".to_string(),
            ));
        }
        let positive = self.positive_params(params.len());
        for (i, (&p, &must)) in params.iter().zip(&positive).enumerate() {
            if must && p <= 0.0 {
                return Err(Error::InfeasibleParams(format!(
                    "parameter {i} must be positive, got {p}"
                )));
            }
        }
        Ok(())
    }

    /// Trial exponent matrix for validated parameters, in the working frame
    /// of the family (`dim` coordinates).
    fn exponent(&self, dim: usize, params: &[f64]) -> DMatrix<f64> {
        match self {
            AnsatzFamily::ProductAbsolute => DMatrix::from_fn(dim, dim, |i, j| {
                if i != j {
                    0.0
                } else if i == 0 {
                    2.0 * params[0]
                } else {
                    2.0 * params[1]
                }
            }),
            AnsatzFamily::ProductAbsoluteFull => {
                DMatrix::from_fn(
                    dim,
                    dim,
                    |i, j| if i == j { 2.0 * params[i] } else { 0.0 },
                )
            }
            AnsatzFamily::UncorrelatedRelative => DMatrix::identity(dim, dim) * (2.0 * params[0]),
            AnsatzFamily::FullGaussian => {
                let mut l = DMatrix::zeros(dim, dim);
                let mut idx = 0;
                for i in 0..dim {
                    for j in 0..=i {
                        l[(i, j)] = params[idx];
                        idx += 1;
                    }
                }
                &l * l.transpose()
            }
        }
    }

    /// Build the trial state for validated physical parameters, in the
    /// family's working frame (absolute coordinates for the product
    /// families, the reference internal frame otherwise).
    pub fn trial_state(&self, model: &HarmonicModel, params: &[f64]) -> Result<GaussianState> {
        self.validate(model, params)?;
        let n = model.particle_count();
        let (dim, frame) = if self.is_absolute() {
            (n, Frame::Absolute)
        } else {
            let t = CoordinateTransform::heavy_center(model, 0)?;
            (n - 1, t.internal_frame())
        };
        GaussianState::new(self.exponent(dim, params), frame)
    }

    /// Chain rule from the symmetric energy derivative `dW/dA` to the
    /// family parameters.
    fn grad_params(&self, dim: usize, params: &[f64], sym: &DMatrix<f64>) -> Vec<f64> {
        match self {
            AnsatzFamily::ProductAbsolute => {
                let rest: f64 = (1..dim).map(|i| sym[(i, i)]).sum();
                vec![2.0 * sym[(0, 0)], 2.0 * rest]
            }
            AnsatzFamily::ProductAbsoluteFull => (0..dim).map(|i| 2.0 * sym[(i, i)]).collect(),
            AnsatzFamily::UncorrelatedRelative => {
                vec![2.0 * (0..dim).map(|i| sym[(i, i)]).sum::<f64>()]
            }
            AnsatzFamily::FullGaussian => {
                let mut l = DMatrix::zeros(dim, dim);
                let mut idx = 0;
                for i in 0..dim {
                    for j in 0..=i {
                        l[(i, j)] = params[idx];
                        idx += 1;
                    }
                }
                // dW/dL = 2 (dW/dA) L for A = L L^T
                let m = sym * l * 2.0;
                let mut out = Vec::with_capacity(params.len());
                for i in 0..dim {
                    for j in 0..=i {
                        out.push(m[(i, j)]);
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    QuasiNewton,
    Simplex,
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub algorithm: Algorithm,
    /// Physical starting parameters; all-ones widths (identity Cholesky
    /// factor) when absent.
    pub start: Option<Vec<f64>>,
    /// When set, launch eight optimizations - the base start plus seven
    /// seeded perturbations - and keep the best.
    pub multistart_seed: Option<u64>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            grad_tol: 1e-10,
            max_iters: 500,
            algorithm: Algorithm::QuasiNewton,
            start: None,
            multistart_seed: None,
        }
    }
}

/// Outcome of one variational treatment.
#[derive(Debug, Clone, Serialize)]
pub struct NomoResult {
    pub variant: Variant,
    /// Optimal physical parameters of the ansatz (empty for `Exact`).
    pub params: Vec<f64>,
    pub energy: f64,
    /// `<T_cm>` in the optimal state; zero for treatments living purely in
    /// the internal coordinates.
    pub tcm_expectation: f64,
    /// Symmetric pair read-off of the internal-coordinate density at the
    /// optimum, when the model has exactly two internal coordinates and the
    /// density is symmetric under their exchange.
    pub marginal: Option<AlphaBeta>,
    pub iterations: usize,
    pub converged: bool,
}

struct Problem {
    g_tilde: DMatrix<f64>,
    v: DMatrix<f64>,
    frame: Frame,
    transform: CoordinateTransform,
    family: AnsatzFamily,
    dim: usize,
}

fn trace_product(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += x[(i, j)] * y[(j, i)];
        }
    }
    acc
}

impl Problem {
    fn build(model: &HarmonicModel, variant: Variant, family: AnsatzFamily) -> Result<Problem> {
        match variant {
            Variant::Exact | Variant::Ctc => {
                return Err(Error::precondition(format!(
                    "variant '{variant}' is not a direct minimization; use run_variant"
                )));
            }
            Variant::Tc => {
                if !family.is_absolute() {
                    return Err(Error::precondition(
                        "the full-<H> treatment needs an ansatz that localizes the center of mass"
                            .to_string(),
                    ));
                }
            }
            Variant::RelUnc => {
                if family != AnsatzFamily::UncorrelatedRelative {
                    return Err(Error::precondition(
                        "the uncorrelated-relative treatment fixes its own ansatz".to_string(),
                    ));
                }
            }
            Variant::Tf => {}
        }
        let transform = CoordinateTransform::heavy_center(model, 0)?;
        if family.is_absolute() {
            let kinetic = match variant {
                Variant::Tc => model.kinetic_form(),
                _ => model.kinetic_form().try_sub(&tcm_absolute(model))?,
            };
            Ok(Problem {
                g_tilde: kinetic.matrix().clone(),
                v: model.potential_form().matrix().clone(),
                frame: Frame::Absolute,
                transform,
                family,
                dim: model.particle_count(),
            })
        } else {
            let (g_rel, v_rel) = oracle::relative_hamiltonian(model, &transform)?;
            let dim = g_rel.dim();
            Ok(Problem {
                g_tilde: g_rel.matrix().clone(),
                v: v_rel.matrix().clone(),
                frame: transform.internal_frame(),
                transform,
                family,
                dim,
            })
        }
    }

    /// `W(A) = tr(G A)/2 + tr(V A^{-1})/2`; infinite when the exponent
    /// degenerates, which gives the optimizer a natural barrier.
    fn energy(&self, params: &[f64]) -> f64 {
        let a = self.family.exponent(self.dim, params);
        match linalg::spd_inverse(&a) {
            Some(a_inv) => {
                0.5 * trace_product(&self.g_tilde, &a) + 0.5 * trace_product(&self.v, &a_inv)
            }
            None => f64::INFINITY,
        }
    }

    /// Analytic parameter gradient through `dW/dA = G/2 - A^{-1} V A^{-1}/2`.
    fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let a = self.family.exponent(self.dim, params);
        let Some(a_inv) = linalg::spd_inverse(&a) else {
            return vec![f64::NAN; params.len()];
        };
        let sym = &self.g_tilde * 0.5 - &a_inv * &self.v * &a_inv * 0.5;
        self.family.grad_params(self.dim, params, &sym)
    }
}

/// Analytic variational energy at the given physical parameters.
pub fn objective(
    model: &HarmonicModel,
    variant: Variant,
    family: AnsatzFamily,
    params: &[f64],
) -> Result<f64> {
    family.validate(model, params)?;
    let problem = Problem::build(model, variant, family)?;
    Ok(problem.energy(params))
}

/// Analytic gradient of [`objective`] with respect to the physical
/// parameters.
pub fn objective_gradient(
    model: &HarmonicModel,
    variant: Variant,
    family: AnsatzFamily,
    params: &[f64],
) -> Result<Vec<f64>> {
    family.validate(model, params)?;
    let problem = Problem::build(model, variant, family)?;
    Ok(problem.gradient(params))
}

fn warn_if_stiff(model: &HarmonicModel) {
    let (eigs, _) = model.mass_weighted_hessian_eigen();
    let scale = eigs.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()));
    let tol = 1e-10 * scale.max(1.0);
    let nonzero: Vec<f64> = eigs.iter().copied().filter(|&e| e > tol).collect();
    if let (Some(&lo), Some(&hi)) = (nonzero.first(), nonzero.last()) {
        let ratio = lo / hi;
        if ratio < 0.02 {
            log::warn!(
                "mode frequencies span a {:.1e} ratio; widths differ strongly and \
                 convergence may be slow",
                ratio.sqrt()
            );
        }
    }
}

/// Minimize one treatment over one ansatz family. Optimization failures are
/// reported through `converged`, never as errors; model or compatibility
/// problems are errors.
pub fn minimize(
    model: &HarmonicModel,
    variant: Variant,
    family: AnsatzFamily,
    options: &MinimizeOptions,
) -> Result<NomoResult> {
    let problem = Problem::build(model, variant, family)?;
    warn_if_stiff(model);
    let count = family.param_count(model);
    let base_params = match &options.start {
        Some(p) => {
            family.validate(model, p)?;
            p.clone()
        }
        None => {
            let positive = family.positive_params(count);
            positive
                .iter()
                .map(|&must| if must { 1.0 } else { 0.0 })
                .collect()
        }
    };
    let positive = family.positive_params(count);
    let to_theta = |p: &[f64]| -> Vec<f64> {
        p.iter()
            .zip(&positive)
            .map(|(&v, &must)| if must { v.ln() } else { v })
            .collect()
    };
    let to_params = |theta: &[f64]| -> Vec<f64> {
        theta
            .iter()
            .zip(&positive)
            .map(|(&t, &must)| if must { t.exp() } else { t })
            .collect()
    };
    let f = |theta: &[f64]| problem.energy(&to_params(theta));
    let g = |theta: &[f64]| {
        let p = to_params(theta);
        problem
            .gradient(&p)
            .iter()
            .zip(&p)
            .zip(&positive)
            .map(|((&d, &v), &must)| if must { d * v } else { d })
            .collect::<Vec<f64>>()
    };
    let mut starts = vec![to_theta(&base_params)];
    if let Some(seed) = options.multistart_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..7 {
            let jitter: Vec<f64> = starts[0]
                .iter()
                .map(|&t| t + rng.random_range(-1.5..1.5))
                .collect();
            starts.push(jitter);
        }
    }
    let mut best: Option<optimize::OptimOutcome> = None;
    for start in &starts {
        let outcome = match options.algorithm {
            Algorithm::QuasiNewton => {
                optimize::minimize_smooth(&f, &g, start, options.grad_tol, options.max_iters)
            }
            Algorithm::Simplex => optimize::nelder_mead(&f, start, options.max_iters),
        };
        let better = match &best {
            Some(b) => outcome.f < b.f,
            None => true,
        };
        if better {
            best = Some(outcome);
        }
    }
    let outcome = best.expect("at least one start");
    log::debug!(
        "{variant}: f = {:.12}, gradient norm {:.2e}, {} iterations, {} start(s)",
        outcome.f,
        outcome.grad_norm,
        outcome.iterations,
        starts.len()
    );
    let params = to_params(&outcome.x);
    let state = GaussianState::new(
        family.exponent(problem.dim, &params),
        problem.frame.clone(),
    )?;
    let (tcm_expectation, marginal) = if family.is_absolute() {
        let tcm = state.quadratic_expectation(&tcm_absolute(model))?;
        let marg = marginal_over_particle(&state, &problem.transform, 0)
            .ok()
            .and_then(|d| d.alpha_beta().ok());
        (tcm, marg)
    } else {
        (0.0, state.density().alpha_beta().ok())
    };
    Ok(NomoResult {
        variant,
        params,
        energy: outcome.f,
        tcm_expectation,
        marginal,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

/// Run one treatment with its canonical ansatz.
pub fn run_variant(
    model: &HarmonicModel,
    variant: Variant,
    options: &MinimizeOptions,
) -> Result<NomoResult> {
    match variant {
        Variant::Exact => {
            let solution = oracle::solve_normal_modes(model)?;
            let marginal = solution.relative_exponent.density().alpha_beta().ok();
            Ok(NomoResult {
                variant,
                params: Vec::new(),
                energy: solution.relative_ground_energy,
                tcm_expectation: 0.0,
                marginal,
                iterations: 0,
                converged: true,
            })
        }
        Variant::Tf => minimize(model, variant, AnsatzFamily::ProductAbsolute, options),
        Variant::Tc => minimize(model, variant, AnsatzFamily::ProductAbsolute, options),
        Variant::Ctc => {
            let tc = minimize(model, Variant::Tc, AnsatzFamily::ProductAbsolute, options)?;
            Ok(NomoResult {
                variant,
                energy: tc.energy - tc.tcm_expectation,
                ..tc
            })
        }
        Variant::RelUnc => minimize(model, variant, AnsatzFamily::UncorrelatedRelative, options),
    }
}

/// All five treatments in catalogue order.
pub fn run_all(model: &HarmonicModel, options: &MinimizeOptions) -> Result<Vec<NomoResult>> {
    Variant::all()
        .into_iter()
        .map(|v| run_variant(model, v, options))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;

    const SQRT3: f64 = 1.7320508075688772;
    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn family_model(lambda: f64) -> HarmonicModel {
        HarmonicModel::lambda_family(lambda).unwrap()
    }

    fn exact_energy(lambda: f64) -> f64 {
        (SQRT3 + (2.0 * lambda + 1.0).sqrt()) / 2.0
    }

    #[test]
    fn translation_free_objective_matches_closed_form() {
        let lambda = 2.3;
        let model = family_model(lambda);
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let a = rng.random_range(0.1..3.0);
            let b = rng.random_range(0.1..3.0);
            let w = objective(&model, Variant::Tf, AnsatzFamily::ProductAbsolute, &[a, b]).unwrap();
            let expect = (a + 2.0 * b) / 3.0 + 1.0 / (4.0 * a) + (1.0 + lambda) / (4.0 * b);
            assert_abs_diff_eq!(w, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn full_objective_matches_closed_form() {
        let lambda = 0.8;
        let model = family_model(lambda);
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..20 {
            let a = rng.random_range(0.1..3.0);
            let b = rng.random_range(0.1..3.0);
            let w = objective(&model, Variant::Tc, AnsatzFamily::ProductAbsolute, &[a, b]).unwrap();
            let expect = (a + 2.0 * b) / 2.0 + 1.0 / (4.0 * a) + (1.0 + lambda) / (4.0 * b);
            assert_abs_diff_eq!(w, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn relative_objective_matches_closed_form() {
        let lambda = 1.9;
        let model = family_model(lambda);
        for a in [0.2, 0.5, 1.0, 2.5] {
            let w = objective(
                &model,
                Variant::RelUnc,
                AnsatzFamily::UncorrelatedRelative,
                &[a],
            )
            .unwrap();
            assert_abs_diff_eq!(w, 2.0 * a + (1.0 + lambda) / (4.0 * a), epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_vanishes_at_known_optima() {
        let lambda = 2.0;
        let model = family_model(lambda);
        let tf_opt = [SQRT3 / 2.0, (6.0 * (lambda + 1.0)).sqrt() / 4.0];
        for d in
            objective_gradient(&model, Variant::Tf, AnsatzFamily::ProductAbsolute, &tf_opt).unwrap()
        {
            assert!(d.abs() < 1e-10, "gradient component {d}");
        }
        let tc_opt = [SQRT2 / 2.0, (lambda + 1.0).sqrt() / 2.0];
        for d in
            objective_gradient(&model, Variant::Tc, AnsatzFamily::ProductAbsolute, &tc_opt).unwrap()
        {
            assert!(d.abs() < 1e-10, "gradient component {d}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let model = family_model(1.4);
        let cases: Vec<(Variant, AnsatzFamily, Vec<f64>)> = vec![
            (Variant::Tf, AnsatzFamily::ProductAbsolute, vec![0.8, 1.3]),
            (Variant::Tc, AnsatzFamily::ProductAbsolute, vec![1.1, 0.6]),
            (
                Variant::Tf,
                AnsatzFamily::ProductAbsoluteFull,
                vec![0.9, 1.2, 0.7],
            ),
            (
                Variant::RelUnc,
                AnsatzFamily::UncorrelatedRelative,
                vec![0.75],
            ),
            (
                Variant::Tf,
                AnsatzFamily::FullGaussian,
                vec![1.2, -0.3, 0.9],
            ),
        ];
        for (variant, fam, params) in cases {
            let grad = objective_gradient(&model, variant, fam, &params).unwrap();
            for i in 0..params.len() {
                let h = 1e-6 * params[i].abs().max(1.0);
                let mut up = params.clone();
                let mut dn = params.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (objective(&model, variant, fam, &up).unwrap()
                    - objective(&model, variant, fam, &dn).unwrap())
                    / (2.0 * h);
                assert_abs_diff_eq!(grad[i], fd, epsilon = 1e-6 * grad[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn translation_free_minimum_follows_the_coupling() {
        let options = MinimizeOptions::default();
        for lambda in [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0] {
            let model = family_model(lambda);
            let res = minimize(&model, Variant::Tf, AnsatzFamily::ProductAbsolute, &options)
                .unwrap();
            assert!(res.converged, "lambda {lambda}");
            assert_abs_diff_eq!(res.params[0], SQRT3 / 2.0, epsilon = 1e-8);
            assert_abs_diff_eq!(
                res.params[1],
                (6.0 * (lambda + 1.0)).sqrt() / 4.0,
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(
                res.energy,
                (6.0 * (lambda + 1.0)).sqrt() / 3.0 + SQRT3 / 3.0,
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn full_minimum_follows_the_coupling() {
        let options = MinimizeOptions::default();
        for lambda in [0.0, 0.5, 1.0, 3.0, 5.0] {
            let model = family_model(lambda);
            let res = minimize(&model, Variant::Tc, AnsatzFamily::ProductAbsolute, &options)
                .unwrap();
            assert!(res.converged);
            assert_abs_diff_eq!(res.params[0], SQRT2 / 2.0, epsilon = 1e-8);
            assert_abs_diff_eq!(res.params[1], (lambda + 1.0).sqrt() / 2.0, epsilon = 1e-8);
            assert_abs_diff_eq!(
                res.energy,
                (lambda + 1.0).sqrt() + SQRT2 / 2.0,
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn rescored_full_state_interpolates() {
        let options = MinimizeOptions::default();
        for lambda in [0.0, 1.0, 3.0] {
            let model = family_model(lambda);
            let res = run_variant(&model, Variant::Ctc, &options).unwrap();
            assert_abs_diff_eq!(
                res.energy,
                5.0 * SQRT2 / 12.0 + 5.0 / 6.0 * (1.0 + lambda).sqrt(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn uncorrelated_relative_minimum() {
        let options = MinimizeOptions::default();
        for lambda in [0.0, 1.0, 2.5] {
            let model = family_model(lambda);
            let res = run_variant(&model, Variant::RelUnc, &options).unwrap();
            assert_abs_diff_eq!(res.energy, (2.0 * lambda + 2.0).sqrt(), epsilon = 1e-10);
            assert_abs_diff_eq!(
                res.params[0],
                (2.0 * lambda + 2.0).sqrt() / 4.0,
                epsilon = 1e-8
            );
            assert_eq!(res.tcm_expectation, 0.0);
        }
    }

    #[test]
    fn unconstrained_internal_gaussian_reaches_the_exact_energy() {
        let lambda = 1.6;
        let model = family_model(lambda);
        let res = minimize(
            &model,
            Variant::Tf,
            AnsatzFamily::FullGaussian,
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert_abs_diff_eq!(res.energy, exact_energy(lambda), epsilon = 1e-9);
    }

    #[test]
    fn energies_are_ordered() {
        let options = MinimizeOptions::default();
        let model = family_model(0.7);
        let all = run_all(&model, &options).unwrap();
        let e: Vec<f64> = all.iter().map(|r| r.energy).collect();
        // [exact, tf, tc, ctc, rel-unc]
        assert!(e[0] <= e[1] + 1e-12);
        assert!(e[1] <= e[3] + 1e-12);
        assert!(e[3] <= e[2] + 1e-12);
        assert!(e[1] <= e[4] + 1e-12);
    }

    #[test]
    fn symmetric_point_energies() {
        let model = family_model(1.0);
        let all = run_all(&model, &MinimizeOptions::default()).unwrap();
        let expect = [SQRT3, SQRT3, 1.5 * SQRT2, 1.25 * SQRT2, 2.0];
        for (res, want) in all.iter().zip(expect) {
            assert_abs_diff_eq!(res.energy, want, epsilon = 1e-10);
        }
        let order: Vec<Variant> = all.iter().map(|r| r.variant).collect();
        assert_eq!(order.as_slice(), &Variant::all());
    }

    #[test]
    fn cm_kinetic_share_at_the_optima() {
        let model = family_model(1.0);
        let tf = run_variant(&model, Variant::Tf, &MinimizeOptions::default()).unwrap();
        assert_abs_diff_eq!(tf.tcm_expectation, SQRT3 / 4.0, epsilon = 1e-9);
        let tc = run_variant(&model, Variant::Tc, &MinimizeOptions::default()).unwrap();
        assert_abs_diff_eq!(tc.tcm_expectation, SQRT2 / 4.0, epsilon = 1e-9);
    }

    #[test]
    fn marginals_at_the_symmetric_point() {
        let model = family_model(1.0);
        let opts = MinimizeOptions::default();
        let tf = run_variant(&model, Variant::Tf, &opts).unwrap().marginal.unwrap();
        assert_abs_diff_eq!(tf.alpha, 2.0 * SQRT3 / 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(tf.beta, 2.0 * SQRT3 / 3.0, epsilon = 1e-8);
        let tc = run_variant(&model, Variant::Tc, &opts).unwrap().marginal.unwrap();
        assert_abs_diff_eq!(tc.alpha, 2.0 * SQRT2 / 3.0, epsilon = 1e-8);
        assert_abs_diff_eq!(tc.beta, 2.0 * SQRT2 / 3.0, epsilon = 1e-8);
        let exact = run_variant(&model, Variant::Exact, &opts).unwrap().marginal.unwrap();
        assert_abs_diff_eq!(exact.alpha, 2.0 / SQRT3, epsilon = 1e-10);
        assert_abs_diff_eq!(exact.beta, 2.0 / SQRT3, epsilon = 1e-10);
    }

    #[test]
    fn variational_bound_holds_across_couplings() {
        let mut rng = StdRng::seed_from_u64(23);
        let opts = MinimizeOptions::default();
        for _ in 0..20 {
            let lambda = rng.random_range(0.0..8.0);
            let model = family_model(lambda);
            let tf = run_variant(&model, Variant::Tf, &opts).unwrap();
            assert!(tf.energy >= exact_energy(lambda) - 1e-12, "lambda {lambda}");
        }
    }

    #[test]
    fn simplex_and_quasi_newton_find_the_same_minimum() {
        let model = family_model(2.1);
        let qn = minimize(
            &model,
            Variant::Tf,
            AnsatzFamily::ProductAbsolute,
            &MinimizeOptions::default(),
        )
        .unwrap();
        let nm = minimize(
            &model,
            Variant::Tf,
            AnsatzFamily::ProductAbsolute,
            &MinimizeOptions {
                algorithm: Algorithm::Simplex,
                max_iters: 5000,
                ..MinimizeOptions::default()
            },
        )
        .unwrap();
        assert!(nm.converged);
        assert_abs_diff_eq!(qn.energy, nm.energy, epsilon = 1e-8);
    }

    #[test]
    fn seeded_multistart_is_deterministic_and_agrees_with_plain_run() {
        let model = family_model(1.3);
        let seeded = MinimizeOptions {
            multistart_seed: Some(42),
            ..MinimizeOptions::default()
        };
        let a = minimize(&model, Variant::Tc, AnsatzFamily::ProductAbsolute, &seeded).unwrap();
        let b = minimize(&model, Variant::Tc, AnsatzFamily::ProductAbsolute, &seeded).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.energy, b.energy);
        let plain = minimize(
            &model,
            Variant::Tc,
            AnsatzFamily::ProductAbsolute,
            &MinimizeOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(a.energy, plain.energy, epsilon = 1e-10);
    }

    #[test]
    fn starved_iteration_budget_is_reported() {
        let model = family_model(1.0);
        let res = minimize(
            &model,
            Variant::Tf,
            AnsatzFamily::ProductAbsolute,
            &MinimizeOptions {
                algorithm: Algorithm::Simplex,
                max_iters: 2,
                ..MinimizeOptions::default()
            },
        )
        .unwrap();
        assert!(!res.converged);
    }

    #[test]
    fn incompatible_requests_are_rejected() {
        let model = family_model(1.0);
        let opts = MinimizeOptions::default();
        assert!(matches!(
            minimize(&model, Variant::Tc, AnsatzFamily::UncorrelatedRelative, &opts),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            minimize(&model, Variant::Exact, AnsatzFamily::ProductAbsolute, &opts),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            objective(&model, Variant::Tf, AnsatzFamily::ProductAbsolute, &[1.0]),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            objective(&model, Variant::Tf, AnsatzFamily::ProductAbsolute, &[-1.0, 1.0]),
            Err(Error::InfeasibleParams(_))
        ));
    }

    #[test]
    fn trial_states_live_in_the_right_frames() {
        let model = family_model(1.0);
        let abs = AnsatzFamily::ProductAbsolute
            .trial_state(&model, &[0.5, 0.7])
            .unwrap();
        assert_eq!(*abs.frame(), Frame::Absolute);
        assert_eq!(abs.exponent()[(0, 0)], 1.0);
        assert_eq!(abs.exponent()[(1, 1)], 1.4);
        let rel = AnsatzFamily::UncorrelatedRelative
            .trial_state(&model, &[0.9])
            .unwrap();
        assert_eq!(rel.dim(), 2);
        assert!(matches!(rel.frame(), Frame::Internal { .. }));
        assert!(
            AnsatzFamily::ProductAbsolute
                .trial_state(&model, &[0.5])
                .is_err()
        );
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::all() {
            let parsed: Variant = v.name().parse().unwrap();
            assert_eq!(parsed, v);
        }
        assert!("nonsense".parse::<Variant>().is_err());
        assert_eq!("rel_unc".parse::<Variant>().unwrap(), Variant::RelUnc);
    }
}
