//! Unconstrained smooth minimization used by the variational driver.
//!
//! BFGS with Armijo backtracking does the heavy lifting; a short damped
//! Newton polish (finite-difference Hessian of the analytic gradient)
//! finishes the job so optima are good to near machine precision. A
//! Nelder-Mead simplex is kept as a derivative-free cross-check.

use nalgebra::{DMatrix, DVector};

pub(crate) struct OptimOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C1: f64 = 1e-4;

/// BFGS followed by Newton polish. `grad_tol` applies to the euclidean
/// gradient norm; failure to reach it is reported, not raised, so callers
/// can decide what a loose minimum is worth.
pub(crate) fn minimize_smooth(
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    grad_tol: f64,
    max_iters: usize,
) -> OptimOutcome {
    let n = x0.len();
    if n == 0 {
        return OptimOutcome {
            x: Vec::new(),
            f: f(&[]),
            grad_norm: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    let mut gx = DVector::from_vec(g(x.as_slice()));
    let mut h = DMatrix::identity(n, n);
    let mut iterations = 0;
    for _ in 0..max_iters {
        if gx.norm() <= grad_tol {
            break;
        }
        iterations += 1;
        let mut d = -(&h * &gx);
        let mut slope = d.dot(&gx);
        if slope >= 0.0 {
            // curvature estimate went bad; restart from steepest descent
            h = DMatrix::identity(n, n);
            d = -gx.clone();
            slope = d.dot(&gx);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &d * t;
            let fn_ = f(xn.as_slice());
            if fn_.is_finite() && fn_ <= fx + ARMIJO_C1 * t * slope {
                accepted = Some((xn, fn_));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break; // every step length increases f: stagnated
        };
        let g_new = DVector::from_vec(g(x_new.as_slice()));
        let s = &x_new - &x;
        let y = &g_new - &gx;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H <- (I - rho s y')H(I - rho y s') + rho s s'
            h = &h - (&hy * s.transpose() + &s * hy.transpose()) * rho
                + &s * s.transpose() * (rho * rho * yhy + rho);
        } else {
            h = DMatrix::identity(n, n);
        }
        x = x_new;
        fx = f_new;
        gx = g_new;
    }
    let (px, pf, pg, extra) = newton_polish(f, g, x.as_slice(), fx);
    OptimOutcome {
        grad_norm: pg,
        converged: pg <= grad_tol,
        x: px,
        f: pf,
        iterations: iterations + extra,
    }
}

/// A few damped Newton steps on the gradient, with the Hessian taken by
/// central differences of `g`. Steps are only kept when they shrink the
/// gradient norm.
fn newton_polish(
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    f0: f64,
) -> (Vec<f64>, f64, f64, usize) {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f0;
    let mut gx = DVector::from_vec(g(x.as_slice()));
    let mut steps = 0;
    for _ in 0..8 {
        let gnorm = gx.norm();
        if gnorm <= 1e-14 {
            break;
        }
        let mut hess = DMatrix::zeros(n, n);
        for j in 0..n {
            let delta = 1e-5 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += delta;
            xm[j] -= delta;
            let gp = g(xp.as_slice());
            let gm = g(xm.as_slice());
            for i in 0..n {
                hess[(i, j)] = (gp[i] - gm[i]) / (2.0 * delta);
            }
        }
        let sym = (&hess + hess.transpose()) * 0.5;
        let step = match sym.lu().solve(&gx) {
            Some(s) => -s,
            None => break,
        };
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..10 {
            let xn = &x + &step * t;
            let gn = DVector::from_vec(g(xn.as_slice()));
            if gn.norm() < gnorm {
                fx = f(xn.as_slice());
                x = xn;
                gx = gn;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        steps += 1;
        if !improved {
            break;
        }
    }
    (x.as_slice().to_vec(), fx, gx.norm(), steps)
}

/// Derivative-free simplex minimization. Convergence means the simplex has
/// collapsed in both position and value.
pub(crate) fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    max_iters: usize,
) -> OptimOutcome {
    let n = x0.len();
    if n == 0 {
        return OptimOutcome {
            x: Vec::new(),
            f: f(&[]),
            grad_norm: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for j in 0..n {
        let mut v = x0.to_vec();
        v[j] += 0.1 * v[j].abs().max(1.0);
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..max_iters {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        let spread = simplex[n].1 - simplex[0].1;
        if diameter <= 1e-10 && spread.abs() <= 1e-13 * (1.0 + simplex[0].1.abs()) {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let point_at = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + coef * (centroid[j] - worst.0[j]))
                .collect()
        };
        let refl = point_at(alpha);
        let f_refl = f(&refl);
        if f_refl < simplex[0].1 {
            let exp = point_at(gamma);
            let f_exp = f(&exp);
            simplex[n] = if f_exp < f_refl {
                (exp, f_exp)
            } else {
                (refl, f_refl)
            };
            continue;
        }
        if f_refl < simplex[n - 1].1 {
            simplex[n] = (refl, f_refl);
            continue;
        }
        let contr = point_at(-rho);
        let f_contr = f(&contr);
        if f_contr < worst.1 {
            simplex[n] = (contr, f_contr);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            for j in 0..n {
                entry.0[j] = best[j] + sigma * (entry.0[j] - best[j]);
            }
            entry.1 = f(&entry.0);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    OptimOutcome {
        x: simplex[0].0.clone(),
        f: simplex[0].1,
        grad_norm: f64::NAN,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quadratic(x: &[f64]) -> f64 {
        // minimum at (1, -2), value 0.5
        2.0 * (x[0] - 1.0).powi(2) + 0.5 * (x[1] + 2.0).powi(2) + 0.5
    }

    fn quadratic_grad(x: &[f64]) -> Vec<f64> {
        vec![4.0 * (x[0] - 1.0), x[1] + 2.0]
    }

    #[test]
    fn bfgs_solves_a_quadratic_exactly() {
        let out = minimize_smooth(&quadratic, &quadratic_grad, &[5.0, 5.0], 1e-12, 200);
        assert!(out.converged);
        assert_abs_diff_eq!(out.x[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(out.x[1], -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(out.f, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn bfgs_tracks_the_banana_valley() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let out = minimize_smooth(&f, &g, &[-1.2, 1.0], 1e-10, 500);
        assert!(out.converged, "grad norm {}", out.grad_norm);
        assert_abs_diff_eq!(out.x[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(out.x[1], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn iteration_budget_is_honored() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let out = minimize_smooth(&f, &g, &[-1.2, 1.0], 1e-10, 1);
        assert!(!out.converged);
    }

    #[test]
    fn simplex_agrees_with_gradient_route() {
        let nm = nelder_mead(&quadratic, &[5.0, 5.0], 5000);
        assert!(nm.converged);
        assert_abs_diff_eq!(nm.x[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(nm.x[1], -2.0, epsilon = 1e-6);
        let qn = minimize_smooth(&quadratic, &quadratic_grad, &[5.0, 5.0], 1e-12, 200);
        assert_abs_diff_eq!(nm.f, qn.f, epsilon = 1e-10);
    }

    #[test]
    fn empty_parameter_vector_is_trivially_done() {
        let out = minimize_smooth(&|_| 7.0, &|_| vec![], &[], 1e-12, 10);
        assert!(out.converged);
        assert_eq!(out.f, 7.0);
    }
}
