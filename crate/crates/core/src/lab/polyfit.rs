//! Best `L^q(u)` approximation by polynomials of homogeneous degree `< k`.
//!
//! Fits are carried out in ball-local coordinates `z = δ_{1/r}(c⁻¹ ⋄ y)`,
//! where the monomial basis is well scaled, and converted back to the
//! original coordinates at the end. Since `z` depends polynomially on `y`
//! with matching homogeneous degrees, the degree bound is preserved.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::onedim::nelder_mead;
use crate::carnot::{monomial_basis, CarnotGroup, GaugeBall, GradedPolynomial, MultiIndex};
use crate::error::{LabError, Result};
use crate::quad::{ball_nodes, Estimate, NodeSet, QuadratureScheme};
use crate::weights::Weight;

pub const IRLS_MAX_ITERATIONS: usize = 200;
pub const IRLS_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    LeastSquares,
    Irls,
    /// Local descent for `q < 1`; the value is an upper bound on the infimum.
    SimplexUpperBound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub polynomial: GradedPolynomial,
    /// Coefficients in ball-local coordinates, aligned with `basis`.
    pub local_coefficients: Vec<f64>,
    pub basis: Vec<MultiIndex>,
    /// `‖(F − P) u‖_{L^q(B)}`.
    pub value: Estimate,
    pub method: FitMethod,
    pub iterations: usize,
    pub converged: bool,
    pub upper_bound: bool,
}

/// Ball-local coordinates `δ_{1/r}(c⁻¹ ⋄ y)`.
pub fn local_coordinates(group: &CarnotGroup, ball: &GaugeBall, y: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = ball.center.coords().iter().map(|v| -v).collect();
    let mut z = group.compose_slice(&neg, y);
    group.dilate_in_place(1.0 / ball.radius, &mut z);
    z
}

/// Each local coordinate as a polynomial in the original coordinates.
fn local_coordinate_polynomials(group: &CarnotGroup, ball: &GaugeBall) -> Vec<GradedPolynomial> {
    let n = group.ambient_dim();
    let n1 = group.generators();
    let c = ball.center.coords();
    let r = ball.radius;
    let mut subs = Vec::with_capacity(n);
    for i in 0..n1 {
        let p = GradedPolynomial::coordinate(n, i).add(&GradedPolynomial::constant(n, -c[i]));
        subs.push(p.scale(1.0 / r));
    }
    for (l, form) in group.forms().iter().enumerate() {
        let idx = n1 + l;
        let mut p = GradedPolynomial::coordinate(n, idx).add(&GradedPolynomial::constant(n, -c[idx]));
        // ½ B(−c¹, y¹) = −½ Σ c_i J[i][j] y_j
        for (i, row) in form.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 && c[i] != 0.0 {
                    let mut alpha = vec![0; n];
                    alpha[j] = 1;
                    p.add_term(alpha, -0.5 * c[i] * v);
                }
            }
        }
        subs.push(p.scale(1.0 / (r * r)));
    }
    subs
}

fn design_row(basis: &[MultiIndex], z: &[f64]) -> Vec<f64> {
    basis
        .iter()
        .map(|a| a.iter().enumerate().fold(1.0, |acc, (i, &e)| if e == 0 { acc } else { acc * z[i].powi(e as i32) }))
        .collect()
}

/// Weighted least squares `min Σ ω_i (b_i − Φ_i a)²` by column-scaled normal equations.
fn weighted_least_squares(phi: &DMatrix<f64>, b: &[f64], omega: &[f64]) -> Result<Vec<f64>> {
    let (rows, cols) = phi.shape();
    let mut scale = vec![0.0; cols];
    for j in 0..cols {
        let s: f64 = (0..rows).map(|i| omega[i] * phi[(i, j)] * phi[(i, j)]).sum();
        if !(s > 0.0) {
            return Err(LabError::Conditioning(format!("basis column {j} vanishes on the nodes")));
        }
        scale[j] = 1.0 / s.sqrt();
    }
    let mut gram = DMatrix::<f64>::zeros(cols, cols);
    let mut rhs = DVector::<f64>::zeros(cols);
    for i in 0..rows {
        let w = omega[i];
        if w == 0.0 {
            continue;
        }
        for j in 0..cols {
            let pj = phi[(i, j)] * scale[j];
            rhs[j] += w * pj * b[i];
            for l in 0..=j {
                gram[(j, l)] += w * pj * phi[(i, l)] * scale[l];
            }
        }
    }
    for j in 0..cols {
        for l in 0..j {
            gram[(l, j)] = gram[(j, l)];
        }
    }
    let eig_min = gram.clone().symmetric_eigenvalues().min();
    if !(eig_min > 1e-12) {
        return Err(LabError::Conditioning(format!("scaled Gram matrix is singular (λ_min = {eig_min:.3e})")));
    }
    let chol = gram.cholesky().ok_or_else(|| LabError::Conditioning("Cholesky factorization failed".into()))?;
    let sol = chol.solve(&rhs);
    Ok((0..cols).map(|j| sol[j] * scale[j]).collect())
}

/// Inputs sampled once per ball, shared by fits of related integrands.
pub struct FitProblem<'a> {
    pub nodes: &'a NodeSet,
    pub f_values: &'a [f64],
    pub u_values: &'a [f64],
}

/// Best polynomial from values on a fixed node set.
pub fn best_polynomial_on_nodes(
    group: &CarnotGroup,
    problem: &FitProblem<'_>,
    q: f64,
    ball: &GaugeBall,
    k: u32,
) -> Result<PolynomialFit> {
    if k < 1 {
        return Err(LabError::Domain("polynomial degree bound k must be at least 1".into()));
    }
    if !(q > 0.0) {
        return Err(LabError::Domain(format!("q must be positive, got {q}")));
    }
    let nodes = problem.nodes;
    let n_nodes = nodes.len();
    let basis = monomial_basis(group, k);
    let cols = basis.len();
    let mut phi = DMatrix::<f64>::zeros(n_nodes, cols);
    for i in 0..n_nodes {
        let z = local_coordinates(group, ball, nodes.point(i));
        for (j, v) in design_row(&basis, &z).into_iter().enumerate() {
            phi[(i, j)] = v;
        }
    }
    let f = problem.f_values;
    let u = problem.u_values;
    let node_w: Vec<f64> = (0..n_nodes).map(|i| nodes.weight(i)).collect();
    let residuals = |a: &[f64]| -> Vec<f64> {
        (0..n_nodes).map(|i| f[i] - (0..cols).map(|j| phi[(i, j)] * a[j]).sum::<f64>()).collect()
    };
    let objective = |a: &[f64]| -> f64 {
        residuals(a).iter().enumerate().map(|(i, r)| node_w[i] * (u[i] * r.abs()).powf(q)).sum()
    };
    let ls_weights: Vec<f64> = (0..n_nodes).map(|i| node_w[i] * u[i] * u[i]).collect();
    let ls = weighted_least_squares(&phi, f, &ls_weights)?;
    let zero = vec![0.0; cols];
    let (mut best, mut method, mut iterations, mut converged) = (ls.clone(), FitMethod::LeastSquares, 1, true);
    let exact_fit = objective(&ls) == 0.0;
    if q != 2.0 && q >= 1.0 && !exact_fit {
        method = FitMethod::Irls;
        let scale = {
            let r = residuals(&ls);
            (r.iter().map(|v| v * v).sum::<f64>() / n_nodes as f64).sqrt()
        };
        let floor = 1e-14 * scale.max(f.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let mut eps = scale.max(floor);
        let mut a = ls.clone();
        let mut best_obj = objective(&a);
        let mut prev_obj = best_obj;
        converged = false;
        iterations = 0;
        for it in 0..IRLS_MAX_ITERATIONS {
            iterations = it + 1;
            let r = residuals(&a);
            let omega: Vec<f64> = (0..n_nodes)
                .map(|i| node_w[i] * u[i].powf(q) * (r[i] * r[i] + eps * eps).powf((q - 2.0) / 2.0))
                .collect();
            a = match weighted_least_squares(&phi, f, &omega) {
                Ok(a) => a,
                Err(_) => break,
            };
            let obj = objective(&a);
            if obj < best_obj {
                best_obj = obj;
                best = a.clone();
            }
            let change = (prev_obj - obj).abs() / prev_obj.abs().max(1e-300);
            prev_obj = obj;
            eps = (eps * 0.5).max(floor);
            if change < IRLS_TOLERANCE && eps <= 1e-6 * scale.max(floor) {
                converged = true;
                break;
            }
            if obj == 0.0 {
                converged = true;
                break;
            }
        }
    } else if q < 1.0 && !exact_fit {
        method = FitMethod::SimplexUpperBound;
        let step = 0.1 * ls.iter().fold(0.1f64, |m, v| m.max(v.abs()));
        let (a, _, conv) = nelder_mead(objective, &ls, step, 1e-12, 4000 * cols.max(1));
        let (a2, _, conv2) = nelder_mead(objective, &a, step * 0.01, 1e-14, 4000 * cols.max(1));
        best = if objective(&a2) <= objective(&a) { a2 } else { a };
        if objective(&ls) < objective(&best) {
            best = ls.clone();
        }
        converged = conv || conv2;
        iterations = 2;
    }
    // the zero polynomial is always feasible
    if objective(&zero) < objective(&best) {
        best = zero;
    }
    let r = residuals(&best);
    let vals: Vec<f64> = r.iter().zip(u).map(|(r, u)| r.abs() * u).collect();
    let value = nodes.lp_norm_values(&vals, q);
    let local = GradedPolynomial::from_terms(group.ambient_dim(), basis.iter().cloned().zip(best.iter().copied()));
    let polynomial = local.substitute(&local_coordinate_polynomials(group, ball));
    Ok(PolynomialFit {
        polynomial,
        local_coefficients: best,
        basis,
        value,
        method,
        iterations,
        converged,
        upper_bound: method == FitMethod::SimplexUpperBound,
    })
}

/// `min_{deg_G P < k} ‖(F − P) u‖_{L^q(B)}` on fresh nodes for `ball`.
pub fn best_polynomial<F>(
    group: &CarnotGroup,
    f: F,
    u: &Weight,
    q: f64,
    ball: &GaugeBall,
    k: u32,
    scheme: &QuadratureScheme,
) -> Result<PolynomialFit>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let nodes = ball_nodes(group, ball, &crate::operators::ball_scheme(scheme))?;
    let f_values = nodes.evaluate(&f)?;
    let u_values = nodes.evaluate(|y| u.eval(group, y))?;
    best_polynomial_on_nodes(group, &FitProblem { nodes: &nodes, f_values: &f_values, u_values: &u_values }, q, ball, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carnot::Point;

    fn e1() -> CarnotGroup {
        CarnotGroup::euclidean(1).unwrap()
    }

    #[test]
    fn recovers_polynomials_exactly() {
        let g = CarnotGroup::heisenberg(1).unwrap();
        let b = GaugeBall::new(&g, Point::new(vec![0.3, -0.2, 0.5]), 0.7).unwrap();
        let target = GradedPolynomial::from_terms(
            3,
            [(vec![0, 0, 0], 1.5), (vec![1, 0, 0], -2.0), (vec![0, 1, 0], 0.25), (vec![1, 1, 0], 3.0), (vec![0, 0, 1], -1.0)],
        );
        let t2 = target.clone();
        for q in [2.0, 1.0, 1.5] {
            let fit = best_polynomial(&g, |y| t2.eval(y), &Weight::one(), q, &b, 3, &QuadratureScheme::uniform(3000, 4)).unwrap();
            assert!(fit.value.value < 1e-8, "q={q}: {}", fit.value.value);
            for (alpha, c) in &target.terms {
                assert!((fit.polynomial.coefficient(alpha) - c).abs() < 1e-8, "q={q} {alpha:?}");
            }
            assert!(fit.polynomial.degree(&g).unwrap() < 3);
        }
    }

    #[test]
    fn constant_fit_of_identity() {
        let g = e1();
        let b = GaugeBall::centered(&g, 1.0).unwrap();
        let grid = QuadratureScheme::grid(20_000);
        let l2 = best_polynomial(&g, |y| y[0], &Weight::one(), 2.0, &b, 1, &grid).unwrap();
        assert!(l2.polynomial.coefficient(&[0]).abs() < 1e-12);
        assert!((l2.value.value - (2.0f64 / 3.0).sqrt()).abs() < 1e-8);
        let l1 = best_polynomial(&g, |y| y[0], &Weight::one(), 1.0, &b, 1, &grid).unwrap();
        assert!(l1.polynomial.coefficient(&[0]).abs() < 1e-6);
        assert!((l1.value.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quasi_norm_fit_is_labeled_upper_bound() {
        let g = e1();
        let b = GaugeBall::centered(&g, 1.0).unwrap();
        let fit = best_polynomial(&g, |y| y[0].abs(), &Weight::one(), 0.5, &b, 2, &QuadratureScheme::grid(400)).unwrap();
        assert!(fit.upper_bound);
        assert_eq!(fit.method, FitMethod::SimplexUpperBound);
        let ls = best_polynomial(&g, |y| y[0].abs(), &Weight::one(), 2.0, &b, 2, &QuadratureScheme::grid(400)).unwrap();
        let ls_q = ls.local_coefficients.clone();
        let nodes = ball_nodes(&g, &b, &QuadratureScheme::grid(400)).unwrap();
        let at_ls: Vec<f64> = (0..nodes.len())
            .map(|i| {
                let x = nodes.point(i)[0];
                (x.abs() - ls_q[0] - ls_q[1] * x).abs()
            })
            .collect();
        assert!(fit.value.value <= nodes.lp_norm_values(&at_ls, 0.5).value + 1e-12);
    }

    #[test]
    fn degenerate_nodes_raise_conditioning_error() {
        let g = e1();
        let b = GaugeBall::centered(&g, 1.0).unwrap();
        // a single grid cell cannot determine a linear polynomial
        let e = best_polynomial(&g, |y| y[0], &Weight::one(), 2.0, &b, 2, &QuadratureScheme::grid(1));
        assert!(matches!(e, Err(LabError::Conditioning(_))), "{e:?}");
    }
}
