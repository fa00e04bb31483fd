//! Empirical constants for the Poincaré and Sobolev inequalities and the
//! pointwise representation bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::polyfit::{best_polynomial, FitMethod};
use crate::carnot::{CarnotGroup, GaugeBall, GradedPolynomial, Point, TestFunction};
use crate::error::{LabError, Result};
use crate::operators::{
    ball_scheme, derivative_fn, derivative_tuples, multilinear_fractional_integral, poincare_rhs, sobolev_rhs,
    sobolev_sublaplacian_rhs, support_balls, Slot, TupleTerm,
};
use crate::quad::{ball_nodes, Estimate, QuadratureScheme};
use crate::rng::StreamKey;
use crate::weights::{validate_exponents, ExponentSystem, Weight, WeightReport};

/// Inputs echoed into every report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub group: String,
    pub system: ExponentSystem,
    pub functions: Vec<TestFunction>,
    pub u: Weight,
    pub vs: Vec<Weight>,
    pub ball: Option<GaugeBall>,
    pub seed: u64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InequalityReport {
    pub test: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub ratio: f64,
    /// `rhs = 0` while `lhs` is significantly positive.
    pub violation: bool,
    pub config: ConfigEcho,
    pub terms: Vec<TupleTerm>,
    pub polynomial: Option<GradedPolynomial>,
    pub fit_method: Option<FitMethod>,
    /// The lhs is only an upper bound on the infimum (`q < 1`).
    pub lhs_upper_bound: bool,
    pub weight_verdict: Option<String>,
    pub note: Option<String>,
}

/// Below this an lhs counts as zero.
pub const ZERO_TOLERANCE: f64 = 1e-10;

pub fn ratio_of(lhs: &Estimate, rhs: &Estimate) -> f64 {
    if rhs.value > 0.0 {
        lhs.value / rhs.value
    } else if lhs.value.abs() <= ZERO_TOLERANCE {
        0.0
    } else {
        f64::INFINITY
    }
}

pub fn is_violation(lhs: &Estimate, rhs: &Estimate) -> bool {
    !(rhs.value > 0.0) && lhs.value > 3.0 * lhs.std_error && lhs.value > ZERO_TOLERANCE
}

impl InequalityReport {
    pub fn new(test: &str, lhs: Estimate, rhs: Estimate, config: ConfigEcho) -> Self {
        InequalityReport {
            test: test.to_string(),
            ratio: ratio_of(&lhs, &rhs),
            violation: is_violation(&lhs, &rhs),
            lhs,
            rhs,
            config,
            terms: Vec::new(),
            polynomial: None,
            fit_method: None,
            lhs_upper_bound: false,
            weight_verdict: None,
            note: None,
        }
    }

    pub fn with_weight_report(mut self, report: &WeightReport) -> Self {
        self.weight_verdict = Some(report.verdict.clone());
        self
    }
}

fn product_value(group: &CarnotGroup, fs: &[TestFunction], y: &[f64]) -> f64 {
    fs.iter().map(|f| f.value(group, y)).product()
}

fn check_counts(fs: &[TestFunction], vs: &[Weight], system: &ExponentSystem) -> Result<()> {
    if fs.len() != system.m() || vs.len() != system.m() {
        return Err(LabError::Structural(format!(
            "{} functions and {} weights for an m = {} system",
            fs.len(),
            vs.len(),
            system.m()
        )));
    }
    Ok(())
}

/// `inf_P ‖(∏ f_i − P) u‖_{L^q(B)}` against the tuple sum over `B`.
pub fn poincare_test(
    group: &CarnotGroup,
    fs: &[TestFunction],
    u: &Weight,
    vs: &[Weight],
    system: &ExponentSystem,
    ball: &GaugeBall,
    scheme: &QuadratureScheme,
) -> Result<InequalityReport> {
    check_counts(fs, vs, system)?;
    let system = validate_exponents(system, group)?;
    let fit = best_polynomial(group, |y| product_value(group, fs, y), u, system.q, ball, system.k, &scheme.fork_label("lhs"))?;
    let rhs = poincare_rhs(group, fs, vs, &system.p_list, ball, system.k, &scheme.fork_label("rhs"))?;
    let echo = ConfigEcho {
        group: group.id().to_string(),
        system: system.clone(),
        functions: fs.to_vec(),
        u: u.clone(),
        vs: vs.to_vec(),
        ball: Some(ball.clone()),
        seed: scheme.seed,
        samples: scheme.samples(),
    };
    let mut report = InequalityReport::new("poincare", fit.value, rhs.total, echo);
    report.terms = rhs.terms;
    report.polynomial = Some(fit.polynomial);
    report.fit_method = Some(fit.method);
    report.lhs_upper_bound = fit.upper_bound;
    Ok(report)
}

/// Smallest support ball, which contains the support of the product.
fn smallest_support(group: &CarnotGroup, fs: &[TestFunction]) -> Result<GaugeBall> {
    let balls = support_balls(group, fs)?;
    Ok(balls.into_iter().fold(None::<GaugeBall>, |acc, b| match acc {
        Some(a) if a.radius <= b.radius => Some(a),
        _ => Some(b),
    })
    .expect("at least one slot"))
}

fn sobolev_lhs(
    group: &CarnotGroup,
    fs: &[TestFunction],
    u: &Weight,
    q: f64,
    scheme: &QuadratureScheme,
) -> Result<(Estimate, GaugeBall)> {
    let ball = smallest_support(group, fs)?;
    let nodes = ball_nodes(group, &ball, &ball_scheme(scheme))?;
    let vals = nodes.evaluate(|y| product_value(group, fs, y).abs() * u.eval(group, y))?;
    Ok((nodes.lp_norm_values(&vals, q), ball))
}

/// `‖∏ |f_i| u‖_{L^q}` against the global tuple sum.
pub fn sobolev_test(
    group: &CarnotGroup,
    fs: &[TestFunction],
    u: &Weight,
    vs: &[Weight],
    system: &ExponentSystem,
    scheme: &QuadratureScheme,
) -> Result<InequalityReport> {
    check_counts(fs, vs, system)?;
    let system = validate_exponents(system, group)?;
    let (lhs, ball) = sobolev_lhs(group, fs, u, system.q, &scheme.fork_label("lhs"))?;
    let rhs = sobolev_rhs(group, fs, vs, &system.p_list, system.k, &scheme.fork_label("rhs"))?;
    let echo = ConfigEcho {
        group: group.id().to_string(),
        system: system.clone(),
        functions: fs.to_vec(),
        u: u.clone(),
        vs: vs.to_vec(),
        ball: Some(ball),
        seed: scheme.seed,
        samples: scheme.samples(),
    };
    let mut report = InequalityReport::new("sobolev", lhs, rhs.total, echo);
    report.terms = rhs.terms;
    Ok(report)
}

/// `‖∏ |f_i| u‖_{L^q}` against the sub-Laplacian sum; needs `k = 2` and `mQ > 2`.
pub fn sobolev_sublaplacian_test(
    group: &CarnotGroup,
    fs: &[TestFunction],
    u: &Weight,
    vs: &[Weight],
    system: &ExponentSystem,
    scheme: &QuadratureScheme,
) -> Result<InequalityReport> {
    check_counts(fs, vs, system)?;
    if system.k != 2 {
        return Err(LabError::Hypothesis(format!("the sub-Laplacian inequality is second order, got k = {}", system.k)));
    }
    let mq = system.m() * group.homogeneous_dimension();
    if mq <= 2 {
        return Err(LabError::Hypothesis(format!("mQ > 2 fails: mQ = {mq}")));
    }
    let system = validate_exponents(system, group)?;
    let (lhs, ball) = sobolev_lhs(group, fs, u, system.q, &scheme.fork_label("lhs"))?;
    let rhs = sobolev_sublaplacian_rhs(group, fs, vs, &system.p_list, &scheme.fork_label("rhs"))?;
    let echo = ConfigEcho {
        group: group.id().to_string(),
        system: system.clone(),
        functions: fs.to_vec(),
        u: u.clone(),
        vs: vs.to_vec(),
        ball: Some(ball),
        seed: scheme.seed,
        samples: scheme.samples(),
    };
    let mut report = InequalityReport::new("sobolev-sublaplacian", lhs, rhs.total, echo);
    report.terms = rhs.terms;
    Ok(report)
}

/// `|∏ f_i(x) − P(x)|` against `Σ I_{G,k}(|X^{α_1} f_1| χ_B, …)(x)` at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointBound {
    pub x: Point,
    pub lhs: f64,
    pub rhs: Estimate,
    pub ratio: f64,
    /// Largest share of any term coming from the innermost shell.
    pub core_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub group: String,
    pub k: u32,
    pub ball: GaugeBall,
    pub polynomial: GradedPolynomial,
    pub points: Vec<PointBound>,
    pub max_ratio: f64,
}

/// `count` points drawn uniformly from `ball`, depending only on `(seed, i)`.
pub fn ball_sample_points(group: &CarnotGroup, ball: &GaugeBall, count: usize, seed: u64) -> Vec<Point> {
    let key = StreamKey::new(seed).fork_label("representation-points");
    let n = group.ambient_dim();
    (0..count)
        .map(|i| {
            let mut rng = key.sample(i as u64);
            let mut z = vec![0.0; n];
            group.sample_unit_ball(&mut rng, &mut z);
            group.dilate_in_place(ball.radius, &mut z);
            Point::new(group.compose_slice(ball.center.coords(), &z))
        })
        .collect()
}

/// Pointwise representation bound with `P` the `L²` best polynomial on `B`.
pub fn representation_check(
    group: &CarnotGroup,
    fs: &[TestFunction],
    ball: &GaugeBall,
    k: u32,
    points: &[Point],
    scheme: &QuadratureScheme,
) -> Result<RepresentationReport> {
    let m = fs.len();
    if m == 0 {
        return Err(LabError::Structural("at least one function is required".into()));
    }
    let mq = m * group.homogeneous_dimension();
    if k < 1 || k as usize > mq {
        return Err(LabError::Hypothesis(format!("1 ≤ k ≤ mQ fails: k = {k}, mQ = {mq}")));
    }
    let fit = best_polynomial(group, |y| product_value(group, fs, y), &Weight::one(), 2.0, ball, k, &scheme.fork_label("polynomial"))?;
    let tuples = derivative_tuples(m, k, group.generators());
    let derivs: Vec<Vec<_>> = tuples
        .iter()
        .map(|t| t.alphas.iter().zip(fs).map(|(a, f)| derivative_fn(group, f, a)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let abs_derivs: Vec<Vec<Box<dyn Fn(&[f64]) -> f64 + Sync + '_>>> = derivs
        .iter()
        .map(|row| row.iter().map(|d| Box::new(move |y: &[f64]| d(y).abs()) as Box<dyn Fn(&[f64]) -> f64 + Sync>).collect())
        .collect();
    let rhs_scheme = scheme.fork_label("rhs");
    let results: Vec<Result<PointBound>> = points
        .par_iter()
        .enumerate()
        .map(|(pi, x)| {
            if x.dim() != group.ambient_dim() {
                return Err(LabError::Structural(format!("point of dimension {} in a group of dimension {}", x.dim(), group.ambient_dim())));
            }
            let lhs = (product_value(group, fs, x.coords()) - fit.polynomial.eval(x.coords())).abs();
            let mut total = Estimate::exact(0.0);
            let mut core_fraction: f64 = 0.0;
            for (ti, row) in abs_derivs.iter().enumerate() {
                let slots: Vec<Slot<'_>> = row.iter().map(|d| Slot { eval: d.as_ref(), support: ball.clone() }).collect();
                let est = multilinear_fractional_integral(
                    group,
                    &slots,
                    k as f64,
                    x.coords(),
                    &rhs_scheme.fork(((pi as u64) << 20) | ti as u64),
                )?;
                core_fraction = core_fraction.max(est.core_fraction);
                total = total.add(&est.estimate);
            }
            Ok(PointBound { x: x.clone(), lhs, ratio: ratio_of(&Estimate::exact(lhs), &total), rhs: total, core_fraction })
        })
        .collect();
    let points = results.into_iter().collect::<Result<Vec<_>>>()?;
    let max_ratio = points.iter().map(|p| p.ratio).fold(0.0, f64::max);
    Ok(RepresentationReport { group: group.id().to_string(), k, ball: ball.clone(), polynomial: fit.polynomial, points, max_ratio })
}

/// One randomized Poincaré trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub index: usize,
    pub seed: u64,
    pub ball: GaugeBall,
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub rhs_std_error: f64,
    pub ratio: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub group: String,
    pub system: ExponentSystem,
    pub trials: Vec<TrialRow>,
    pub max_ratio: f64,
    pub argmax: Option<usize>,
    pub violations: usize,
    pub all_finite: bool,
    pub weight_verdict: Option<String>,
}

/// Random bump tuple and ball for trial `index`, depending only on `(seed, index)`.
pub fn sweep_trial_inputs(group: &CarnotGroup, m: usize, seed: u64, index: usize) -> (Vec<TestFunction>, GaugeBall) {
    let mut rng = StreamKey::new(seed).fork_label("poincare-sweep").sample(index as u64);
    let n = group.ambient_dim();
    let center: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let radius = rng.uniform(0.25f64.ln(), 2f64.ln()).exp();
    let ball = GaugeBall { center: Point::new(center), radius };
    let fs = (0..m)
        .map(|_| {
            let z: Vec<f64> = (0..n).map(|_| rng.uniform(-0.8, 0.8)).collect();
            let mut z = z;
            group.dilate_in_place(radius, &mut z);
            let c = Point::new(group.compose_slice(ball.center.coords(), &z));
            let scale = radius * rng.uniform(0.3, 1.5);
            let amplitude = rng.uniform(0.5, 2.0) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
            TestFunction::bump(c, scale).scaled(amplitude)
        })
        .collect();
    (fs, ball)
}

/// `trials` independent Poincaré tests on random bump tuples and balls.
pub fn poincare_sweep(
    group: &CarnotGroup,
    u: &Weight,
    vs: &[Weight],
    system: &ExponentSystem,
    trials: usize,
    seed: u64,
    scheme: &QuadratureScheme,
) -> Result<SweepReport> {
    let system = validate_exponents(system, group)?;
    let rows: Vec<Result<TrialRow>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (fs, ball) = sweep_trial_inputs(group, system.m(), seed, i);
            let trial_seed = StreamKey::new(seed).fork(i as u64).sample(0).next_u64();
            let sch = QuadratureScheme { seed: trial_seed, ..*scheme };
            let r = poincare_test(group, &fs, u, vs, &system, &ball, &sch)?;
            Ok(TrialRow {
                index: i,
                seed: trial_seed,
                ball,
                lhs: r.lhs.value,
                lhs_std_error: r.lhs.std_error,
                rhs: r.rhs.value,
                rhs_std_error: r.rhs.std_error,
                ratio: r.ratio,
                violation: r.violation,
            })
        })
        .collect();
    let trials = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let argmax = trials
        .iter()
        .enumerate()
        .filter(|(_, t)| t.ratio.is_finite())
        .fold(None::<usize>, |acc, (i, t)| match acc {
            Some(j) if trials[j].ratio >= t.ratio => Some(j),
            _ => Some(i),
        });
    Ok(SweepReport {
        group: group.id().to_string(),
        system,
        max_ratio: argmax.map_or(0.0, |i| trials[i].ratio),
        argmax,
        violations: trials.iter().filter(|t| t.violation).count(),
        all_finite: trials.iter().all(|t| t.ratio.is_finite()),
        trials,
        weight_verdict: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carnot::GradedPolynomial;

    fn e1() -> CarnotGroup {
        CarnotGroup::euclidean(1).unwrap()
    }

    #[test]
    fn polynomial_slots_have_zero_lhs() {
        let g = CarnotGroup::heisenberg(1).unwrap();
        let x = TestFunction::polynomial(GradedPolynomial::coordinate(3, 0));
        let one = TestFunction::polynomial(GradedPolynomial::constant(3, 1.0));
        let sys = ExponentSystem::new(vec![2.0, 2.0], 2.0, 2);
        let b = GaugeBall::centered(&g, 0.8).unwrap();
        let w = Weight::one();
        let r = poincare_test(&g, &[x, one], &w, &[w.clone(), w.clone()], &sys, &b, &QuadratureScheme::uniform(2000, 1)).unwrap();
        assert!(r.lhs.value < 1e-10 && r.ratio < 1e-9 && !r.violation);
    }

    #[test]
    fn poincare_square_on_unit_interval() {
        // inf_c ∫₀¹ |x² − c| dx = 1/4 at the median c = 1/4; rhs = 2 ‖x′‖₂ ‖x‖₂ = 2/√3
        let g = e1();
        let x = TestFunction::polynomial(GradedPolynomial::coordinate(1, 0));
        let sys = ExponentSystem::new(vec![2.0, 2.0], 1.0, 1);
        let b = GaugeBall::new(&g, Point::new(vec![0.5]), 0.5).unwrap();
        let w = Weight::one();
        let r = poincare_test(&g, &[x.clone(), x], &w, &[w.clone(), w.clone()], &sys, &b, &QuadratureScheme::grid(20_000)).unwrap();
        let lhs = 0.25;
        let rhs = 2.0 / 3f64.sqrt();
        assert!((r.lhs.value - lhs).abs() < 1e-5, "{}", r.lhs.value);
        assert!((r.rhs.value - rhs).abs() < 1e-8, "{}", r.rhs.value);
    }

    #[test]
    fn zero_slot_gives_zero_sobolev_lhs() {
        let g = e1();
        let f = TestFunction::bump(Point::new(vec![0.0]), 1.0);
        let z = f.clone().scaled(0.0);
        let sys = ExponentSystem::new(vec![2.0, 2.0], 1.0, 1);
        let w = Weight::one();
        let r = sobolev_test(&g, &[f, z], &w, &[w.clone(), w.clone()], &sys, &QuadratureScheme::uniform(2000, 1)).unwrap();
        assert_eq!(r.lhs.value, 0.0);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn sublaplacian_hypotheses() {
        let g = CarnotGroup::euclidean(1).unwrap();
        let f = TestFunction::bump(Point::new(vec![0.0]), 1.0);
        let w = Weight::one();
        let sys = ExponentSystem::new(vec![2.0], 2.0, 2);
        let err = sobolev_sublaplacian_test(&g, std::slice::from_ref(&f), &w, std::slice::from_ref(&w), &sys, &QuadratureScheme::uniform(1000, 1));
        assert!(matches!(err, Err(LabError::Hypothesis(_))));
        let sys1 = ExponentSystem::new(vec![2.0], 2.0, 1);
        let h = CarnotGroup::heisenberg(1).unwrap();
        let fh = TestFunction::bump(Point::origin(3), 1.0);
        let err = sobolev_sublaplacian_test(&h, &[fh], &w, std::slice::from_ref(&w), &sys1, &QuadratureScheme::uniform(1000, 1));
        assert!(matches!(err, Err(LabError::Hypothesis(_))));
    }

    #[test]
    fn representation_of_a_square() {
        // m = 1, k = 1 on (0, 1): |x² − 1/3| ≤ C ∫₀¹ 2y |x − y|^{0} dy = C
        let g = e1();
        let f = TestFunction::polynomial(GradedPolynomial::monomial(vec![2], 1.0));
        let b = GaugeBall::new(&g, Point::new(vec![0.5]), 0.5).unwrap();
        let pts: Vec<Point> = [0.1, 0.5, 0.9].iter().map(|&x| Point::new(vec![x])).collect();
        let rep = representation_check(&g, &[f], &b, 1, &pts, &QuadratureScheme::annuli(4000, 24, 3)).unwrap();
        for p in &rep.points {
            let x = p.x.coords()[0];
            assert!((p.lhs - (x * x - 1.0 / 3.0).abs()).abs() < 0.02);
            assert!((p.rhs.value - 1.0).abs() < 5.0 * p.rhs.std_error + 1e-3, "{:?}", p.rhs);
        }
    }

    #[test]
    fn sweep_inputs_are_prefix_stable() {
        let g = CarnotGroup::heisenberg(1).unwrap();
        let (a, b) = sweep_trial_inputs(&g, 2, 7, 3);
        let (c, d) = sweep_trial_inputs(&g, 2, 7, 3);
        assert_eq!(b, d);
        assert_eq!(format!("{a:?}"), format!("{c:?}"));
    }
}
