//! Weights, exponent bookkeeping, and sampled two-weight admissibility conditions.
//!
//! For a ball `B` of radius `r` the admissibility term is
//!
//! ```text
//! q > 1:  r^{k+Q(1/q−1/p)} ⟨u^{qt}⟩_B^{1/qt} ∏_i ⟨v_i^{−t p_i′}⟩_B^{1/t p_i′}
//! q ≤ 1:  r^{k+Q(1/q−1/p)} ⟨u^{q}⟩_B^{1/q}   ∏_i ⟨v_i^{−t p_i′}⟩_B^{1/t p_i′}
//! ```
//!
//! with `⟨g⟩_B = |B|⁻¹ ∫_B g`. The supremum over all balls is estimated from
//! a finite sample of balls, so reported sups are lower estimates.

use serde::{Deserialize, Serialize};

use crate::carnot::{CarnotGroup, GaugeBall, Point};
use crate::error::{LabError, Result};
use crate::quad::{ball_nodes, integrate_singular_product, Estimate, QuadratureScheme, SchemeKind};
use crate::rng::StreamKey;

pub const VERDICT_FINITE: &str = "finite-at-sampled-scales";
pub const VERDICT_LARGE_R: &str = "diverges-large-r";
pub const VERDICT_SMALL_R: &str = "diverges-small-r";
/// Largest `|slope|` of `log term` against `log r` still read as flat.
pub const FLAT_SLOPE_TOLERANCE: f64 = 0.05;
pub const DEFAULT_T_GRID: [f64; 5] = [1.1, 1.25, 1.5, 2.0, 4.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Weight {
    Constant { c: f64 },
    /// `d(pole, x)^beta`.
    Power { pole: Point, beta: f64 },
    /// `∏ d(pole_j, x)^{beta_j}`.
    ProductOfPowers { factors: Vec<(Point, f64)> },
}

impl Weight {
    pub fn one() -> Self {
        Weight::Constant { c: 1.0 }
    }

    pub fn power(pole: Point, beta: f64) -> Self {
        Weight::Power { pole, beta }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Weight::Constant { .. } => true,
            Weight::Power { beta, .. } => *beta == 0.0,
            Weight::ProductOfPowers { factors } => factors.iter().all(|f| f.1 == 0.0),
        }
    }

    pub fn validate(&self, group: &CarnotGroup) -> Result<()> {
        match self {
            Weight::Constant { c } if !(*c > 0.0) => Err(LabError::Domain(format!("constant weight must be positive, got {c}"))),
            Weight::Power { pole, .. } if pole.dim() != group.ambient_dim() => {
                Err(LabError::Structural("weight pole dimension does not match group".into()))
            }
            Weight::ProductOfPowers { factors } if factors.iter().any(|f| f.0.dim() != group.ambient_dim()) => {
                Err(LabError::Structural("weight pole dimension does not match group".into()))
            }
            _ => Ok(()),
        }
    }

    /// `w(x)`; at a pole, `0` for positive exponents and `+∞` for negative ones.
    pub fn eval(&self, group: &CarnotGroup, x: &[f64]) -> f64 {
        self.eval_pow(group, x, 1.0)
    }

    /// `w(x)^s`, computed without forming `w(x)` first.
    pub fn eval_pow(&self, group: &CarnotGroup, x: &[f64], s: f64) -> f64 {
        let factor = |pole: &Point, beta: f64| -> f64 {
            let e = beta * s;
            if e == 0.0 {
                return 1.0;
            }
            let d = group.distance_slice(pole.coords(), x);
            if d == 0.0 {
                return if e > 0.0 { 0.0 } else { f64::INFINITY };
            }
            d.powf(e)
        };
        match self {
            Weight::Constant { c } => c.powf(s),
            Weight::Power { pole, beta } => factor(pole, *beta),
            Weight::ProductOfPowers { factors } => factors.iter().map(|(p, b)| factor(p, *b)).product(),
        }
    }

    /// Poles with their exponents.
    pub fn poles(&self) -> Vec<(Point, f64)> {
        match self {
            Weight::Constant { .. } => Vec::new(),
            Weight::Power { pole, beta } => vec![(pole.clone(), *beta)],
            Weight::ProductOfPowers { factors } => factors.clone(),
        }
    }
}

/// `(m, p_1..p_m, p, q, k, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSystem {
    pub p_list: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub k: u32,
    #[serde(default = "default_t")]
    pub t: f64,
}

fn default_t() -> f64 {
    DEFAULT_T_GRID[0]
}

impl ExponentSystem {
    /// System with `p` fixed by `1/p = Σ 1/p_i`.
    pub fn new(p_list: Vec<f64>, q: f64, k: u32) -> Self {
        let p = 1.0 / p_list.iter().map(|pi| 1.0 / pi).sum::<f64>();
        ExponentSystem { p_list, p, q, k, t: default_t() }
    }

    pub fn m(&self) -> usize {
        self.p_list.len()
    }

    /// `k + Q (1/q − 1/p)`.
    pub fn scaling_exponent(&self, group: &CarnotGroup) -> f64 {
        self.k as f64 + group.homogeneous_dimension() as f64 * (1.0 / self.q - 1.0 / self.p)
    }

    pub fn branch(&self) -> Branch {
        if self.q > 1.0 {
            Branch::QAboveOne
        } else {
            Branch::QAtMostOne
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    QAboveOne,
    QAtMostOne,
}

/// `p′ = p / (p − 1)`.
pub fn holder_conjugate(p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(LabError::Domain(format!("Hölder conjugate needs p > 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(1.0);
    }
    Ok(p / (p - 1.0))
}

/// Checks every relation of the system, reporting each violation.
pub fn validate_exponents(system: &ExponentSystem, group: &CarnotGroup) -> Result<ExponentSystem> {
    let mut errs = Vec::new();
    let m = system.m();
    if m == 0 {
        errs.push("at least one exponent p_i is required".to_string());
    }
    for (i, &pi) in system.p_list.iter().enumerate() {
        if !(pi > 1.0 && pi.is_finite()) {
            errs.push(format!("p_{} = {pi} must lie in (1, ∞)", i + 1));
        }
    }
    let inv: f64 = system.p_list.iter().map(|pi| 1.0 / pi).sum();
    if m > 0 && ((1.0 / system.p) - inv).abs() > 1e-9 * inv.abs().max(1.0) {
        errs.push(format!("1/p = Σ 1/p_i fails: 1/p = {}, Σ 1/p_i = {inv}", 1.0 / system.p));
    }
    if m > 0 && !(system.p > 1.0 / m as f64) {
        errs.push(format!("1/m < p fails: p = {}, m = {m}", system.p));
    }
    if !(system.p <= system.q) {
        errs.push(format!("p ≤ q fails: p = {}, q = {}", system.p, system.q));
    }
    if !system.q.is_finite() {
        errs.push("q < ∞ fails".to_string());
    }
    let mq = m * group.homogeneous_dimension();
    if system.k < 1 || system.k as usize > mq {
        errs.push(format!("1 ≤ k ≤ mQ fails: k = {}, mQ = {mq}", system.k));
    }
    if !(system.t > 1.0) {
        errs.push(format!("t > 1 fails: t = {}", system.t));
    }
    if errs.is_empty() {
        let mut out = system.clone();
        out.p = 1.0 / inv;
        Ok(out)
    } else {
        Err(LabError::Validation(errs))
    }
}

/// One admissibility term with its diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallTerm {
    pub value: Estimate,
    /// Set when some average is not integrable or overflowed.
    pub flagged: bool,
    pub reason: Option<String>,
}

/// `⟨w^s⟩_B`, routed through the singular engine when a pole of `w^s` with a
/// negative exponent lies near the ball.
pub fn weight_average(
    group: &CarnotGroup,
    w: &Weight,
    s: f64,
    ball: &GaugeBall,
    scheme: &QuadratureScheme,
) -> Result<Estimate> {
    let q = group.homogeneous_dimension() as f64;
    if let Weight::Constant { c } = w {
        return Ok(Estimate::exact(c.powf(s)));
    }
    let poles = w.poles();
    for (_, beta) in &poles {
        if beta * s <= -q {
            return Err(LabError::Domain(format!(
                "weight power d^{} is not locally integrable (exponent ≤ −Q = {})",
                beta * s,
                -q
            )));
        }
    }
    let volume = group.ball_volume(ball.radius)?;
    let singular = poles
        .iter()
        .filter(|(pole, beta)| beta * s < 0.0 && group.distance_slice(ball.center.coords(), pole.coords()) < 2.0 * ball.radius)
        .min_by(|a, b| (a.1 * s).total_cmp(&(b.1 * s)));
    let (samples, seed) = (scheme.samples(), scheme.seed);
    match (singular, scheme.kind) {
        (Some((pole, beta)), SchemeKind::UniformMc { .. } | SchemeKind::AnnuliMc { .. }) => {
            let levels = match scheme.kind {
                SchemeKind::AnnuliMc { levels, .. } => levels,
                _ => crate::quad::DEFAULT_ANNULI_LEVELS,
            };
            let annuli = QuadratureScheme { kind: SchemeKind::AnnuliMc { samples, levels }, ..*scheme };
            let e = beta * s;
            let rest: Vec<(Point, f64)> = poles.iter().filter(|(p, _)| p != pole).cloned().collect();
            let rest_weight = Weight::ProductOfPowers { factors: rest };
            let integrand = |y: &[f64]| -> f64 {
                if ball.contains(group, y) {
                    rest_weight.eval_pow(group, y, s)
                } else {
                    0.0
                }
            };
            let est = integrate_singular_product(
                group,
                1,
                integrand,
                pole.coords(),
                q + e,
                std::slice::from_ref(ball),
                &annuli,
            )?
            .estimate;
            Ok(est.scale(1.0 / volume))
        }
        _ => {
            let uniform = match scheme.kind {
                SchemeKind::AnnuliMc { .. } => QuadratureScheme::uniform(samples, seed),
                _ => *scheme,
            };
            let uniform = QuadratureScheme { stream: scheme.stream, ..uniform };
            let nodes = ball_nodes(group, ball, &uniform)?;
            Ok(nodes.integrate(|y| w.eval_pow(group, y, s))?.scale(1.0 / volume))
        }
    }
}

/// The admissibility term for one ball at one `t`.
#[allow(clippy::too_many_arguments)]
pub fn ball_term(
    group: &CarnotGroup,
    u: &Weight,
    vs: &[Weight],
    system: &ExponentSystem,
    ball: &GaugeBall,
    t: f64,
    branch: Branch,
    scheme: &QuadratureScheme,
) -> Result<BallTerm> {
    if vs.len() != system.m() {
        return Err(LabError::Structural(format!("{} weights v_i for m = {}", vs.len(), system.m())));
    }
    if (branch == Branch::QAboveOne) != (system.q > 1.0) {
        return Err(LabError::Domain(format!("branch {branch:?} inconsistent with q = {}", system.q)));
    }
    let exponent = system.scaling_exponent(group);
    let mut value = Estimate::exact(ball.radius.powf(exponent));
    let u_exp = match branch {
        Branch::QAboveOne => system.q * t,
        Branch::QAtMostOne => system.q,
    };
    let mut factors = vec![(u, u_exp, 1.0 / u_exp, "u".to_string())];
    for (i, (v, &pi)) in vs.iter().zip(&system.p_list).enumerate() {
        let s = t * holder_conjugate(pi)?;
        factors.push((v, -s, 1.0 / s, format!("v_{}", i + 1)));
    }
    for (j, (w, s, root, name)) in factors.into_iter().enumerate() {
        match weight_average(group, w, s, ball, &scheme.fork(j as u64)) {
            Ok(avg) if avg.value.is_finite() => value = value.mul(&avg.powf(root)),
            Ok(_) => {
                return Ok(BallTerm {
                    value: Estimate::exact(f64::INFINITY),
                    flagged: true,
                    reason: Some(format!("average of {name} overflowed")),
                })
            }
            Err(LabError::Domain(_) | LabError::Integration { .. }) => {
                return Ok(BallTerm {
                    value: Estimate::exact(f64::INFINITY),
                    flagged: true,
                    reason: Some(format!("average of {name} is not finite")),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BallTerm { value, flagged: false, reason: None })
}

/// Balls with centers uniform in `[-half_width, half_width]ⁿ` and radii
/// log-uniform in `[r_min, r_max]`. Ball `i` depends only on `(seed, i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSampler {
    pub count: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_half_width() -> f64 {
    1.0
}
fn default_r_min() -> f64 {
    2f64.powi(-6)
}
fn default_r_max() -> f64 {
    2f64.powi(6)
}

impl BallSampler {
    pub fn new(count: usize, seed: u64) -> Self {
        BallSampler { count, half_width: default_half_width(), r_min: default_r_min(), r_max: default_r_max(), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(LabError::Domain("ball sampler is exhausted: count is 0".into()));
        }
        if !(self.r_min > 0.0 && self.r_min <= self.r_max) {
            return Err(LabError::Domain(format!("bad radius range [{}, {}]", self.r_min, self.r_max)));
        }
        if !(self.half_width >= 0.0) {
            return Err(LabError::Domain("center box half-width must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn ball(&self, group: &CarnotGroup, i: usize) -> GaugeBall {
        let mut rng = StreamKey::new(self.seed).fork_label("ball-sampler").sample(i as u64);
        let center: Vec<f64> =
            (0..group.ambient_dim()).map(|_| rng.uniform(-self.half_width, self.half_width)).collect();
        let radius = rng.uniform(self.r_min.ln(), self.r_max.ln()).exp();
        GaugeBall { center: Point::new(center), radius }
    }

    pub fn balls(&self, group: &CarnotGroup) -> Vec<GaugeBall> {
        (0..self.count).map(|i| self.ball(group, i)).collect()
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn verdict_from_slope(slope: f64) -> &'static str {
    if slope.abs() <= FLAT_SLOPE_TOLERANCE {
        VERDICT_FINITE
    } else if slope > 0.0 {
        VERDICT_LARGE_R
    } else {
        VERDICT_SMALL_R
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusTerm {
    pub center: Point,
    pub radius: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TRow {
    pub t: f64,
    /// Lower estimate of the sup over balls.
    pub sup: f64,
    pub sup_std_error: f64,
    pub argmax: Option<GaugeBall>,
    pub slope: f64,
    pub verdict: String,
    pub flagged: usize,
    pub evaluated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub scaling_exponent: f64,
    pub branch: Branch,
    pub rows: Vec<TRow>,
    /// `finite-at-sampled-scales` if any `t` gives a flat trend.
    pub verdict: String,
    pub best_t: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub balls: usize,
    pub note: String,
}

impl WeightReport {
    pub fn is_finite(&self) -> bool {
        self.verdict == VERDICT_FINITE
    }
}

/// Sampled supremum of the admissibility term over balls, for each `t`.
#[allow(clippy::too_many_arguments)]
pub fn weight_condition_sup(
    group: &CarnotGroup,
    u: &Weight,
    vs: &[Weight],
    system: &ExponentSystem,
    sampler: &BallSampler,
    t_grid: &[f64],
    scheme: &QuadratureScheme,
) -> Result<WeightReport> {
    sampler.validate()?;
    u.validate(group)?;
    for v in vs {
        v.validate(group)?;
    }
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 1.0)) {
        return Err(LabError::Domain("t grid must be nonempty with every t > 1".into()));
    }
    let balls = sampler.balls(group);
    let branch = system.branch();
    let mut rows = Vec::new();
    for (ti, &t) in t_grid.iter().enumerate() {
        let mut best: Option<(usize, Estimate)> = None;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut flagged = 0;
        for (bi, ball) in balls.iter().enumerate() {
            let term = ball_term(group, u, vs, system, ball, t, branch, &scheme.fork(((ti as u64) << 32) | bi as u64))?;
            if term.flagged || !(term.value.value > 0.0) {
                flagged += 1;
                continue;
            }
            xs.push(ball.radius.ln());
            ys.push(term.value.value.ln());
            // ties keep the earliest ball
            if best.as_ref().is_none_or(|(_, b)| term.value.value > b.value) {
                best = Some((bi, term.value));
            }
        }
        let slope = if xs.len() >= 2 { fit_slope(&xs, &ys) } else { f64::NAN };
        let verdict = if slope.is_nan() { "insufficient-balls" } else { verdict_from_slope(slope) };
        rows.push(TRow {
            t,
            sup: best.as_ref().map_or(f64::NAN, |b| b.1.value),
            sup_std_error: best.as_ref().map_or(f64::NAN, |b| b.1.std_error),
            argmax: best.as_ref().map(|b| balls[b.0].clone()),
            slope,
            verdict: verdict.to_string(),
            flagged,
            evaluated: xs.len(),
        });
    }
    let finite_row = rows.iter().find(|r| r.verdict == VERDICT_FINITE);
    let verdict = match finite_row {
        Some(_) => VERDICT_FINITE.to_string(),
        None => rows[0].verdict.clone(),
    };
    Ok(WeightReport {
        scaling_exponent: system.scaling_exponent(group),
        branch,
        best_t: finite_row.map(|r| r.t),
        rows,
        verdict,
        r_min: sampler.r_min,
        r_max: sampler.r_max,
        balls: balls.len(),
        note: "sup values are lower estimates at sampled scales".into(),
    })
}

/// Per-radius terms at one `t`, for tables.
pub fn term_table(
    group: &CarnotGroup,
    u: &Weight,
    vs: &[Weight],
    system: &ExponentSystem,
    balls: &[GaugeBall],
    t: f64,
    scheme: &QuadratureScheme,
) -> Result<Vec<RadiusTerm>> {
    balls
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let term = ball_term(group, u, vs, system, b, t, system.branch(), &scheme.fork(i as u64))?;
            Ok(RadiusTerm {
                center: b.center.clone(),
                radius: b.radius,
                value: term.value.value,
                std_error: term.value.std_error,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> CarnotGroup {
        CarnotGroup::euclidean(1).unwrap()
    }

    #[test]
    fn conjugates() {
        assert_eq!(holder_conjugate(2.0).unwrap(), 2.0);
        assert!((holder_conjugate(4.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((holder_conjugate(1.5).unwrap() - 3.0).abs() < 1e-12);
        assert!(holder_conjugate(1.0).is_err());
        assert!(holder_conjugate(0.5).is_err());
    }

    #[test]
    fn exponent_validation_examples() {
        let g = e1();
        let ok = ExponentSystem::new(vec![2.0, 2.0], 1.0, 1);
        assert_eq!(validate_exponents(&ok, &g).unwrap().p, 1.0);
        let bad = ExponentSystem::new(vec![2.0, 2.0], 0.5, 1);
        match validate_exponents(&bad, &g) {
            Err(LabError::Validation(v)) => {
                assert_eq!(v.len(), 1);
                assert!(v[0].contains("p ≤ q"));
            }
            other => panic!("{other:?}"),
        }
        let sub = ExponentSystem::new(vec![4.0 / 3.0, 4.0 / 3.0], 2.0 / 3.0, 1);
        let v = validate_exponents(&sub, &g).unwrap();
        assert!((v.p - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn each_violation_is_reported() {
        let g = e1();
        let mut s = ExponentSystem::new(vec![0.9, 2.0], 0.1, 9);
        s.p = 5.0;
        s.t = 1.0;
        match validate_exponents(&s, &g) {
            Err(LabError::Validation(v)) => assert!(v.len() >= 5, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_weights_give_pure_power() {
        let g = CarnotGroup::heisenberg(1).unwrap();
        let s = ExponentSystem::new(vec![2.0, 2.0], 2.0, 1);
        let e = s.scaling_exponent(&g);
        let scheme = QuadratureScheme::uniform(2000, 1);
        for &r in &[0.25, 1.0, 3.0] {
            let b = GaugeBall::new(&g, Point::new(vec![0.2, -0.1, 0.4]), r).unwrap();
            let t = ball_term(&g, &Weight::one(), &[Weight::one(), Weight::one()], &s, &b, 1.5, Branch::QAboveOne, &scheme)
                .unwrap();
            assert!((t.value.value - r.powf(e)).abs() < 1e-12 * r.powf(e));
        }
    }

    #[test]
    fn sobolev_critical_term_is_one() {
        let g = CarnotGroup::euclidean(3).unwrap();
        let s = ExponentSystem::new(vec![2.0], 6.0, 1);
        assert!(s.scaling_exponent(&g).abs() < 1e-15);
        let b = GaugeBall::new(&g, Point::new(vec![1.0, 2.0, 3.0]), 7.0).unwrap();
        let t = ball_term(&g, &Weight::one(), &[Weight::one()], &s, &b, 2.0, Branch::QAboveOne, &QuadratureScheme::grid(4))
            .unwrap();
        assert!((t.value.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn power_weight_average_against_closed_form() {
        // ⟨|x|^{-1/2}⟩ on (-1, 1) = 2
        let g = e1();
        let w = Weight::power(Point::new(vec![0.0]), -0.5);
        let b = GaugeBall::centered(&g, 1.0).unwrap();
        let avg = weight_average(&g, &w, 1.0, &b, &QuadratureScheme::annuli(20_000, 24, 4)).unwrap();
        assert!((avg.value - 2.0).abs() < 3.0 * avg.std_error + 1e-3, "{avg:?}");
        assert!(weight_average(&g, &w, 2.0, &b, &QuadratureScheme::annuli(2000, 24, 4)).is_err());
    }

    #[test]
    fn heisenberg_power_weight_average() {
        // ⟨‖x‖^β⟩ over B(0, r) = Q/(Q+β) r^β by the polar formula
        let g = CarnotGroup::heisenberg(1).unwrap();
        let w = Weight::power(Point::origin(3), -1.0);
        let b = GaugeBall::centered(&g, 0.5).unwrap();
        let avg = weight_average(&g, &w, 1.0, &b, &QuadratureScheme::annuli(20_000, 24, 9)).unwrap();
        let oracle = 4.0 / 3.0 * 2.0;
        assert!((avg.value - oracle).abs() < 3.0 * avg.std_error + 2e-3 * oracle, "{avg:?}");
    }

    #[test]
    fn verdicts_follow_exponent_sign() {
        let g = e1();
        let sampler = BallSampler::new(24, 5);
        let scheme = QuadratureScheme::uniform(1000, 1);
        let cases = [(vec![4.0 / 3.0, 4.0 / 3.0], 2.0, 1, VERDICT_FINITE), (vec![4.0, 4.0], 2.0, 1, VERDICT_LARGE_R)];
        for (p, q, k, expect) in cases {
            let s = ExponentSystem::new(p, q, k);
            let r = weight_condition_sup(&g, &Weight::one(), &[Weight::one(), Weight::one()], &s, &sampler, &DEFAULT_T_GRID, &scheme)
                .unwrap();
            assert_eq!(r.verdict, expect, "{r:?}");
            assert!((r.rows[0].slope - s.scaling_exponent(&g)).abs() < 1e-9);
        }
        let neg = ExponentSystem::new(vec![2.0, 2.0], 4.0, 1);
        let g3 = CarnotGroup::euclidean(3).unwrap();
        let r = weight_condition_sup(&g3, &Weight::one(), &[Weight::one(), Weight::one()], &neg, &sampler, &[1.5], &scheme)
            .unwrap();
        assert!(neg.scaling_exponent(&g3) < 0.0);
        assert_eq!(r.verdict, VERDICT_SMALL_R);
    }

    #[test]
    fn sampler_is_prefix_stable() {
        let g = CarnotGroup::heisenberg(1).unwrap();
        let a = BallSampler::new(10, 3).balls(&g);
        let b = BallSampler::new(20, 3).balls(&g);
        assert_eq!(&a[..], &b[..10]);
        assert!(b.iter().all(|x| x.radius >= 2f64.powi(-6) && x.radius <= 64.0));
    }
}
