//! Weighted Morrey and Campanato norms, and the Leibniz rule between them.

use serde::{Deserialize, Serialize};

use super::inequality::{ConfigEcho, InequalityReport};
use super::polyfit::{best_polynomial_on_nodes, FitProblem};
use crate::carnot::{CarnotGroup, GaugeBall, TestFunction};
use crate::error::{LabError, Result};
use crate::operators::{ball_scheme, check_capability, derivative_fn, derivative_tuples, TupleTerm};
use crate::quad::{ball_nodes, Estimate, NodeSet, QuadratureScheme};
use crate::weights::{validate_exponents, BallSampler, ExponentSystem, Weight};

/// Which dimension divides `λ` in `|B|^{λ/·}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// The ambient dimension `n`.
    #[default]
    Ambient,
    /// The homogeneous dimension `Q`.
    Homogeneous,
}

impl Normalization {
    pub fn dimension(self, group: &CarnotGroup) -> f64 {
        match self {
            Normalization::Ambient => group.ambient_dim() as f64,
            Normalization::Homogeneous => group.homogeneous_dimension() as f64,
        }
    }
}

/// Per-ball value of a Morrey or Campanato functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallValue {
    pub ball: GaugeBall,
    pub value: f64,
    pub std_error: f64,
}

/// A supremum over sampled balls: a lower estimate of the true norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub estimate: Estimate,
    pub argmax: Option<GaugeBall>,
    pub r_min: f64,
    pub r_max: f64,
    pub balls: Vec<BallValue>,
    pub note: String,
}

impl SupEstimate {
    fn from_values(balls: Vec<BallValue>, sampler: &BallSampler) -> Self {
        let best = balls
            .iter()
            .enumerate()
            .fold(None::<usize>, |acc, (i, b)| match acc {
                Some(j) if balls[j].value >= b.value => Some(j),
                _ => Some(i),
            });
        let estimate = best.map_or(Estimate::exact(0.0), |i| Estimate {
            value: balls[i].value,
            std_error: balls[i].std_error,
            samples: 0,
            seed: sampler.seed,
        });
        SupEstimate {
            estimate,
            argmax: best.map(|i| balls[i].ball.clone()),
            r_min: sampler.r_min,
            r_max: sampler.r_max,
            balls,
            note: "lower estimate at sampled scales".into(),
        }
    }

    pub fn value(&self) -> f64 {
        self.estimate.value
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(LabError::Domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Nodes for ball `i`; Morrey and Campanato evaluations with the same
/// scheme share them.
fn nodes_for(group: &CarnotGroup, ball: &GaugeBall, i: usize, scheme: &QuadratureScheme) -> Result<NodeSet> {
    ball_nodes(group, ball, &ball_scheme(scheme).fork_label("ball").fork(i as u64))
}

/// `sup_B (|B|^{−λ/n} ∫_B |f w|^p)^{1/p}` over the sampled balls.
#[allow(clippy::too_many_arguments)]
pub fn morrey_norm<F>(
    group: &CarnotGroup,
    f: F,
    w: &Weight,
    p: f64,
    lambda: f64,
    sampler: &BallSampler,
    scheme: &QuadratureScheme,
    normalization: Normalization,
) -> Result<SupEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_positive("p", p)?;
    check_positive("λ", lambda)?;
    sampler.validate()?;
    w.validate(group)?;
    let dim = normalization.dimension(group);
    let values = sampler
        .balls(group)
        .into_iter()
        .enumerate()
        .map(|(i, ball)| {
            let nodes = nodes_for(group, &ball, i, scheme)?;
            let vals = nodes.evaluate(|y| f(y).abs() * w.eval(group, y))?;
            let norm = nodes.lp_norm_values(&vals, p);
            let s = ball.volume(group).powf(-lambda / (dim * p));
            Ok(BallValue { value: norm.value * s, std_error: norm.std_error * s, ball })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SupEstimate::from_values(values, sampler))
}

/// `sup_B inf_{deg_G P < k} (|B|^{−λ/n} ∫_B (|f − P| w)^p)^{1/p}` over the sampled balls.
#[allow(clippy::too_many_arguments)]
pub fn campanato_norm<F>(
    group: &CarnotGroup,
    f: F,
    w: &Weight,
    p: f64,
    lambda: f64,
    k: u32,
    sampler: &BallSampler,
    scheme: &QuadratureScheme,
    normalization: Normalization,
) -> Result<SupEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_positive("p", p)?;
    check_positive("λ", lambda)?;
    if k < 1 {
        return Err(LabError::Domain("k must be at least 1".into()));
    }
    sampler.validate()?;
    w.validate(group)?;
    let dim = normalization.dimension(group);
    let values = sampler
        .balls(group)
        .into_iter()
        .enumerate()
        .map(|(i, ball)| {
            let nodes = nodes_for(group, &ball, i, scheme)?;
            let f_values = nodes.evaluate(&f)?;
            let u_values = nodes.evaluate(|y| w.eval(group, y))?;
            let fit = best_polynomial_on_nodes(
                group,
                &FitProblem { nodes: &nodes, f_values: &f_values, u_values: &u_values },
                p,
                &ball,
                k,
            )?;
            let s = ball.volume(group).powf(-lambda / (dim * p));
            Ok(BallValue { value: fit.value.value * s, std_error: fit.value.std_error * s, ball })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SupEstimate::from_values(values, sampler))
}

/// Scale parameters of the Leibniz rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeibnizScales {
    pub lambda: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// `‖fg‖_{𝓛_k^{q,λ}(u)}` against `Σ_{|α₁|+|α₂|=k} ‖X^{α₁}f‖_{L^{p₁,λ₁}(v₁)} ‖X^{α₂}g‖_{L^{p₂,λ₂}(v₂)}`.
#[allow(clippy::too_many_arguments)]
pub fn leibniz_test(
    group: &CarnotGroup,
    f: &TestFunction,
    g: &TestFunction,
    u: &Weight,
    vs: [&Weight; 2],
    system: &ExponentSystem,
    scales: LeibnizScales,
    sampler: &BallSampler,
    scheme: &QuadratureScheme,
    normalization: Normalization,
) -> Result<InequalityReport> {
    if system.m() != 2 {
        return Err(LabError::Validation(vec![format!("Leibniz rule needs m = 2, got {}", system.m())]));
    }
    let system = validate_exponents(system, group)?;
    let (p1, p2, q, k) = (system.p_list[0], system.p_list[1], system.q, system.k);
    let LeibnizScales { lambda, lambda1, lambda2 } = scales;
    let mut violations = Vec::new();
    let gap = lambda / q - (lambda1 / p1 + lambda2 / p2);
    if !(gap.abs() <= 1e-9) {
        violations.push(format!("λ/q = λ₁/p₁ + λ₂/p₂ fails: {} vs {}", lambda / q, lambda1 / p1 + lambda2 / p2));
    }
    let q_dim = group.homogeneous_dimension() as u32;
    if k > 2 * q_dim {
        violations.push(format!("k ≤ 2Q fails: k = {k}, 2Q = {}", 2 * q_dim));
    }
    if !violations.is_empty() {
        return Err(LabError::Validation(violations));
    }
    check_capability(f, k as usize)?;
    check_capability(g, k as usize)?;
    let lhs_sup = campanato_norm(
        group,
        |y| f.value(group, y) * g.value(group, y),
        u,
        q,
        lambda,
        k,
        sampler,
        &scheme.fork_label("lhs"),
        normalization,
    )?;
    let rhs_scheme = scheme.fork_label("rhs");
    let mut terms = Vec::new();
    let n1 = group.generators();
    let mut memo: std::collections::BTreeMap<(usize, Vec<u32>), Estimate> = Default::default();
    for tuple in derivative_tuples(2, k, n1) {
        let mut factors = Vec::with_capacity(2);
        for (slot, (func, v, p, lam)) in [(f, vs[0], p1, lambda1), (g, vs[1], p2, lambda2)].into_iter().enumerate() {
            let alpha = tuple.alphas[slot].clone();
            let e = match memo.get(&(slot, alpha.clone())) {
                Some(e) => *e,
                None => {
                    let d = derivative_fn(group, func, &alpha)?;
                    let e = morrey_norm(group, d, v, p, lam, sampler, &rhs_scheme.fork(slot as u64), normalization)?.estimate;
                    memo.insert((slot, alpha), e);
                    e
                }
            };
            factors.push(e);
        }
        let product = factors[0].mul(&factors[1]);
        terms.push(TupleTerm { label: format!("{:?}", tuple.alphas), alphas: tuple.alphas, factors, product });
    }
    let rhs = Estimate::sum(terms.iter().map(|t| &t.product));
    let echo = ConfigEcho {
        group: group.id().to_string(),
        system: system.clone(),
        functions: vec![f.clone(), g.clone()],
        u: u.clone(),
        vs: vec![vs[0].clone(), vs[1].clone()],
        ball: lhs_sup.argmax.clone(),
        seed: scheme.seed,
        samples: scheme.samples(),
    };
    let mut report = InequalityReport::new("leibniz", lhs_sup.estimate, rhs, echo);
    report.terms = terms;
    report.note = Some(format!(
        "sups over {} sampled balls with r in [{}, {}]; lower estimates at sampled scales",
        sampler.count, sampler.r_min, sampler.r_max
    ));
    Ok(report)
}

/// One randomized Leibniz configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeibnizRow {
    pub index: usize,
    pub f: TestFunction,
    pub g: TestFunction,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub violation: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LeibnizSweep {
    pub rows: Vec<LeibnizRow>,
    pub max_ratio: f64,
    pub all_finite: bool,
    pub violations: usize,
}

/// Random bump pair for configuration `index`, depending only on `(seed, index)`.
pub fn leibniz_trial_inputs(group: &CarnotGroup, seed: u64, index: usize) -> (TestFunction, TestFunction) {
    let mut rng = crate::rng::StreamKey::new(seed).fork_label("leibniz-sweep").sample(index as u64);
    let n = group.ambient_dim();
    let mut draw = || {
        let c: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let scale = rng.uniform(0.3, 1.5);
        let amplitude = rng.uniform(0.5, 2.0);
        TestFunction::bump(crate::carnot::Point::new(c), scale).scaled(amplitude)
    };
    let f = draw();
    let g = draw();
    (f, g)
}

/// [`leibniz_test`] over `configurations` random bump pairs.
#[allow(clippy::too_many_arguments)]
pub fn leibniz_sweep(
    group: &CarnotGroup,
    u: &Weight,
    vs: [&Weight; 2],
    system: &ExponentSystem,
    scales: LeibnizScales,
    sampler: &BallSampler,
    configurations: usize,
    seed: u64,
    scheme: &QuadratureScheme,
    normalization: Normalization,
) -> Result<LeibnizSweep> {
    use rayon::prelude::*;
    let rows = (0..configurations)
        .into_par_iter()
        .map(|i| {
            let (f, g) = leibniz_trial_inputs(group, seed, i);
            let sch = scheme.fork_label("leibniz-configuration").fork(i as u64);
            let r = leibniz_test(group, &f, &g, u, vs, system, scales, sampler, &sch, normalization)?;
            Ok(LeibnizRow { index: i, f, g, lhs: r.lhs.value, rhs: r.rhs.value, ratio: r.ratio, violation: r.violation })
        })
        .collect::<Vec<Result<LeibnizRow>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(LeibnizSweep {
        max_ratio: rows.iter().map(|r| r.ratio).fold(0.0, f64::max),
        all_finite: rows.iter().all(|r| r.ratio.is_finite()),
        violations: rows.iter().filter(|r| r.violation).count(),
        rows,
    })
}
