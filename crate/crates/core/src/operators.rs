//! Multilinear fractional integrals and the right-hand sides of the
//! Poincaré and Sobolev inequalities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::carnot::functions::{alpha_word, derivative_word, sub_laplacian};
use crate::carnot::{CarnotGroup, GaugeBall, MultiIndex, TestFunction};
use crate::error::{LabError, Result};
use crate::quad::{ball_nodes, integrate_singular_product, Estimate, NodeSet, QuadratureScheme, SchemeKind, SingularEstimate};
use crate::weights::Weight;

/// `(α_1, …, α_m)` with `Σ |α_i| = k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DerivativeTuple {
    pub alphas: Vec<MultiIndex>,
}

impl DerivativeTuple {
    pub fn order(&self) -> u32 {
        self.alphas.iter().flatten().sum()
    }
}

/// All tuples of `m` multi-indices over `n1` generators with total order `k`,
/// in reverse lexicographic order of the flattened exponent vector.
pub fn derivative_tuples(m: usize, k: u32, n1: usize) -> Vec<DerivativeTuple> {
    let parts = m * n1;
    let mut out = Vec::new();
    let mut cur = vec![0u32; parts];
    compositions(0, k, &mut cur, &mut |flat| {
        out.push(DerivativeTuple { alphas: flat.chunks(n1).map(|c| c.to_vec()).collect() });
    });
    out
}

fn compositions(pos: usize, remaining: u32, cur: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        emit(cur);
        return;
    }
    for a in (0..=remaining).rev() {
        cur[pos] = a;
        compositions(pos + 1, remaining - a, cur, emit);
    }
    cur[pos] = 0;
}

/// A slot of a multilinear operator: an evaluable restricted to a support ball.
pub struct Slot<'a> {
    pub eval: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub support: GaugeBall,
}

/// `I_{G,τ}(f⃗)(x) = ∫ ∏ f_i(y_i) d(x, y⃗)^{τ − mQ} dy⃗`.
pub fn multilinear_fractional_integral(
    group: &CarnotGroup,
    slots: &[Slot<'_>],
    tau: f64,
    x: &[f64],
    scheme: &QuadratureScheme,
) -> Result<SingularEstimate> {
    let m = slots.len();
    let n = group.ambient_dim();
    let supports: Vec<GaugeBall> = slots.iter().map(|s| s.support.clone()).collect();
    let integrand = |ys: &[f64]| -> f64 {
        let mut acc = 1.0;
        for (i, s) in slots.iter().enumerate() {
            let y = &ys[i * n..(i + 1) * n];
            if !s.support.contains(group, y) {
                return 0.0;
            }
            acc *= (s.eval)(y);
            if acc == 0.0 {
                return 0.0;
            }
        }
        acc
    };
    integrate_singular_product(group, m, integrand, x, tau, &supports, scheme)
}

/// [`multilinear_fractional_integral`] on catalog functions, each over its declared support.
pub fn fractional_integral_catalog(
    group: &CarnotGroup,
    fs: &[TestFunction],
    tau: f64,
    x: &[f64],
    scheme: &QuadratureScheme,
) -> Result<SingularEstimate> {
    let evals: Vec<Box<dyn Fn(&[f64]) -> f64 + Sync + '_>> =
        fs.iter().map(|f| Box::new(move |y: &[f64]| f.value(group, y)) as Box<dyn Fn(&[f64]) -> f64 + Sync>).collect();
    let mut slots = Vec::new();
    for (f, e) in fs.iter().zip(&evals) {
        let support = f
            .support(group)
            .ok_or_else(|| LabError::Domain("fractional integrals need compactly supported slots".into()))?;
        slots.push(Slot { eval: e.as_ref(), support });
    }
    multilinear_fractional_integral(group, &slots, tau, x, scheme)
}

/// Checks that `X^α f` can be evaluated for `|α| = order`.
pub fn check_capability(f: &TestFunction, order: usize) -> Result<()> {
    if order > f.smoothness() {
        return Err(LabError::Capability { requested: order, available: f.smoothness() });
    }
    if f.is_analytic() && order > crate::jet::MAX_JET_ORDER {
        return Err(LabError::Capability { requested: order, available: crate::jet::MAX_JET_ORDER });
    }
    Ok(())
}

/// `y ↦ X^α f(y)`, after a capability check.
pub fn derivative_fn<'a>(
    group: &'a CarnotGroup,
    f: &'a TestFunction,
    alpha: &[u32],
) -> Result<impl Fn(&[f64]) -> f64 + Sync + 'a> {
    if alpha.len() != group.generators() {
        return Err(LabError::Structural("multi-index length does not match generators".into()));
    }
    let word = alpha_word(alpha);
    check_capability(f, word.len())?;
    Ok(move |y: &[f64]| derivative_word(group, f, &word, y).unwrap_or(f64::NAN))
}

/// Ball schemes for `∫_B`; annuli settings fall back to uniform sampling.
pub fn ball_scheme(scheme: &QuadratureScheme) -> QuadratureScheme {
    match scheme.kind {
        SchemeKind::AnnuliMc { samples, .. } => QuadratureScheme { kind: SchemeKind::UniformMc { samples }, ..*scheme },
        _ => *scheme,
    }
}

/// `(∫ (|X^α f| v)^p)^{1/p}` on shared nodes.
pub fn derivative_norm(
    group: &CarnotGroup,
    nodes: &NodeSet,
    f: &TestFunction,
    alpha: &[u32],
    v: &Weight,
    p: f64,
) -> Result<Estimate> {
    let d = derivative_fn(group, f, alpha)?;
    let vals = nodes.evaluate(|y| d(y).abs() * v.eval(group, y))?;
    Ok(nodes.lp_norm_values(&vals, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleTerm {
    pub label: String,
    /// Empty for sub-Laplacian terms.
    pub alphas: Vec<MultiIndex>,
    pub factors: Vec<Estimate>,
    pub product: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsBreakdown {
    pub total: Estimate,
    pub terms: Vec<TupleTerm>,
}

fn check_slots(fs: &[TestFunction], vs: &[Weight], ps: &[f64]) -> Result<()> {
    if fs.is_empty() || fs.len() != vs.len() || fs.len() != ps.len() {
        return Err(LabError::Structural(format!(
            "slot counts differ: {} functions, {} weights, {} exponents",
            fs.len(),
            vs.len(),
            ps.len()
        )));
    }
    Ok(())
}

/// `Σ_{tuples} ∏_i ‖X^{α_i} f_i · v_i‖_{L^{p_i}(B_i)}` with `B_i` given per slot.
fn tuple_sum(
    group: &CarnotGroup,
    fs: &[TestFunction],
    vs: &[Weight],
    ps: &[f64],
    domains: &[GaugeBall],
    k: u32,
    scheme: &QuadratureScheme,
) -> Result<RhsBreakdown> {
    check_slots(fs, vs, ps)?;
    let m = fs.len();
    let n1 = group.generators();
    let scheme = ball_scheme(scheme);
    let nodes: Vec<NodeSet> = domains
        .iter()
        .enumerate()
        .map(|(i, b)| {
            // slots over the same ball share nodes
            let first = domains.iter().position(|d| d == b).unwrap_or(i);
            ball_nodes(group, b, &scheme.fork(first as u64))
        })
        .collect::<Result<_>>()?;
    let mut memo: BTreeMap<(usize, MultiIndex), Estimate> = BTreeMap::new();
    let mut terms = Vec::new();
    for tuple in derivative_tuples(m, k, n1) {
        let mut factors = Vec::with_capacity(m);
        for (i, alpha) in tuple.alphas.iter().enumerate() {
            let key = (i, alpha.clone());
            let e = match memo.get(&key) {
                Some(e) => *e,
                None => {
                    let e = derivative_norm(group, &nodes[i], &fs[i], alpha, &vs[i], ps[i])?;
                    memo.insert(key, e);
                    e
                }
            };
            factors.push(e);
        }
        let product = factors.iter().skip(1).fold(factors[0], |acc, f| acc.mul(f));
        terms.push(TupleTerm { label: format!("{:?}", tuple.alphas), alphas: tuple.alphas, factors, product });
    }
    let total = Estimate::sum(terms.iter().map(|t| &t.product));
    Ok(RhsBreakdown { total, terms })
}

/// Right-hand side of the weighted multilinear Poincaré inequality on `B`.
pub fn poincare_rhs(
    group: &CarnotGroup,
    fs: &[TestFunction],
    vs: &[Weight],
    ps: &[f64],
    ball: &GaugeBall,
    k: u32,
    scheme: &QuadratureScheme,
) -> Result<RhsBreakdown> {
    let domains = vec![ball.clone(); fs.len()];
    tuple_sum(group, fs, vs, ps, &domains, k, scheme)
}

/// Support balls of every slot, required for global integrals.
pub fn support_balls(group: &CarnotGroup, fs: &[TestFunction]) -> Result<Vec<GaugeBall>> {
    fs.iter()
        .map(|f| {
            f.support(group)
                .ok_or_else(|| LabError::Domain("global integrals need compactly supported functions".into()))
        })
        .collect()
}

/// Right-hand side of the higher-order Sobolev inequality over each slot's support.
pub fn sobolev_rhs(
    group: &CarnotGroup,
    fs: &[TestFunction],
    vs: &[Weight],
    ps: &[f64],
    k: u32,
    scheme: &QuadratureScheme,
) -> Result<RhsBreakdown> {
    let domains = support_balls(group, fs)?;
    tuple_sum(group, fs, vs, ps, &domains, k, scheme)
}

/// `Σ_i ‖𝓛 f_i · v_i‖_{p_i} ∏_{j≠i} ‖f_j v_j‖_{p_j}` over support balls.
pub fn sobolev_sublaplacian_rhs(
    group: &CarnotGroup,
    fs: &[TestFunction],
    vs: &[Weight],
    ps: &[f64],
    scheme: &QuadratureScheme,
) -> Result<RhsBreakdown> {
    check_slots(fs, vs, ps)?;
    let domains = support_balls(group, fs)?;
    let scheme = ball_scheme(scheme);
    let m = fs.len();
    let mut lap = Vec::with_capacity(m);
    let mut plain = Vec::with_capacity(m);
    for i in 0..m {
        check_capability(&fs[i], 2)?;
        let nodes = ball_nodes(group, &domains[i], &scheme.fork(i as u64))?;
        let lvals = nodes.evaluate(|y| sub_laplacian(group, &fs[i], y).unwrap_or(f64::NAN).abs() * vs[i].eval(group, y))?;
        lap.push(nodes.lp_norm_values(&lvals, ps[i]));
        let pvals = nodes.evaluate(|y| fs[i].value(group, y).abs() * vs[i].eval(group, y))?;
        plain.push(nodes.lp_norm_values(&pvals, ps[i]));
    }
    let mut terms = Vec::with_capacity(m);
    for i in 0..m {
        let factors: Vec<Estimate> = (0..m).map(|j| if j == i { lap[j] } else { plain[j] }).collect();
        let product = factors.iter().skip(1).fold(factors[0], |acc, f| acc.mul(f));
        terms.push(TupleTerm { label: format!("sub-laplacian slot {}", i + 1), alphas: Vec::new(), factors, product });
    }
    let total = Estimate::sum(terms.iter().map(|t| &t.product));
    Ok(RhsBreakdown { total, terms })
}
