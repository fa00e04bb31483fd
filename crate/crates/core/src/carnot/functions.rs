//! Catalog of smooth test functions and their horizontal derivatives.
//!
//! For left-invariant generators,
//!
//! ```text
//! X_{w_0} X_{w_1} ⋯ X_{w_{k-1}} f(x) = ∂_{s_0} ⋯ ∂_{s_{k-1}} f(x ⋄ s_0 e_{w_0} ⋄ ⋯ ⋄ s_{k-1} e_{w_{k-1}}) |_{s=0}
//! ```
//!
//! so derivatives of catalog functions are computed exactly by evaluating
//! them on [`Jet`]s. Opaque [`CustomFunction`]s fall back to nested central
//! differences on the same one-parameter translations.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{CarnotGroup, GaugeBall, GradedPolynomial, Point};
use crate::error::{LabError, Result};
use crate::jet::{Jet, Scalar, MAX_JET_ORDER};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpProfile {
    /// `exp(1 - 1/(1-u))` on `u < 1`: C^∞, peak value 1.
    #[default]
    Smooth,
    /// `(1-u)^power` on `u < 1`: C^{power-1}.
    Polynomial { power: u32 },
}

/// An opaque function; derivatives come from finite differences.
#[derive(Clone)]
pub struct CustomFunction {
    pub name: String,
    pub func: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    pub smoothness: usize,
    pub support: Option<GaugeBall>,
}

impl fmt::Debug for CustomFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomFunction({})", self.name)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TestFunction {
    /// `amplitude · profile(N(center⁻¹ ⋄ x) / scale^deg N)`, supported in `B(center, scale)`.
    Bump {
        center: Point,
        scale: f64,
        #[serde(default)]
        profile: BumpProfile,
        #[serde(default = "unit_amplitude")]
        amplitude: f64,
    },
    Polynomial { poly: GradedPolynomial },
    PolyTimesBump {
        poly: GradedPolynomial,
        center: Point,
        scale: f64,
        #[serde(default)]
        profile: BumpProfile,
    },
    /// `ε ψ(x₁/ε)`, the smoothed ramp of the second-order counterexample.
    SmoothedRamp { eps: f64 },
    /// `x ↦ inner(δ_λ x)`.
    Dilated { inner: Box<TestFunction>, lambda: f64 },
    /// `x ↦ inner(by⁻¹ ⋄ x)`.
    Translated { inner: Box<TestFunction>, by: Point },
    Scaled { factor: f64, inner: Box<TestFunction> },
    Product { factors: Vec<TestFunction> },
    Sum { terms: Vec<TestFunction> },
    #[serde(skip)]
    Custom(CustomFunction),
}

fn profile_eval<T: Scalar>(profile: BumpProfile, u: T) -> T {
    if u.value() >= 1.0 {
        return T::zero();
    }
    match profile {
        BumpProfile::Smooth => (-(u / (-u + 1.0))).exp(),
        BumpProfile::Polynomial { power } => (-u + 1.0).powi(power as i32),
    }
}

fn profile_smoothness(profile: BumpProfile) -> usize {
    match profile {
        BumpProfile::Smooth => usize::MAX,
        BumpProfile::Polynomial { power } => power.saturating_sub(1) as usize,
    }
}

/// `ψ(t)` for `|t| ≤ 1`: `((t+1)³ − (t+1)⁴/4)/4`.
pub(crate) fn ramp_core<T: Scalar>(t: T) -> T {
    let s = t + 1.0;
    let s3 = s * s * s;
    (s3 - s3 * s * 0.25) * 0.25
}

fn unit_amplitude() -> f64 {
    1.0
}

impl TestFunction {
    pub fn bump(center: Point, scale: f64) -> Self {
        TestFunction::Bump { center, scale, profile: BumpProfile::Smooth, amplitude: 1.0 }
    }

    pub fn poly_bump(center: Point, scale: f64, power: u32) -> Self {
        TestFunction::Bump { center, scale, profile: BumpProfile::Polynomial { power }, amplitude: 1.0 }
    }

    pub fn polynomial(poly: GradedPolynomial) -> Self {
        TestFunction::Polynomial { poly }
    }

    pub fn custom(
        name: impl Into<String>,
        smoothness: usize,
        support: Option<GaugeBall>,
        func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TestFunction::Custom(CustomFunction { name: name.into(), func: Arc::new(func), smoothness, support })
    }

    pub fn dilated(self, lambda: f64) -> Self {
        TestFunction::Dilated { inner: Box::new(self), lambda }
    }

    pub fn translated(self, by: Point) -> Self {
        TestFunction::Translated { inner: Box::new(self), by }
    }

    pub fn scaled(self, factor: f64) -> Self {
        TestFunction::Scaled { factor, inner: Box::new(self) }
    }

    pub fn product(factors: Vec<TestFunction>) -> Self {
        TestFunction::Product { factors }
    }

    /// True when derivatives can be evaluated exactly on jets.
    pub fn is_analytic(&self) -> bool {
        match self {
            TestFunction::Custom(_) => false,
            TestFunction::Dilated { inner, .. }
            | TestFunction::Translated { inner, .. }
            | TestFunction::Scaled { inner, .. } => inner.is_analytic(),
            TestFunction::Product { factors } => factors.iter().all(|f| f.is_analytic()),
            TestFunction::Sum { terms } => terms.iter().all(|f| f.is_analytic()),
            _ => true,
        }
    }

    /// Highest derivative order that is continuous everywhere.
    pub fn smoothness(&self) -> usize {
        match self {
            TestFunction::Bump { profile, .. } | TestFunction::PolyTimesBump { profile, .. } => {
                profile_smoothness(*profile)
            }
            TestFunction::Polynomial { .. } => usize::MAX,
            TestFunction::SmoothedRamp { .. } => 2,
            TestFunction::Dilated { inner, .. }
            | TestFunction::Translated { inner, .. }
            | TestFunction::Scaled { inner, .. } => inner.smoothness(),
            TestFunction::Product { factors } => factors.iter().map(|f| f.smoothness()).min().unwrap_or(usize::MAX),
            TestFunction::Sum { terms } => terms.iter().map(|f| f.smoothness()).min().unwrap_or(usize::MAX),
            TestFunction::Custom(c) => c.smoothness,
        }
    }

    /// A gauge ball outside of which the function vanishes, when one is known.
    pub fn support(&self, group: &CarnotGroup) -> Option<GaugeBall> {
        match self {
            TestFunction::Bump { center, scale, .. } | TestFunction::PolyTimesBump { center, scale, .. } => {
                Some(GaugeBall { center: center.clone(), radius: *scale })
            }
            TestFunction::Polynomial { .. } | TestFunction::SmoothedRamp { .. } => None,
            TestFunction::Dilated { inner, lambda } => inner.support(group).map(|b| GaugeBall {
                center: group.dilate(1.0 / lambda, &b.center).expect("positive dilation"),
                radius: b.radius / lambda,
            }),
            TestFunction::Translated { inner, by } => inner.support(group).map(|b| GaugeBall {
                center: Point(group.compose_slice(by.coords(), b.center.coords())),
                radius: b.radius,
            }),
            TestFunction::Scaled { inner, .. } => inner.support(group),
            TestFunction::Product { factors } => factors
                .iter()
                .filter_map(|f| f.support(group))
                .min_by(|a, b| a.radius.total_cmp(&b.radius)),
            TestFunction::Sum { terms } => {
                let supports: Vec<Option<GaugeBall>> = terms.iter().map(|t| t.support(group)).collect();
                match supports.first() {
                    Some(Some(first)) if supports.iter().all(|s| s.as_ref() == Some(first)) => Some(first.clone()),
                    _ => None,
                }
            }
            TestFunction::Custom(c) => c.support.clone(),
        }
    }

    /// Evaluation generic over the scalar type. Custom functions only see the real part.
    pub fn eval_generic<T: Scalar>(&self, group: &CarnotGroup, x: &[T]) -> T {
        match self {
            TestFunction::Bump { center, scale, profile, amplitude } => {
                bump_eval(group, center, *scale, *profile, x) * *amplitude
            }
            TestFunction::PolyTimesBump { poly, center, scale, profile } => {
                let b = bump_eval(group, center, *scale, *profile, x);
                if b.value() == 0.0 {
                    return T::zero();
                }
                poly.eval(x) * b
            }
            TestFunction::Polynomial { poly } => poly.eval(x),
            TestFunction::SmoothedRamp { eps } => {
                let t = x[0] / *eps;
                if t.value() <= -1.0 {
                    T::zero()
                } else if t.value() >= 1.0 {
                    x[0]
                } else {
                    ramp_core(t) * *eps
                }
            }
            TestFunction::Dilated { inner, lambda } => {
                let mut y = x.to_vec();
                group.dilate_in_place(*lambda, &mut y);
                inner.eval_generic(group, &y)
            }
            TestFunction::Translated { inner, by } => {
                let neg: Vec<T> = by.coords().iter().map(|&v| T::constant(-v)).collect();
                let y = group.compose_slice(&neg, x);
                inner.eval_generic(group, &y)
            }
            TestFunction::Scaled { factor, inner } => inner.eval_generic(group, x) * *factor,
            TestFunction::Product { factors } => {
                let mut acc = T::constant(1.0);
                for f in factors {
                    acc = acc * f.eval_generic(group, x);
                }
                acc
            }
            TestFunction::Sum { terms } => {
                let mut acc = T::zero();
                for f in terms {
                    acc = acc + f.eval_generic(group, x);
                }
                acc
            }
            TestFunction::Custom(c) => {
                let xs: Vec<f64> = x.iter().map(|v| v.value()).collect();
                T::constant((c.func)(&xs))
            }
        }
    }

    pub fn value(&self, group: &CarnotGroup, x: &[f64]) -> f64 {
        self.eval_generic(group, x)
    }
}

fn bump_eval<T: Scalar>(group: &CarnotGroup, center: &Point, scale: f64, profile: BumpProfile, x: &[T]) -> T {
    let neg: Vec<T> = center.coords().iter().map(|&v| T::constant(-v)).collect();
    let w = group.compose_slice(&neg, x);
    let u = group.gauge_polynomial(&w) / scale.powi(group.gauge_polynomial_degree() as i32);
    profile_eval(profile, u)
}

/// Generator word of `X^α = X₁^{α₁}(X₂^{α₂}(⋯ X_l^{α_l}))`.
pub fn alpha_word(alpha: &[u32]) -> Vec<usize> {
    let mut word = Vec::new();
    for (j, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            word.push(j);
        }
    }
    word
}

/// `X^α f(x)` for a multi-index over the generators.
pub fn horizontal_derivative(group: &CarnotGroup, f: &TestFunction, alpha: &[u32], x: &[f64]) -> Result<f64> {
    if alpha.len() != group.generators() {
        return Err(LabError::Structural(format!(
            "multi-index has length {}, group has {} generators",
            alpha.len(),
            group.generators()
        )));
    }
    derivative_word(group, f, &alpha_word(alpha), x)
}

/// `X_{w_0} ⋯ X_{w_{k-1}} f(x)`.
pub fn derivative_word(group: &CarnotGroup, f: &TestFunction, word: &[usize], x: &[f64]) -> Result<f64> {
    if x.len() != group.ambient_dim() {
        return Err(LabError::Structural("point dimension does not match group".into()));
    }
    if word.iter().any(|&j| j >= group.generators()) {
        return Err(LabError::Structural("generator index out of range".into()));
    }
    let order = word.len();
    if order > f.smoothness() {
        return Err(LabError::Capability { requested: order, available: f.smoothness() });
    }
    if order == 0 {
        return Ok(f.value(group, x));
    }
    if f.is_analytic() {
        if order > MAX_JET_ORDER {
            return Err(LabError::Capability { requested: order, available: MAX_JET_ORDER });
        }
        Ok(jet_derivative(group, f, word, x))
    } else {
        Ok(finite_difference_derivative(group, |y| f.value(group, y), word, x))
    }
}

fn jet_derivative(group: &CarnotGroup, f: &TestFunction, word: &[usize], x: &[f64]) -> f64 {
    let k = word.len();
    let n = group.ambient_dim();
    let mut p: Vec<Jet> = x.iter().map(|&v| Jet::constant(v)).collect();
    for (i, &j) in word.iter().enumerate() {
        let mut step = vec![Jet::constant(0.0); n];
        step[j] = Jet::unit(i, k, 1.0);
        p = group.compose_slice(&p, &step);
    }
    let out = f.eval_generic(group, &p);
    if out.vars() < k {
        // the function did not depend on every parameter
        return 0.0;
    }
    out.mixed_part()
}

const FD_WEIGHTS: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

/// Mixed partial along the translation word by tensor 4th-order central
/// stencils with one Richardson step. Step `h = ε^{1/(k+3)} · max(1, ‖x‖_∞)`.
pub fn finite_difference_derivative<F>(group: &CarnotGroup, f: F, word: &[usize], x: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let k = word.len();
    if k == 0 {
        return f(x);
    }
    let magnitude = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let h = f64::EPSILON.powf(1.0 / (k as f64 + 3.0)) * magnitude;
    let stencil = |h: f64| -> f64 {
        let n = group.ambient_dim();
        let total = 4usize.pow(k as u32);
        let mut acc = 0.0;
        for code in 0..total {
            let mut c = code;
            let mut weight = 1.0;
            let mut p = x.to_vec();
            let mut tmp = vec![0.0; n];
            for &j in word {
                let (off, w) = FD_WEIGHTS[c % 4];
                c /= 4;
                weight *= w;
                let mut step = vec![0.0; n];
                step[j] = off * h;
                group.compose_into(&p, &step, &mut tmp);
                std::mem::swap(&mut p, &mut tmp);
            }
            acc += weight * f(&p);
        }
        acc / (12.0 * h).powi(k as i32)
    };
    let coarse = stencil(h);
    let fine = stencil(h / 2.0);
    (16.0 * fine - coarse) / 15.0
}

/// `𝓛 f(x) = Σ_j X_j² f(x)`.
pub fn sub_laplacian(group: &CarnotGroup, f: &TestFunction, x: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..group.generators() {
        acc += derivative_word(group, f, &[j, j], x)?;
    }
    Ok(acc)
}
