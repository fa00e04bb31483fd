//! Integration engines on gauge balls and on product domains with a
//! singular kernel.
//!
//! Ball schemes draw nodes `y = c ⋄ δ_r z` with `z` uniform in the unit gauge
//! ball; each node carries weight `|B| / N`, so constants integrate exactly.
//! The singular engine uses polar coordinates around `x` in every slot: with
//! `ρ_i = ‖x⁻¹ ⋄ y_i‖` and `S = Σ ρ_i`,
//!
//! ```text
//! ∫ F(y⃗) d(x, y⃗)^{τ − mQ} dy⃗ = C_m ∫_0^R S^{τ−1} E[F] dS,   C_m = (Q! c_d)^m / (mQ − 1)!
//! ```
//!
//! where the expectation is over unit-sphere directions and simplex weights
//! `ρ / S ~ Dirichlet(Q, …, Q)`. The radial integral is stratified into dyadic
//! shells of `[0, R]` and importance-sampled with density `∝ S^{τ−1}` inside
//! each shell, which removes the kernel singularity from the estimator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carnot::{CarnotGroup, GaugeBall};
use crate::error::{LabError, Result};
use crate::reduce::{block_sums, mean_and_se, pairwise_sum};
use crate::rng::StreamKey;

pub const MIN_MC_SAMPLES: usize = 1000;
pub const MIN_ANNULI_LEVELS: usize = 4;
pub const DEFAULT_ANNULI_LEVELS: usize = 24;
const MIN_PER_SHELL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SchemeKind {
    UniformMc { samples: usize },
    AnnuliMc { samples: usize, levels: usize },
    TensorGrid { points_per_axis: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub kind: SchemeKind,
    pub seed: u64,
    /// Sub-stream selector; see [`fork`](Self::fork).
    #[serde(default)]
    pub stream: u64,
}

impl QuadratureScheme {
    pub fn uniform(samples: usize, seed: u64) -> Self {
        QuadratureScheme { kind: SchemeKind::UniformMc { samples }, seed, stream: 0 }
    }

    pub fn annuli(samples: usize, levels: usize, seed: u64) -> Self {
        QuadratureScheme { kind: SchemeKind::AnnuliMc { samples, levels }, seed, stream: 0 }
    }

    pub fn grid(points_per_axis: usize) -> Self {
        QuadratureScheme { kind: SchemeKind::TensorGrid { points_per_axis }, seed: 0, stream: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SchemeKind::UniformMc { samples } | SchemeKind::AnnuliMc { samples, .. } if samples < MIN_MC_SAMPLES => {
                Err(LabError::Domain(format!("Monte Carlo schemes need at least {MIN_MC_SAMPLES} samples")))
            }
            SchemeKind::AnnuliMc { levels, .. } if levels < MIN_ANNULI_LEVELS => {
                Err(LabError::Domain(format!("annuli schemes need at least {MIN_ANNULI_LEVELS} levels")))
            }
            SchemeKind::TensorGrid { points_per_axis: 0 } => {
                Err(LabError::Domain("tensor grids need at least one point per axis".into()))
            }
            _ => Ok(()),
        }
    }

    /// An independent scheme for a sub-computation identified by `tag`.
    pub fn fork(&self, tag: u64) -> Self {
        let mut s = *self;
        s.stream = crate::rng::mix64(self.stream ^ crate::rng::mix64(tag.wrapping_add(0x51)));
        s
    }

    pub fn fork_label(&self, label: &str) -> Self {
        self.fork(crate::rng::label_hash(label))
    }

    fn key(&self, op: &str) -> StreamKey {
        StreamKey::new(self.seed).fork(self.stream).fork_label(op)
    }

    /// Sample count per estimate (grid: points per axis).
    pub fn samples(&self) -> usize {
        match self.kind {
            SchemeKind::UniformMc { samples } | SchemeKind::AnnuliMc { samples, .. } => samples,
            SchemeKind::TensorGrid { points_per_axis } => points_per_axis,
        }
    }

    /// Same scheme with the sample count multiplied by `factor`.
    pub fn scaled_samples(&self, factor: usize) -> Self {
        let mut s = *self;
        s.kind = match self.kind {
            SchemeKind::UniformMc { samples } => SchemeKind::UniformMc { samples: samples * factor },
            SchemeKind::AnnuliMc { samples, levels } => SchemeKind::AnnuliMc { samples: samples * factor, levels },
            SchemeKind::TensorGrid { points_per_axis } => {
                SchemeKind::TensorGrid { points_per_axis: points_per_axis * factor }
            }
        };
        s
    }

    pub fn is_monte_carlo(&self) -> bool {
        !matches!(self.kind, SchemeKind::TensorGrid { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, std_error: 0.0, samples: 0, seed: 0 }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.std_error / self.value.abs()
        }
    }

    /// Product with relative errors combined in quadrature.
    pub fn mul(&self, other: &Estimate) -> Estimate {
        let value = self.value * other.value;
        let std_error = if value == 0.0 {
            (self.std_error * other.value).hypot(other.std_error * self.value)
        } else {
            value.abs() * self.relative_error().hypot(other.relative_error())
        };
        Estimate { value, std_error, samples: self.samples.max(other.samples), seed: self.seed }
    }

    /// Sum with absolute errors combined in quadrature.
    pub fn add(&self, other: &Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            std_error: self.std_error.hypot(other.std_error),
            samples: self.samples.max(other.samples),
            seed: self.seed,
        }
    }

    pub fn scale(&self, s: f64) -> Estimate {
        Estimate { value: self.value * s, std_error: self.std_error * s.abs(), ..*self }
    }

    /// `value^e` with a first-order error.
    pub fn powf(&self, e: f64) -> Estimate {
        let value = self.value.powf(e);
        let std_error = if self.value > 0.0 { (e * value / self.value).abs() * self.std_error } else { 0.0 };
        Estimate { value, std_error, ..*self }
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Estimate>) -> Estimate {
        items.into_iter().fold(Estimate::exact(0.0), |acc, e| acc.add(e))
    }
}

/// Quadrature nodes on one ball, shared between evaluations of different integrands.
#[derive(Clone, Debug)]
pub struct NodeSet {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    monte_carlo: bool,
    volume: f64,
    seed: u64,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn is_monte_carlo(&self) -> bool {
        self.monte_carlo
    }

    /// `f` at every node, in node order; non-finite values are an error.
    pub fn evaluate<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let vals: Vec<f64> = (0..self.len()).into_par_iter().map(|i| f(self.point(i))).collect();
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Integration { point: self.point(i).to_vec(), value: vals[i] });
        }
        Ok(vals)
    }

    /// `∫ g` from node values of `g`.
    pub fn integrate_values(&self, vals: &[f64]) -> Estimate {
        let n = self.len();
        let samples = n as u64;
        if self.monte_carlo {
            let (s, s2) = block_sums(n, |i| vals[i]);
            let (mean, se) = mean_and_se(s, s2, n);
            Estimate { value: self.volume * mean, std_error: self.volume * se, samples, seed: self.seed }
        } else {
            let terms: Vec<f64> = vals.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
            Estimate { value: pairwise_sum(&terms), std_error: 0.0, samples, seed: self.seed }
        }
    }

    /// `(∫ |g|^p)^{1/p}` from node values of `g`.
    pub fn lp_norm_values(&self, vals: &[f64], p: f64) -> Estimate {
        let powered: Vec<f64> = vals.iter().map(|v| v.abs().powf(p)).collect();
        self.integrate_values(&powered).powf(1.0 / p)
    }

    pub fn integrate<F>(&self, f: F) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        Ok(self.integrate_values(&self.evaluate(f)?))
    }
}

/// Nodes for `ball` under a uniform-MC or tensor-grid scheme.
pub fn ball_nodes(group: &CarnotGroup, ball: &GaugeBall, scheme: &QuadratureScheme) -> Result<NodeSet> {
    scheme.validate()?;
    let n = group.ambient_dim();
    if ball.center.dim() != n {
        return Err(LabError::Structural("ball center dimension does not match group".into()));
    }
    let volume = group.ball_volume(ball.radius)?;
    let place = |z: &mut [f64], out: &mut [f64]| {
        group.dilate_in_place(ball.radius, z);
        group.compose_into(ball.center.coords(), z, out);
    };
    match scheme.kind {
        SchemeKind::UniformMc { samples } | SchemeKind::AnnuliMc { samples, .. } => {
            let key = scheme.key("ball-nodes");
            let draws: Vec<(Vec<f64>, u32)> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = key.sample(i as u64);
                    let mut z = vec![0.0; n];
                    let attempts = group.sample_unit_ball(&mut rng, &mut z);
                    let mut y = vec![0.0; n];
                    place(&mut z, &mut y);
                    (y, attempts)
                })
                .collect();
            let attempts: u64 = draws.iter().map(|d| d.1 as u64).sum();
            log::debug!("ball sampling acceptance {:.3}", samples as f64 / attempts as f64);
            let points: Vec<f64> = draws.into_iter().flat_map(|d| d.0).collect();
            Ok(NodeSet {
                dim: n,
                points,
                weights: vec![volume / samples as f64; samples],
                monte_carlo: true,
                volume,
                seed: scheme.seed,
            })
        }
        SchemeKind::TensorGrid { points_per_axis } => {
            let h = 2.0 / points_per_axis as f64;
            let cell = h.powi(n as i32) * ball.radius.powi(group.homogeneous_dimension() as i32);
            let total = points_per_axis.checked_pow(n as u32).ok_or_else(|| {
                LabError::Domain("tensor grid too large".into())
            })?;
            let mut points = Vec::new();
            let mut weights = Vec::new();
            let mut z = vec![0.0; n];
            let mut y = vec![0.0; n];
            for code in 0..total {
                let mut c = code;
                for v in z.iter_mut() {
                    *v = -1.0 + h * ((c % points_per_axis) as f64 + 0.5);
                    c /= points_per_axis;
                }
                if group.gauge_polynomial(&z[..]) < 1.0 {
                    place(&mut z, &mut y);
                    points.extend_from_slice(&y);
                    weights.push(cell);
                }
            }
            Ok(NodeSet { dim: n, points, weights, monte_carlo: false, volume, seed: scheme.seed })
        }
    }
}

/// `∫_B f`.
pub fn integrate_ball<F>(group: &CarnotGroup, f: F, ball: &GaugeBall, scheme: &QuadratureScheme) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    ball_nodes(group, ball, scheme)?.integrate(f)
}

/// `(∫_B (|f| w)^p)^{1/p}`; a quasi-norm for `p < 1`.
pub fn lp_norm_ball<F, W>(
    group: &CarnotGroup,
    f: F,
    w: W,
    p: f64,
    ball: &GaugeBall,
    scheme: &QuadratureScheme,
) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
    W: Fn(&[f64]) -> f64 + Sync,
{
    if !(p > 0.0) {
        return Err(LabError::Domain(format!("L^p exponent must be positive, got {p}")));
    }
    let nodes = ball_nodes(group, ball, scheme)?;
    let vals = nodes.evaluate(|y| f(y).abs() * w(y))?;
    Ok(nodes.lp_norm_values(&vals, p))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `C_m = (Q! c_d)^m / (mQ − 1)!`, the polar-coordinate constant on `G^m`.
pub fn polar_constant(group: &CarnotGroup, m: usize) -> f64 {
    let q = group.homogeneous_dimension();
    let cd = group.volume_constant().value;
    // evaluate in logs: Q! c_d can be large for big Q
    let log = m as f64 * (ln_factorial(q) + cd.ln()) - ln_factorial(m * q - 1);
    log.exp()
}

fn ln_factorial(n: usize) -> f64 {
    if n < 20 {
        factorial(n).ln()
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

/// Per-shell diagnostics of a singular-product estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularEstimate {
    pub estimate: Estimate,
    /// Outer radius `R` of the radial integral.
    pub reach: f64,
    /// Share of the kernel mass in the innermost shell `[0, R·2^{-levels}]`.
    pub core_fraction: f64,
}

fn check_singular(group: &CarnotGroup, m: usize, tau: f64, supports: &[GaugeBall]) -> Result<()> {
    let mq = (m * group.homogeneous_dimension()) as f64;
    if m == 0 || supports.len() != m {
        return Err(LabError::Structural(format!("{} support balls given for {m} slots", supports.len())));
    }
    if !(tau > 0.0) {
        return Err(LabError::Domain(format!("fractional order must be positive, got {tau}")));
    }
    if tau > mq {
        return Err(LabError::Hypothesis(format!("fractional order {tau} exceeds mQ = {mq}")));
    }
    Ok(())
}

/// `∫_{(ℝⁿ)^m} F(y⃗) d(x, y⃗)^{τ − mQ} dy⃗` with `F` vanishing outside the product of `supports`.
///
/// `integrand` receives the `m` points concatenated into one slice of length `m·n`.
pub fn integrate_singular_product<F>(
    group: &CarnotGroup,
    m: usize,
    integrand: F,
    x: &[f64],
    tau: f64,
    supports: &[GaugeBall],
    scheme: &QuadratureScheme,
) -> Result<SingularEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_singular(group, m, tau, supports)?;
    scheme.validate()?;
    let n = group.ambient_dim();
    if x.len() != n {
        return Err(LabError::Structural("evaluation point dimension does not match group".into()));
    }
    let mq = (m * group.homogeneous_dimension()) as f64;
    let kernel_exp = tau - mq;
    let kernel = |ys: &[f64]| -> f64 {
        let d: f64 = (0..m).map(|i| group.distance_slice(x, &ys[i * n..(i + 1) * n])).sum();
        if kernel_exp == 0.0 {
            1.0
        } else {
            d.powf(kernel_exp)
        }
    };
    let reach: f64 = supports
        .iter()
        .map(|b| {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let rel = group.compose_slice(&neg, b.center.coords());
            group.translated_ball_reach(&rel, b.radius)
        })
        .sum();
    match scheme.kind {
        SchemeKind::AnnuliMc { samples, levels } => {
            annuli_estimate(group, m, &integrand, x, tau, reach, samples, levels, scheme)
        }
        SchemeKind::UniformMc { samples } => {
            let key = scheme.key("singular-uniform");
            let volume: f64 =
                supports.iter().map(|b| group.ball_volume(b.radius)).collect::<Result<Vec<_>>>()?.iter().product();
            let eval = |i: usize| -> f64 {
                let mut rng = key.sample(i as u64);
                let mut ys = vec![0.0; m * n];
                let mut z = vec![0.0; n];
                for (slot, b) in supports.iter().enumerate() {
                    group.sample_unit_ball(&mut rng, &mut z);
                    group.dilate_in_place(b.radius, &mut z);
                    group.compose_into(b.center.coords(), &z, &mut ys[slot * n..(slot + 1) * n]);
                }
                let f = integrand(&ys);
                if f == 0.0 {
                    0.0
                } else {
                    f * kernel(&ys)
                }
            };
            let (s, s2) = block_sums(samples, eval);
            check_finite(s, s2)?;
            let (mean, se) = mean_and_se(s, s2, samples);
            Ok(SingularEstimate {
                estimate: Estimate {
                    value: volume * mean,
                    std_error: volume * se,
                    samples: samples as u64,
                    seed: scheme.seed,
                },
                reach,
                core_fraction: 0.0,
            })
        }
        SchemeKind::TensorGrid { points_per_axis } => {
            let slot_nodes: Vec<NodeSet> =
                supports.iter().map(|b| ball_nodes(group, b, scheme)).collect::<Result<_>>()?;
            let counts: Vec<usize> = slot_nodes.iter().map(|s| s.len()).collect();
            let total: usize = counts.iter().product();
            let eval = |code: usize| -> f64 {
                let mut c = code;
                let mut ys = vec![0.0; m * n];
                let mut w = 1.0;
                for (slot, nodes) in slot_nodes.iter().enumerate() {
                    let i = c % counts[slot];
                    c /= counts[slot];
                    ys[slot * n..(slot + 1) * n].copy_from_slice(nodes.point(i));
                    w *= nodes.weight(i);
                }
                let f = integrand(&ys);
                if f == 0.0 {
                    return 0.0;
                }
                let k = kernel(&ys);
                if k.is_finite() {
                    w * f * k
                } else {
                    0.0
                }
            };
            let (s, s2) = block_sums(total, eval);
            check_finite(s, s2)?;
            let _ = points_per_axis;
            Ok(SingularEstimate {
                estimate: Estimate { value: s, std_error: 0.0, samples: total as u64, seed: scheme.seed },
                reach,
                core_fraction: 0.0,
            })
        }
    }
}

fn check_finite(s: f64, s2: f64) -> Result<()> {
    if s.is_finite() && s2.is_finite() {
        Ok(())
    } else {
        Err(LabError::Integration { point: Vec::new(), value: s })
    }
}

#[allow(clippy::too_many_arguments)]
fn annuli_estimate<F>(
    group: &CarnotGroup,
    m: usize,
    integrand: &F,
    x: &[f64],
    tau: f64,
    reach: f64,
    samples: usize,
    levels: usize,
    scheme: &QuadratureScheme,
) -> Result<SingularEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = group.ambient_dim();
    let q = group.homogeneous_dimension();
    let c_m = polar_constant(group, m);
    // shells [a_j, b_j): j < levels are dyadic, the last is the core [0, R 2^{-levels})
    let mut shells: Vec<(f64, f64)> = (0..levels)
        .map(|j| (reach * 0.5f64.powi(j as i32 + 1), reach * 0.5f64.powi(j as i32)))
        .collect();
    shells.push((0.0, reach * 0.5f64.powi(levels as i32)));
    let masses: Vec<f64> = shells.iter().map(|&(a, b)| (b.powf(tau) - a.powf(tau)) / tau).collect();
    let total_mass: f64 = masses.iter().sum();
    let budget = samples.saturating_sub(MIN_PER_SHELL * shells.len());
    let alloc: Vec<usize> =
        masses.iter().map(|mj| MIN_PER_SHELL + (budget as f64 * mj / total_mass).floor() as usize).collect();
    let key = scheme.key("singular-annuli");
    let mut value = 0.0;
    let mut var = 0.0;
    let mut used = 0u64;
    for (j, (&(a, b), &count)) in shells.iter().zip(&alloc).enumerate() {
        let shell_key = key.fork(j as u64);
        let (at, bt) = (a.powf(tau), b.powf(tau));
        let eval = |i: usize| -> f64 {
            let mut rng = shell_key.sample(i as u64);
            let s = (at + rng.next_f64() * (bt - at)).powf(1.0 / tau);
            let gammas: Vec<f64> = (0..m).map(|_| rng.gamma_int(q)).collect();
            let gsum: f64 = gammas.iter().sum();
            let mut ys = vec![0.0; m * n];
            let mut z = vec![0.0; n];
            for slot in 0..m {
                group.sample_unit_ball(&mut rng, &mut z);
                let norm = group.gauge(&z);
                let rho = s * gammas[slot] / gsum;
                // δ_ρ(δ_{1/‖z‖} z): a point at distance ρ from the origin
                group.dilate_in_place(rho / norm, &mut z);
                group.compose_into(x, &z, &mut ys[slot * n..(slot + 1) * n]);
            }
            integrand(&ys)
        };
        let (sum, sum_sq) = block_sums(count, eval);
        check_finite(sum, sum_sq)?;
        let (mean, se) = mean_and_se(sum, sum_sq, count);
        value += c_m * masses[j] * mean;
        var += (c_m * masses[j] * se).powi(2);
        used += count as u64;
    }
    Ok(SingularEstimate {
        estimate: Estimate { value, std_error: var.sqrt(), samples: used, seed: scheme.seed },
        reach,
        core_fraction: masses[levels] / total_mass,
    })
}
