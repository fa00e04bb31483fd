//! Homogeneous Carnot groups of step at most two.
//!
//! Points are written in exponential coordinates, so the identity is the
//! origin and the inverse of `x` is `-x`. Layer one carries the generators;
//! the step-two law is
//!
//! ```text
//! (x¹, x²) ⋄ (y¹, y²) = (x¹ + y¹, x² + y² + ½ B(x¹, y¹)),   B_l(a, b) = aᵀ J_l b
//! ```
//!
//! for skew-symmetric forms `J_l`. Distances are measured with a homogeneous
//! gauge: the Euclidean norm in step one and `(|x¹|⁴ + |x²|²)^{1/4}` in step two.

pub mod constants;
pub mod functions;
pub mod poly;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::jet::Scalar;
use crate::rng::SampleRng;

pub use constants::{ConstantsCache, VolumeConstant};
pub use functions::{BumpProfile, TestFunction};
pub use poly::{monomial_basis, GradedPolynomial, MultiIndex};

/// Largest supported ambient dimension.
pub const MAX_AMBIENT_DIM: usize = 16;

/// A point of the group, as exponential coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(n: usize) -> Self {
        Point(vec![0.0; n])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Coordinates of layer `i` (1-based) under `group`'s stratification.
    pub fn layer<'a>(&'a self, group: &CarnotGroup, i: usize) -> &'a [f64] {
        let start: usize = group.layers[..i - 1].iter().sum();
        &self.0[start..start + group.layers[i - 1]]
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

/// `B(center, radius) = {y : ‖center⁻¹ ⋄ y‖ < radius}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeBall {
    pub center: Point,
    pub radius: f64,
}

impl GaugeBall {
    pub fn new(group: &CarnotGroup, center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(LabError::Domain(format!("ball radius must be positive, got {radius}")));
        }
        group.check_dim(&center)?;
        Ok(GaugeBall { center, radius })
    }

    pub fn centered(group: &CarnotGroup, radius: f64) -> Result<Self> {
        Self::new(group, Point::origin(group.ambient_dim()), radius)
    }

    pub fn contains(&self, group: &CarnotGroup, y: &[f64]) -> bool {
        group.distance_slice(self.center.coords(), y) < self.radius
    }

    pub fn volume(&self, group: &CarnotGroup) -> f64 {
        group.volume_constant().value * self.radius.powi(group.homogeneous_dimension() as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKind {
    Euclidean,
    Heisenberg,
    Step2,
}

/// A skew-symmetric bilinear form on the first layer, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
struct SkewForm {
    entries: Vec<(usize, usize, f64)>,
    frobenius: f64,
}

impl SkewForm {
    fn from_dense(m: &[Vec<f64>]) -> Self {
        let mut entries = Vec::new();
        let mut fro = 0.0;
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    entries.push((i, j, v));
                    fro += v * v;
                }
            }
        }
        SkewForm { entries, frobenius: fro.sqrt() }
    }

    #[inline]
    fn apply<T: Scalar>(&self, a: &[T], b: &[T]) -> T {
        let mut acc = T::zero();
        for &(i, j, v) in &self.entries {
            acc = acc + a[i] * b[j] * v;
        }
        acc
    }
}

/// Step-two structure file: `{"generators": n1, "forms": [[[..]..]..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step2Spec {
    pub generators: usize,
    pub forms: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug)]
pub struct CarnotGroup {
    id: String,
    kind: GroupKind,
    layers: Vec<usize>,
    forms: Vec<SkewForm>,
    dense_forms: Vec<Vec<Vec<f64>>>,
    volume: VolumeConstant,
}

impl PartialEq for CarnotGroup {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.layers == other.layers && self.dense_forms == other.dense_forms
    }
}

impl CarnotGroup {
    /// ℝⁿ with addition and isotropic dilations.
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::Domain("euclidean dimension must be at least 1".into()));
        }
        if n > MAX_AMBIENT_DIM {
            return Err(LabError::Domain(format!("ambient dimension is limited to {MAX_AMBIENT_DIM}")));
        }
        Ok(CarnotGroup {
            id: format!("euclidean:{n}"),
            kind: GroupKind::Euclidean,
            layers: vec![n],
            forms: Vec::new(),
            dense_forms: Vec::new(),
            volume: VolumeConstant::exact(euclidean_unit_ball_volume(n)),
        })
    }

    /// The Heisenberg group ℍᵏ on coordinates `(x_1..x_k, y_1..y_k, t)`.
    pub fn heisenberg(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(LabError::Domain("heisenberg index must be at least 1".into()));
        }
        let n1 = 2 * k;
        let mut j = vec![vec![0.0; n1]; n1];
        for i in 0..k {
            j[i][k + i] = 1.0;
            j[k + i][i] = -1.0;
        }
        let mut g = Self::build_step2(format!("heisenberg:{k}"), GroupKind::Heisenberg, n1, vec![j])?;
        g.volume = constants::builtin_or_estimate(&g);
        Ok(g)
    }

    /// A step-two group from skew-symmetric forms on ℝ^{generators}.
    pub fn step2(spec: &Step2Spec, id: impl Into<String>) -> Result<Self> {
        let mut g = Self::build_step2(id.into(), GroupKind::Step2, spec.generators, spec.forms.clone())?;
        g.volume = constants::builtin_or_estimate(&g);
        Ok(g)
    }

    fn build_step2(id: String, kind: GroupKind, n1: usize, forms: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if n1 < 2 {
            return Err(LabError::Structural("a step-two group needs at least two generators".into()));
        }
        if forms.is_empty() {
            return Err(LabError::Structural("a step-two group needs at least one form".into()));
        }
        if n1 + forms.len() > MAX_AMBIENT_DIM {
            return Err(LabError::Domain(format!("ambient dimension is limited to {MAX_AMBIENT_DIM}")));
        }
        for (l, m) in forms.iter().enumerate() {
            if m.len() != n1 || m.iter().any(|row| row.len() != n1) {
                return Err(LabError::Structural(format!("form {l} is not {n1}x{n1}")));
            }
            for i in 0..n1 {
                for jx in 0..n1 {
                    if (m[i][jx] + m[jx][i]).abs() > 1e-12 {
                        return Err(LabError::Structural(format!("form {l} is not skew-symmetric")));
                    }
                }
            }
        }
        // brackets [X_i, X_j] = Σ_l J_l[i][j] ∂_{t_l}; they span layer two iff the forms are independent
        if forms_rank(&forms) < forms.len() {
            return Err(LabError::Structural(
                "forms are linearly dependent; the first layer does not generate the algebra".into(),
            ));
        }
        Ok(CarnotGroup {
            id,
            kind,
            layers: vec![n1, forms.len()],
            forms: forms.iter().map(|m| SkewForm::from_dense(m)).collect(),
            dense_forms: forms,
            volume: VolumeConstant::exact(f64::NAN),
        })
    }

    /// Parses `euclidean:<n>`, `heisenberg:<k>` or `step2:<path-to-json>`.
    pub fn parse(id: &str) -> Result<Self> {
        let (kind, arg) = id
            .split_once(':')
            .ok_or_else(|| LabError::Parse(format!("group id `{id}` lacks a `kind:arg` form")))?;
        let num = |s: &str| -> Result<usize> {
            s.trim().parse::<usize>().map_err(|_| LabError::Parse(format!("bad group parameter `{s}`")))
        };
        match kind {
            "euclidean" => Self::euclidean(num(arg)?),
            "heisenberg" => Self::heisenberg(num(arg)?),
            "step2" => {
                let text = std::fs::read_to_string(Path::new(arg))?;
                let spec: Step2Spec =
                    serde_json::from_str(&text).map_err(|e| LabError::Parse(format!("{arg}: {e}")))?;
                Self::step2(&spec, id)
            }
            other => Err(LabError::Parse(format!("unknown group kind `{other}`"))),
        }
    }

    /// Like [`parse`](Self::parse), but resolves the volume constant through `cache`,
    /// estimating and inserting it when absent.
    pub fn parse_with_cache(id: &str, cache: &mut ConstantsCache) -> Result<Self> {
        let mut g = Self::parse(id)?;
        if g.kind != GroupKind::Euclidean {
            let key = g.gauge_key();
            let vc = match cache.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let v = constants::estimate_volume_constant(&g, constants::DEFAULT_VOLUME_SAMPLES, 0x5eed);
                    cache.insert(g.id.clone(), key, v.clone());
                    v
                }
            };
            g.volume = vc;
        }
        Ok(g)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.layers.iter().sum()
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn step(&self) -> usize {
        self.layers.len()
    }

    /// Number of generators `n₁`.
    pub fn generators(&self) -> usize {
        self.layers[0]
    }

    /// The skew forms of the second layer, dense.
    pub fn forms(&self) -> &[Vec<Vec<f64>>] {
        &self.dense_forms
    }

    /// `Q = Σ i·n_i`.
    pub fn homogeneous_dimension(&self) -> usize {
        self.layers.iter().enumerate().map(|(i, n)| (i + 1) * n).sum()
    }

    /// Layer index σ of coordinate `coord` (0-based coordinate, 1-based layer).
    pub fn sigma(&self, coord: usize) -> usize {
        let mut acc = 0;
        for (i, n) in self.layers.iter().enumerate() {
            acc += n;
            if coord < acc {
                return i + 1;
            }
        }
        panic!("coordinate {coord} out of range");
    }

    /// Name of the gauge together with the layer shape; the cache key for `c_d`.
    pub fn gauge_key(&self) -> String {
        match self.kind {
            GroupKind::Euclidean => format!("euclidean-norm:{}", self.layers[0]),
            _ => format!("layered-quartic:{},{}", self.layers[0], self.layers[1]),
        }
    }

    pub fn volume_constant(&self) -> &VolumeConstant {
        &self.volume
    }

    fn check_dim(&self, p: &Point) -> Result<()> {
        if p.dim() != self.ambient_dim() {
            return Err(LabError::Structural(format!(
                "point has {} coordinates, group {} has {}",
                p.dim(),
                self.id,
                self.ambient_dim()
            )));
        }
        Ok(())
    }

    /// `g ⋄ h`.
    pub fn compose(&self, g: &Point, h: &Point) -> Result<Point> {
        self.check_dim(g)?;
        self.check_dim(h)?;
        Ok(Point(self.compose_slice(g.coords(), h.coords())))
    }

    /// Group law on raw coordinates, generic over the scalar type.
    pub fn compose_slice<T: Scalar>(&self, a: &[T], b: &[T]) -> Vec<T> {
        let mut out: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x + y).collect();
        if self.step() == 2 {
            let n1 = self.layers[0];
            for (l, form) in self.forms.iter().enumerate() {
                out[n1 + l] = out[n1 + l] + form.apply(&a[..n1], &b[..n1]) * 0.5;
            }
        }
        out
    }

    /// Group law into a preallocated buffer.
    #[inline]
    pub fn compose_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        for i in 0..a.len() {
            out[i] = a[i] + b[i];
        }
        if self.step() == 2 {
            let n1 = self.layers[0];
            for (l, form) in self.forms.iter().enumerate() {
                out[n1 + l] += 0.5 * form.apply(&a[..n1], &b[..n1]);
            }
        }
    }

    pub fn inverse(&self, g: &Point) -> Point {
        Point(g.0.iter().map(|v| -v).collect())
    }

    /// `δ_λ(x)`: layer `i` scaled by `λ^i`.
    pub fn dilate(&self, lambda: f64, x: &Point) -> Result<Point> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(LabError::Domain(format!("dilation factor must be positive, got {lambda}")));
        }
        self.check_dim(x)?;
        let mut out = x.0.clone();
        self.dilate_in_place(lambda, &mut out);
        Ok(Point(out))
    }

    #[inline]
    pub fn dilate_in_place<T: Scalar>(&self, lambda: f64, x: &mut [T]) {
        let n1 = self.layers[0];
        for v in x[..n1].iter_mut() {
            *v = *v * lambda;
        }
        if self.step() == 2 {
            let l2 = lambda * lambda;
            for v in x[n1..].iter_mut() {
                *v = *v * l2;
            }
        }
    }

    /// Homogeneous polynomial `N` whose root `N^{1/deg}` is the gauge.
    pub fn gauge_polynomial<T: Scalar>(&self, x: &[T]) -> T {
        let n1 = self.layers[0];
        let mut h = T::zero();
        for &v in &x[..n1] {
            h = h + v * v;
        }
        if self.step() == 1 {
            return h;
        }
        let mut v2 = T::zero();
        for &v in &x[n1..] {
            v2 = v2 + v * v;
        }
        h * h + v2
    }

    /// Homogeneous degree of [`gauge_polynomial`](Self::gauge_polynomial).
    pub fn gauge_polynomial_degree(&self) -> u32 {
        if self.step() == 1 {
            2
        } else {
            4
        }
    }

    /// The homogeneous gauge `‖x‖`.
    #[inline]
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let n = self.gauge_polynomial(x);
        if self.step() == 1 {
            n.sqrt()
        } else {
            n.sqrt().sqrt()
        }
    }

    pub fn gauge_norm(&self, x: &Point) -> f64 {
        self.gauge(x.coords())
    }

    /// `d(x, y) = ‖x⁻¹ ⋄ y‖`.
    pub fn quasi_distance(&self, x: &Point, y: &Point) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(self.distance_slice(x.coords(), y.coords()))
    }

    #[inline]
    pub fn distance_slice(&self, x: &[f64], y: &[f64]) -> f64 {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let mut w = vec![0.0; x.len()];
        self.compose_into(&neg, y, &mut w);
        self.gauge(&w)
    }

    /// `d(x, y⃗) = Σ_i d(x, y_i)`.
    pub fn product_distance(&self, x: &Point, ys: &[Point]) -> Result<f64> {
        let mut acc = 0.0;
        for y in ys {
            acc += self.quasi_distance(x, y)?;
        }
        Ok(acc)
    }

    /// `|B(x, r)| = c_d r^Q`.
    pub fn ball_volume(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(LabError::Domain(format!("ball radius must be positive, got {r}")));
        }
        Ok(self.volume.value * r.powi(self.homogeneous_dimension() as i32))
    }

    /// An upper bound for `sup_{‖z‖ < r} ‖a ⋄ z‖`.
    pub fn translated_ball_reach(&self, a: &[f64], r: f64) -> f64 {
        let n1 = self.layers[0];
        let h: f64 = a[..n1].iter().map(|v| v * v).sum::<f64>().sqrt();
        if self.step() == 1 {
            return h + r;
        }
        let v: f64 = a[n1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let fro: f64 = self.forms.iter().map(|f| f.frobenius * f.frobenius).sum::<f64>().sqrt();
        let w1 = h + r;
        let w2 = v + r * r + 0.5 * fro * h * r;
        (w1.powi(4) + w2 * w2).sqrt().sqrt()
    }

    /// Half-widths of the coordinate box containing the unit gauge ball.
    pub fn unit_box(&self) -> Vec<f64> {
        vec![1.0; self.ambient_dim()]
    }

    /// Uniform point of the unit gauge ball by rejection from [`unit_box`](Self::unit_box).
    /// Returns the number of proposals used.
    pub fn sample_unit_ball(&self, rng: &mut SampleRng, out: &mut [f64]) -> u32 {
        let mut attempts = 0;
        loop {
            attempts += 1;
            for v in out.iter_mut() {
                *v = 2.0 * rng.next_f64() - 1.0;
            }
            if self.gauge_polynomial(&*out) < 1.0 {
                return attempts;
            }
        }
    }

    /// Coefficients of the left-invariant field `X_j` at `x`, in the coordinate basis.
    pub fn vector_field(&self, j: usize, x: &[f64]) -> Vec<f64> {
        let n = self.ambient_dim();
        let n1 = self.layers[0];
        let mut out = vec![0.0; n];
        out[j] = 1.0;
        if self.step() == 2 {
            for (l, form) in self.forms.iter().enumerate() {
                let mut acc = 0.0;
                for &(i, jj, v) in &form.entries {
                    if jj == j {
                        acc += x[i] * v;
                    }
                }
                out[n1 + l] = 0.5 * acc;
            }
        }
        out
    }

    /// Empirical quasi-triangle constant `max d(x,z) / (d(x,y) + d(y,z))` over
    /// `samples` random triples drawn from the box `[-spread, spread]ⁿ`.
    pub fn quasi_triangle_constant(&self, samples: usize, spread: f64, seed: u64) -> f64 {
        let key = crate::rng::StreamKey::new(seed).fork_label("quasi-triangle");
        let n = self.ambient_dim();
        let mut worst: f64 = 0.0;
        for i in 0..samples {
            let mut rng = key.sample(i as u64);
            let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.uniform(-spread, spread)).collect() };
            let (x, y, z) = (draw(), draw(), draw());
            let lhs = self.distance_slice(&x, &z);
            let rhs = self.distance_slice(&x, &y) + self.distance_slice(&y, &z);
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            }
        }
        worst
    }
}

/// Volume of the Euclidean unit ball in ℝⁿ.
pub fn euclidean_unit_ball_volume(n: usize) -> f64 {
    // V_n = 2π/n · V_{n-2}
    let mut v = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut d = if n.is_multiple_of(2) { 2 } else { 3 };
    while d <= n {
        v *= 2.0 * std::f64::consts::PI / d as f64;
        d += 2;
    }
    v
}

fn forms_rank(forms: &[Vec<Vec<f64>>]) -> usize {
    let rows: Vec<Vec<f64>> = forms.iter().map(|m| m.iter().flatten().copied().collect()).collect();
    let cols = rows.first().map_or(0, |r| r.len());
    let mat = nalgebra::DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    mat.rank(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    fn h1() -> CarnotGroup {
        CarnotGroup::heisenberg(1).unwrap()
    }

    #[test]
    fn heisenberg_law_example() {
        let g = h1();
        let p = g.compose(&Point::new(vec![1.0, 0.0, 0.0]), &Point::new(vec![0.0, 1.0, 0.0])).unwrap();
        assert_eq!(p.coords(), &[1.0, 1.0, 0.5]);
    }

    #[test]
    fn euclidean_law_and_inverse() {
        let g = CarnotGroup::euclidean(2).unwrap();
        let p = g.compose(&Point::new(vec![1.0, 2.0]), &Point::new(vec![3.0, 4.0])).unwrap();
        assert_eq!(p.coords(), &[4.0, 6.0]);
        let h = h1();
        let x = Point::new(vec![0.3, -1.2, 2.5]);
        let e = h.compose(&x, &h.inverse(&x)).unwrap();
        assert!(e.coords().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let g = h1();
        let err = g.compose(&Point::new(vec![1.0, 0.0]), &Point::new(vec![0.0, 1.0, 0.0]));
        assert!(matches!(err, Err(LabError::Structural(_))));
    }

    #[test]
    fn dilation_examples() {
        let g = h1();
        assert_eq!(g.dilate(2.0, &Point::new(vec![1.0, 1.0, 1.0])).unwrap().coords(), &[2.0, 2.0, 4.0]);
        let x = Point::new(vec![0.1, 0.2, 0.3]);
        assert_eq!(g.dilate(1.0, &x).unwrap(), x);
        let e3 = CarnotGroup::euclidean(3).unwrap();
        assert_eq!(e3.dilate(2.0, &Point::new(vec![1.0; 3])).unwrap().coords(), &[2.0, 2.0, 2.0]);
        assert!(matches!(g.dilate(0.0, &x), Err(LabError::Domain(_))));
        assert!(matches!(g.dilate(-1.0, &x), Err(LabError::Domain(_))));
    }

    #[test]
    fn homogeneous_dimensions() {
        assert_eq!(h1().homogeneous_dimension(), 4);
        assert_eq!(CarnotGroup::heisenberg(2).unwrap().homogeneous_dimension(), 6);
        for n in 1..4 {
            assert_eq!(CarnotGroup::euclidean(n).unwrap().homogeneous_dimension(), n);
        }
    }

    #[test]
    fn gauge_examples() {
        let g = h1();
        assert_eq!(g.gauge_norm(&Point::new(vec![0.0, 0.0, 1.0])), 1.0);
        assert_eq!(CarnotGroup::euclidean(2).unwrap().gauge_norm(&Point::new(vec![3.0, 4.0])), 5.0);
        let d = g.dilate(3.0, &Point::new(vec![0.0, 0.0, 1.0])).unwrap();
        assert_eq!(d.coords(), &[0.0, 0.0, 9.0]);
        assert!((g.gauge_norm(&d) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let g = h1();
        let x = Point::new(vec![0.4, -0.2, 0.9]);
        assert_eq!(g.quasi_distance(&x, &x).unwrap(), 0.0);
        let e1 = CarnotGroup::euclidean(1).unwrap();
        assert_eq!(e1.quasi_distance(&Point::new(vec![0.0]), &Point::new(vec![3.0])).unwrap(), 3.0);
        assert_eq!(g.quasi_distance(&Point::origin(3), &Point::new(vec![0.0, 0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn ball_volume_scaling() {
        let e3 = CarnotGroup::euclidean(3).unwrap();
        assert!((e3.ball_volume(1.0).unwrap() - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
        let g = h1();
        let ratio = g.ball_volume(2.6).unwrap() / g.ball_volume(1.3).unwrap();
        assert!((ratio - 16.0).abs() < 1e-12);
        assert!(matches!(g.ball_volume(0.0), Err(LabError::Domain(_))));
    }

    #[test]
    fn vector_fields_match_heisenberg_convention() {
        let g = h1();
        let x = [0.7, -0.3, 2.0];
        assert_eq!(g.vector_field(0, &x), vec![1.0, 0.0, 0.15]);
        assert_eq!(g.vector_field(1, &x), vec![0.0, 1.0, 0.35]);
    }

    #[test]
    fn step2_rejects_bad_forms() {
        let bad = Step2Spec { generators: 2, forms: vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]] };
        assert!(CarnotGroup::step2(&bad, "x").is_err());
        let dep = Step2Spec {
            generators: 2,
            forms: vec![vec![vec![0.0, 1.0], vec![-1.0, 0.0]], vec![vec![0.0, 2.0], vec![-2.0, 0.0]]],
        };
        assert!(CarnotGroup::step2(&dep, "x").is_err());
    }

    #[test]
    fn free_step2_on_three_generators() {
        let mut forms = Vec::new();
        for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let mut m = vec![vec![0.0; 3]; 3];
            m[i][j] = 1.0;
            m[j][i] = -1.0;
            forms.push(m);
        }
        let g = CarnotGroup::step2(&Step2Spec { generators: 3, forms }, "step2:free3").unwrap();
        assert_eq!(g.layers(), &[3, 3]);
        assert_eq!(g.homogeneous_dimension(), 9);
    }

    #[test]
    fn quasi_triangle_constant_is_moderate() {
        let k = h1().quasi_triangle_constant(20_000, 2.0, 11);
        assert!(k > 0.9 && k < 2.0, "K = {k}");
        let ke = CarnotGroup::euclidean(2).unwrap().quasi_triangle_constant(2_000, 2.0, 11);
        assert!(ke <= 1.0 + 1e-12);
    }

    #[test]
    fn reach_bounds_translated_balls() {
        let g = h1();
        let key = StreamKey::new(5);
        for i in 0..2_000u64 {
            let mut rng = key.sample(i);
            let a: Vec<f64> = (0..3).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let r = rng.uniform(0.1, 2.0);
            let mut z = vec![0.0; 3];
            g.sample_unit_ball(&mut rng, &mut z);
            g.dilate_in_place(r, &mut z);
            let mut w = vec![0.0; 3];
            g.compose_into(&a, &z, &mut w);
            assert!(g.gauge(&w) <= g.translated_ball_reach(&a, r) + 1e-12);
        }
    }
}
