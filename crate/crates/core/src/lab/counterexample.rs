//! The smoothed-ramp family showing that second-order Poincaré inequalities
//! fail for `0 < p < 1`.

use serde::{Deserialize, Serialize};

use super::onedim::{golden_section, tanh_sinh, CompositeRule};
use crate::carnot::functions::ramp_core;
use crate::error::{LabError, Result};
use crate::weights::fit_slope;

/// Tolerance used when checking the constraints on `φ`.
const PHI_CHECK_TOLERANCE: f64 = 1e-10;

/// `φ(t) = (t+1)²(2−t)/4`, `ψ = ∫_{−1}^x φ` glued to `0` and `x`,
/// and `f_ε(x) = ε ψ(x/ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleFamily {
    pub eps: f64,
}

impl CounterexampleFamily {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(LabError::Domain(format!("ε must lie in (0, 1/2), got {eps}")));
        }
        let fam = CounterexampleFamily { eps };
        fam.verify()?;
        Ok(fam)
    }

    /// Checks `φ(−1)=0, φ(1)=1, φ′(±1)=0, ∫φ=1` and `0 ≤ φ ≤ 1`.
    pub fn verify(&self) -> Result<()> {
        let mut failures = Vec::new();
        let checks = [
            ("φ(-1) = 0", Self::phi(-1.0), 0.0),
            ("φ(1) = 1", Self::phi(1.0), 1.0),
            ("φ'(-1) = 0", Self::phi_prime(-1.0), 0.0),
            ("φ'(1) = 0", Self::phi_prime(1.0), 0.0),
            ("∫φ = 1", CompositeRule::new(&[-1.0, 1.0], 4, 8).integrate(Self::phi), 1.0),
        ];
        for (name, got, want) in checks {
            if (got - want).abs() > PHI_CHECK_TOLERANCE {
                failures.push(format!("{name}: got {got}"));
            }
        }
        if (0..=1000).map(|i| Self::phi(-1.0 + 2.0 * i as f64 / 1000.0)).any(|v| !(-1e-15..=1.0 + 1e-15).contains(&v)) {
            failures.push("φ leaves [0, 1]".into());
        }
        if failures.is_empty() {
            Ok(())
        } else {
            Err(LabError::Validation(failures))
        }
    }

    pub fn phi(t: f64) -> f64 {
        (t + 1.0).powi(2) * (2.0 - t) / 4.0
    }

    pub fn phi_prime(t: f64) -> f64 {
        0.75 * (1.0 - t * t)
    }

    pub fn psi(x: f64) -> f64 {
        if x <= -1.0 {
            0.0
        } else if x >= 1.0 {
            x
        } else {
            ramp_core(x)
        }
    }

    pub fn psi_prime(x: f64) -> f64 {
        if x <= -1.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            Self::phi(x)
        }
    }

    pub fn psi_second(x: f64) -> f64 {
        if x.abs() >= 1.0 {
            0.0
        } else {
            Self::phi_prime(x)
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        self.eps * Self::psi(x / self.eps)
    }

    pub fn f_prime(&self, x: f64) -> f64 {
        Self::psi_prime(x / self.eps)
    }

    pub fn f_second(&self, x: f64) -> f64 {
        Self::psi_second(x / self.eps) / self.eps
    }

    /// `∫_{−1}^{1} |f_ε″|^p`.
    pub fn second_derivative_integral(&self, p: f64) -> f64 {
        let e = self.eps;
        let g = |x: f64| self.f_second(x).abs().powf(p);
        [(-1.0, -e), (-e, e), (e, 1.0)].iter().map(|&(a, b)| tanh_sinh(g, a, b, 1e-13).0).sum()
    }

    /// `∫_{−1}^{1} |f_ε − (ax+b)|^q` on the composite rule `rule`.
    fn affine_error(&self, rule: &CompositeRule, q: f64, a: f64, b: f64) -> f64 {
        rule.integrate(|x| (self.f(x) - (a * x + b)).abs().powf(q))
    }

    fn rule(&self, panels: usize) -> CompositeRule {
        CompositeRule::new(&[-1.0, -self.eps, self.eps, 1.0], panels, 8)
    }

    /// `inf_{a,b} ∫_{−1}^{1} |f_ε − (ax+b)|^q`.
    pub fn affine_infimum(&self, q: f64) -> AffineFit {
        let coarse = self.rule(4);
        let grid = 200;
        let at = |i: usize| -2.0 + 4.0 * i as f64 / (grid - 1) as f64;
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in 0..grid {
            for j in 0..grid {
                let v = self.affine_error(&coarse, q, at(i), at(j));
                if v < best.2 {
                    best = (at(i), at(j), v);
                }
            }
        }
        let fine = self.rule(200);
        let (mut a, mut b) = (best.0, best.1);
        let mut width = 8.0 / (grid - 1) as f64;
        let mut converged = false;
        let mut cycles = 0;
        for _ in 0..200 {
            cycles += 1;
            let (na, _) = golden_section(|s| self.affine_error(&fine, q, s, b), a - width, a + width, 1e-9);
            let (nb, _) = golden_section(|s| self.affine_error(&fine, q, na, s), b - width, b + width, 1e-9);
            let step = (na - a).abs().max((nb - b).abs());
            a = na;
            b = nb;
            if step < 1e-6 {
                converged = true;
                break;
            }
            width = (4.0 * step).clamp(1e-5, width);
        }
        AffineFit { a, b, value: self.affine_error(&fine, q, a, b), cycles, converged }
    }
}

/// Minimizing affine function and the minimal value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub cycles: usize,
    pub converged: bool,
}

/// `inf_b ∫_{1/2}^1 |x − 2b|^q dx = 2·4^{−(q+1)}/(q+1)`.
pub fn lower_bound_closed_form(q: f64) -> f64 {
    2.0 * 4f64.powf(-(q + 1.0)) / (q + 1.0)
}

/// The same infimum by direct minimization over `b`.
pub fn lower_bound_brute_force(q: f64) -> f64 {
    let obj = |b: f64| {
        let c = 2.0 * b;
        let breaks = if c > 0.5 && c < 1.0 { vec![0.5, c, 1.0] } else { vec![0.5, 1.0] };
        breaks.windows(2).map(|w| tanh_sinh(|x| (x - c).abs().powf(q), w[0], w[1], 1e-13).0).sum::<f64>()
    };
    golden_section(obj, 0.0, 1.0, 1e-10).1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub eps: f64,
    /// `R(ε) = ∫|f_ε″|^p`.
    pub r: f64,
    /// `ε^{1−p} ∫|φ′|^p`.
    pub r_predicted: f64,
    /// `R(ε) / ε^{1−p}`.
    pub r_scaled: f64,
    /// `L(ε) = inf_{a,b} ∫|f_ε − (ax+b)|^q`.
    pub l: f64,
    pub a: f64,
    pub b: f64,
    /// `L^{1/q} / R^{1/p}`.
    pub ratio: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub p: f64,
    pub q: f64,
    pub rows: Vec<CounterexampleRow>,
    /// Least-squares slope of `ln R` against `ln ε`.
    pub slope: f64,
    pub expected_slope: f64,
    /// `∫_{−1}^{1} |φ′|^p`.
    pub phi_prime_integral: f64,
    /// `inf_b ∫_{1/2}^1 |x − 2b|^q`.
    pub lower_bound: f64,
    /// `max L / min L − 1` over the rows.
    pub l_variation: f64,
    pub all_converged: bool,
}

pub fn counterexample_report(p: f64, q: f64, eps_list: &[f64]) -> Result<CounterexampleReport> {
    if !(p > 0.0 && p < 1.0) {
        return Err(LabError::Domain(format!("p must lie in (0, 1), got {p}")));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(LabError::Domain(format!("q must be positive, got {q}")));
    }
    if eps_list.is_empty() {
        return Err(LabError::Domain("at least one ε is required".into()));
    }
    let families: Vec<CounterexampleFamily> = eps_list.iter().map(|&e| CounterexampleFamily::new(e)).collect::<Result<_>>()?;
    let phi_prime_integral = tanh_sinh(|t| CounterexampleFamily::phi_prime(t).abs().powf(p), -1.0, 1.0, 1e-13).0;
    let rows: Vec<CounterexampleRow> = {
        use rayon::prelude::*;
        families
            .par_iter()
            .map(|fam| {
                let r = fam.second_derivative_integral(p);
                let fit = fam.affine_infimum(q);
                CounterexampleRow {
                    eps: fam.eps,
                    r,
                    r_predicted: fam.eps.powf(1.0 - p) * phi_prime_integral,
                    r_scaled: r / fam.eps.powf(1.0 - p),
                    l: fit.value,
                    a: fit.a,
                    b: fit.b,
                    ratio: fit.value.powf(1.0 / q) / r.powf(1.0 / p),
                    converged: fit.converged,
                }
            })
            .collect()
    };
    let slope = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.r.ln()).collect();
        fit_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    let l_max = rows.iter().map(|r| r.l).fold(f64::NEG_INFINITY, f64::max);
    let l_min = rows.iter().map(|r| r.l).fold(f64::INFINITY, f64::min);
    Ok(CounterexampleReport {
        p,
        q,
        slope,
        expected_slope: 1.0 - p,
        phi_prime_integral,
        lower_bound: lower_bound_brute_force(q),
        l_variation: l_max / l_min - 1.0,
        all_converged: rows.iter().all(|r| r.converged),
        rows,
    })
}

/// Expands `"2^-2..2^-8"` into `2⁻², 2⁻³, …, 2⁻⁸`; also accepts a
/// comma-separated list of reals or dyadic powers.
pub fn parse_eps_range(text: &str) -> Result<Vec<f64>> {
    let dyadic = |s: &str| -> Result<i32> {
        let s = s.trim();
        s.strip_prefix("2^")
            .and_then(|e| e.trim_matches(|c| c == '(' || c == ')').parse::<i32>().ok())
            .ok_or_else(|| LabError::Parse(format!("expected a power of two like 2^-3, got {s:?}")))
    };
    if let Some((lo, hi)) = text.split_once("..") {
        let (a, b) = (dyadic(lo)?, dyadic(hi)?);
        let exps: Vec<i32> = if a <= b { (a..=b).collect() } else { (b..=a).rev().collect() };
        return Ok(exps.into_iter().map(|e| 2f64.powi(e)).collect());
    }
    text.split(',')
        .map(|s| {
            let s = s.trim();
            if s.starts_with("2^") {
                dyadic(s).map(|e| 2f64.powi(e))
            } else {
                s.parse::<f64>().map_err(|_| LabError::Parse(format!("bad ε value {s:?}")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_constraints_hold() {
        let fam = CounterexampleFamily::new(0.25).unwrap();
        assert_eq!(CounterexampleFamily::phi(-1.0), 0.0);
        assert_eq!(CounterexampleFamily::phi(1.0), 1.0);
        assert_eq!(CounterexampleFamily::phi_prime(1.0), 0.0);
        let (int, _) = tanh_sinh(CounterexampleFamily::phi, -1.0, 1.0, 1e-14);
        assert!((int - 1.0).abs() < 1e-10);
        for x in [0.25, 0.3, 0.9] {
            assert_eq!(fam.f(x), x);
        }
        assert_eq!(fam.f(-0.3), 0.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fam = CounterexampleFamily::new(0.2).unwrap();
        let h = 1e-5;
        for x in [-0.15, -0.05, 0.0, 0.1, 0.19] {
            let d1 = (fam.f(x + h) - fam.f(x - h)) / (2.0 * h);
            let d2 = (fam.f_prime(x + h) - fam.f_prime(x - h)) / (2.0 * h);
            assert!((d1 - fam.f_prime(x)).abs() < 1e-8);
            assert!((d2 - fam.f_second(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(CounterexampleFamily::new(0.5).is_err());
        assert!(CounterexampleFamily::new(0.0).is_err());
    }

    #[test]
    fn lower_bound_chain() {
        for q in [0.5, 1.0, 2.0, 3.0] {
            assert!((lower_bound_brute_force(q) - lower_bound_closed_form(q)).abs() < 1e-8, "q={q}");
        }
    }

    #[test]
    fn eps_ranges() {
        let v = parse_eps_range("2^-2..2^-4").unwrap();
        assert_eq!(v, vec![0.25, 0.125, 0.0625]);
        assert_eq!(parse_eps_range("0.1, 2^-3").unwrap(), vec![0.1, 0.125]);
        assert!(parse_eps_range("3^-2..2^-4").is_err());
    }
}
