//! Scalars that carry exact mixed partial derivatives.
//!
//! A [`Jet`] is an element of the algebra generated by nilpotent units
//! `e_0,…,e_{k-1}` with `e_i² = 0`. Its components are indexed by subsets
//! of the units, so the coefficient of `e_0 e_1 ⋯ e_{k-1}` of `f(a + Σ e_i v_i)`
//! is the exact mixed derivative `∂_{s_0}⋯∂_{s_{k-1}} f`. Horizontal
//! derivatives on a group reduce to such mixed partials along one-parameter
//! left translations, which is why every group law and catalog function is
//! written once against [`Scalar`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order a jet can carry.
pub const MAX_JET_ORDER: usize = 4;
const WIDTH: usize = 1 << MAX_JET_ORDER;

/// Arithmetic needed by group laws and test functions.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Send
    + Sync
{
    fn constant(v: f64) -> Self;
    /// The ordinary (real) part.
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: f64) -> Self;
    fn sqrt(self) -> Self {
        self.powf(0.5)
    }
    fn zero() -> Self {
        Self::constant(0.0)
    }
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Multi-dual number with up to [`MAX_JET_ORDER`] nilpotent units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    vars: u8,
    c: [f64; WIDTH],
}

impl Jet {
    pub fn constant_jet(v: f64) -> Self {
        let mut c = [0.0; WIDTH];
        c[0] = v;
        Jet { vars: 0, c }
    }

    /// `value + e_index`, living in an algebra with `vars` units.
    pub fn variable(value: f64, index: usize, vars: usize) -> Self {
        assert!(vars <= MAX_JET_ORDER && index < vars);
        let mut c = [0.0; WIDTH];
        c[0] = value;
        c[1 << index] = 1.0;
        Jet { vars: vars as u8, c }
    }

    /// Unit `e_index` scaled by `coef` (no real part).
    pub fn unit(index: usize, vars: usize, coef: f64) -> Self {
        assert!(vars <= MAX_JET_ORDER && index < vars);
        let mut c = [0.0; WIDTH];
        c[1 << index] = coef;
        Jet { vars: vars as u8, c }
    }

    pub fn vars(&self) -> usize {
        self.vars as usize
    }

    /// Coefficient of the subset encoded by `mask`.
    pub fn coefficient(&self, mask: usize) -> f64 {
        self.c[mask]
    }

    /// Coefficient of the product of all units: the full mixed partial.
    pub fn mixed_part(&self) -> f64 {
        self.c[(1usize << self.vars) - 1]
    }

    #[inline]
    fn span(&self, other: &Jet) -> (u8, usize) {
        let v = self.vars.max(other.vars);
        (v, 1usize << v)
    }

    /// `Σ_j coeffs[j] · n^j` where `n` is the nilpotent part of `self`.
    fn taylor(self, coeffs: &[f64]) -> Jet {
        let width = 1usize << self.vars;
        let mut nil = self;
        nil.c[0] = 0.0;
        let mut out = Jet { vars: self.vars, c: [0.0; WIDTH] };
        out.c[0] = coeffs[0];
        let mut power = nil;
        for &cj in coeffs.iter().skip(1) {
            if cj != 0.0 {
                for m in 1..width {
                    out.c[m] += cj * power.c[m];
                }
            }
            power = power * nil;
        }
        out
    }

    fn order(&self) -> usize {
        self.vars as usize
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let (vars, width) = self.span(&rhs);
        let mut c = [0.0; WIDTH];
        for m in 0..width {
            c[m] = self.c[m] + rhs.c[m];
        }
        Jet { vars, c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let (vars, width) = self.span(&rhs);
        let mut c = [0.0; WIDTH];
        for m in 0..width {
            c[m] = self.c[m] - rhs.c[m];
        }
        Jet { vars, c }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let (vars, width) = self.span(&rhs);
        let mut c = [0.0; WIDTH];
        for s in 0..width {
            // subset convolution over t ⊆ s
            let mut acc = 0.0;
            let mut t = s;
            loop {
                acc += self.c[t] * rhs.c[s ^ t];
                if t == 0 {
                    break;
                }
                t = (t - 1) & s;
            }
            c[s] = acc;
        }
        Jet { vars, c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut out = self;
        for v in out.c.iter_mut() {
            *v = -*v;
        }
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for v in self.c.iter_mut() {
            *v *= rhs;
        }
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Jet {
    pub fn recip(self) -> Jet {
        let a = self.c[0];
        let coeffs: Vec<f64> = (0..=self.order())
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign / a.powi(j as i32 + 1)
            })
            .collect();
        self.taylor(&coeffs)
    }
}

impl Scalar for Jet {
    fn constant(v: f64) -> Self {
        Jet::constant_jet(v)
    }

    fn value(&self) -> f64 {
        self.c[0]
    }

    fn exp(self) -> Self {
        let e = self.c[0].exp();
        let mut fact = 1.0;
        let coeffs: Vec<f64> = (0..=self.order())
            .map(|j| {
                if j > 0 {
                    fact *= j as f64;
                }
                e / fact
            })
            .collect();
        self.taylor(&coeffs)
    }

    fn ln(self) -> Self {
        let a = self.c[0];
        let coeffs: Vec<f64> = (0..=self.order())
            .map(|j| {
                if j == 0 {
                    a.ln()
                } else {
                    let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                    sign / (j as f64 * a.powi(j as i32))
                }
            })
            .collect();
        self.taylor(&coeffs)
    }

    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut out = Jet::constant_jet(1.0);
        out.vars = self.vars;
        let mut base = self;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }

    fn powf(self, e: f64) -> Self {
        let a = self.c[0];
        // generalized binomial coefficients times a^(e-j)
        let mut binom = 1.0;
        let coeffs: Vec<f64> = (0..=self.order())
            .map(|j| {
                if j > 0 {
                    binom *= (e - (j as f64 - 1.0)) / j as f64;
                }
                binom * a.powf(e - j as f64)
            })
            .collect();
        self.taylor(&coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn product_rule_second_order() {
        // f(s0, s1) = (x + s0 + s1)^3 ; ∂0∂1 f = 6 (x)
        let x = 1.5;
        let a = Jet::variable(x, 0, 2) + Jet::unit(1, 2, 1.0);
        let f = a * a * a;
        assert!(close(f.mixed_part(), 6.0 * x));
        assert!(close(f.coefficient(1), 3.0 * x * x));
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let x = 0.7;
        // three units all along the same direction: third derivative
        let a = Jet::variable(x, 0, 3) + Jet::unit(1, 3, 1.0) + Jet::unit(2, 3, 1.0);
        assert!(close(a.exp().mixed_part(), x.exp()));
        assert!(close(a.ln().mixed_part(), 2.0 / x.powi(3)));
        assert!(close(a.recip().mixed_part(), -6.0 / x.powi(4)));
        let e = 0.5;
        let third = e * (e - 1.0) * (e - 2.0) * x.powf(e - 3.0);
        assert!(close(a.powf(e).mixed_part(), third));
        assert!(close(a.powi(5).mixed_part(), 60.0 * x * x));
        assert!(close(a.powi(-2).mixed_part(), -24.0 / x.powi(5)));
    }

    #[test]
    fn division_consistent_with_recip() {
        let a = Jet::variable(2.0, 0, 2) + Jet::unit(1, 2, 0.5);
        let b = Jet::variable(3.0, 1, 2) * 2.0;
        let q = a / b;
        let back = q * b;
        for m in 0..4 {
            assert!(close(back.coefficient(m), a.coefficient(m)));
        }
    }
}
