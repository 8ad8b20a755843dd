//! Second-order forward-mode jets.
//!
//! A [`Jet2`] carries a value together with the first and second derivatives
//! of a univariate restriction t ↦ f(x + t·h), so evaluating an expression
//! tree over jets yields exact directional derivatives of closed-form maps.
//! Jets nest: `Jet2<Jet2<f64>>` differentiates code that itself computes
//! first derivatives, which is what lets the bilinear-map extraction
//! cross-check run through metric-derived and pushforward sprays.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic scalars that expression trees can be evaluated over.
///
/// Implemented by `f64` and by `Jet2<S>` for any scalar `S`. `re` is the
/// underlying real value (used for domain guards and pivot selection);
/// `DEPTH` counts jet nesting (0 for plain reals).
pub trait Scalar:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const DEPTH: usize;

    fn from_f64(c: f64) -> Self;
    fn re(&self) -> f64;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    /// Integer power. Callers must guard `re() != 0` when `n < 0`.
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    const DEPTH: usize = 0;

    fn from_f64(c: f64) -> Self {
        c
    }
    fn re(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Truncated second-order Taylor data of t ↦ f(x + t·h) at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2<S> {
    pub val: S,
    pub d1: S,
    pub d2: S,
}

impl<S: Scalar> Jet2<S> {
    pub fn constant(val: S) -> Self {
        Jet2 {
            val,
            d1: S::zero(),
            d2: S::zero(),
        }
    }

    /// Seed for a directional derivative: value `x`, first-order seed `h`.
    pub fn seeded(x: S, h: S) -> Self {
        Jet2 {
            val: x,
            d1: h,
            d2: S::zero(),
        }
    }
}

impl<S: Scalar> Add for Jet2<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Jet2 {
            val: self.val + o.val,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }
}

impl<S: Scalar> Sub for Jet2<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Jet2 {
            val: self.val - o.val,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
        }
    }
}

impl<S: Scalar> Neg for Jet2<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Jet2 {
            val: -self.val,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

impl<S: Scalar> Mul for Jet2<S> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let two = S::from_f64(2.0);
        Jet2 {
            val: self.val * o.val,
            d1: self.d1 * o.val + self.val * o.d1,
            d2: self.d2 * o.val + two * self.d1 * o.d1 + self.val * o.d2,
        }
    }
}

impl<S: Scalar> Div for Jet2<S> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        // Callers guard o.re() != 0 before dividing.
        let two = S::from_f64(2.0);
        let q = self.val / o.val;
        let q1 = (self.d1 - q * o.d1) / o.val;
        let q2 = (self.d2 - two * q1 * o.d1 - q * o.d2) / o.val;
        Jet2 {
            val: q,
            d1: q1,
            d2: q2,
        }
    }
}

impl<S: Scalar> Scalar for Jet2<S> {
    const DEPTH: usize = S::DEPTH + 1;

    fn from_f64(c: f64) -> Self {
        Jet2::constant(S::from_f64(c))
    }

    fn re(&self) -> f64 {
        self.val.re()
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        Jet2 {
            val: e,
            d1: e * self.d1,
            d2: e * (self.d2 + self.d1 * self.d1),
        }
    }

    fn sin(self) -> Self {
        let s = self.val.sin();
        let c = self.val.cos();
        Jet2 {
            val: s,
            d1: c * self.d1,
            d2: c * self.d2 - s * self.d1 * self.d1,
        }
    }

    fn cos(self) -> Self {
        let s = self.val.sin();
        let c = self.val.cos();
        Jet2 {
            val: c,
            d1: -s * self.d1,
            d2: -s * self.d2 - c * self.d1 * self.d1,
        }
    }

    fn sqrt(self) -> Self {
        // From s² = u: s' = u'/(2s), s'' = (u'' − 2 s'²)/(2s).
        let two = S::from_f64(2.0);
        let s = self.val.sqrt();
        let denom = two * s;
        let d1 = self.d1 / denom;
        let d2 = (self.d2 - two * d1 * d1) / denom;
        Jet2 { val: s, d1, d2 }
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => {
                // u^n with n ≥ 2 or n ≤ −1; the n ≤ −1 case requires re ≠ 0,
                // guarded at the evaluation site.
                let nf = S::from_f64(n as f64);
                let nm1 = S::from_f64((n - 1) as f64);
                let p2 = self.val.powi(n - 2);
                let p1 = p2 * self.val;
                let p0 = p1 * self.val;
                Jet2 {
                    val: p0,
                    d1: nf * p1 * self.d1,
                    d2: nf * nm1 * p2 * self.d1 * self.d1 + nf * p1 * self.d2,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn product_rule_second_order() {
        // f(t) = (2+t)·(3+2t): f'(0) = 2·3·? -> compute directly
        let a = Jet2::seeded(2.0, 1.0);
        let b = Jet2::seeded(3.0, 2.0);
        let p = a * b;
        close(p.val, 6.0, 0.0);
        close(p.d1, 1.0 * 3.0 + 2.0 * 2.0, 0.0); // a'b + ab'
        close(p.d2, 2.0 * 1.0 * 2.0, 0.0); // a''b + 2a'b' + ab''
    }

    #[test]
    fn quotient_matches_closed_form() {
        // f(t) = 1/(1+t): f' = −1, f'' = 2 at t = 0.
        let one = Jet2::constant(1.0);
        let d = Jet2::seeded(1.0, 1.0);
        let q = one / d;
        close(q.val, 1.0, 1e-15);
        close(q.d1, -1.0, 1e-15);
        close(q.d2, 2.0, 1e-15);
    }

    #[test]
    fn sqrt_derivatives() {
        // f(t) = sqrt(4+t): f' = 1/4, f'' = −1/32.
        let u = Jet2::seeded(4.0, 1.0);
        let s = u.sqrt();
        close(s.val, 2.0, 1e-15);
        close(s.d1, 0.25, 1e-15);
        close(s.d2, -1.0 / 32.0, 1e-15);
    }

    #[test]
    fn powi_negative_exponent() {
        // f(t) = (2+t)^(−2): f' = −2·2^(−3) = −0.25, f'' = 6·2^(−4) = 0.375.
        let u = Jet2::seeded(2.0, 1.0);
        let p = u.powi(-2);
        close(p.val, 0.25, 1e-15);
        close(p.d1, -0.25, 1e-15);
        close(p.d2, 0.375, 1e-15);
    }

    #[test]
    fn nested_jets_give_third_order_information() {
        // g(x) = x³ evaluated over Jet2<Jet2<f64>> seeded twice:
        // outer d1 of inner d1 recovers f'' = 6x.
        let x = 1.5f64;
        let inner = Jet2::seeded(x, 1.0);
        let outer = Jet2::seeded(inner, Jet2::constant(1.0));
        let y = outer * outer * outer;
        close(y.val.val, x.powi(3), 1e-15);
        close(y.val.d1, 3.0 * x * x, 1e-15);
        close(y.d1.val, 3.0 * x * x, 1e-15);
        close(y.d1.d1, 6.0 * x, 1e-15);
    }

    #[test]
    fn trig_second_derivatives() {
        let u = Jet2::seeded(0.7f64, 1.0);
        let s = u.sin();
        close(s.d2, -(0.7f64).sin(), 1e-15);
        let c = u.cos();
        close(c.d2, -(0.7f64).cos(), 1e-15);
    }
}
