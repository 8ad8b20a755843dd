//! Directional derivatives of expression maps.
//!
//! The primary evaluator is jet propagation ([`crate::jet`]); the central
//! finite-difference oracle is kept deliberately independent of it so that
//! every derivative claim in the verification suites can be checked against
//! a second route.

use crate::error::{Error, Result};
use crate::expr::ExprMap;
use crate::jet::{Jet2, Scalar};

fn check_dims(f: &ExprMap, lens: &[usize]) -> Result<()> {
    for len in lens {
        if *len != f.arity_in() {
            return Err(Error::DimensionMismatch(format!(
                "map `{}` expects {} inputs, got {}",
                f.source(),
                f.arity_in(),
                len
            )));
        }
    }
    Ok(())
}

/// Full 2-jets of t ↦ f(x + t·h) at t = 0, one per output component.
pub fn jet_along<S: Scalar>(f: &ExprMap, x: &[S], h: &[S]) -> Result<Vec<Jet2<S>>> {
    check_dims(f, &[x.len(), h.len()])?;
    let seeds: Vec<Jet2<S>> = x
        .iter()
        .zip(h.iter())
        .map(|(&x, &h)| Jet2::seeded(x, h))
        .collect();
    f.eval(&seeds)
}

/// First directional derivative Df(x)(h).
pub fn dir_derivative<S: Scalar>(f: &ExprMap, x: &[S], h: &[S]) -> Result<Vec<S>> {
    Ok(jet_along(f, x, h)?.into_iter().map(|j| j.d1).collect())
}

/// Value and first derivative in one jet pass: (f(x), Df(x)(h)).
pub fn value_and_derivative<S: Scalar>(f: &ExprMap, x: &[S], h: &[S]) -> Result<(Vec<S>, Vec<S>)> {
    let jets = jet_along(f, x, h)?;
    let vals = jets.iter().map(|j| j.val).collect();
    let firsts = jets.into_iter().map(|j| j.d1).collect();
    Ok((vals, firsts))
}

/// Pure second derivative D²f(x)(h,h), the quadratic form along one direction.
pub fn pure_second<S: Scalar>(f: &ExprMap, x: &[S], h: &[S]) -> Result<Vec<S>> {
    Ok(jet_along(f, x, h)?.into_iter().map(|j| j.d2).collect())
}

/// Symmetric second derivative D²f(x)(h1,h2) by polarization of the pure
/// second jet. The combination is written so the result is bit-identical
/// under h1 ↔ h2.
pub fn second_dir_derivative<S: Scalar>(
    f: &ExprMap,
    x: &[S],
    h1: &[S],
    h2: &[S],
) -> Result<Vec<S>> {
    check_dims(f, &[x.len(), h1.len(), h2.len()])?;
    let sum: Vec<S> = h1.iter().zip(h2.iter()).map(|(&a, &b)| a + b).collect();
    let q_sum = pure_second(f, x, &sum)?;
    let q1 = pure_second(f, x, h1)?;
    let q2 = pure_second(f, x, h2)?;
    let half = S::from_f64(0.5);
    Ok(q_sum
        .into_iter()
        .zip(q1.into_iter().zip(q2))
        .map(|(s, (a, b))| half * (s - (a + b)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    First,
    Second,
}

/// Central finite differences along h: the independent oracle.
///
/// Order 1: (f(x+εh) − f(x−εh)) / 2ε.
/// Order 2: (f(x+εh) − 2f(x) + f(x−εh)) / ε².
pub fn fd_oracle(f: &ExprMap, x: &[f64], h: &[f64], order: FdOrder, eps: f64) -> Result<Vec<f64>> {
    check_dims(f, &[x.len(), h.len()])?;
    if !(1e-8..=1e-3).contains(&eps) {
        return Err(Error::Config(format!(
            "finite-difference step {eps:e} outside [1e-8, 1e-3]"
        )));
    }
    let shift = |s: f64| -> Vec<f64> {
        x.iter()
            .zip(h.iter())
            .map(|(&x, &h)| x + s * h)
            .collect()
    };
    let plus = f.eval(&shift(eps))?;
    let minus = f.eval(&shift(-eps))?;
    match order {
        FdOrder::First => Ok(plus
            .iter()
            .zip(minus.iter())
            .map(|(p, m)| (p - m) / (2.0 * eps))
            .collect()),
        FdOrder::Second => {
            let mid = f.eval(x)?;
            Ok(plus
                .iter()
                .zip(mid.iter().zip(minus.iter()))
                .map(|(p, (c, m))| (p - 2.0 * c + m) / (eps * eps))
                .collect())
        }
    }
}

/// Default finite-difference steps, chosen as the usual truncation/rounding
/// balance for double precision.
pub const FD_EPS_ORDER1: f64 = 1e-5;
pub const FD_EPS_ORDER2: f64 = 1e-4;
