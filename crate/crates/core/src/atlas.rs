//! Charts, transitions, and the double tangent bundle in coordinates.
//!
//! A point of T(TM) over a chart is the 4-tuple ξ = (x, u, v, w). The
//! convention is fixed globally: the foot of ξ in TM is (x, u), the image
//! under the tangent of the bundle projection is (x, v), and w is the
//! remaining fiber component. ξ is vertical iff v = 0 and symmetric iff
//! u = v. Every formula in the crate is transcribed into this ordering.

use crate::diff::{dir_derivative, second_dir_derivative, value_and_derivative, FdOrder, fd_oracle, FD_EPS_ORDER1};
use crate::error::{Error, Result};
use crate::expr::ExprMap;
use crate::sample::{sample_where, sup_dist, CheckOutcome, SampleBox};
use rand_chacha::ChaCha8Rng;

/// A chart: a name, a dimension, and a smooth membership predicate
/// (a point lies in the chart iff the predicate is positive).
#[derive(Debug, Clone)]
pub struct Chart {
    pub name: String,
    pub dim: usize,
    pub domain: ExprMap,
}

impl Chart {
    pub fn new(name: impl Into<String>, dim: usize, domain: ExprMap) -> Result<Self> {
        if domain.arity_in() != dim || domain.arity_out() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "domain predicate `{}` must map {dim} inputs to one output",
                domain.source()
            )));
        }
        Ok(Chart {
            name: name.into(),
            dim,
            domain,
        })
    }

    pub fn domain_value(&self, x: &[f64]) -> Result<f64> {
        self.domain.eval_scalar(x)
    }

    /// Membership; evaluation failures count as outside.
    pub fn contains(&self, x: &[f64]) -> bool {
        matches!(self.domain_value(x), Ok(v) if v > 0.0)
    }

    pub fn require_inside(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutsideDomain {
                chart: self.name.clone(),
            })
        }
    }
}

/// A chart transition φ with its inverse. `map` sends from-chart coordinates
/// to to-chart coordinates.
#[derive(Debug, Clone)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub map: ExprMap,
    pub inverse: Option<ExprMap>,
}

impl Transition {
    pub fn dim(&self) -> usize {
        self.map.arity_out()
    }

    pub fn inverse_map(&self) -> Result<&ExprMap> {
        self.inverse.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "transition {} -> {} has no inverse expression",
                self.from, self.to
            ))
        })
    }

    /// The same transition read backwards (requires the inverse expression).
    pub fn reversed(&self) -> Result<Transition> {
        Ok(Transition {
            from: self.to.clone(),
            to: self.from.clone(),
            map: self.inverse_map()?.clone(),
            inverse: Some(self.map.clone()),
        })
    }
}

/// Chart coordinates of a point of T(TM). See the module docs for the
/// (x, u, v, w) convention.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleTangentVector {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl DoubleTangentVector {
    pub fn new(x: Vec<f64>, u: Vec<f64>, v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if u.len() != n || v.len() != n || w.len() != n {
            return Err(Error::DimensionMismatch(
                "double tangent vector blocks must have equal dimension".to_string(),
            ));
        }
        Ok(DoubleTangentVector { x, u, v, w })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_vertical(&self) -> bool {
        self.v.iter().all(|c| *c == 0.0)
    }

    pub fn is_symmetric(&self) -> bool {
        self.u == self.v
    }

    /// Foot in TM: the projection of ξ under the double-bundle projection.
    pub fn foot(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.u)
    }

    /// Tangent of the bundle projection applied to ξ: (x, v).
    pub fn tangent_projection(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.v)
    }
}

/// The bookkeeping factor of the connection map: ξ = (x,u,v,w) ↦ (x,u,v).
pub fn anchor_projection(xi: &DoubleTangentVector) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (xi.x.clone(), xi.u.clone(), xi.v.clone())
}

/// An atlas: charts plus directed transitions between them.
#[derive(Debug, Clone, Default)]
pub struct Atlas {
    pub charts: Vec<Chart>,
    pub transitions: Vec<Transition>,
}

impl Atlas {
    pub fn chart(&self, name: &str) -> Result<&Chart> {
        self.charts
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnresolvedRef(format!("chart `{name}`")))
    }

    pub fn transition(&self, from: &str, to: &str) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| t.from == from && t.to == to)
    }

    pub fn transitions_from<'a>(&'a self, from: &'a str) -> impl Iterator<Item = &'a Transition> + 'a {
        self.transitions.iter().filter(move |t| t.from == from)
    }
}

/// Tangent lift of a transition: (x, v) ↦ (φ(x), Dφ(x)v).
pub fn tangent_lift(
    from_chart: &Chart,
    t: &Transition,
    x: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    from_chart.require_inside(x)?;
    value_and_derivative(&t.map, x, v)
}

/// Double tangent lift of a transition:
/// (x, u, v, w) ↦ (φ(x), Dφ(x)u, Dφ(x)v, D²φ(x)(u,v) + Dφ(x)w).
pub fn double_tangent_lift(
    from_chart: &Chart,
    t: &Transition,
    xi: &DoubleTangentVector,
) -> Result<DoubleTangentVector> {
    from_chart.require_inside(&xi.x)?;
    double_tangent_lift_unchecked(&t.map, xi)
}

/// Same as [`double_tangent_lift`] for a bare map without domain gating;
/// used where membership is managed by the caller (e.g. diffeomorphism
/// conjugacy checks).
pub fn double_tangent_lift_unchecked(
    map: &ExprMap,
    xi: &DoubleTangentVector,
) -> Result<DoubleTangentVector> {
    let (y, dy_u) = value_and_derivative(map, &xi.x, &xi.u)?;
    let dy_v = dir_derivative(map, &xi.x, &xi.v)?;
    let d2 = second_dir_derivative(map, &xi.x, &xi.u, &xi.v)?;
    let dy_w = dir_derivative(map, &xi.x, &xi.w)?;
    let w: Vec<f64> = d2.iter().zip(dy_w.iter()).map(|(a, b)| a + b).collect();
    DoubleTangentVector::new(y, dy_u, dy_v, w)
}

/// Rejection-sample a point of a chart's domain.
pub fn sample_in_chart(
    rng: &mut ChaCha8Rng,
    b: SampleBox,
    chart: &Chart,
    max_tries: usize,
) -> Result<Vec<f64>> {
    sample_where(rng, b, chart.dim, max_tries, |x| chart.contains(x)).ok_or_else(|| {
        Error::Config(format!(
            "no sample of chart `{}` found in [{}, {}] after {max_tries} tries",
            chart.name, b.lo, b.hi
        ))
    })
}

/// Rejection-sample the overlap of a transition: x in the from-chart with
/// φ(x) defined and inside the to-chart.
pub fn sample_in_overlap(
    rng: &mut ChaCha8Rng,
    b: SampleBox,
    from_chart: &Chart,
    to_chart: &Chart,
    t: &Transition,
    max_tries: usize,
) -> Result<Vec<f64>> {
    sample_where(rng, b, from_chart.dim, max_tries, |x| {
        from_chart.contains(x)
            && matches!(t.map.eval::<f64>(x), Ok(y) if to_chart.contains(&y))
    })
    .ok_or_else(|| Error::EmptyOverlap {
        from: t.from.clone(),
        to: t.to.clone(),
    })
}

/// Invariant of a single transition: map ∘ inverse = id on sampled overlap.
pub fn check_transition_inverse(
    from_chart: &Chart,
    to_chart: &Chart,
    t: &Transition,
    samples: usize,
    b: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let inverse = t.inverse_map()?;
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_overlap(rng, b, from_chart, to_chart, t, 10_000)?;
        let y = t.map.eval::<f64>(&x)?;
        match inverse.eval::<f64>(&y) {
            Ok(back) => out.record(sup_dist(&back, &x)),
            Err(_) => out.skip(),
        }
    }
    Ok(out)
}

/// Differentiability of the structure-group-free tangent transition,
/// checked as jet/finite-difference agreement of the paired map
/// (x, v) ↦ (Dφ(x)v, Dφ⁻¹(φ(x))v) along random directions.
pub fn check_transition_regularity(
    from_chart: &Chart,
    to_chart: &Chart,
    t: &Transition,
    samples: usize,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    if samples == 0 {
        return Err(Error::Config("regularity check needs samples >= 1".into()));
    }
    let inverse = t.inverse_map()?;
    let n = from_chart.dim;
    let mut out = CheckOutcome::default();
    let eps = FD_EPS_ORDER1;
    for _ in 0..samples {
        let x = sample_in_overlap(rng, b, from_chart, to_chart, t, 10_000)?;
        let v = crate::sample::sample_point(rng, vb, n);
        let hx = crate::sample::sample_point(rng, vb, n);
        let hv = crate::sample::sample_point(rng, vb, n);

        // Jet route, forward leg: d/dt Dφ(x+t hx)(v+t hv) = D²φ(x)(hx,v) + Dφ(x)hv.
        let fwd_second = second_dir_derivative(&t.map, &x, &hx, &v)?;
        let fwd_first = dir_derivative(&t.map, &x, &hv)?;
        let fwd_jet: Vec<f64> = fwd_second
            .iter()
            .zip(fwd_first.iter())
            .map(|(a, b)| a + b)
            .collect();

        // Jet route, inverse leg at y = φ(x); the base direction is Dφ(x)hx.
        let (y, dy_hx) = value_and_derivative(&t.map, &x, &hx)?;
        let inv_second = second_dir_derivative(inverse, &y, &dy_hx, &v)?;
        let inv_first = dir_derivative(inverse, &y, &hv)?;
        let inv_jet: Vec<f64> = inv_second
            .iter()
            .zip(inv_first.iter())
            .map(|(a, b)| a + b)
            .collect();

        // Finite-difference route on the paired map itself.
        let eval_pair = |s: f64| -> Result<(Vec<f64>, Vec<f64>)> {
            let xs: Vec<f64> = x.iter().zip(hx.iter()).map(|(x, h)| x + s * h).collect();
            let vs: Vec<f64> = v.iter().zip(hv.iter()).map(|(v, h)| v + s * h).collect();
            let fwd = dir_derivative(&t.map, &xs, &vs)?;
            let ys = t.map.eval::<f64>(&xs)?;
            let inv = dir_derivative(inverse, &ys, &vs)?;
            Ok((fwd, inv))
        };
        let (plus_f, plus_i) = match eval_pair(eps) {
            Ok(p) => p,
            Err(_) => {
                out.skip();
                continue;
            }
        };
        let (minus_f, minus_i) = match eval_pair(-eps) {
            Ok(p) => p,
            Err(_) => {
                out.skip();
                continue;
            }
        };
        let fd = |p: &[f64], m: &[f64]| -> Vec<f64> {
            p.iter().zip(m.iter()).map(|(p, m)| (p - m) / (2.0 * eps)).collect()
        };
        let fwd_fd = fd(&plus_f, &minus_f);
        let inv_fd = fd(&plus_i, &minus_i);

        let r = sup_dist(&fwd_jet, &fwd_fd).max(sup_dist(&inv_jet, &inv_fd));
        out.record(r);
    }
    Ok(out)
}

/// One U → V → U loop of the cocycle condition: the reverse transition must
/// exist in the atlas and compose with this one to the identity on sampled
/// overlap points.
pub fn check_cocycle_pair(
    atlas: &Atlas,
    t: &Transition,
    samples: usize,
    b: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let reverse = atlas.transition(&t.to, &t.from).ok_or_else(|| {
        Error::Config(format!(
            "missing inverse transition {} -> {} in the atlas",
            t.to, t.from
        ))
    })?;
    let from_chart = atlas.chart(&t.from)?;
    let to_chart = atlas.chart(&t.to)?;
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_overlap(rng, b, from_chart, to_chart, t, 10_000)?;
        let y = t.map.eval::<f64>(&x)?;
        match reverse.map.eval::<f64>(&y) {
            Ok(back) => out.record(sup_dist(&back, &x)),
            Err(_) => out.skip(),
        }
    }
    Ok(out)
}

/// Consistency of the atlas as a whole: [`check_cocycle_pair`] over every
/// transition.
pub fn cocycle_check(
    atlas: &Atlas,
    samples: usize,
    b: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(String, CheckOutcome)>> {
    let mut results = Vec::new();
    for t in &atlas.transitions {
        let out = check_cocycle_pair(atlas, t, samples, b, rng)?;
        results.push((format!("{}__{}", t.from, t.to), out));
    }
    Ok(results)
}

/// Jet vs finite-difference agreement of a single tangent lift, exposed for
/// spot checks (the derived examples in the tests use it directly).
pub fn tangent_lift_fd_residual(t: &Transition, x: &[f64], v: &[f64]) -> Result<f64> {
    let jet = dir_derivative(&t.map, x, v)?;
    let fd = fd_oracle(&t.map, x, v, FdOrder::First, FD_EPS_ORDER1)?;
    Ok(sup_dist(&jet, &fd))
}
