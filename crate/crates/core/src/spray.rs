//! Sprays and their associated symmetric bilinear maps.
//!
//! A spray over a chart is determined by its quadratic component S₂(x, v)
//! (degree-2 homogeneous in v); the full second-order section is
//! (x, u) ↦ (x, u, u, S₂(x, u)). The associated bilinear map B with
//! B(x; v, v) = S₂(x, v) is extracted by polarization, cross-checked
//! against half the second fiber derivative of S₂ at v = 0, and carries the
//! whole connection theory from there. For metric-declared manifolds B is
//! imported as minus the Christoffel symbols.

use crate::atlas::{sample_in_chart, sample_in_overlap, Chart, DoubleTangentVector, Transition};
use crate::diff::{dir_derivative, second_dir_derivative, value_and_derivative};
use crate::error::{Error, Result};
use crate::expr::{ExprMap, ExprMatrix};
use crate::jet::{Jet2, Scalar};
use crate::linalg::invert;
use crate::sample::{sample_point, sup_dist, sup_norm, CheckOutcome, SampleBox};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Rank-3 coefficient table indexed [k][i][j].
pub type Rank3<S> = Vec<Vec<Vec<S>>>;

/// A second-order section given by evaluation: (x, u) ↦ ξ.
pub type SectionFn<'a> = dyn Fn(&[f64], &[f64]) -> Result<DoubleTangentVector> + 'a;

/// Evaluation closure behind an [`OpaqueBilinear`].
pub type OpaqueEval = Arc<dyn Fn(&[f64], &[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// Scalar set used by [`check_homogeneity`] unless the caller overrides it.
pub const DEFAULT_HOMOGENEITY_SCALARS: [f64; 6] = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0];

/// The quadratic component S₂ of a spray over one chart.
///
/// Beyond literal expressions, sprays arise as B(x; v, v) for an imported
/// bilinear map and as pushforwards along transitions; all variants evaluate
/// over any scalar (jets included), so derivative cross-checks run through
/// constructed sprays too.
#[derive(Debug, Clone)]
pub enum SprayMap {
    /// Expression with inputs x0.., v0...
    Expr(ExprMap),
    /// S₂(x, v) = B(x; v, v).
    FromBilinear(Box<BilinearMap>),
    /// Target-chart spray induced along a transition φ:
    /// S₂'(y, v̄) = D²φ(x)(v, v) + Dφ(x)·S₂(x, v) with x = φ⁻¹(y),
    /// v = Dφ⁻¹(y)·v̄.
    Pushforward {
        source: Box<SprayMap>,
        map: ExprMap,
        inverse: ExprMap,
    },
}

impl SprayMap {
    pub fn dim(&self) -> usize {
        match self {
            SprayMap::Expr(e) => e.arity_out(),
            SprayMap::FromBilinear(b) => b.dim(),
            SprayMap::Pushforward { source, .. } => source.dim(),
        }
    }

    pub fn eval<S: Scalar>(&self, x: &[S], v: &[S]) -> Result<Vec<S>> {
        match self {
            SprayMap::Expr(e) => {
                let mut args = Vec::with_capacity(x.len() + v.len());
                args.extend_from_slice(x);
                args.extend_from_slice(v);
                e.eval(&args)
            }
            SprayMap::FromBilinear(b) => b.eval(x, v, v),
            SprayMap::Pushforward {
                source,
                map,
                inverse,
            } => {
                let src_x = inverse.eval(x)?;
                let src_v = dir_derivative(inverse, x, v)?;
                let d2 = second_dir_derivative(map, &src_x, &src_v, &src_v)?;
                let s2 = source.eval(&src_x, &src_v)?;
                let pushed = dir_derivative(map, &src_x, &s2)?;
                Ok(d2
                    .into_iter()
                    .zip(pushed)
                    .map(|(a, b)| a + b)
                    .collect())
            }
        }
    }

    /// The canonical second-order section (x, u) ↦ (x, u, u, S₂(x, u)).
    pub fn section(&self, x: &[f64], u: &[f64]) -> Result<DoubleTangentVector> {
        let w = self.eval(x, u)?;
        DoubleTangentVector::new(x.to_vec(), u.to_vec(), u.to_vec(), w)
    }
}

/// Evaluation-only bilinear map, the intake format for black-box splittings.
#[derive(Clone)]
pub struct OpaqueBilinear {
    pub dim: usize,
    pub eval: OpaqueEval,
}

impl std::fmt::Debug for OpaqueBilinear {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OpaqueBilinear(dim={})", self.dim)
    }
}

/// The symmetric bilinear map B(x; u, v) of a spray over one chart.
#[derive(Debug, Clone)]
pub enum BilinearMap {
    /// Expression with inputs x0.., u0.., v0... Evaluated as written (no
    /// symmetrization), so the symmetry check can catch corrupted input.
    Expr(ExprMap),
    /// Polarization of a quadratic spray component:
    /// B(x; u, v) = ½·(S₂(x, u+v) − (S₂(x, u) + S₂(x, v))).
    Polarized(Box<SprayMap>),
    /// Minus the Christoffel symbols of a metric.
    Christoffel(MetricMap),
    /// Evaluation-only access (recovered from black-box splittings).
    Opaque(OpaqueBilinear),
}

impl BilinearMap {
    pub fn dim(&self) -> usize {
        match self {
            BilinearMap::Expr(e) => e.arity_out(),
            BilinearMap::Polarized(s) => s.dim(),
            BilinearMap::Christoffel(m) => m.dim(),
            BilinearMap::Opaque(o) => o.dim,
        }
    }

    /// A flat (identically zero) bilinear map.
    pub fn flat(dim: usize) -> BilinearMap {
        BilinearMap::Opaque(OpaqueBilinear {
            dim,
            eval: Arc::new(move |_, _, _| Ok(vec![0.0; dim])),
        })
    }

    pub fn eval<S: Scalar>(&self, x: &[S], u: &[S], v: &[S]) -> Result<Vec<S>> {
        match self {
            BilinearMap::Expr(e) => {
                let mut args = Vec::with_capacity(x.len() + u.len() + v.len());
                args.extend_from_slice(x);
                args.extend_from_slice(u);
                args.extend_from_slice(v);
                e.eval(&args)
            }
            BilinearMap::Polarized(s2) => {
                let sum: Vec<S> = u.iter().zip(v.iter()).map(|(&a, &b)| a + b).collect();
                let s_sum = s2.eval(x, &sum)?;
                let s_u = s2.eval(x, u)?;
                let s_v = s2.eval(x, v)?;
                let half = S::from_f64(0.5);
                // Grouped so the value is bit-identical under u ↔ v.
                Ok(s_sum
                    .into_iter()
                    .zip(s_u.into_iter().zip(s_v))
                    .map(|(s, (a, b))| half * (s - (a + b)))
                    .collect())
            }
            BilinearMap::Christoffel(m) => {
                let gamma = m.christoffel(x)?;
                Ok(contract_symmetric(&gamma, u, v, true))
            }
            BilinearMap::Opaque(o) => {
                if S::DEPTH > 0 {
                    return Err(Error::Config(
                        "opaque bilinear map cannot be jet-differentiated".to_string(),
                    ));
                }
                let to_f64 = |s: &[S]| s.iter().map(|c| c.re()).collect::<Vec<f64>>();
                let out = (o.eval)(&to_f64(x), &to_f64(u), &to_f64(v))?;
                Ok(out.into_iter().map(S::from_f64).collect())
            }
        }
    }

    /// Component table B[k][i][j] = B(x; e_i, e_j)_k at a point.
    pub fn tensor(&self, x: &[f64]) -> Result<Rank3<f64>> {
        let n = self.dim();
        let mut out = vec![vec![vec![0.0; n]; n]; n];
        let mut ei = vec![0.0; n];
        let mut ej = vec![0.0; n];
        for i in 0..n {
            ei[i] = 1.0;
            for j in 0..n {
                ej[j] = 1.0;
                let b = self.eval(x, &ei, &ej)?;
                for k in 0..n {
                    out[k][i][j] = b[k];
                }
                ej[j] = 0.0;
            }
            ei[i] = 0.0;
        }
        Ok(out)
    }
}

/// Symmetric contraction ±Σ Γ[k][i][j]·u_i·v_j, accumulated so the result
/// is bit-identical under u ↔ v. `negate` yields B = −Γ.
fn contract_symmetric<S: Scalar>(gamma: &Rank3<S>, u: &[S], v: &[S], negate: bool) -> Vec<S> {
    let n = u.len();
    let mut out = Vec::with_capacity(n);
    for g_k in gamma {
        let mut acc = S::zero();
        for i in 0..n {
            acc = acc + g_k[i][i] * (u[i] * v[i]);
            for j in (i + 1)..n {
                acc = acc + g_k[i][j] * (u[i] * v[j] + u[j] * v[i]);
            }
        }
        out.push(if negate { -acc } else { acc });
    }
    out
}

/// A metric tensor given by an expression matrix over x0..; imports sprays
/// via B = −Γ.
#[derive(Debug, Clone)]
pub struct MetricMap {
    entries: ExprMatrix,
}

impl MetricMap {
    pub fn new(entries: ExprMatrix) -> Self {
        MetricMap { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    /// Metric value, symmetrized entrywise.
    pub fn value<S: Scalar>(&self, x: &[S]) -> Result<Vec<Vec<S>>> {
        let raw = self.entries.eval(x)?;
        Ok(symmetrize(raw))
    }

    /// ∂g matrices via jets: dg[i][j][l] = ∂_i g_{jl}(x).
    fn derivatives<S: Scalar>(&self, x: &[S]) -> Result<Rank3<S>> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let seeds: Vec<Jet2<S>> = (0..n)
                .map(|j| Jet2::seeded(x[j], if j == i { S::one() } else { S::zero() }))
                .collect();
            let jets = self.entries.eval(&seeds)?;
            let d: Vec<Vec<S>> = jets
                .into_iter()
                .map(|row| row.into_iter().map(|j| j.d1).collect())
                .collect();
            out.push(symmetrize(d));
        }
        Ok(out)
    }

    /// Christoffel symbols Γ[k][i][j] with jet-exact metric derivatives.
    pub fn christoffel<S: Scalar>(&self, x: &[S]) -> Result<Rank3<S>> {
        let g = self.value(x)?;
        let dg = self.derivatives(x)?;
        assemble_christoffel(&g, &dg)
    }

    /// Independent oracle: the same formula with central-difference metric
    /// derivatives instead of jets.
    pub fn christoffel_fd(&self, x: &[f64], eps: f64) -> Result<Rank3<f64>> {
        let n = self.dim();
        let g = self.value(x)?;
        let mut dg = Vec::with_capacity(n);
        for i in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += eps;
            xm[i] -= eps;
            let gp = self.entries.eval(&xp)?;
            let gm = self.entries.eval(&xm)?;
            let d: Vec<Vec<f64>> = gp
                .iter()
                .zip(gm.iter())
                .map(|(rp, rm)| {
                    rp.iter()
                        .zip(rm.iter())
                        .map(|(p, m)| (p - m) / (2.0 * eps))
                        .collect()
                })
                .collect();
            dg.push(symmetrize(d));
        }
        assemble_christoffel(&g, &dg)
    }

    /// Kinetic energy g_x(v, v).
    pub fn energy(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let g = self.value(x)?;
        let mut e = 0.0;
        for i in 0..v.len() {
            for j in 0..v.len() {
                e += g[i][j] * v[i] * v[j];
            }
        }
        Ok(e)
    }
}

fn symmetrize<S: Scalar>(m: Vec<Vec<S>>) -> Vec<Vec<S>> {
    let n = m.len();
    let half = S::from_f64(0.5);
    let mut out = m.clone();
    for i in 0..n {
        for j in 0..n {
            out[i][j] = half * (m[i][j] + m[j][i]);
        }
    }
    out
}

/// Γ^k_ij = ½ Σ_l g^{kl} (∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij}).
fn assemble_christoffel<S: Scalar>(
    g: &[Vec<S>],
    dg: &[Vec<Vec<S>>],
) -> Result<Rank3<S>> {
    let n = g.len();
    let ginv = invert(g)?;
    let half = S::from_f64(0.5);
    let mut gamma = vec![vec![vec![S::zero(); n]; n]; n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = S::zero();
                for l in 0..n {
                    let term = dg[i][j][l] + dg[j][i][l] - dg[l][i][j];
                    acc = acc + ginv[k][l] * term;
                }
                gamma[k][i][j] = half * acc;
            }
        }
    }
    Ok(gamma)
}

/// Per-chart spray components.
#[derive(Debug, Clone, Default)]
pub struct SprayField {
    pub per_chart: BTreeMap<String, SprayMap>,
}

impl SprayField {
    pub fn get(&self, chart: &str) -> Result<&SprayMap> {
        self.per_chart
            .get(chart)
            .ok_or_else(|| Error::UnresolvedRef(format!("spray on chart `{chart}`")))
    }
}

/// Per-chart bilinear maps.
#[derive(Debug, Clone, Default)]
pub struct BilinearCoeffs {
    pub per_chart: BTreeMap<String, BilinearMap>,
}

impl BilinearCoeffs {
    pub fn get(&self, chart: &str) -> Result<&BilinearMap> {
        self.per_chart
            .get(chart)
            .ok_or_else(|| Error::UnresolvedRef(format!("bilinear map on chart `{chart}`")))
    }
}

/// Second-order condition for a lifted section: the tangent projection of
/// section(x, u) must return (x, u). For the canonical section this holds
/// structurally; a corrupted section is detected.
pub fn check_second_order(
    section: &SectionFn<'_>,
    chart: &Chart,
    samples: usize,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_chart(rng, b, chart, 10_000)?;
        let u = sample_point(rng, vb, chart.dim);
        let xi = section(&x, &u)?;
        let (px, pv) = xi.tangent_projection();
        let r = sup_dist(px, &x).max(sup_dist(pv, &u));
        out.record(r);
    }
    Ok(out)
}

/// Relative homogeneity defect of one evaluation:
/// ‖S₂(x, s·v) − s²·S₂(x, v)‖ / (1 + ‖S₂(x, v)‖).
pub fn homogeneity_residual(s2: &SprayMap, x: &[f64], v: &[f64], s: f64) -> Result<f64> {
    let base = s2.eval(x, v)?;
    let sv: Vec<f64> = v.iter().map(|c| s * c).collect();
    let lhs = s2.eval(x, &sv)?;
    let scaled: Vec<f64> = base.iter().map(|c| s * s * c).collect();
    Ok(sup_dist(&lhs, &scaled) / (1.0 + sup_norm(&base)))
}

/// Degree-2 homogeneity of S₂ in the fiber variable over sampled points and
/// the given scalar set. Samples that fall outside the chart domain are
/// skipped and counted.
pub fn check_homogeneity(
    s2: &SprayMap,
    chart: &Chart,
    scalars: &[f64],
    samples: usize,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    if scalars.is_empty() {
        return Err(Error::Config("homogeneity scalar set is empty".into()));
    }
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_point(rng, b, chart.dim);
        if !chart.contains(&x) {
            out.skip();
            continue;
        }
        let v = sample_point(rng, vb, chart.dim);
        let mut worst = 0.0f64;
        for &s in scalars {
            worst = worst.max(homogeneity_residual(s2, &x, &v, s)?);
        }
        out.record(worst);
    }
    Ok(out)
}

/// Sampled S₂(x, 0) = 0 (forced by homogeneity).
pub fn check_zero_section(
    s2: &SprayMap,
    chart: &Chart,
    samples: usize,
    b: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let zero = vec![0.0; chart.dim];
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_chart(rng, b, chart, 10_000)?;
        out.record(sup_norm(&s2.eval(&x, &zero)?));
    }
    Ok(out)
}

/// Pure second fiber derivative of S₂ at v = 0 along h, computed over jets.
fn spray_pure_second_in_v(s2: &SprayMap, x: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    let xj: Vec<Jet2<f64>> = x.iter().map(|&c| Jet2::constant(c)).collect();
    let vj: Vec<Jet2<f64>> = h.iter().map(|&c| Jet2::seeded(0.0, c)).collect();
    Ok(s2.eval(&xj, &vj)?.into_iter().map(|j| j.d2).collect())
}

/// ½·D₂²S₂(x, 0)(u, v) via jets — the cross-check route for extraction.
pub fn bilinear_from_jets(s2: &SprayMap, x: &[f64], u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let sum: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| a + b).collect();
    let q_sum = spray_pure_second_in_v(s2, x, &sum)?;
    let q_u = spray_pure_second_in_v(s2, x, u)?;
    let q_v = spray_pure_second_in_v(s2, x, v)?;
    Ok(q_sum
        .into_iter()
        .zip(q_u.into_iter().zip(q_v))
        .map(|(s, (a, b))| 0.25 * (s - (a + b)))
        .collect())
}

pub struct Extraction {
    pub bilinear: BilinearMap,
    /// Polarization vs jet cross-check residuals.
    pub crosscheck: CheckOutcome,
}

/// Extract the associated bilinear map by polarization and cross-validate it
/// against half the second fiber derivative at v = 0. Disagreement beyond
/// `reject_tol` means the spray is not fiberwise quadratic.
pub fn extract_bilinear(
    s2: &SprayMap,
    chart: &Chart,
    samples: usize,
    reject_tol: f64,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<Extraction> {
    let bilinear = BilinearMap::Polarized(Box::new(s2.clone()));
    let mut crosscheck = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_chart(rng, b, chart, 10_000)?;
        let u = sample_point(rng, vb, chart.dim);
        let v = sample_point(rng, vb, chart.dim);
        let polar = bilinear.eval(&x, &u, &v)?;
        let jets = bilinear_from_jets(s2, &x, &u, &v)?;
        crosscheck.record(sup_dist(&polar, &jets));
    }
    if crosscheck.max_residual > reject_tol {
        return Err(Error::NotFiberwiseQuadratic {
            chart: chart.name.clone(),
            residual: crosscheck.max_residual,
        });
    }
    Ok(Extraction {
        bilinear,
        crosscheck,
    })
}

/// B(x; v, v) = S₂(x, v), relative to 1 + ‖S₂‖.
pub fn check_quadratic_form(
    s2: &SprayMap,
    bmap: &BilinearMap,
    chart: &Chart,
    samples: usize,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_chart(rng, b, chart, 10_000)?;
        let v = sample_point(rng, vb, chart.dim);
        let s = s2.eval(&x, &v)?;
        let q = bmap.eval(&x, &v, &v)?;
        out.record(sup_dist(&s, &q) / (1.0 + sup_norm(&s)));
    }
    Ok(out)
}

/// Raw symmetry defect ‖B(x;u,v) − B(x;v,u)‖ (not normalized, so corrupted
/// declared coefficients surface immediately).
pub fn check_symmetry(
    bmap: &BilinearMap,
    chart: &Chart,
    samples: usize,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_chart(rng, b, chart, 10_000)?;
        let u = sample_point(rng, vb, chart.dim);
        let v = sample_point(rng, vb, chart.dim);
        let a = bmap.eval(&x, &u, &v)?;
        let bb = bmap.eval(&x, &v, &u)?;
        out.record(sup_dist(&a, &bb));
    }
    Ok(out)
}

/// First-slot linearity of B with random coefficients in [−2, 2].
pub fn check_bilinearity(
    bmap: &BilinearMap,
    chart: &Chart,
    samples: usize,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let n = chart.dim;
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_chart(rng, b, chart, 10_000)?;
        let u1 = sample_point(rng, vb, n);
        let u2 = sample_point(rng, vb, n);
        let v = sample_point(rng, vb, n);
        let a: f64 = rng.random_range(-2.0..2.0);
        let c: f64 = rng.random_range(-2.0..2.0);
        let combo: Vec<f64> = u1
            .iter()
            .zip(u2.iter())
            .map(|(p, q)| a * p + c * q)
            .collect();
        let lhs = bmap.eval(&x, &combo, &v)?;
        let b1 = bmap.eval(&x, &u1, &v)?;
        let b2 = bmap.eval(&x, &u2, &v)?;
        let rhs: Vec<f64> = b1
            .iter()
            .zip(b2.iter())
            .map(|(p, q)| a * p + c * q)
            .collect();
        out.record(sup_dist(&lhs, &rhs) / (1.0 + sup_norm(&rhs)));
    }
    Ok(out)
}

/// Change-of-chart law for the bilinear map along a transition φ:
/// B_to(φ(x); Dφ(x)u, Dφ(x)v) = D²φ(x)(u,v) + Dφ(x)·B_from(x; u, v).
#[allow(clippy::too_many_arguments)]
pub fn check_transformation_law(
    b_from: &BilinearMap,
    b_to: &BilinearMap,
    t: &Transition,
    from_chart: &Chart,
    to_chart: &Chart,
    samples: usize,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let n = from_chart.dim;
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_overlap(rng, b, from_chart, to_chart, t, 10_000)?;
        let u = sample_point(rng, vb, n);
        let v = sample_point(rng, vb, n);
        let (y, dy_u) = value_and_derivative(&t.map, &x, &u)?;
        let dy_v = dir_derivative(&t.map, &x, &v)?;
        let lhs = b_to.eval(&y, &dy_u, &dy_v)?;
        let d2 = second_dir_derivative(&t.map, &x, &u, &v)?;
        let bsrc = b_from.eval(&x, &u, &v)?;
        let pushed = dir_derivative(&t.map, &x, &bsrc)?;
        let rhs: Vec<f64> = d2.iter().zip(pushed.iter()).map(|(a, b)| a + b).collect();
        out.record(sup_dist(&lhs, &rhs) / (1.0 + sup_norm(&rhs)));
    }
    Ok(out)
}

/// Spray induced on the target chart of a transition. The transformation
/// law holds for it by construction.
pub fn pushforward_spray(s2: &SprayMap, t: &Transition) -> Result<SprayMap> {
    let inverse = t.inverse_map()?.clone();
    Ok(SprayMap::Pushforward {
        source: Box::new(s2.clone()),
        map: t.map.clone(),
        inverse,
    })
}

/// Pushforward along t then along its reverse returns the original S₂ on
/// overlap samples.
#[allow(clippy::too_many_arguments)]
pub fn check_pushforward_roundtrip(
    s2: &SprayMap,
    t: &Transition,
    from_chart: &Chart,
    to_chart: &Chart,
    samples: usize,
    b: SampleBox,
    vb: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let there = pushforward_spray(s2, t)?;
    let back = pushforward_spray(&there, &t.reversed()?)?;
    let n = from_chart.dim;
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_overlap(rng, b, from_chart, to_chart, t, 10_000)?;
        let v = sample_point(rng, vb, n);
        let orig = s2.eval(&x, &v)?;
        let round = back.eval(&x, &v)?;
        out.record(sup_dist(&orig, &round) / (1.0 + sup_norm(&orig)));
    }
    Ok(out)
}

/// B against the central-difference Christoffel oracle: max over basis
/// pairs of ‖B(x; e_i, e_j) + Γ_fd(x)_{ij}‖ at sampled points.
#[allow(clippy::too_many_arguments)]
pub fn check_christoffel_oracle(
    bmap: &BilinearMap,
    metric: &MetricMap,
    chart: &Chart,
    points: usize,
    eps: f64,
    b: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let n = chart.dim;
    let mut out = CheckOutcome::default();
    for _ in 0..points {
        let x = sample_in_chart(rng, b, chart, 10_000)?;
        let gamma = metric.christoffel_fd(&x, eps)?;
        let tensor = bmap.tensor(&x)?;
        let mut worst = 0.0f64;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((tensor[k][i][j] + gamma[k][i][j]).abs());
                }
            }
        }
        out.record(worst);
    }
    Ok(out)
}
