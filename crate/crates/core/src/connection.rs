//! Covariant derivative, connection map, linear symmetric connection, lifts,
//! tangent structure, and projectors.
//!
//! Everything here is driven by one symmetric bilinear map B per chart:
//!
//! - covariant derivative   (∇_X Y)(x) = DY(x)(X(x)) − B(x; X(x), Y(x))
//! - connection map         K(x,u,v,w) = (x, w − B(x;u,v))
//! - splitting              𝔠(x,u,v,w) = (x, u, 0, w − B(x;u,v))
//! - vertical lift          Ver
//! - horizontal lift        Hor_(x,u)(w) = (x, u, w, B(x;u,w))
//! - tangent structure      J(x,u,v,w) = (x, u, 0, v)
//! - projectors             Vp = 𝔠 (as an endomorphism), Hp = Id − Vp
//!
//! Representing each object through B makes the coordinate identities exact
//! and the correspondence theorems round-trips on B; the converse intake for
//! evaluation-only splittings is what keeps those converses non-vacuous.

use crate::atlas::{sample_in_chart, sample_in_overlap, Chart, DoubleTangentVector, Transition};
use crate::diff::{dir_derivative, value_and_derivative};
use crate::error::{Error, Result};
use crate::expr::ExprMap;
use crate::sample::{sample_point, sup_dist, sup_norm, CheckOutcome, SampleBox};
use crate::spray::{BilinearMap, OpaqueBilinear};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// A vector field by chart representatives (principal parts).
#[derive(Debug, Clone, Default)]
pub struct VectorField {
    pub per_chart: BTreeMap<String, ExprMap>,
}

impl VectorField {
    pub fn get(&self, chart: &str) -> Result<&ExprMap> {
        self.per_chart
            .get(chart)
            .ok_or_else(|| Error::UnresolvedRef(format!("vector field on chart `{chart}`")))
    }
}

/// The connection map K: T(TM) → TM of a spray.
#[derive(Debug, Clone)]
pub struct ConnectionMap {
    pub b: BilinearMap,
}

impl ConnectionMap {
    pub fn new(b: BilinearMap) -> Self {
        ConnectionMap { b }
    }

    /// K(ξ) = (x, w − B(x; u, v)).
    pub fn apply(&self, xi: &DoubleTangentVector) -> Result<(Vec<f64>, Vec<f64>)> {
        let bv = self.b.eval(&xi.x, &xi.u, &xi.v)?;
        let k: Vec<f64> = xi.w.iter().zip(bv.iter()).map(|(w, b)| w - b).collect();
        Ok((xi.x.clone(), k))
    }
}

/// The left splitting 𝔠 of 0 → VTM → T(TM) → Π*TM → 0.
#[derive(Debug, Clone)]
pub struct ConnectionSplitting {
    pub b: BilinearMap,
}

impl ConnectionSplitting {
    pub fn new(b: BilinearMap) -> Self {
        ConnectionSplitting { b }
    }

    /// 𝔠(ξ) = (x, u, 0, w − B(x; u, v)).
    pub fn apply(&self, xi: &DoubleTangentVector) -> Result<DoubleTangentVector> {
        let bv = self.b.eval(&xi.x, &xi.u, &xi.v)?;
        let w: Vec<f64> = xi.w.iter().zip(bv.iter()).map(|(w, b)| w - b).collect();
        DoubleTangentVector::new(xi.x.clone(), xi.u.clone(), vec![0.0; xi.dim()], w)
    }
}

/// Evaluation-only access to a splitting; the intake format for the
/// converse constructions.
pub trait SplittingOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn apply_raw(&self, xi: &DoubleTangentVector) -> Result<DoubleTangentVector>;
}

impl SplittingOracle for ConnectionSplitting {
    fn dim(&self) -> usize {
        self.b.dim()
    }
    fn apply_raw(&self, xi: &DoubleTangentVector) -> Result<DoubleTangentVector> {
        self.apply(xi)
    }
}

/// The factored form of the connection map through the foot:
/// ξ ↦ (x, u, w − B(x; u, v)). Together with [`crate::atlas::anchor_projection`]
/// this is all the intermediate bundle bookkeeping the construction needs.
pub fn foot_and_connection(
    k: &ConnectionMap,
    xi: &DoubleTangentVector,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (x, kv) = k.apply(xi)?;
    Ok((x, xi.u.clone(), kv))
}

/// The canonical involution: (x, u, v, w) ↦ (x, v, u, w). Its fixed points
/// are exactly the symmetric vectors.
pub fn involution(xi: &DoubleTangentVector) -> DoubleTangentVector {
    DoubleTangentVector {
        x: xi.x.clone(),
        u: xi.v.clone(),
        v: xi.u.clone(),
        w: xi.w.clone(),
    }
}

/// Vertical lift at (x, v): w ↦ (x, v, 0, w).
pub fn vertical_lift(x: &[f64], v: &[f64], w: &[f64]) -> Result<DoubleTangentVector> {
    DoubleTangentVector::new(x.to_vec(), v.to_vec(), vec![0.0; x.len()], w.to_vec())
}

/// Horizontal lift at (x, u): w ↦ (x, u, w, B(x; u, w)), a section of ker K
/// with tangent projection (x, w).
pub fn horizontal_lift(
    b: &BilinearMap,
    x: &[f64],
    u: &[f64],
    w: &[f64],
) -> Result<DoubleTangentVector> {
    let bw = b.eval(x, u, w)?;
    DoubleTangentVector::new(x.to_vec(), u.to_vec(), w.to_vec(), bw)
}

/// The tangent structure J = 𝕀 ∘ ȷ ∘ Π!: (x, u, v, w) ↦ (x, u, 0, v).
pub fn tangent_structure(xi: &DoubleTangentVector) -> DoubleTangentVector {
    DoubleTangentVector {
        x: xi.x.clone(),
        u: xi.u.clone(),
        v: vec![0.0; xi.dim()],
        w: xi.v.clone(),
    }
}

/// Vertical and horizontal projectors of a splitting:
/// Vp(ξ) = (x,u,0,w−B(x;u,v)), Hp(ξ) = ξ − Vp(ξ) = (x,u,v,B(x;u,v)).
pub fn projectors(
    c: &ConnectionSplitting,
    xi: &DoubleTangentVector,
) -> Result<(DoubleTangentVector, DoubleTangentVector)> {
    let bv = c.b.eval(&xi.x, &xi.u, &xi.v)?;
    let vp_w: Vec<f64> = xi.w.iter().zip(bv.iter()).map(|(w, b)| w - b).collect();
    let vp = DoubleTangentVector::new(xi.x.clone(), xi.u.clone(), vec![0.0; xi.dim()], vp_w)?;
    let hp = DoubleTangentVector::new(xi.x.clone(), xi.u.clone(), xi.v.clone(), bv)?;
    Ok((vp, hp))
}

/// (∇_X Y)(x) = DY(x)(X(x)) − B(x; X(x), Y(x)) in a chart.
pub fn covariant_derivative(
    b: &BilinearMap,
    x_field: &ExprMap,
    y_field: &ExprMap,
    chart: &Chart,
    x: &[f64],
) -> Result<Vec<f64>> {
    chart.require_inside(x)?;
    let xv = x_field.eval::<f64>(x)?;
    let (yv, dy) = value_and_derivative(y_field, x, &xv)?;
    let bv = b.eval(x, &xv, &yv)?;
    Ok(dy.iter().zip(bv.iter()).map(|(d, b)| d - b).collect())
}

/// Chart expression of the Lie bracket: [X, Y](x) = DY(x)(X(x)) − DX(x)(Y(x)).
pub fn lie_bracket(x_field: &ExprMap, y_field: &ExprMap, x: &[f64]) -> Result<Vec<f64>> {
    let xv = x_field.eval::<f64>(x)?;
    let yv = y_field.eval::<f64>(x)?;
    let dy_x = dir_derivative(y_field, x, &xv)?;
    let dx_y = dir_derivative(x_field, x, &yv)?;
    Ok(dy_x.iter().zip(dx_y.iter()).map(|(a, b)| a - b).collect())
}

/// Outcome of the covariant-derivative axiom checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct CdAxiomOutcomes {
    /// ∇_{fX} Y = f ∇_X Y.
    pub tensorial: CheckOutcome,
    /// ∇_X (fY) = (Df·X) Y + f ∇_X Y.
    pub leibniz: CheckOutcome,
    /// ℝ-bilinearity in both slots.
    pub bilinear: CheckOutcome,
    /// ∇_X Y − ∇_Y X = [X, Y].
    pub torsion: CheckOutcome,
}

/// Built-in polynomial test fields for a chart dimension: constants, the
/// identity field, and two quadratic fields.
pub fn polynomial_test_fields(dim: usize) -> Vec<ExprMap> {
    let names = crate::expr::coord_names("x", dim);
    let mut sources = Vec::new();
    let basis = |k: usize| {
        let comps: Vec<String> = (0..dim)
            .map(|i| if i == k { "1".to_string() } else { "0".to_string() })
            .collect();
        format!("[{}]", comps.join(", "))
    };
    sources.push(basis(0));
    if dim > 1 {
        sources.push(basis(dim - 1));
    }
    let identity: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    sources.push(format!("[{}]", identity.join(", ")));
    let squares: Vec<String> = (0..dim).map(|i| format!("x{i}^2")).collect();
    sources.push(format!("[{}]", squares.join(", ")));
    let mixed: Vec<String> = (0..dim)
        .map(|i| format!("x{}*x{}", i, (i + 1) % dim))
        .collect();
    sources.push(format!("[{}]", mixed.join(", ")));
    sources
        .iter()
        .map(|s| ExprMap::parse(s, &names).expect("builtin field parses"))
        .collect()
}

/// Built-in polynomial scalar functions for a chart dimension.
pub fn polynomial_test_scalars(dim: usize) -> Vec<ExprMap> {
    let names = crate::expr::coord_names("x", dim);
    let mut sources = vec!["1".to_string(), "x0".to_string(), "1 + x0^2".to_string()];
    if dim > 1 {
        sources.push(format!("x0*x{}", dim - 1));
    }
    sources
        .iter()
        .map(|s| ExprMap::parse(s, &names).expect("builtin scalar parses"))
        .collect()
}

fn scale_field(f_scalar: &ExprMap, y: &ExprMap) -> ExprMap {
    ExprMap::product(f_scalar, y)
}

/// Covariant-derivative axioms over the given (or built-in) field and scalar
/// families, at sampled chart points. Residuals are relative to 1 + ‖rhs‖.
#[allow(clippy::too_many_arguments)]
pub fn check_cd_axioms(
    b: &BilinearMap,
    chart: &Chart,
    extra_fields: &[ExprMap],
    extra_scalars: &[ExprMap],
    samples: usize,
    sbox: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CdAxiomOutcomes> {
    let mut fields = polynomial_test_fields(chart.dim);
    fields.extend(extra_fields.iter().cloned());
    let mut scalars = polynomial_test_scalars(chart.dim);
    scalars.extend(extra_scalars.iter().cloned());

    let mut out = CdAxiomOutcomes::default();
    let rel = |num: f64, scale: &[f64]| num / (1.0 + sup_norm(scale));

    for _ in 0..samples {
        let x = sample_in_chart(rng, sbox, chart, 10_000)?;
        for (xi_idx, x_field) in fields.iter().enumerate() {
            for (yi_idx, y_field) in fields.iter().enumerate() {
                let nabla_xy = covariant_derivative(b, x_field, y_field, chart, &x)?;

                // Torsion: ∇_X Y − ∇_Y X − [X, Y] = 0.
                let nabla_yx = covariant_derivative(b, y_field, x_field, chart, &x)?;
                let bracket = lie_bracket(x_field, y_field, &x)?;
                let torsion: Vec<f64> = nabla_xy
                    .iter()
                    .zip(nabla_yx.iter().zip(bracket.iter()))
                    .map(|(a, (bb, c))| a - bb - c)
                    .collect();
                out.torsion.record(rel(sup_norm(&torsion), &bracket));

                // ℝ-bilinearity in both slots (one scalar pair per field pair).
                let (a_c, b_c) = (1.5, -0.75);
                let other = &fields[(xi_idx + 1) % fields.len()];
                let combo_first = {
                    // First slot is tensorial in the value, so combine values.
                    let xv = x_field.eval::<f64>(&x)?;
                    let ov = other.eval::<f64>(&x)?;
                    let comb: Vec<f64> = xv
                        .iter()
                        .zip(ov.iter())
                        .map(|(p, q)| a_c * p + b_c * q)
                        .collect();
                    let (yv, dy) = value_and_derivative(y_field, &x, &comb)?;
                    let bv = b.eval(&x, &comb, &yv)?;
                    dy.iter().zip(bv.iter()).map(|(d, bb)| d - bb).collect::<Vec<f64>>()
                };
                let nabla_other_y = covariant_derivative(b, other, y_field, chart, &x)?;
                let rhs_first: Vec<f64> = nabla_xy
                    .iter()
                    .zip(nabla_other_y.iter())
                    .map(|(p, q)| a_c * p + b_c * q)
                    .collect();
                out.bilinear
                    .record(rel(sup_dist(&combo_first, &rhs_first), &rhs_first));

                let other_y = &fields[(yi_idx + 1) % fields.len()];
                let comb_field = ExprMap::linear_combination(a_c, y_field, b_c, other_y);
                let lhs_second = covariant_derivative(b, x_field, &comb_field, chart, &x)?;
                let nabla_x_other = covariant_derivative(b, x_field, other_y, chart, &x)?;
                let rhs_second: Vec<f64> = nabla_xy
                    .iter()
                    .zip(nabla_x_other.iter())
                    .map(|(p, q)| a_c * p + b_c * q)
                    .collect();
                out.bilinear
                    .record(rel(sup_dist(&lhs_second, &rhs_second), &rhs_second));

                for f in &scalars {
                    let fx = f.eval_scalar::<f64>(&x)?;

                    // Tensoriality: ∇_{fX} Y vs f ∇_X Y.
                    let xv = x_field.eval::<f64>(&x)?;
                    let fxv: Vec<f64> = xv.iter().map(|c| fx * c).collect();
                    let (yv, dy_fx) = value_and_derivative(y_field, &x, &fxv)?;
                    let b_fx = b.eval(&x, &fxv, &yv)?;
                    let lhs: Vec<f64> =
                        dy_fx.iter().zip(b_fx.iter()).map(|(d, bb)| d - bb).collect();
                    let rhs: Vec<f64> = nabla_xy.iter().map(|c| fx * c).collect();
                    out.tensorial.record(rel(sup_dist(&lhs, &rhs), &rhs));

                    // Leibniz: ∇_X (fY) vs (Df·X) Y + f ∇_X Y, with the left
                    // side differentiating the literal product field.
                    let fy = scale_field(f, y_field);
                    let lhs = covariant_derivative(b, x_field, &fy, chart, &x)?;
                    let df_x = dir_derivative(f, &x, &xv)?[0];
                    let rhs: Vec<f64> = yv
                        .iter()
                        .zip(nabla_xy.iter())
                        .map(|(y, n)| df_x * y + fx * n)
                        .collect();
                    out.leibniz.record(rel(sup_dist(&lhs, &rhs), &rhs));
                }
            }
        }
    }
    Ok(out)
}

/// Commutativity ∇_Y X = K ∘ TX ∘ Y, computed along two code paths:
/// the chart formula for ∇ and the composite through the tangent map of X.
pub fn check_nabla_equals_k_of_t(
    k: &ConnectionMap,
    x_field: &ExprMap,
    y_field: &ExprMap,
    chart: &Chart,
    samples: usize,
    sbox: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_chart(rng, sbox, chart, 10_000)?;
        let route_nabla = covariant_derivative(&k.b, y_field, x_field, chart, &x)?;

        // TX(Y(x)) = (x, X(x), Y(x), DX(x)(Y(x))), then apply K.
        let yv = y_field.eval::<f64>(&x)?;
        let (xv, dx_y) = value_and_derivative(x_field, &x, &yv)?;
        let xi = DoubleTangentVector::new(x.clone(), xv, yv, dx_y)?;
        let (_, route_k) = k.apply(&xi)?;

        out.record(sup_dist(&route_nabla, &route_k) / (1.0 + sup_norm(&route_k)));
    }
    Ok(out)
}

/// Compatibility of chart representatives of a vector field:
/// Dφ(x)·X_from(x) = X_to(φ(x)) on sampled overlap points.
#[allow(clippy::too_many_arguments)]
pub fn check_field_compatibility(
    x_from: &ExprMap,
    x_to: &ExprMap,
    t: &Transition,
    from_chart: &Chart,
    to_chart: &Chart,
    samples: usize,
    sbox: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = sample_in_overlap(rng, sbox, from_chart, to_chart, t, 10_000)?;
        let xv = x_from.eval::<f64>(&x)?;
        let (y, pushed) = value_and_derivative(&t.map, &x, &xv)?;
        let target = x_to.eval::<f64>(&y)?;
        out.record(sup_dist(&pushed, &target) / (1.0 + sup_norm(&target)));
    }
    Ok(out)
}

/// Intensional converse of the splitting construction: K(ξ) is the w-block
/// of 𝔠(ξ), so the connection map shares the splitting's bilinear map.
pub fn connection_from_splitting(c: &ConnectionSplitting) -> ConnectionMap {
    ConnectionMap { b: c.b.clone() }
}

/// Converse intake for an evaluation-only splitting: validates the splitting
/// identity, verticality of the image, symmetry, and linearity on samples,
/// then recovers B(x; u, v) = −(w-block of 𝔠(x, u, v, 0)).
pub fn connection_from_splitting_oracle(
    oracle: Arc<dyn SplittingOracle>,
    samples: usize,
    reject_tol: f64,
    sbox: SampleBox,
    vbox: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<ConnectionMap> {
    let n = oracle.dim();
    let recovered = move |o: &Arc<dyn SplittingOracle>,
                          x: &[f64],
                          u: &[f64],
                          v: &[f64]|
          -> Result<Vec<f64>> {
        let xi = DoubleTangentVector::new(x.to_vec(), u.to_vec(), v.to_vec(), vec![0.0; x.len()])?;
        let c = o.apply_raw(&xi)?;
        Ok(c.w.iter().map(|w| -w).collect())
    };

    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = sample_point(rng, sbox, n);
        let u = sample_point(rng, vbox, n);
        let v = sample_point(rng, vbox, n);
        let w = sample_point(rng, vbox, n);

        // Splitting identity on vertical vectors and verticality of the image.
        let vertical = DoubleTangentVector::new(x.clone(), u.clone(), vec![0.0; n], w.clone())?;
        let fixed = oracle.apply_raw(&vertical)?;
        worst = worst.max(sup_dist(&fixed.x, &x));
        worst = worst.max(sup_dist(&fixed.u, &u));
        worst = worst.max(sup_norm(&fixed.v));
        worst = worst.max(sup_dist(&fixed.w, &w));
        let generic = DoubleTangentVector::new(x.clone(), u.clone(), v.clone(), w.clone())?;
        let image = oracle.apply_raw(&generic)?;
        worst = worst.max(sup_norm(&image.v));
        if worst > reject_tol {
            return Err(Error::SplittingRejected {
                reason: "splitting identity violated".to_string(),
                residual: worst,
            });
        }

        // Symmetry and linearity of the recovered bilinear map.
        let b_uv = recovered(&oracle, &x, &u, &v)?;
        let b_vu = recovered(&oracle, &x, &v, &u)?;
        let sym = sup_dist(&b_uv, &b_vu);
        let a_c: f64 = rng.random_range(-2.0..2.0);
        let b_c: f64 = rng.random_range(-2.0..2.0);
        let u2 = sample_point(rng, vbox, n);
        let comb: Vec<f64> = u
            .iter()
            .zip(u2.iter())
            .map(|(p, q)| a_c * p + b_c * q)
            .collect();
        let b_comb = recovered(&oracle, &x, &comb, &v)?;
        let b_u2 = recovered(&oracle, &x, &u2, &v)?;
        let expect: Vec<f64> = b_uv
            .iter()
            .zip(b_u2.iter())
            .map(|(p, q)| a_c * p + b_c * q)
            .collect();
        let lin = sup_dist(&b_comb, &expect) / (1.0 + sup_norm(&expect));
        let defect = sym.max(lin);
        if defect > reject_tol {
            return Err(Error::SplittingRejected {
                reason: "recovered map is not symmetric bilinear".to_string(),
                residual: defect,
            });
        }
    }

    let dim = n;
    let eval = Arc::new(move |x: &[f64], u: &[f64], v: &[f64]| -> Result<Vec<f64>> {
        let xi = DoubleTangentVector::new(x.to_vec(), u.to_vec(), v.to_vec(), vec![0.0; x.len()])?;
        let c = oracle.apply_raw(&xi)?;
        Ok(c.w.iter().map(|w| -w).collect())
    });
    Ok(ConnectionMap {
        b: BilinearMap::Opaque(OpaqueBilinear { dim, eval }),
    })
}

/// Named outcomes of the exact-identity checks.
pub type NamedOutcomes = Vec<(&'static str, CheckOutcome)>;

/// The exact coordinate identities of the connection calculus, each sampled
/// on random double tangent vectors. Residuals are plain sup distances; all
/// of them vanish to rounding for any symmetric B.
pub fn exact_identity_checks(
    b: &BilinearMap,
    chart: &Chart,
    samples: usize,
    sbox: SampleBox,
    vbox: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<NamedOutcomes> {
    let n = chart.dim;
    let k = ConnectionMap::new(b.clone());
    let c = ConnectionSplitting::new(b.clone());
    let mut results: Vec<(&'static str, CheckOutcome)> = vec![
        ("c_fixes_vertical", CheckOutcome::default()),
        ("c_after_inv", CheckOutcome::default()),
        ("inv_involutive", CheckOutcome::default()),
        ("j_squared_zero", CheckOutcome::default()),
        ("j_hor_eq_ver", CheckOutcome::default()),
        ("k_j_eq_tpi", CheckOutcome::default()),
        ("k_ver_identity", CheckOutcome::default()),
        ("vp_idempotent", CheckOutcome::default()),
        ("hp_idempotent", CheckOutcome::default()),
        ("vp_hp_zero", CheckOutcome::default()),
        ("k_hor_zero", CheckOutcome::default()),
        ("tpi_hor_identity", CheckOutcome::default()),
    ];
    for _ in 0..samples {
        let x = sample_in_chart(rng, sbox, chart, 10_000)?;
        let u = sample_point(rng, vbox, n);
        let v = sample_point(rng, vbox, n);
        let w = sample_point(rng, vbox, n);
        let xi = DoubleTangentVector::new(x.clone(), u.clone(), v.clone(), w.clone())?;

        // 𝔠 ∘ 𝕀 = Id on vertical vectors.
        let vertical = DoubleTangentVector::new(x.clone(), u.clone(), vec![0.0; n], w.clone())?;
        let fixed = c.apply(&vertical)?;
        results[0].1.record(dtv_dist(&fixed, &vertical));

        // 𝔠 ∘ Inv = 𝔠, compared fiberwise: Inv moves the foot in TM from
        // (x, u) to (x, v), so the identity says the vertical principal
        // parts agree under the canonical fiber identification.
        let c_xi = c.apply(&xi)?;
        let c_inv = c.apply(&involution(&xi))?;
        let fib = sup_dist(&c_xi.x, &c_inv.x)
            .max(sup_dist(&c_xi.w, &c_inv.w))
            .max(sup_norm(&c_xi.v))
            .max(sup_norm(&c_inv.v));
        results[1].1.record(fib);

        // Inv² = Id.
        results[2].1.record(dtv_dist(&involution(&involution(&xi)), &xi));

        // J² = 0 (the (v, w) blocks of J(J ξ) vanish).
        let jj = tangent_structure(&tangent_structure(&xi));
        results[3].1.record(sup_norm(&jj.v).max(sup_norm(&jj.w)));

        // J ∘ Hor = Ver.
        let hor = horizontal_lift(b, &x, &u, &w)?;
        let j_hor = tangent_structure(&hor);
        let ver = vertical_lift(&x, &u, &w)?;
        results[4].1.record(dtv_dist(&j_hor, &ver));

        // K ∘ J = TΠ.
        let (_, kj) = k.apply(&tangent_structure(&xi))?;
        results[5].1.record(sup_dist(&kj, &xi.v));

        // K ∘ Ver = Id.
        let (_, kv) = k.apply(&vertical_lift(&x, &v, &w)?)?;
        results[6].1.record(sup_dist(&kv, &w));

        // Vp² = Vp, Hp² = Hp, Vp ∘ Hp = 0.
        let (vp, hp) = projectors(&c, &xi)?;
        let (vp2, _) = projectors(&c, &vp)?;
        results[7].1.record(dtv_dist(&vp2, &vp));
        let (_, hp2) = projectors(&c, &hp)?;
        results[8].1.record(dtv_dist(&hp2, &hp));
        let (vp_hp, _) = projectors(&c, &hp)?;
        results[9]
            .1
            .record(sup_norm(&vp_hp.v).max(sup_norm(&vp_hp.w)));

        // K ∘ Hor = 0 and TΠ ∘ Hor = Id.
        let (_, k_hor) = k.apply(&hor)?;
        results[10].1.record(sup_norm(&k_hor));
        results[11].1.record(sup_dist(&hor.v, &w));
    }
    Ok(results)
}

fn dtv_dist(a: &DoubleTangentVector, b: &DoubleTangentVector) -> f64 {
    sup_dist(&a.x, &b.x)
        .max(sup_dist(&a.u, &b.u))
        .max(sup_dist(&a.v, &b.v))
        .max(sup_dist(&a.w, &b.w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{coord_names, stacked_names};
    use crate::sample::rng_for;
    use crate::spray::SprayMap;

    fn chart(dim: usize) -> Chart {
        let d = ExprMap::parse("1", &coord_names("x", dim)).unwrap();
        Chart::new("main", dim, d).unwrap()
    }

    fn b_uv() -> BilinearMap {
        // B from S₂(x, v) = v² in one dimension: B(x; u, v) = u·v.
        let names = stacked_names(&[("x", 1), ("v", 1)]);
        let s2 = SprayMap::Expr(ExprMap::parse("v0^2", &names).unwrap());
        BilinearMap::Polarized(Box::new(s2))
    }

    fn field(src: &str, dim: usize) -> ExprMap {
        ExprMap::parse(src, &coord_names("x", dim)).unwrap()
    }

    fn xi1(x: f64, u: f64, v: f64, w: f64) -> DoubleTangentVector {
        DoubleTangentVector::new(vec![x], vec![u], vec![v], vec![w]).unwrap()
    }

    #[test]
    fn covariant_derivative_examples() {
        let c = chart(2);
        let flat = BilinearMap::flat(2);
        // Constant fields with flat B: zero.
        let e1 = field("[1, 0]", 2);
        let e2 = field("[0, 1]", 2);
        let r = covariant_derivative(&flat, &e1, &e2, &c, &[0.3, 0.4]).unwrap();
        assert_eq!(r, vec![0.0, 0.0]);
        // Y = identity field, X constant c: ∇_X Y = c.
        let idf = field("[x0, x1]", 2);
        let r = covariant_derivative(&flat, &e1, &idf, &c, &[5.0, -2.0]).unwrap();
        assert_eq!(r, vec![1.0, 0.0]);
    }

    #[test]
    fn connection_map_examples() {
        // Flat B: K(x,u,v,w) = (x, w).
        let k = ConnectionMap::new(BilinearMap::flat(1));
        let (_, kv) = k.apply(&xi1(0.5, 2.0, 3.0, 10.0)).unwrap();
        assert_eq!(kv, vec![10.0]);

        // Vertical ξ: K = w for any B.
        let k = ConnectionMap::new(b_uv());
        let (_, kv) = k.apply(&xi1(0.5, 2.0, 0.0, 10.0)).unwrap();
        assert_eq!(kv, vec![10.0]);

        // B = uv: K(x,2,3,10) = 10 − 6 = 4.
        let (_, kv) = k.apply(&xi1(0.5, 2.0, 3.0, 10.0)).unwrap();
        assert_eq!(kv, vec![4.0]);
    }

    #[test]
    fn splitting_and_projector_examples() {
        let c = ConnectionSplitting::new(b_uv());
        let out = c.apply(&xi1(0.1, 2.0, 3.0, 10.0)).unwrap();
        assert_eq!(out, xi1(0.1, 2.0, 0.0, 4.0));

        let (vp, hp) = projectors(&c, &xi1(0.1, 2.0, 3.0, 10.0)).unwrap();
        assert_eq!(vp, xi1(0.1, 2.0, 0.0, 4.0));
        assert_eq!(hp, xi1(0.1, 2.0, 3.0, 6.0));
        // (v, w) blocks of Vp and Hp sum back to ξ.
        assert_eq!(vp.v[0] + hp.v[0], 3.0);
        assert_eq!(vp.w[0] + hp.w[0], 10.0);
    }

    #[test]
    fn lifts_and_tangent_structure_examples() {
        let b = b_uv();
        // Hor at u=2, w=3 → (x,2,3,6); in ker K; TΠ gives (x,3).
        let hor = horizontal_lift(&b, &[0.4], &[2.0], &[3.0]).unwrap();
        assert_eq!(hor, xi1(0.4, 2.0, 3.0, 6.0));
        let k = ConnectionMap::new(b.clone());
        let (_, kh) = k.apply(&hor).unwrap();
        assert_eq!(kh, vec![0.0]);

        // K(Ver_v(w)) = w for any B.
        let ver = vertical_lift(&[0.4], &[5.0], &[7.0]).unwrap();
        let (_, kv) = k.apply(&ver).unwrap();
        assert_eq!(kv, vec![7.0]);

        // J(Hor) = Ver.
        assert_eq!(tangent_structure(&hor), xi1(0.4, 2.0, 0.0, 3.0));
    }

    #[test]
    fn exact_identities_hold_on_samples() {
        let c = chart(1);
        let mut rng = rng_for(9, "exact");
        let results = exact_identity_checks(
            &b_uv(),
            &c,
            200,
            SampleBox::new(-1.0, 1.0),
            SampleBox::new(-1.0, 1.0),
            &mut rng,
        )
        .unwrap();
        assert_eq!(results.len(), 12);
        for (name, out) in results {
            assert!(
                out.max_residual <= 1e-15,
                "{name}: residual {}",
                out.max_residual
            );
        }
    }

    #[test]
    fn cd_axioms_flat_and_curved() {
        let c = chart(1);
        let mut rng = rng_for(10, "cd");
        for b in [BilinearMap::flat(1), b_uv()] {
            let out = check_cd_axioms(
                &b,
                &c,
                &[],
                &[],
                10,
                SampleBox::new(-1.0, 1.0),
                &mut rng,
            )
            .unwrap();
            assert!(out.tensorial.max_residual <= 1e-12);
            assert!(out.leibniz.max_residual <= 1e-12);
            assert!(out.bilinear.max_residual <= 1e-12);
            assert!(out.torsion.max_residual <= 1e-15);
        }
    }

    #[test]
    fn nabla_equals_k_of_t() {
        let c = chart(1);
        let mut rng = rng_for(12, "nabla");
        let k = ConnectionMap::new(b_uv());
        let xf = field("[x0^2 + 1]", 1);
        let yf = field("[2*x0]", 1);
        let out = check_nabla_equals_k_of_t(
            &k,
            &xf,
            &yf,
            &c,
            50,
            SampleBox::new(-1.0, 1.0),
            &mut rng,
        )
        .unwrap();
        assert!(out.max_residual <= 1e-15);
    }

    #[test]
    fn splitting_roundtrip_is_identity_on_b() {
        let b = b_uv();
        let c = ConnectionSplitting::new(b.clone());
        let k = connection_from_splitting(&c);
        let x = [0.3];
        let (u, v) = ([1.7], [-0.4]);
        assert_eq!(
            k.b.eval(&x, &u, &v).unwrap(),
            b.eval(&x, &u, &v).unwrap()
        );
    }

    #[test]
    fn blackbox_recovery_matches_source() {
        let b = b_uv();
        let c = ConnectionSplitting::new(b.clone());
        let mut rng = rng_for(13, "blackbox");
        let k = connection_from_splitting_oracle(
            Arc::new(c),
            50,
            1e-9,
            SampleBox::new(-1.0, 1.0),
            SampleBox::new(-1.0, 1.0),
            &mut rng,
        )
        .unwrap();
        for (x, u, v) in [(0.2, 1.0, 2.0), (-0.7, 0.5, -0.3)] {
            let got = k.b.eval(&[x], &[u], &[v]).unwrap()[0];
            let want = b.eval(&[x], &[u], &[v]).unwrap()[0];
            assert_eq!(got, want);
        }
    }

    #[test]
    fn asymmetric_oracle_is_rejected() {
        struct Bad;
        impl SplittingOracle for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn apply_raw(&self, xi: &DoubleTangentVector) -> Result<DoubleTangentVector> {
                // w-block depends asymmetrically on (u, v).
                let w = vec![xi.w[0] - xi.u[0] * xi.u[0] * xi.v[0]];
                DoubleTangentVector::new(xi.x.clone(), xi.u.clone(), vec![0.0], w)
            }
        }
        let mut rng = rng_for(14, "blackbox-bad");
        let err = connection_from_splitting_oracle(
            Arc::new(Bad),
            50,
            1e-9,
            SampleBox::new(-1.0, 1.0),
            SampleBox::new(-1.0, 1.0),
            &mut rng,
        );
        assert!(matches!(err, Err(Error::SplittingRejected { .. })));
    }
}
