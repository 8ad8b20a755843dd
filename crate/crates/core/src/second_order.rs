//! The second-order tangent bundle T²M as a vector bundle.
//!
//! A 2-jet of a curve through a chart is stored as (x, a, b) with a, b the
//! first and second derivatives of the chart image at 0. A connection map
//! turns T²M into a vector bundle via the trivialization
//! (x, a, b) ↦ (x, h, k) = (x, a, b − B(x; a, a)), and the fiberwise
//! isomorphism Υ = (foot, tangent projection, K) identifies T(TM) with a
//! triple direct sum. Conjugate connection maps make the second-order
//! tangent map fiberwise linear; the suite exercises both that and the
//! failure mode for non-conjugate pairs.

use crate::atlas::{sample_in_chart, Chart, DoubleTangentVector};
use crate::diff::{dir_derivative, second_dir_derivative, value_and_derivative};
use crate::error::{Error, Result};
use crate::expr::ExprMap;
use crate::sample::{sample_point, sup_dist, sup_norm, CheckOutcome, SampleBox};
use crate::spray::{BilinearMap, OpaqueBilinear};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// A 2-jet of a curve in chart coordinates: position, velocity, acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderPoint {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SecondOrderPoint {
    pub fn new(x: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != x.len() || b.len() != x.len() {
            return Err(Error::DimensionMismatch(
                "second-order point blocks must have equal dimension".to_string(),
            ));
        }
        Ok(SecondOrderPoint { x, a, b })
    }
}

/// Vector bundle coordinates of T²M after the trivialization λ.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderTriv {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub k: Vec<f64>,
}

impl SecondOrderTriv {
    pub fn new(x: Vec<f64>, h: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        if h.len() != x.len() || k.len() != x.len() {
            return Err(Error::DimensionMismatch(
                "trivialized blocks must have equal dimension".to_string(),
            ));
        }
        Ok(SecondOrderTriv { x, h, k })
    }
}

/// λ: (x, a, b) ↦ (x, a, b − B(x; a, a)).
pub fn trivialize(b: &BilinearMap, p: &SecondOrderPoint) -> Result<SecondOrderTriv> {
    let baa = b.eval(&p.x, &p.a, &p.a)?;
    let k: Vec<f64> = p.b.iter().zip(baa.iter()).map(|(b, c)| b - c).collect();
    SecondOrderTriv::new(p.x.clone(), p.a.clone(), k)
}

/// λ⁻¹: (x, h, k) ↦ (x, h, k + B(x; h, h)).
pub fn untrivialize(b: &BilinearMap, t: &SecondOrderTriv) -> Result<SecondOrderPoint> {
    let bhh = b.eval(&t.x, &t.h, &t.h)?;
    let acc: Vec<f64> = t.k.iter().zip(bhh.iter()).map(|(k, c)| k + c).collect();
    SecondOrderPoint::new(t.x.clone(), t.h.clone(), acc)
}

/// Image of Υ: the base point and the three tangent components over it.
pub type UpsilonImage = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

/// Υ = (foot, tangent projection, K): ξ ↦ (x; u, v, w − B(x; u, v)).
pub fn upsilon(b: &BilinearMap, xi: &DoubleTangentVector) -> Result<UpsilonImage> {
    let bv = b.eval(&xi.x, &xi.u, &xi.v)?;
    let kpart: Vec<f64> = xi.w.iter().zip(bv.iter()).map(|(w, b)| w - b).collect();
    Ok((xi.x.clone(), xi.u.clone(), xi.v.clone(), kpart))
}

/// Fiberwise inverse of Υ.
pub fn upsilon_inverse(
    b: &BilinearMap,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    kpart: &[f64],
) -> Result<DoubleTangentVector> {
    let bv = b.eval(x, u, v)?;
    let w: Vec<f64> = kpart.iter().zip(bv.iter()).map(|(k, b)| k + b).collect();
    DoubleTangentVector::new(x.to_vec(), u.to_vec(), v.to_vec(), w)
}

/// Trivialized local representation of the second-order tangent map of a
/// diffeomorphism μ between charts carrying bilinear maps B_src and B_dst:
///
/// (h, k) ↦ ( Dμ(y)h,
///            Dμ(y)k + Dμ(y)·B_src(y)(h,h) + D²μ(y)(h,h)
///                   − B_dst(μ(y))(Dμ(y)h, Dμ(y)h) ).
pub fn second_order_map(
    b_src: &BilinearMap,
    b_dst: &BilinearMap,
    mu: &ExprMap,
    p: &SecondOrderPoint,
) -> Result<SecondOrderTriv> {
    let triv = trivialize(b_src, p)?;
    let y = &p.x;
    let (mu_y, dmu_h) = value_and_derivative(mu, y, &triv.h)?;
    let dmu_k = dir_derivative(mu, y, &triv.k)?;
    let b_hh = b_src.eval(y, &triv.h, &triv.h)?;
    let dmu_bhh = dir_derivative(mu, y, &b_hh)?;
    let d2_hh = second_dir_derivative(mu, y, &triv.h, &triv.h)?;
    let b_dst_img = b_dst.eval(&mu_y, &dmu_h, &dmu_h)?;
    let k_out: Vec<f64> = (0..mu_y.len())
        .map(|i| dmu_k[i] + dmu_bhh[i] + d2_hh[i] - b_dst_img[i])
        .collect();
    SecondOrderTriv::new(mu_y, dmu_h, k_out)
}

/// Conjugacy defect of two connection maps under μ:
/// ‖Dμ(x)·K₁(ξ) − K₂(TTμ(ξ))‖ over random ξ. The same sampler doubles as
/// the negative-control witness (a non-conjugate pair must exhibit a large
/// residual somewhere).
#[allow(clippy::too_many_arguments)]
pub fn check_conjugacy(
    b1: &BilinearMap,
    b2: &BilinearMap,
    mu: &ExprMap,
    from_chart: &Chart,
    to_chart: Option<&Chart>,
    samples: usize,
    sbox: SampleBox,
    vbox: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<CheckOutcome> {
    let n = from_chart.dim;
    let mut out = CheckOutcome::default();
    for _ in 0..samples {
        let x = match to_chart {
            None => sample_in_chart(rng, sbox, from_chart, 10_000)?,
            Some(target) => crate::sample::sample_where(rng, sbox, n, 10_000, |x| {
                from_chart.contains(x)
                    && matches!(mu.eval::<f64>(x), Ok(y) if target.contains(&y))
            })
            .ok_or_else(|| Error::EmptyOverlap {
                from: from_chart.name.clone(),
                to: target.name.clone(),
            })?,
        };
        let u = sample_point(rng, vbox, n);
        let v = sample_point(rng, vbox, n);
        let w = sample_point(rng, vbox, n);

        // Left side: Dμ(x) applied to the K₁-part of ξ.
        let b1v = b1.eval(&x, &u, &v)?;
        let k1: Vec<f64> = w.iter().zip(b1v.iter()).map(|(w, b)| w - b).collect();
        let lhs = dir_derivative(mu, &x, &k1)?;

        // Right side: K₂-part of TTμ(ξ).
        let (y, dmu_u) = value_and_derivative(mu, &x, &u)?;
        let dmu_v = dir_derivative(mu, &x, &v)?;
        let dmu_w = dir_derivative(mu, &x, &w)?;
        let d2_uv = second_dir_derivative(mu, &x, &u, &v)?;
        let b2v = b2.eval(&y, &dmu_u, &dmu_v)?;
        let rhs: Vec<f64> = (0..n)
            .map(|i| d2_uv[i] + dmu_w[i] - b2v[i])
            .collect();

        out.record(sup_dist(&lhs, &rhs));
    }
    Ok(out)
}

/// Outcomes of the fiber-linearity consequence of conjugacy.
#[derive(Debug, Clone, Copy)]
pub struct T2MuLinearity {
    /// ‖f(a·p₁ + b·p₂) − a·f(p₁) − b·f(p₂)‖ in trivialized fiber coordinates.
    pub linearity: CheckOutcome,
    /// Agreement with the direct linear form (Dμ·h, Dμ·k).
    pub direct_form: CheckOutcome,
    /// Conjugacy defect measured alongside, reported as context when the
    /// check is run on a non-conjugate pair.
    pub conjugacy_residual: f64,
}

/// Fiber linearity of the trivialized second-order tangent map. Under
/// conjugacy it collapses to (h, k) ↦ (Dμ·h, Dμ·k).
#[allow(clippy::too_many_arguments)]
pub fn check_t2mu_linearity(
    b1: &BilinearMap,
    b2: &BilinearMap,
    mu: &ExprMap,
    from_chart: &Chart,
    to_chart: Option<&Chart>,
    samples: usize,
    sbox: SampleBox,
    vbox: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<T2MuLinearity> {
    let n = from_chart.dim;
    let conj = check_conjugacy(
        b1,
        b2,
        mu,
        from_chart,
        to_chart,
        samples.min(25),
        sbox,
        vbox,
        rng,
    )?;
    let mut linearity = CheckOutcome::default();
    let mut direct_form = CheckOutcome::default();
    for _ in 0..samples {
        let x = match to_chart {
            None => sample_in_chart(rng, sbox, from_chart, 10_000)?,
            Some(target) => crate::sample::sample_where(rng, sbox, n, 10_000, |x| {
                from_chart.contains(x)
                    && matches!(mu.eval::<f64>(x), Ok(y) if target.contains(&y))
            })
            .ok_or_else(|| Error::EmptyOverlap {
                from: from_chart.name.clone(),
                to: target.name.clone(),
            })?,
        };
        let h1 = sample_point(rng, vbox, n);
        let k1 = sample_point(rng, vbox, n);
        let h2 = sample_point(rng, vbox, n);
        let k2 = sample_point(rng, vbox, n);
        let a: f64 = rng.random_range(-2.0..2.0);
        let c: f64 = rng.random_range(-2.0..2.0);

        let image = |h: &[f64], k: &[f64]| -> Result<SecondOrderTriv> {
            let p = untrivialize(b1, &SecondOrderTriv::new(x.clone(), h.to_vec(), k.to_vec())?)?;
            second_order_map(b1, b2, mu, &p)
        };

        let f1 = image(&h1, &k1)?;
        let f2 = image(&h2, &k2)?;
        let comb_h: Vec<f64> = h1.iter().zip(h2.iter()).map(|(p, q)| a * p + c * q).collect();
        let comb_k: Vec<f64> = k1.iter().zip(k2.iter()).map(|(p, q)| a * p + c * q).collect();
        let f_comb = image(&comb_h, &comb_k)?;
        let expect_h: Vec<f64> = f1.h.iter().zip(f2.h.iter()).map(|(p, q)| a * p + c * q).collect();
        let expect_k: Vec<f64> = f1.k.iter().zip(f2.k.iter()).map(|(p, q)| a * p + c * q).collect();
        let scale = 1.0 + sup_norm(&expect_h).max(sup_norm(&expect_k));
        linearity.record(
            sup_dist(&f_comb.h, &expect_h)
                .max(sup_dist(&f_comb.k, &expect_k))
                / scale,
        );

        // Direct form on one of the samples.
        let dmu_h = dir_derivative(mu, &x, &h1)?;
        let dmu_k = dir_derivative(mu, &x, &k1)?;
        let scale = 1.0 + sup_norm(&dmu_h).max(sup_norm(&dmu_k));
        direct_form.record(
            sup_dist(&f1.h, &dmu_h).max(sup_dist(&f1.k, &dmu_k)) / scale,
        );
    }
    Ok(T2MuLinearity {
        linearity,
        direct_form,
        conjugacy_residual: conj.max_residual,
    })
}

/// A linear symmetric connection on the trivialized second-order bundle:
/// the direct-sum splitting transported through λ/Υ, acting on a tangent
/// vector (dx, dh, dk) at (x, h, k) by
/// (dx, dh, dk) ↦ (0, dh − B(x; h, dx), dk − B(x; k, dx)).
#[derive(Debug, Clone)]
pub struct SecondOrderSplitting {
    pub b: BilinearMap,
}

/// A tangent vector of the trivialized T²M.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderTangent {
    pub base: SecondOrderTriv,
    pub dx: Vec<f64>,
    pub dh: Vec<f64>,
    pub dk: Vec<f64>,
}

impl SecondOrderSplitting {
    pub fn apply(&self, t: &SecondOrderTangent) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let b_h = self.b.eval(&t.base.x, &t.base.h, &t.dx)?;
        let b_k = self.b.eval(&t.base.x, &t.base.k, &t.dx)?;
        let dh: Vec<f64> = t.dh.iter().zip(b_h.iter()).map(|(d, b)| d - b).collect();
        let dk: Vec<f64> = t.dk.iter().zip(b_k.iter()).map(|(d, b)| d - b).collect();
        Ok((vec![0.0; t.dx.len()], dh, dk))
    }
}

/// Evaluation-only access to a second-order splitting.
pub trait SecondOrderSplittingOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn apply_raw(&self, t: &SecondOrderTangent) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)>;
}

impl SecondOrderSplittingOracle for SecondOrderSplitting {
    fn dim(&self) -> usize {
        self.b.dim()
    }
    fn apply_raw(&self, t: &SecondOrderTangent) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.apply(t)
    }
}

/// A linear symmetric connection on TM induces one on T²M: in trivialized
/// coordinates it is the direct sum of the TM connection on the two fiber
/// blocks, so it shares the splitting's bilinear map.
pub fn induce_second_order_connection(
    c: &crate::connection::ConnectionSplitting,
) -> SecondOrderSplitting {
    SecondOrderSplitting { b: c.b.clone() }
}

/// Converse: recover the TM splitting from an evaluation-only second-order
/// splitting. B is read off at k = 0 through the h-slot, cross-validated
/// against the k-slot, and checked for the splitting identity.
pub fn reduce_to_first_order_connection(
    oracle: Arc<dyn SecondOrderSplittingOracle>,
    samples: usize,
    reject_tol: f64,
    sbox: SampleBox,
    vbox: SampleBox,
    rng: &mut ChaCha8Rng,
) -> Result<crate::connection::ConnectionSplitting> {
    let n = oracle.dim();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = sample_point(rng, sbox, n);
        let h = sample_point(rng, vbox, n);
        let k = sample_point(rng, vbox, n);
        let dh = sample_point(rng, vbox, n);
        let dk = sample_point(rng, vbox, n);

        // Splitting identity: vertical tangents (dx = 0) are fixed.
        let t = SecondOrderTangent {
            base: SecondOrderTriv::new(x.clone(), h.clone(), k.clone())?,
            dx: vec![0.0; n],
            dh: dh.clone(),
            dk: dk.clone(),
        };
        let (zx, zh, zk) = oracle.apply_raw(&t)?;
        worst = worst.max(sup_norm(&zx));
        worst = worst.max(sup_dist(&zh, &dh));
        worst = worst.max(sup_dist(&zk, &dk));
        if worst > reject_tol {
            return Err(Error::SplittingRejected {
                reason: "second-order splitting identity violated".to_string(),
                residual: worst,
            });
        }

        // Slot consistency: h-slot and k-slot recoveries of B agree.
        let dx = sample_point(rng, vbox, n);
        let via_h = recover_b(&oracle, &x, &h, &dx, Slot::H)?;
        let via_k = recover_b(&oracle, &x, &h, &dx, Slot::K)?;
        let defect = sup_dist(&via_h, &via_k);
        if defect > reject_tol {
            return Err(Error::SplittingRejected {
                reason: "h-slot and k-slot recoveries disagree".to_string(),
                residual: defect,
            });
        }
    }

    let dim = n;
    let eval = Arc::new(move |x: &[f64], u: &[f64], v: &[f64]| -> Result<Vec<f64>> {
        recover_b(&oracle, x, u, v, Slot::H)
    });
    Ok(crate::connection::ConnectionSplitting::new(
        BilinearMap::Opaque(OpaqueBilinear { dim, eval }),
    ))
}

enum Slot {
    H,
    K,
}

/// B(x; u, v) = −(h-block of 𝒞 at base (x, h=u, k=0) on tangent (v, 0, 0)),
/// or the k-slot analogue.
fn recover_b(
    oracle: &Arc<dyn SecondOrderSplittingOracle>,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    slot: Slot,
) -> Result<Vec<f64>> {
    let n = x.len();
    let zero = vec![0.0; n];
    let (h, k) = match slot {
        Slot::H => (u.to_vec(), zero.clone()),
        Slot::K => (zero.clone(), u.to_vec()),
    };
    let t = SecondOrderTangent {
        base: SecondOrderTriv::new(x.to_vec(), h, k)?,
        dx: v.to_vec(),
        dh: zero.clone(),
        dk: zero,
    };
    let (_, dh, dk) = oracle.apply_raw(&t)?;
    Ok(match slot {
        Slot::H => dh.iter().map(|c| -c).collect(),
        Slot::K => dk.iter().map(|c| -c).collect(),
    })
}

/// Componentwise squaring as a chart diffeomorphism, the canonical
/// non-conjugate negative control.
pub fn componentwise_square(dim: usize) -> ExprMap {
    let names = crate::expr::coord_names("x", dim);
    let comps: Vec<String> = (0..dim).map(|i| format!("x{i}^2")).collect();
    let src = if dim == 1 {
        comps[0].clone()
    } else {
        format!("[{}]", comps.join(", "))
    };
    ExprMap::parse(&src, &names).expect("square map parses")
}
