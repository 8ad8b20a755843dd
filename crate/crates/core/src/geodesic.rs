//! Geodesic integration with chart switching.
//!
//! The spray's integral curves project to solutions of x′ = v,
//! v′ = B(x; v, v) in a chart (the sign convention follows the covariant
//! derivative: B is minus the Christoffel symbols). Fixed-step classical
//! RK4 is the default; when the chart membership predicate decays below a
//! threshold the state is re-expressed through a transition's tangent lift.

use crate::atlas::{Atlas, Transition};
use crate::diff::value_and_derivative;
use crate::error::{Error, Result};
use crate::sample::{sup_dist, CheckOutcome};
use crate::spray::{BilinearCoeffs, MetricMap};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Euler,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "euler" => Ok(Method::Euler),
            other => Err(Error::Config(format!(
                "unknown integration method `{other}` (rk4 | euler)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub chart: String,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<GeodesicState>,
    pub step: f64,
    pub method: Method,
    /// (t, from, to) for every chart switch.
    pub switches: Vec<(f64, String, String)>,
}

impl Trajectory {
    pub fn end(&self) -> &GeodesicState {
        self.samples.last().expect("trajectory has samples")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOpts {
    pub method: Method,
    /// Switch charts when the domain predicate falls below this value.
    pub switch_threshold: f64,
    pub allow_switch: bool,
}

impl Default for IntegrateOpts {
    fn default() -> Self {
        IntegrateOpts {
            method: Method::Rk4,
            switch_threshold: 0.1,
            allow_switch: true,
        }
    }
}

fn rhs(
    bilinear: &BilinearCoeffs,
    chart: &str,
    x: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = bilinear.get(chart)?;
    Ok((v.to_vec(), b.eval(x, v, v)?))
}

fn axpy(x: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d.iter()).map(|(x, d)| x + s * d).collect()
}

/// Numerically solve x′ = v, v′ = B(x; v, v) from (x0, v0) over [0, t1]
/// (t1 may be negative) with fixed step |h|.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    atlas: &Atlas,
    bilinear: &BilinearCoeffs,
    start_chart: &str,
    x0: &[f64],
    v0: &[f64],
    t1: f64,
    h: f64,
    opts: IntegrateOpts,
) -> Result<Trajectory> {
    if h <= 0.0 || h.is_nan() || !h.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    let chart0 = atlas.chart(start_chart)?;
    if x0.len() != chart0.dim || v0.len() != chart0.dim {
        return Err(Error::DimensionMismatch(format!(
            "initial data has dimension {}, chart `{}` has {}",
            x0.len(),
            start_chart,
            chart0.dim
        )));
    }
    chart0.require_inside(x0)?;

    let dir = if t1 < 0.0 { -1.0 } else { 1.0 };
    let total = t1.abs();
    let mut state = GeodesicState {
        chart: start_chart.to_string(),
        x: x0.to_vec(),
        v: v0.to_vec(),
        t: 0.0,
    };
    let mut traj = Trajectory {
        samples: vec![state.clone()],
        step: h,
        method: opts.method,
        switches: Vec::new(),
    };

    let mut elapsed = 0.0f64;
    while elapsed < total - 1e-15 {
        let this_h = dir * h.min(total - elapsed);
        let (x, v) = step_once(bilinear, &state.chart, &state.x, &state.v, this_h, opts.method)
            .map_err(|e| Error::Integration {
                t: state.t,
                message: e.to_string(),
            })?;
        if x.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::Integration {
                t: state.t,
                message: "state became non-finite (step rejected)".to_string(),
            });
        }
        elapsed += this_h.abs();
        state = GeodesicState {
            chart: state.chart,
            x,
            v,
            t: dir * elapsed,
        };

        maybe_switch_chart(atlas, &mut state, &mut traj.switches, opts)?;
        traj.samples.push(state.clone());
    }
    Ok(traj)
}

fn step_once(
    bilinear: &BilinearCoeffs,
    chart: &str,
    x: &[f64],
    v: &[f64],
    h: f64,
    method: Method,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match method {
        Method::Euler => {
            let (dx, dv) = rhs(bilinear, chart, x, v)?;
            Ok((axpy(x, h, &dx), axpy(v, h, &dv)))
        }
        Method::Rk4 => {
            let (k1x, k1v) = rhs(bilinear, chart, x, v)?;
            let (k2x, k2v) = rhs(bilinear, chart, &axpy(x, h / 2.0, &k1x), &axpy(v, h / 2.0, &k1v))?;
            let (k3x, k3v) = rhs(bilinear, chart, &axpy(x, h / 2.0, &k2x), &axpy(v, h / 2.0, &k2v))?;
            let (k4x, k4v) = rhs(bilinear, chart, &axpy(x, h, &k3x), &axpy(v, h, &k3v))?;
            let combine = |y: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| {
                y.iter()
                    .enumerate()
                    .map(|(i, c)| c + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect::<Vec<f64>>()
            };
            Ok((combine(x, &k1x, &k2x, &k3x, &k4x), combine(v, &k1v, &k2v, &k3v, &k4v)))
        }
    }
}

fn maybe_switch_chart(
    atlas: &Atlas,
    state: &mut GeodesicState,
    switches: &mut Vec<(f64, String, String)>,
    opts: IntegrateOpts,
) -> Result<()> {
    let chart = atlas.chart(&state.chart)?;
    let here = chart.domain_value(&state.x).unwrap_or(f64::NEG_INFINITY);
    if here >= opts.switch_threshold {
        return Ok(());
    }
    if opts.allow_switch {
        // Pick the transition whose target sees the point deepest inside.
        let mut best: Option<(f64, &Transition, Vec<f64>, Vec<f64>)> = None;
        for t in atlas.transitions_from(&state.chart) {
            let target = atlas.chart(&t.to)?;
            let mapped = match value_and_derivative(&t.map, &state.x, &state.v) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let value = match target.domain_value(&mapped.0) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if value > here && best.as_ref().is_none_or(|(b, _, _, _)| value > *b) {
                best = Some((value, t, mapped.0, mapped.1));
            }
        }
        if let Some((_, t, x, v)) = best {
            switches.push((state.t, t.from.clone(), t.to.clone()));
            state.chart = t.to.clone();
            state.x = x;
            state.v = v;
            return Ok(());
        }
    }
    if here <= 0.0 {
        return Err(Error::Integration {
            t: state.t,
            message: format!(
                "left the domain of chart `{}` with no usable transition",
                state.chart
            ),
        });
    }
    Ok(())
}

/// Map a state into a target chart if needed (used to compare trajectories
/// that may have switched charts at different times).
pub fn state_in_chart(
    atlas: &Atlas,
    state: &GeodesicState,
    target: &str,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if state.chart == target {
        return Ok((state.x.clone(), state.v.clone()));
    }
    let t = atlas.transition(&state.chart, target).ok_or_else(|| {
        Error::UnresolvedRef(format!(
            "transition {} -> {} needed for comparison",
            state.chart, target
        ))
    })?;
    value_and_derivative(&t.map, &state.x, &state.v)
}

/// Degree-2 homogeneity through the flow: γ_{s·v0}(t) = γ_{v0}(s·t),
/// checked at matched sample times. The s = 0 case degenerates to the
/// constant curve.
#[allow(clippy::too_many_arguments)]
pub fn check_homogeneity_reparam(
    atlas: &Atlas,
    bilinear: &BilinearCoeffs,
    chart: &str,
    x0: &[f64],
    v0: &[f64],
    s: f64,
    t1: f64,
    h: f64,
    opts: IntegrateOpts,
) -> Result<CheckOutcome> {
    let sv0: Vec<f64> = v0.iter().map(|c| s * c).collect();
    let scaled = integrate(atlas, bilinear, chart, x0, &sv0, t1, h, opts)?;
    let mut out = CheckOutcome::default();
    if s == 0.0 {
        for sample in &scaled.samples {
            out.record(sup_dist(&sample.x, x0));
        }
        return Ok(out);
    }
    let reference = integrate(atlas, bilinear, chart, x0, v0, s * t1, s.abs() * h, opts)?;
    let n = scaled.samples.len().min(reference.samples.len());
    for i in 0..n {
        let a = &scaled.samples[i];
        let r = &reference.samples[i];
        let (rx, rv) = if r.chart == a.chart {
            (r.x.clone(), r.v.clone())
        } else {
            state_in_chart(atlas, r, &a.chart)?
        };
        let scaled_rv: Vec<f64> = rv.iter().map(|c| s * c).collect();
        out.record(sup_dist(&a.x, &rx).max(sup_dist(&a.v, &scaled_rv)));
    }
    Ok(out)
}

/// Time reversal: integrating back from (γ(T), −γ′(T)) returns to the start.
#[allow(clippy::too_many_arguments)]
pub fn check_time_reversal(
    atlas: &Atlas,
    bilinear: &BilinearCoeffs,
    chart: &str,
    x0: &[f64],
    v0: &[f64],
    t1: f64,
    h: f64,
    opts: IntegrateOpts,
) -> Result<CheckOutcome> {
    let forward = integrate(atlas, bilinear, chart, x0, v0, t1, h, opts)?;
    let end = forward.end();
    let back_v: Vec<f64> = end.v.iter().map(|c| -c).collect();
    let back = integrate(atlas, bilinear, &end.chart, &end.x, &back_v, t1, h, opts)?;
    let final_state = back.end();
    let (bx, bv) = state_in_chart(atlas, final_state, chart)?;
    let mut out = CheckOutcome::default();
    let neg_bv: Vec<f64> = bv.iter().map(|c| -c).collect();
    out.record(sup_dist(&bx, x0).max(sup_dist(&neg_bv, v0)));
    Ok(out)
}

/// Relative drift of the metric energy g(v, v) along a trajectory.
pub fn energy_monitor(
    metrics: &BTreeMap<String, MetricMap>,
    traj: &Trajectory,
) -> Result<CheckOutcome> {
    let energy = |s: &GeodesicState| -> Result<f64> {
        let m = metrics.get(&s.chart).ok_or_else(|| {
            Error::Config(format!("no metric declared for chart `{}`", s.chart))
        })?;
        m.energy(&s.x, &s.v)
    };
    let e0 = energy(&traj.samples[0])?;
    let denom = if e0.abs() < f64::MIN_POSITIVE { 1.0 } else { e0.abs() };
    let mut out = CheckOutcome::default();
    for s in &traj.samples {
        out.record((energy(s)? - e0).abs() / denom);
    }
    Ok(out)
}

/// Closed-form geodesic references for catalog manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    /// Flat space: γ(t) = x0 + t·v0 (RK4 is exact here).
    Line,
    /// Unit round sphere in a stereographic chart, starting at the chart
    /// origin: γ(t) = tan(|v0|·t)·v̂0, compared in the embedding.
    GreatCircle,
    /// Unit-curvature hyperbolic disk from the origin: γ(t) = tanh(|v0|·t)·v̂0.
    HyperbolicDisk,
    /// One-dimensional S₂ = v²: γ(t) = x0 − ln(1 − v0·t).
    Log1d,
}

impl std::str::FromStr for OracleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(OracleKind::Line),
            "great_circle" => Ok(OracleKind::GreatCircle),
            "hyperbolic_disk" => Ok(OracleKind::HyperbolicDisk),
            "log1d" => Ok(OracleKind::Log1d),
            other => Err(Error::Config(format!("unknown geodesic oracle `{other}`"))),
        }
    }
}

/// Inverse stereographic embedding of a chart point onto the unit sphere.
pub fn embed_stereographic(x: &[f64]) -> Vec<f64> {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    let mut p: Vec<f64> = x.iter().map(|c| 2.0 * c / (1.0 + r2)).collect();
    p.push((r2 - 1.0) / (r2 + 1.0));
    p
}

/// Closed-form chart position and velocity at time t.
pub fn oracle_state(kind: OracleKind, x0: &[f64], v0: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    match kind {
        OracleKind::Line => Ok((axpy(x0, t, v0), v0.to_vec())),
        OracleKind::GreatCircle | OracleKind::HyperbolicDisk => {
            if x0.iter().any(|c| *c != 0.0) {
                return Err(Error::Config(
                    "closed-form sphere/hyperbolic oracle requires x0 = 0".to_string(),
                ));
            }
            let speed = v0.iter().map(|c| c * c).sum::<f64>().sqrt();
            if speed == 0.0 {
                return Ok((x0.to_vec(), v0.to_vec()));
            }
            let dir: Vec<f64> = v0.iter().map(|c| c / speed).collect();
            let (radial, radial_dot) = match kind {
                OracleKind::GreatCircle => {
                    let a = speed * t;
                    (a.tan(), speed / (a.cos() * a.cos()))
                }
                _ => {
                    let a = speed * t;
                    let th = a.tanh();
                    (th, speed * (1.0 - th * th))
                }
            };
            Ok((
                dir.iter().map(|d| radial * d).collect(),
                dir.iter().map(|d| radial_dot * d).collect(),
            ))
        }
        OracleKind::Log1d => {
            if x0.len() != 1 {
                return Err(Error::Config("log1d oracle is one-dimensional".to_string()));
            }
            let denom = 1.0 - v0[0] * t;
            if denom <= 0.0 {
                return Err(Error::Config(format!(
                    "log1d oracle blows up before t = {t}"
                )));
            }
            Ok((vec![x0[0] - denom.ln()], vec![v0[0] / denom]))
        }
    }
}

/// Deviation of a trajectory from the closed-form oracle, measured in the
/// sphere embedding for the great-circle case and in chart coordinates
/// otherwise.
pub fn oracle_deviation(kind: OracleKind, traj: &Trajectory) -> Result<CheckOutcome> {
    let start = &traj.samples[0];
    let mut out = CheckOutcome::default();
    for s in &traj.samples {
        if s.chart != start.chart {
            // The catalog oracle trajectories stay inside one chart.
            return Err(Error::Config(
                "oracle comparison crossed a chart switch".to_string(),
            ));
        }
        let (ox, ov) = oracle_state(kind, &start.x, &start.v, s.t)?;
        let r = match kind {
            OracleKind::GreatCircle => {
                let got = embed_stereographic(&s.x);
                let want = embed_stereographic(&ox);
                sup_dist(&got, &want)
            }
            _ => sup_dist(&s.x, &ox).max(sup_dist(&s.v, &ov)),
        };
        out.record(r);
    }
    Ok(out)
}

/// Endpoint errors for a sequence of step sizes (order verification).
#[allow(clippy::too_many_arguments)]
pub fn endpoint_errors(
    atlas: &Atlas,
    bilinear: &BilinearCoeffs,
    chart: &str,
    kind: OracleKind,
    x0: &[f64],
    v0: &[f64],
    t1: f64,
    steps: &[f64],
    opts: IntegrateOpts,
) -> Result<Vec<f64>> {
    let mut errors = Vec::with_capacity(steps.len());
    let (ox, _) = oracle_state(kind, x0, v0, t1)?;
    for &h in steps {
        let traj = integrate(atlas, bilinear, chart, x0, v0, t1, h, opts)?;
        let end = traj.end();
        let err = match kind {
            OracleKind::GreatCircle => {
                sup_dist(&embed_stereographic(&end.x), &embed_stereographic(&ox))
            }
            _ => sup_dist(&end.x, &ox),
        };
        errors.push(err);
    }
    Ok(errors)
}

/// CSV rendering: t, chart, coordinates, velocities, optional energy.
pub fn trajectory_csv(
    traj: &Trajectory,
    metrics: Option<&BTreeMap<String, MetricMap>>,
) -> Result<String> {
    let dim = traj.samples[0].x.len();
    let mut head = vec!["t".to_string(), "chart".to_string()];
    head.extend((0..dim).map(|i| format!("x{i}")));
    head.extend((0..dim).map(|i| format!("v{i}")));
    if metrics.is_some() {
        head.push("energy".to_string());
    }
    let mut out = head.join(",");
    out.push('\n');
    for s in &traj.samples {
        let mut row = vec![format!("{}", s.t), s.chart.clone()];
        row.extend(s.x.iter().map(|c| format!("{c}")));
        row.extend(s.v.iter().map(|c| format!("{c}")));
        if let Some(ms) = metrics {
            let m = ms.get(&s.chart).ok_or_else(|| {
                Error::Config(format!("no metric declared for chart `{}`", s.chart))
            })?;
            row.push(format!("{}", m.energy(&s.x, &s.v)?));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::Chart;
    use crate::expr::{coord_names, stacked_names, ExprMap};
    use crate::spray::{BilinearMap, SprayMap};

    fn flat_setup(dim: usize) -> (Atlas, BilinearCoeffs) {
        let names = coord_names("x", dim);
        let chart = Chart::new("main", dim, ExprMap::parse("1", &names).unwrap()).unwrap();
        let atlas = Atlas {
            charts: vec![chart],
            transitions: vec![],
        };
        let mut b = BilinearCoeffs::default();
        b.per_chart
            .insert("main".to_string(), BilinearMap::flat(dim));
        (atlas, b)
    }

    fn poly1_setup() -> (Atlas, BilinearCoeffs) {
        let names = coord_names("x", 1);
        let chart = Chart::new("main", 1, ExprMap::parse("1", &names).unwrap()).unwrap();
        let atlas = Atlas {
            charts: vec![chart],
            transitions: vec![],
        };
        let s2names = stacked_names(&[("x", 1), ("v", 1)]);
        let s2 = SprayMap::Expr(ExprMap::parse("v0^2", &s2names).unwrap());
        let mut b = BilinearCoeffs::default();
        b.per_chart.insert(
            "main".to_string(),
            BilinearMap::Polarized(Box::new(s2)),
        );
        (atlas, b)
    }

    #[test]
    fn flat_integration_is_exact() {
        let (atlas, b) = flat_setup(2);
        let traj = integrate(
            &atlas,
            &b,
            "main",
            &[0.5, -0.25],
            &[1.0, 2.0],
            1.0,
            1e-2,
            IntegrateOpts::default(),
        )
        .unwrap();
        let end = traj.end();
        assert!(sup_dist(&end.x, &[1.5, 1.75]) <= 1e-12);
        assert!(sup_dist(&end.v, &[1.0, 2.0]) <= 1e-15);
    }

    #[test]
    fn zero_velocity_is_constant() {
        let (atlas, b) = poly1_setup();
        let traj = integrate(
            &atlas,
            &b,
            "main",
            &[0.7],
            &[0.0],
            1.0,
            1e-2,
            IntegrateOpts::default(),
        )
        .unwrap();
        for s in &traj.samples {
            assert_eq!(s.x, vec![0.7]);
            assert_eq!(s.v, vec![0.0]);
        }
    }

    #[test]
    fn log_oracle_matches_poly1_integration() {
        let (atlas, b) = poly1_setup();
        let traj = integrate(
            &atlas,
            &b,
            "main",
            &[0.25],
            &[0.5],
            1.0,
            1e-3,
            IntegrateOpts::default(),
        )
        .unwrap();
        let dev = oracle_deviation(OracleKind::Log1d, &traj).unwrap();
        assert!(dev.max_residual <= 1e-9, "deviation {}", dev.max_residual);
    }

    #[test]
    fn reparametrization_and_reversal() {
        let (atlas, b) = poly1_setup();
        let opts = IntegrateOpts::default();
        let out = check_homogeneity_reparam(&atlas, &b, "main", &[0.0], &[0.4], 2.0, 0.5, 1e-3, opts)
            .unwrap();
        assert!(out.max_residual <= 1e-9, "reparam {}", out.max_residual);

        let out = check_homogeneity_reparam(&atlas, &b, "main", &[0.1], &[0.4], 0.0, 0.5, 1e-3, opts)
            .unwrap();
        assert_eq!(out.max_residual, 0.0);

        let out =
            check_time_reversal(&atlas, &b, "main", &[0.0], &[0.5], 0.8, 1e-3, opts).unwrap();
        assert!(out.max_residual <= 1e-9, "reversal {}", out.max_residual);
    }

    #[test]
    fn integration_error_when_leaving_all_domains() {
        // Domain shrinks to |x| < 1 with no escape transition.
        let names = coord_names("x", 1);
        let chart = Chart::new("main", 1, ExprMap::parse("1 - x0^2", &names).unwrap()).unwrap();
        let atlas = Atlas {
            charts: vec![chart],
            transitions: vec![],
        };
        let mut b = BilinearCoeffs::default();
        b.per_chart.insert("main".to_string(), BilinearMap::flat(1));
        let err = integrate(
            &atlas,
            &b,
            "main",
            &[0.0],
            &[1.0],
            3.0,
            1e-2,
            IntegrateOpts::default(),
        );
        assert!(matches!(err, Err(Error::Integration { .. })));
    }
}
