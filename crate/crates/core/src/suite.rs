//! Verification-suite orchestration.
//!
//! Each check draws from its own RNG stream keyed by (seed, check id), so a
//! report is a deterministic function of (manifold, suite, seed, tolerance
//! overrides) and the pipeline order never affects residuals. Check errors
//! are captured per record rather than aborting the suite.

use crate::atlas::{self, Transition};
use crate::connection::{
    self, check_cd_axioms, check_field_compatibility, check_nabla_equals_k_of_t,
    connection_from_splitting, connection_from_splitting_oracle, exact_identity_checks,
    ConnectionMap, ConnectionSplitting, SplittingOracle,
};
use crate::error::{Error, Result};
use crate::expr::{coord_names, ExprMap};
use crate::geodesic::{
    self, check_homogeneity_reparam, check_time_reversal, endpoint_errors, energy_monitor,
    oracle_deviation, IntegrateOpts, OracleKind,
};
use crate::manifold::{Diffeo, Manifold};
use crate::report::{CheckRecord, Comparator, Report};
use crate::sample::{rng_for, sample_point, sup_dist, sup_norm, CheckOutcome};
use crate::second_order::{
    self, check_conjugacy, check_t2mu_linearity, componentwise_square,
    induce_second_order_connection, reduce_to_first_order_connection, SecondOrderPoint,
    SecondOrderSplittingOracle, SecondOrderTangent, SecondOrderTriv,
};
use crate::spray::{
    check_bilinearity, check_christoffel_oracle, check_homogeneity, check_pushforward_roundtrip,
    check_quadratic_form, check_second_order, check_symmetry, check_transformation_law,
    check_zero_section, extract_bilinear, pushforward_spray, BilinearMap,
    DEFAULT_HOMOGENEITY_SCALARS,
};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Spray,
    Connection,
    SecondOrder,
    Geodesic,
    Truncation,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spray" => Ok(Suite::Spray),
            "connection" => Ok(Suite::Connection),
            "second-order" => Ok(Suite::SecondOrder),
            "geodesic" => Ok(Suite::Geodesic),
            "truncation" => Ok(Suite::Truncation),
            "all" => Ok(Suite::All),
            other => Err(Error::Config(format!(
                "unknown suite `{other}` (spray | connection | second-order | geodesic | truncation | all)"
            ))),
        }
    }
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Spray => "spray",
            Suite::Connection => "connection",
            Suite::SecondOrder => "second-order",
            Suite::Geodesic => "geodesic",
            Suite::Truncation => "truncation",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: Option<u64>,
    pub tol_overrides: BTreeMap<String, f64>,
    /// Sample-count overrides by group name (see [`sample_count_groups`]).
    pub sample_overrides: BTreeMap<String, usize>,
}

/// Groups accepted by `--samples GROUP=N`.
pub fn sample_count_groups() -> &'static [&'static str] {
    &[
        "atlas",
        "homogeneity",
        "spray",
        "christoffel_points",
        "transformation",
        "cd",
        "nabla",
        "exact",
        "roundtrip",
        "conjugacy",
        "witness",
        "second_order",
        "induce_identity",
        "truncation",
    ]
}

/// Default tolerance per check group.
pub fn default_tolerances() -> BTreeMap<String, f64> {
    [
        ("atlas.transition_inverse", 1e-9),
        ("atlas.regularity", 1e-6),
        ("atlas.cocycle", 1e-9),
        ("spray.second_order", 1e-15),
        ("spray.zero_section", 1e-15),
        ("spray.homogeneity", 1e-9),
        ("spray.symmetry", 1e-15),
        ("spray.bilinearity", 1e-9),
        ("spray.extract_jet_crosscheck", 1e-8),
        ("spray.quadratic_form", 1e-9),
        ("spray.christoffel_oracle", 1e-5),
        ("spray.transformation_law", 1e-8),
        ("spray.pushforward_roundtrip", 1e-8),
        ("connection.cd_axioms", 1e-8),
        ("connection.cd_torsion", 1e-12),
        ("connection.nabla_eq_kt", 1e-9),
        ("connection.exact", 1e-15),
        ("connection.splitting_roundtrip", 1e-15),
        ("connection.blackbox_recovery", 1e-12),
        ("connection.field_compat", 1e-8),
        ("second_order.trivialize_roundtrip", 1e-15),
        ("second_order.upsilon", 1e-15),
        ("second_order.conjugacy", 1e-9),
        ("second_order.t2mu_linearity", 1e-8),
        ("second_order.nonconjugate_witness", 1e-3),
        ("second_order.induce_splitting_identity", 1e-12),
        ("second_order.induce_reduce", 1e-12),
        ("second_order.blackbox_reduce", 1e-12),
        ("second_order.blackbox_reduce_metric", 1e-5),
        ("geodesic.exact", 1e-12),
        ("geodesic.oracle_curve", 1e-6),
        ("geodesic.reparam", 1e-7),
        ("geodesic.time_reversal", 1e-6),
        ("geodesic.energy_drift", 1e-6),
        ("geodesic.energy_scaling", 0.2),
        ("geodesic.rk4_order", 1.0),
        ("truncation.agree", 1e-8),
        ("truncation.lower_level_checks", 1.0),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), *v))
    .collect()
}

#[derive(Debug, Clone)]
struct Counts {
    atlas: usize,
    homogeneity: usize,
    spray_generic: usize,
    christoffel_points: usize,
    transformation: usize,
    cd: usize,
    nabla: usize,
    exact: usize,
    roundtrip: usize,
    conjugacy: usize,
    witness: usize,
    second_generic: usize,
    induce_identity: usize,
    truncation: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Counts {
            atlas: 50,
            homogeneity: 200,
            spray_generic: 100,
            christoffel_points: 100,
            transformation: 100,
            cd: 50,
            nabla: 100,
            exact: 500,
            roundtrip: 100,
            conjugacy: 100,
            witness: 100,
            second_generic: 200,
            induce_identity: 200,
            truncation: 200,
        }
    }
}

impl Counts {
    fn with_overrides(overrides: &BTreeMap<String, usize>) -> Result<Counts> {
        let mut c = Counts::default();
        for (key, value) in overrides {
            if *value == 0 {
                return Err(Error::Config(format!("sample count `{key}` must be >= 1")));
            }
            match key.as_str() {
                "atlas" => c.atlas = *value,
                "homogeneity" => c.homogeneity = *value,
                "spray" => c.spray_generic = *value,
                "christoffel_points" => c.christoffel_points = *value,
                "transformation" => c.transformation = *value,
                "cd" => c.cd = *value,
                "nabla" => c.nabla = *value,
                "exact" => c.exact = *value,
                "roundtrip" => c.roundtrip = *value,
                "conjugacy" => c.conjugacy = *value,
                "witness" => c.witness = *value,
                "second_order" => c.second_generic = *value,
                "induce_identity" => c.induce_identity = *value,
                "truncation" => c.truncation = *value,
                other => {
                    return Err(Error::Config(format!(
                        "unknown sample group `{other}` (expected one of {})",
                        sample_count_groups().join(", ")
                    )))
                }
            }
        }
        Ok(c)
    }
}

struct Runner<'a> {
    m: &'a Manifold,
    seed: u64,
    tols: BTreeMap<String, f64>,
    counts: Counts,
    records: Vec<CheckRecord>,
}

impl<'a> Runner<'a> {
    fn tol(&self, group: &str) -> f64 {
        *self
            .tols
            .get(group)
            .unwrap_or_else(|| panic!("unknown tolerance group `{group}`"))
    }

    fn run(
        &mut self,
        id: String,
        group: &str,
        comparator: Comparator,
        f: impl FnOnce(&Manifold, &mut rand_chacha::ChaCha8Rng) -> Result<CheckOutcome>,
    ) {
        let tol = self.tol(group);
        let mut rng = rng_for(self.seed, &id);
        let record = match f(self.m, &mut rng) {
            Ok(out) => CheckRecord::passed(
                id,
                out.samples,
                out.skipped,
                out.max_residual,
                tol,
                comparator,
            ),
            Err(e) => CheckRecord::failed_with_error(id, tol, e.to_string()),
        };
        self.records.push(record);
    }

    fn run_noted(
        &mut self,
        id: String,
        group: &str,
        comparator: Comparator,
        f: impl FnOnce(&Manifold, &mut rand_chacha::ChaCha8Rng) -> Result<(CheckOutcome, String)>,
    ) {
        let tol = self.tol(group);
        let mut rng = rng_for(self.seed, &id);
        let record = match f(self.m, &mut rng) {
            Ok((out, note)) => CheckRecord::passed(
                id,
                out.samples,
                out.skipped,
                out.max_residual,
                tol,
                comparator,
            )
            .with_note(note),
            Err(e) => CheckRecord::failed_with_error(id, tol, e.to_string()),
        };
        self.records.push(record);
    }
}

/// Run a verification suite and assemble the report.
pub fn run_suite(m: &Manifold, suite: Suite, opts: &SuiteOptions) -> Report {
    let seed = opts.seed.unwrap_or(m.seed);
    let mut tols = default_tolerances();
    for (k, v) in &opts.tol_overrides {
        tols.insert(k.clone(), *v);
    }
    let counts = match Counts::with_overrides(&opts.sample_overrides) {
        Ok(c) => c,
        Err(e) => {
            let record =
                CheckRecord::failed_with_error("suite.configuration", 0.0, e.to_string());
            return Report::new(suite.name(), &m.name, seed, m.level, tols, vec![record]);
        }
    };
    let mut runner = Runner {
        m,
        seed,
        tols: tols.clone(),
        counts,
        records: Vec::new(),
    };

    match suite {
        Suite::Spray => spray_suite(&mut runner),
        Suite::Connection => connection_suite(&mut runner),
        Suite::SecondOrder => second_order_suite(&mut runner),
        Suite::Geodesic => geodesic_suite(&mut runner),
        Suite::Truncation => truncation_suite(&mut runner, opts),
        Suite::All => {
            spray_suite(&mut runner);
            connection_suite(&mut runner);
            second_order_suite(&mut runner);
            geodesic_suite(&mut runner);
            if m.space.levels() > 1 {
                truncation_suite(&mut runner, opts);
            }
        }
    }

    Report::new(
        suite.name(),
        &m.name,
        seed,
        m.level,
        tols,
        runner.records,
    )
}

fn chart_pairs(m: &Manifold) -> Vec<(String, String)> {
    m.atlas
        .transitions
        .iter()
        .map(|t| (t.from.clone(), t.to.clone()))
        .collect()
}

fn spray_suite(r: &mut Runner) {
    let counts_atlas = r.counts.atlas;
    for (from, to) in chart_pairs(r.m) {
        r.run(
            format!("atlas.transition_inverse.{from}__{to}"),
            "atlas.transition_inverse",
            Comparator::Le,
            |m, rng| {
                let t = m.atlas.transition(&from, &to).unwrap();
                atlas::check_transition_inverse(
                    m.atlas.chart(&from)?,
                    m.atlas.chart(&to)?,
                    t,
                    counts_atlas,
                    m.sbox(),
                    rng,
                )
            },
        );
        r.run(
            format!("atlas.regularity.{from}__{to}"),
            "atlas.regularity",
            Comparator::Le,
            |m, rng| {
                let t = m.atlas.transition(&from, &to).unwrap();
                atlas::check_transition_regularity(
                    m.atlas.chart(&from)?,
                    m.atlas.chart(&to)?,
                    t,
                    counts_atlas,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )
            },
        );
        r.run(
            format!("atlas.cocycle.{from}__{to}"),
            "atlas.cocycle",
            Comparator::Le,
            |m, rng| {
                let t = m.atlas.transition(&from, &to).unwrap();
                atlas::check_cocycle_pair(&m.atlas, t, counts_atlas, m.sbox(), rng)
            },
        );
    }

    let charts = r.m.chart_names();
    for c in &charts {
        let c = c.clone();
        let n_generic = r.counts.spray_generic;
        let n_homog = r.counts.homogeneity;

        r.run(
            format!("spray.second_order.{c}"),
            "spray.second_order",
            Comparator::Le,
            |m, rng| {
                let s2 = m.spray.get(&c)?;
                let section = |x: &[f64], u: &[f64]| s2.section(x, u);
                check_second_order(&section, m.atlas.chart(&c)?, 50, m.sbox(), m.vbox(), rng)
            },
        );
        let c2 = c.clone();
        r.run(
            format!("spray.zero_section.{c2}"),
            "spray.zero_section",
            Comparator::Le,
            |m, rng| {
                check_zero_section(m.spray.get(&c2)?, m.atlas.chart(&c2)?, 50, m.sbox(), rng)
            },
        );
        let c2 = c.clone();
        r.run(
            format!("spray.homogeneity.{c2}"),
            "spray.homogeneity",
            Comparator::Le,
            |m, rng| {
                check_homogeneity(
                    m.spray.get(&c2)?,
                    m.atlas.chart(&c2)?,
                    &DEFAULT_HOMOGENEITY_SCALARS,
                    n_homog,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )
            },
        );
        let c2 = c.clone();
        r.run(
            format!("spray.symmetry.{c2}"),
            "spray.symmetry",
            Comparator::Le,
            |m, rng| {
                check_symmetry(
                    m.bilinear.get(&c2)?,
                    m.atlas.chart(&c2)?,
                    n_generic,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )
            },
        );
        let c2 = c.clone();
        r.run(
            format!("spray.bilinearity.{c2}"),
            "spray.bilinearity",
            Comparator::Le,
            |m, rng| {
                check_bilinearity(
                    m.bilinear.get(&c2)?,
                    m.atlas.chart(&c2)?,
                    n_generic,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )
            },
        );
        let c2 = c.clone();
        r.run(
            format!("spray.extract_jet_crosscheck.{c2}"),
            "spray.extract_jet_crosscheck",
            Comparator::Le,
            |m, rng| {
                let e = extract_bilinear(
                    m.spray.get(&c2)?,
                    m.atlas.chart(&c2)?,
                    n_generic,
                    1e-6,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )?;
                Ok(e.crosscheck)
            },
        );
        let c2 = c.clone();
        r.run(
            format!("spray.quadratic_form.{c2}"),
            "spray.quadratic_form",
            Comparator::Le,
            |m, rng| {
                check_quadratic_form(
                    m.spray.get(&c2)?,
                    m.bilinear.get(&c2)?,
                    m.atlas.chart(&c2)?,
                    n_generic,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )
            },
        );
        if r.m.metrics.is_some() {
            let c2 = c.clone();
            let pts = r.counts.christoffel_points;
            r.run(
                format!("spray.christoffel_oracle.{c2}"),
                "spray.christoffel_oracle",
                Comparator::Le,
                |m, rng| {
                    let metric = m
                        .metrics
                        .as_ref()
                        .and_then(|ms| ms.get(&c2))
                        .ok_or_else(|| Error::UnresolvedRef(format!("metric on `{c2}`")))?;
                    check_christoffel_oracle(
                        m.bilinear.get(&c2)?,
                        metric,
                        m.atlas.chart(&c2)?,
                        pts,
                        1e-5,
                        m.sbox(),
                        rng,
                    )
                },
            );
        }
    }

    let n_tl = r.counts.transformation;
    for (from, to) in chart_pairs(r.m) {
        r.run(
            format!("spray.transformation_law.{from}__{to}"),
            "spray.transformation_law",
            Comparator::Le,
            |m, rng| {
                let t = m.atlas.transition(&from, &to).unwrap();
                check_transformation_law(
                    m.bilinear.get(&from)?,
                    m.bilinear.get(&to)?,
                    t,
                    m.atlas.chart(&from)?,
                    m.atlas.chart(&to)?,
                    n_tl,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )
            },
        );
        r.run(
            format!("spray.pushforward_roundtrip.{from}__{to}"),
            "spray.pushforward_roundtrip",
            Comparator::Le,
            |m, rng| {
                let t = m.atlas.transition(&from, &to).unwrap();
                check_pushforward_roundtrip(
                    m.spray.get(&from)?,
                    t,
                    m.atlas.chart(&from)?,
                    m.atlas.chart(&to)?,
                    n_tl,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )
            },
        );
    }
}

fn connection_suite(r: &mut Runner) {
    let charts = r.m.chart_names();
    for c in &charts {
        // Covariant-derivative axioms: one sampled run, four records.
        let id = format!("connection.cd.{c}");
        let mut rng = rng_for(r.seed, &id);
        let n_cd = r.counts.cd;
        let cd = (|| -> Result<connection::CdAxiomOutcomes> {
            let chart = r.m.atlas.chart(c)?;
            let extra_fields: Vec<ExprMap> = r
                .m
                .fields
                .values()
                .filter_map(|f| f.per_chart.get(c).cloned())
                .collect();
            let extra_scalars: Vec<ExprMap> = r
                .m
                .scalars
                .values()
                .filter_map(|s| s.get(c).cloned())
                .collect();
            check_cd_axioms(
                r.m.bilinear.get(c)?,
                chart,
                &extra_fields,
                &extra_scalars,
                n_cd,
                r.m.sbox(),
                &mut rng,
            )
        })();
        match cd {
            Ok(out) => {
                for (name, group, o) in [
                    ("cd_tensorial", "connection.cd_axioms", out.tensorial),
                    ("cd_leibniz", "connection.cd_axioms", out.leibniz),
                    ("cd_bilinear", "connection.cd_axioms", out.bilinear),
                    ("cd_torsion", "connection.cd_torsion", out.torsion),
                ] {
                    let tol = r.tol(group);
                    r.records.push(CheckRecord::passed(
                        format!("connection.{name}.{c}"),
                        o.samples,
                        o.skipped,
                        o.max_residual,
                        tol,
                        Comparator::Le,
                    ));
                }
            }
            Err(e) => {
                let tol = r.tol("connection.cd_axioms");
                r.records.push(CheckRecord::failed_with_error(
                    format!("connection.cd_axioms.{c}"),
                    tol,
                    e.to_string(),
                ));
            }
        }

        let c2 = c.clone();
        let n_nabla = r.counts.nabla;
        r.run(
            format!("connection.nabla_eq_kt.{c2}"),
            "connection.nabla_eq_kt",
            Comparator::Le,
            |m, rng| {
                let chart = m.atlas.chart(&c2)?;
                let k = ConnectionMap::new(m.bilinear.get(&c2)?.clone());
                let mut fields = connection::polynomial_test_fields(chart.dim);
                fields.extend(
                    m.fields
                        .values()
                        .filter_map(|f| f.per_chart.get(&c2).cloned()),
                );
                let mut out = CheckOutcome::default();
                let pairs: Vec<(usize, usize)> = (0..fields.len())
                    .flat_map(|i| (0..fields.len()).map(move |j| (i, j)))
                    .collect();
                let per_pair = n_nabla.div_ceil(pairs.len());
                for (i, j) in pairs {
                    let o = check_nabla_equals_k_of_t(
                        &k,
                        &fields[i],
                        &fields[j],
                        chart,
                        per_pair,
                        m.sbox(),
                        rng,
                    )?;
                    out.merge(&o);
                }
                Ok(out)
            },
        );

        // Exact coordinate identities: one sampled run, twelve records.
        let id = format!("connection.exact.{c}");
        let mut rng = rng_for(r.seed, &id);
        let n_exact = r.counts.exact;
        let exact = (|| -> Result<Vec<(&'static str, CheckOutcome)>> {
            exact_identity_checks(
                r.m.bilinear.get(c)?,
                r.m.atlas.chart(c)?,
                n_exact,
                r.m.sbox(),
                r.m.vbox(),
                &mut rng,
            )
        })();
        match exact {
            Ok(results) => {
                let tol = r.tol("connection.exact");
                for (name, o) in results {
                    r.records.push(CheckRecord::passed(
                        format!("connection.exact.{name}.{c}"),
                        o.samples,
                        o.skipped,
                        o.max_residual,
                        tol,
                        Comparator::Le,
                    ));
                }
            }
            Err(e) => {
                let tol = r.tol("connection.exact");
                r.records.push(CheckRecord::failed_with_error(
                    format!("connection.exact.{c}"),
                    tol,
                    e.to_string(),
                ));
            }
        }

        let c2 = c.clone();
        let n_rt = r.counts.roundtrip;
        r.run(
            format!("connection.splitting_roundtrip.{c2}"),
            "connection.splitting_roundtrip",
            Comparator::Le,
            |m, rng| {
                let b = m.bilinear.get(&c2)?;
                let chart = m.atlas.chart(&c2)?;
                let split = ConnectionSplitting::new(b.clone());
                let k = connection_from_splitting(&split);
                let mut out = CheckOutcome::default();
                for _ in 0..n_rt {
                    let x = atlas::sample_in_chart(rng, m.sbox(), chart, 10_000)?;
                    let u = sample_point(rng, m.vbox(), chart.dim);
                    let v = sample_point(rng, m.vbox(), chart.dim);
                    let got = k.b.eval(&x, &u, &v)?;
                    let want = b.eval(&x, &u, &v)?;
                    out.record(sup_dist(&got, &want));
                }
                Ok(out)
            },
        );

        let c2 = c.clone();
        r.run(
            format!("connection.blackbox_recovery.{c2}"),
            "connection.blackbox_recovery",
            Comparator::Le,
            |m, rng| {
                let b = m.bilinear.get(&c2)?;
                let chart = m.atlas.chart(&c2)?;
                let oracle: Arc<dyn SplittingOracle> =
                    Arc::new(ConnectionSplitting::new(b.clone()));
                let k = connection_from_splitting_oracle(
                    oracle,
                    25,
                    1e-9,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )?;
                let mut out = CheckOutcome::default();
                for _ in 0..n_rt {
                    let x = atlas::sample_in_chart(rng, m.sbox(), chart, 10_000)?;
                    let u = sample_point(rng, m.vbox(), chart.dim);
                    let v = sample_point(rng, m.vbox(), chart.dim);
                    let got = k.b.eval(&x, &u, &v)?;
                    let want = b.eval(&x, &u, &v)?;
                    out.record(sup_dist(&got, &want));
                }
                Ok(out)
            },
        );
    }

    let field_names: Vec<String> = r.m.fields.keys().cloned().collect();
    let n_compat = r.counts.spray_generic;
    for (from, to) in chart_pairs(r.m) {
        for fname in &field_names {
            let fname = fname.clone();
            let from = from.clone();
            let to = to.clone();
            let has_both = {
                let f = &r.m.fields[&fname];
                f.per_chart.contains_key(&from) && f.per_chart.contains_key(&to)
            };
            if !has_both {
                continue;
            }
            r.run(
                format!("connection.field_compat.{fname}.{from}__{to}"),
                "connection.field_compat",
                Comparator::Le,
                |m, rng| {
                    let f = &m.fields[&fname];
                    let t = m.atlas.transition(&from, &to).unwrap();
                    check_field_compatibility(
                        f.get(&from)?,
                        f.get(&to)?,
                        t,
                        m.atlas.chart(&from)?,
                        m.atlas.chart(&to)?,
                        n_compat,
                        m.sbox(),
                        rng,
                    )
                },
            );
        }
    }
}

/// Default diffeomorphism for single-chart conjugacy checks: uniform scaling.
fn default_diffeo(dim: usize) -> Diffeo {
    let names = coord_names("x", dim);
    let scale: Vec<String> = (0..dim).map(|i| format!("2*x{i}")).collect();
    let unscale: Vec<String> = (0..dim).map(|i| format!("x{i}/2")).collect();
    let wrap = |comps: Vec<String>| {
        if dim == 1 {
            comps[0].clone()
        } else {
            format!("[{}]", comps.join(", "))
        }
    };
    Diffeo {
        mu: ExprMap::parse(&wrap(scale), &names).expect("default diffeo parses"),
        mu_inverse: Some(ExprMap::parse(&wrap(unscale), &names).expect("default diffeo parses")),
    }
}

fn second_order_suite(r: &mut Runner) {
    let charts = r.m.chart_names();
    let n_gen = r.counts.second_generic;
    let n_conj = r.counts.conjugacy;
    let n_witness = r.counts.witness;
    let n_induce = r.counts.induce_identity;

    for c in &charts {
        let c2 = c.clone();
        r.run(
            format!("second_order.trivialize_roundtrip.{c2}"),
            "second_order.trivialize_roundtrip",
            Comparator::Le,
            |m, rng| {
                let b = m.bilinear.get(&c2)?;
                let chart = m.atlas.chart(&c2)?;
                let mut out = CheckOutcome::default();
                for _ in 0..n_gen {
                    let x = atlas::sample_in_chart(rng, m.sbox(), chart, 10_000)?;
                    let a = sample_point(rng, m.vbox(), chart.dim);
                    let acc = sample_point(rng, m.vbox(), chart.dim);
                    let p = SecondOrderPoint::new(x, a, acc)?;
                    let t = second_order::trivialize(b, &p)?;
                    let back = second_order::untrivialize(b, &t)?;
                    out.record(
                        sup_dist(&back.x, &p.x)
                            .max(sup_dist(&back.a, &p.a))
                            .max(sup_dist(&back.b, &p.b)),
                    );
                }
                Ok(out)
            },
        );

        let c2 = c.clone();
        r.run(
            format!("second_order.upsilon.{c2}"),
            "second_order.upsilon",
            Comparator::Le,
            |m, rng| {
                let b = m.bilinear.get(&c2)?;
                let chart = m.atlas.chart(&c2)?;
                let mut out = CheckOutcome::default();
                for _ in 0..n_gen {
                    let x = atlas::sample_in_chart(rng, m.sbox(), chart, 10_000)?;
                    let u = sample_point(rng, m.vbox(), chart.dim);
                    let v = sample_point(rng, m.vbox(), chart.dim);
                    let w = sample_point(rng, m.vbox(), chart.dim);
                    let xi = crate::atlas::DoubleTangentVector::new(
                        x.clone(),
                        u.clone(),
                        v,
                        w.clone(),
                    )?;
                    let (px, pu, pv, pk) = second_order::upsilon(b, &xi)?;
                    let back = second_order::upsilon_inverse(b, &px, &pu, &pv, &pk)?;
                    let mut residual = sup_dist(&back.x, &xi.x)
                        .max(sup_dist(&back.u, &xi.u))
                        .max(sup_dist(&back.v, &xi.v))
                        .max(sup_dist(&back.w, &xi.w));

                    // On symmetric vectors Υ agrees with the trivialization.
                    let sym = crate::atlas::DoubleTangentVector::new(
                        x.clone(),
                        u.clone(),
                        u.clone(),
                        w.clone(),
                    )?;
                    let (_, su, _, sk) = second_order::upsilon(b, &sym)?;
                    let p = SecondOrderPoint::new(x.clone(), u.clone(), w.clone())?;
                    let t = second_order::trivialize(b, &p)?;
                    residual = residual
                        .max(sup_dist(&su, &t.h))
                        .max(sup_dist(&sk, &t.k));
                    out.record(residual);
                }
                Ok(out)
            },
        );

        let c2 = c.clone();
        r.run_noted(
            format!("second_order.conjugacy_constructed.{c2}"),
            "second_order.conjugacy",
            Comparator::Le,
            |m, rng| {
                let chart = m.atlas.chart(&c2)?;
                let diffeo = m
                    .diffeo
                    .clone()
                    .unwrap_or_else(|| default_diffeo(chart.dim));
                let inv = diffeo.mu_inverse.clone().ok_or_else(|| {
                    Error::Config("conjugacy construction requires diffeo.mu_inverse".into())
                })?;
                let t = Transition {
                    from: c2.clone(),
                    to: c2.clone(),
                    map: diffeo.mu.clone(),
                    inverse: Some(inv),
                };
                let pushed = pushforward_spray(m.spray.get(&c2)?, &t)?;
                let b2 = BilinearMap::Polarized(Box::new(pushed));
                let out = check_conjugacy(
                    m.bilinear.get(&c2)?,
                    &b2,
                    &diffeo.mu,
                    chart,
                    None,
                    n_conj,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )?;
                Ok((out, "K2 constructed by pushforward along mu".to_string()))
            },
        );

        let c2 = c.clone();
        r.run_noted(
            format!("second_order.t2mu_linearity.{c2}"),
            "second_order.t2mu_linearity",
            Comparator::Le,
            |m, rng| {
                let chart = m.atlas.chart(&c2)?;
                let diffeo = m
                    .diffeo
                    .clone()
                    .unwrap_or_else(|| default_diffeo(chart.dim));
                let inv = diffeo.mu_inverse.clone().ok_or_else(|| {
                    Error::Config("conjugacy construction requires diffeo.mu_inverse".into())
                })?;
                let t = Transition {
                    from: c2.clone(),
                    to: c2.clone(),
                    map: diffeo.mu.clone(),
                    inverse: Some(inv),
                };
                let pushed = pushforward_spray(m.spray.get(&c2)?, &t)?;
                let b2 = BilinearMap::Polarized(Box::new(pushed));
                let out = check_t2mu_linearity(
                    m.bilinear.get(&c2)?,
                    &b2,
                    &diffeo.mu,
                    chart,
                    None,
                    n_conj,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )?;
                let mut merged = out.linearity;
                merged.merge(&out.direct_form);
                Ok((
                    merged,
                    format!(
                        "conjugacy residual {:.3e}; direct-form residual {:.3e}",
                        out.conjugacy_residual, out.direct_form.max_residual
                    ),
                ))
            },
        );

        let c2 = c.clone();
        r.run_noted(
            format!("second_order.nonconjugate_witness.{c2}"),
            "second_order.nonconjugate_witness",
            Comparator::Ge,
            |m, rng| {
                let chart = m.atlas.chart(&c2)?;
                let flat = BilinearMap::flat(chart.dim);
                let mu = componentwise_square(chart.dim);
                let out = check_conjugacy(
                    &flat, &flat, &mu, chart, None, n_witness, m.sbox(), m.vbox(), rng,
                )?;
                Ok((
                    out,
                    "negative control: flat sprays are not conjugate under squaring".to_string(),
                ))
            },
        );

        let c2 = c.clone();
        r.run(
            format!("second_order.induce_splitting_identity.{c2}"),
            "second_order.induce_splitting_identity",
            Comparator::Le,
            |m, rng| {
                let b = m.bilinear.get(&c2)?;
                let chart = m.atlas.chart(&c2)?;
                let induced = induce_second_order_connection(&ConnectionSplitting::new(b.clone()));
                let mut out = CheckOutcome::default();
                for _ in 0..n_induce {
                    let x = atlas::sample_in_chart(rng, m.sbox(), chart, 10_000)?;
                    let h = sample_point(rng, m.vbox(), chart.dim);
                    let k = sample_point(rng, m.vbox(), chart.dim);
                    let dh = sample_point(rng, m.vbox(), chart.dim);
                    let dk = sample_point(rng, m.vbox(), chart.dim);
                    let t = SecondOrderTangent {
                        base: SecondOrderTriv::new(x, h, k)?,
                        dx: vec![0.0; chart.dim],
                        dh: dh.clone(),
                        dk: dk.clone(),
                    };
                    let (zx, zh, zk) = induced.apply(&t)?;
                    out.record(
                        sup_norm(&zx)
                            .max(sup_dist(&zh, &dh))
                            .max(sup_dist(&zk, &dk)),
                    );
                }
                Ok(out)
            },
        );

        let c2 = c.clone();
        r.run(
            format!("second_order.induce_reduce_roundtrip.{c2}"),
            "second_order.induce_reduce",
            Comparator::Le,
            |m, rng| {
                let b = m.bilinear.get(&c2)?;
                let chart = m.atlas.chart(&c2)?;
                let induced = induce_second_order_connection(&ConnectionSplitting::new(b.clone()));
                let reduced = reduce_to_first_order_connection(
                    Arc::new(induced),
                    25,
                    1e-9,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )?;
                let mut out = CheckOutcome::default();
                for _ in 0..n_gen {
                    let x = atlas::sample_in_chart(rng, m.sbox(), chart, 10_000)?;
                    let u = sample_point(rng, m.vbox(), chart.dim);
                    let v = sample_point(rng, m.vbox(), chart.dim);
                    let got = reduced.b.eval(&x, &u, &v)?;
                    let want = b.eval(&x, &u, &v)?;
                    out.record(sup_dist(&got, &want));
                }
                Ok(out)
            },
        );

        let c2 = c.clone();
        let is_metric = r.m.metrics.is_some();
        let group = if is_metric {
            "second_order.blackbox_reduce_metric"
        } else {
            "second_order.blackbox_reduce"
        };
        r.run_noted(
            format!("second_order.blackbox_reduce.{c2}"),
            group,
            Comparator::Le,
            move |m, rng| {
                let b = m.bilinear.get(&c2)?;
                let chart = m.atlas.chart(&c2)?;
                let induced = induce_second_order_connection(&ConnectionSplitting::new(b.clone()));
                let oracle: Arc<dyn SecondOrderSplittingOracle> = Arc::new(induced);
                let reduced =
                    reduce_to_first_order_connection(oracle, 25, 1e-9, m.sbox(), m.vbox(), rng)?;
                let mut out = CheckOutcome::default();
                if let Some(metric) = m.metrics.as_ref().and_then(|ms| ms.get(&c2)) {
                    // Compare the recovered map against the independent
                    // finite-difference Christoffel oracle.
                    for _ in 0..50 {
                        let x = atlas::sample_in_chart(rng, m.sbox(), chart, 10_000)?;
                        let gamma = metric.christoffel_fd(&x, 1e-5)?;
                        let tensor = reduced.b.tensor(&x)?;
                        let mut worst = 0.0f64;
                        for k in 0..chart.dim {
                            for i in 0..chart.dim {
                                for j in 0..chart.dim {
                                    worst =
                                        worst.max((tensor[k][i][j] + gamma[k][i][j]).abs());
                                }
                            }
                        }
                        out.record(worst);
                    }
                    Ok((out, "recovered map vs fd Christoffel oracle".to_string()))
                } else {
                    for _ in 0..n_gen {
                        let x = atlas::sample_in_chart(rng, m.sbox(), chart, 10_000)?;
                        let u = sample_point(rng, m.vbox(), chart.dim);
                        let v = sample_point(rng, m.vbox(), chart.dim);
                        let got = reduced.b.eval(&x, &u, &v)?;
                        let want = b.eval(&x, &u, &v)?;
                        out.record(sup_dist(&got, &want));
                    }
                    Ok((out, "recovered map vs source bilinear map".to_string()))
                }
            },
        );
    }

    for (from, to) in chart_pairs(r.m) {
        r.run(
            format!("second_order.conjugacy_transition.{from}__{to}"),
            "second_order.conjugacy",
            Comparator::Le,
            |m, rng| {
                let t = m.atlas.transition(&from, &to).unwrap();
                check_conjugacy(
                    m.bilinear.get(&from)?,
                    m.bilinear.get(&to)?,
                    &t.map,
                    m.atlas.chart(&from)?,
                    Some(m.atlas.chart(&to)?),
                    n_conj,
                    m.sbox(),
                    m.vbox(),
                    rng,
                )
            },
        );
    }
}

fn geodesic_suite(r: &mut Runner) {
    let cfg = r.m.geodesic.clone();
    let chart = cfg.chart.clone();
    let opts = IntegrateOpts::default();

    let c2 = chart.clone();
    let cfgc = cfg.clone();
    r.run(
        format!("geodesic.zero_velocity.{c2}"),
        "geodesic.exact",
        Comparator::Le,
        move |m, _rng| {
            let zero = vec![0.0; m.dim()];
            let traj = geodesic::integrate(
                &m.atlas, &m.bilinear, &c2, &cfgc.x0, &zero, 0.25, 0.01, opts,
            )?;
            let mut out = CheckOutcome::default();
            for s in &traj.samples {
                out.record(sup_dist(&s.x, &cfgc.x0).max(sup_norm(&s.v)));
            }
            Ok(out)
        },
    );

    let c2 = chart.clone();
    let cfgc = cfg.clone();
    r.run(
        format!("geodesic.reparam.{c2}"),
        "geodesic.reparam",
        Comparator::Le,
        move |m, _rng| {
            check_homogeneity_reparam(
                &m.atlas,
                &m.bilinear,
                &c2,
                &cfgc.x0,
                &cfgc.v0,
                2.0,
                cfgc.t1 / 2.0,
                cfgc.step,
                opts,
            )
        },
    );

    let c2 = chart.clone();
    let cfgc = cfg.clone();
    r.run(
        format!("geodesic.time_reversal.{c2}"),
        "geodesic.time_reversal",
        Comparator::Le,
        move |m, _rng| {
            check_time_reversal(
                &m.atlas, &m.bilinear, &c2, &cfgc.x0, &cfgc.v0, cfgc.t1, cfgc.step, opts,
            )
        },
    );

    if let Some(kind) = cfg.oracle {
        let group = if kind == OracleKind::Line {
            "geodesic.exact"
        } else {
            "geodesic.oracle_curve"
        };
        let c2 = chart.clone();
        let cfgc = cfg.clone();
        r.run(
            format!("geodesic.oracle.{c2}"),
            group,
            Comparator::Le,
            move |m, _rng| {
                let traj = geodesic::integrate(
                    &m.atlas, &m.bilinear, &c2, &cfgc.x0, &cfgc.v0, cfgc.t1, cfgc.step, opts,
                )?;
                oracle_deviation(kind, &traj)
            },
        );

        if kind != OracleKind::Line {
            let c2 = chart.clone();
            let cfgc = cfg.clone();
            r.run_noted(
                format!("geodesic.rk4_order.{c2}"),
                "geodesic.rk4_order",
                Comparator::Le,
                move |m, _rng| {
                    let steps = [1e-2, 5e-3, 2.5e-3];
                    let errors = endpoint_errors(
                        &m.atlas, &m.bilinear, &c2, kind, &cfgc.x0, &cfgc.v0, cfgc.t1, &steps,
                        opts,
                    )?;
                    let mut out = CheckOutcome::default();
                    for w in errors.windows(2) {
                        let ratio = w[0] / w[1];
                        out.record((ratio - 16.0).abs() / 16.0);
                    }
                    Ok((
                        out,
                        format!(
                            "endpoint errors {:.3e} / {:.3e} / {:.3e} for h = 1e-2, 5e-3, 2.5e-3",
                            errors[0], errors[1], errors[2]
                        ),
                    ))
                },
            );
        }
    }

    if r.m.metrics.is_some() {
        let c2 = chart.clone();
        let cfgc = cfg.clone();
        r.run(
            format!("geodesic.energy_drift.{c2}"),
            "geodesic.energy_drift",
            Comparator::Le,
            move |m, _rng| {
                let metrics = m.metrics.as_ref().unwrap();
                let traj = geodesic::integrate(
                    &m.atlas, &m.bilinear, &c2, &cfgc.x0, &cfgc.v0, cfgc.t1, cfgc.step, opts,
                )?;
                energy_monitor(metrics, &traj)
            },
        );

        let c2 = chart.clone();
        let cfgc = cfg.clone();
        r.run_noted(
            format!("geodesic.energy_scaling.{c2}"),
            "geodesic.energy_scaling",
            Comparator::Le,
            move |m, _rng| {
                let metrics = m.metrics.as_ref().unwrap();
                let steps = [1e-2, 5e-3, 2.5e-3];
                let mut drifts = Vec::new();
                for h in steps {
                    let traj = geodesic::integrate(
                        &m.atlas, &m.bilinear, &c2, &cfgc.x0, &cfgc.v0, cfgc.t1, h, opts,
                    )?;
                    drifts.push(energy_monitor(metrics, &traj)?.max_residual);
                }
                let mut out = CheckOutcome::default();
                for w in drifts.windows(2) {
                    let ratio = w[0] / w[1];
                    out.record((ratio - 16.0).abs() / 16.0);
                }
                Ok((
                    out,
                    format!(
                        "energy drifts {:.3e} / {:.3e} / {:.3e} for h = 1e-2, 5e-3, 2.5e-3",
                        drifts[0], drifts[1], drifts[2]
                    ),
                ))
            },
        );
    }
}

fn truncation_suite(r: &mut Runner, opts: &SuiteOptions) {
    let levels = r.m.space.levels();
    if levels < 2 {
        let tol = r.tol("truncation.agree");
        r.records.push(
            CheckRecord::passed("truncation.skipped".to_string(), 0, 0, 0.0, tol, Comparator::Le)
                .with_note("space has a single level; nothing to compare".to_string()),
        );
        return;
    }
    let n = r.counts.truncation;
    for k in 1..levels {
        let pair = format!("level{}_{}", k, k + 1);

        let kk = k;
        r.run(
            format!("truncation.connection_agree.{pair}"),
            "truncation.agree",
            Comparator::Le,
            |m, rng| {
                let hi = m.def.instantiate_at_level(kk + 1)?;
                let lo = m.def.instantiate_at_level(kk)?;
                let d_hi = hi.dim();
                let d_lo = lo.dim();
                let mut out = CheckOutcome::default();
                for chart in hi.chart_names() {
                    let b_hi = hi.bilinear.get(&chart)?;
                    let b_lo = lo.bilinear.get(&chart)?;
                    let chart_hi = hi.atlas.chart(&chart)?;
                    for _ in 0..n {
                        let x = atlas::sample_in_chart(rng, hi.sbox(), chart_hi, 10_000)?;
                        let u = sample_point(rng, hi.vbox(), d_hi);
                        let v = sample_point(rng, hi.vbox(), d_hi);
                        let w = sample_point(rng, hi.vbox(), d_hi);
                        // K agreement on shared coordinates.
                        let b_full = b_hi.eval(&x, &u, &v)?;
                        let k_full: Vec<f64> =
                            w.iter().zip(b_full.iter()).map(|(w, b)| w - b).collect();
                        let b_low = b_lo.eval(&x[..d_lo], &u[..d_lo], &v[..d_lo])?;
                        let k_low: Vec<f64> = w[..d_lo]
                            .iter()
                            .zip(b_low.iter())
                            .map(|(w, b)| w - b)
                            .collect();
                        let mut residual = sup_dist(&k_full[..d_lo], &k_low);
                        // Splitting agreement (the w-block carries all of 𝔠).
                        residual = residual.max(sup_dist(&b_full[..d_lo], &b_low));
                        out.record(residual);
                    }
                }
                Ok(out)
            },
        );

        let kk = k;
        r.run(
            format!("truncation.geodesic_agree.{pair}"),
            "truncation.agree",
            Comparator::Le,
            |m, rng| {
                let hi = m.def.instantiate_at_level(kk + 1)?;
                let lo = m.def.instantiate_at_level(kk)?;
                let d_lo = lo.dim();
                let chart = hi.chart_names()[0].clone();
                let x0 = sample_point(rng, hi.sbox(), hi.dim());
                let v0 = sample_point(rng, hi.vbox(), hi.dim());
                let opts = IntegrateOpts::default();
                let t_hi =
                    geodesic::integrate(&hi.atlas, &hi.bilinear, &chart, &x0, &v0, 0.5, 1e-2, opts)?;
                let t_lo = geodesic::integrate(
                    &lo.atlas,
                    &lo.bilinear,
                    &chart,
                    &x0[..d_lo],
                    &v0[..d_lo],
                    0.5,
                    1e-2,
                    opts,
                )?;
                let mut out = CheckOutcome::default();
                for (a, b) in t_hi.samples.iter().zip(t_lo.samples.iter()) {
                    out.record(
                        sup_dist(&a.x[..d_lo], &b.x).max(sup_dist(&a.v[..d_lo], &b.v)),
                    );
                }
                Ok(out)
            },
        );
    }

    // Run the connection checks at every level; residuals are normalized by
    // each sub-check's own tolerance so one record summarizes a level.
    for level in 1..=levels {
        let id = format!("truncation.connection_checks.level{level}");
        let tol = r.tol("truncation.lower_level_checks");
        let record = match r.m.def.instantiate_at_level(level) {
            Ok(sub) => {
                let sub_opts = SuiteOptions {
                    seed: Some(r.seed),
                    tol_overrides: opts.tol_overrides.clone(),
                    sample_overrides: opts.sample_overrides.clone(),
                };
                let report = run_suite(&sub, Suite::Connection, &sub_opts);
                let mut normalized = 0.0f64;
                let mut samples = 0;
                let mut failing: Vec<String> = Vec::new();
                for c in &report.checks {
                    samples += c.samples;
                    if let Some(res) = c.max_residual {
                        normalized = normalized.max(res / c.tolerance);
                    }
                    if !c.pass {
                        failing.push(c.id.clone());
                    }
                }
                let mut rec = CheckRecord::passed(id, samples, 0, normalized, tol, Comparator::Le);
                if !failing.is_empty() {
                    rec.pass = false;
                    rec = rec.with_note(format!("failing sub-checks: {}", failing.join(", ")));
                } else {
                    rec = rec.with_note(format!(
                        "max sub-check residual / tolerance over {} records",
                        report.checks.len()
                    ));
                }
                rec
            }
            Err(e) => CheckRecord::failed_with_error(id, tol, e.to_string()),
        };
        r.records.push(record);
    }
}

/// Truncation-stability entry point (also reachable via `--suite truncation`).
pub fn truncation_stability(m: &Manifold, opts: &SuiteOptions) -> Report {
    run_suite(m, Suite::Truncation, opts)
}
