//! End-to-end acceptance suite.
//!
//! One test per criterion; each prints a single PASS/FAIL line (visible with
//! `cargo test --test acceptance -- --nocapture`) and asserts the stated
//! tolerance. Everything runs through the public library surface or the CLI
//! binary, on the shipped manifold catalog.

use spraygeo::atlas::DoubleTangentVector;
use spraygeo::connection::{
    check_cd_axioms, check_nabla_equals_k_of_t, connection_from_splitting,
    connection_from_splitting_oracle, exact_identity_checks, polynomial_test_fields,
    ConnectionMap, ConnectionSplitting, SplittingOracle,
};
use spraygeo::expr::ExprMap;
use spraygeo::geodesic::{
    self, check_homogeneity_reparam, check_time_reversal, energy_monitor,
    oracle_deviation, IntegrateOpts, OracleKind,
};
use spraygeo::manifold::{load_catalog, Manifold, ManifoldDef};
use spraygeo::sample::{rng_for, sample_point, sup_dist, CheckOutcome};
use spraygeo::second_order::{
    check_conjugacy, check_t2mu_linearity, componentwise_square, induce_second_order_connection,
    reduce_to_first_order_connection, SecondOrderSplittingOracle, SecondOrderTangent,
    SecondOrderTriv,
};
use spraygeo::spray::{
    check_christoffel_oracle, check_homogeneity, check_pushforward_roundtrip,
    check_transformation_law, extract_bilinear, BilinearMap, DEFAULT_HOMOGENEITY_SCALARS,
};
use std::sync::Arc;
use std::time::Instant;

const CATALOG: [&str; 5] = ["flat2", "sphere2", "hyperbolic2", "poly1", "loop8"];
const SEED: u64 = 42;

fn manifold(name: &str) -> Manifold {
    load_catalog(name).unwrap().instantiate().unwrap()
}

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "{} criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn c01_spray_axioms() {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for name in CATALOG {
        let m = manifold(name);
        let start = Instant::now();
        for chart in m.chart_names() {
            let mut rng = rng_for(SEED, &format!("acc.c01.{name}.{chart}"));
            let out = check_homogeneity(
                m.spray.get(&chart).unwrap(),
                m.atlas.chart(&chart).unwrap(),
                &DEFAULT_HOMOGENEITY_SCALARS,
                200,
                m.sbox(),
                m.vbox(),
                &mut rng,
            )
            .unwrap();
            worst = worst.max(out.max_residual);
        }
        slowest = slowest.max(start.elapsed().as_secs_f64());
    }

    // Degree-1 negative control must fail loudly.
    let bad = ManifoldDef::from_toml(
        r#"
name = "degree1"
[space]
grades = [1]
[sampling]
box = [-1.0, 1.0]
[[charts]]
name = "main"
domain = "1"
[spray.S2]
main = "[v0]"
"#,
    )
    .unwrap()
    .instantiate()
    .unwrap();
    let mut rng = rng_for(SEED, "acc.c01.degree1");
    let control = check_homogeneity(
        bad.spray.get("main").unwrap(),
        bad.atlas.chart("main").unwrap(),
        &DEFAULT_HOMOGENEITY_SCALARS,
        200,
        bad.sbox(),
        bad.vbox(),
        &mut rng,
    )
    .unwrap();

    let pass = worst <= 1e-9 && control.max_residual >= 0.1 && slowest <= 5.0;
    verdict(
        "01 spray axioms",
        pass,
        &format!(
            "catalog homogeneity residual {worst:.3e} <= 1e-9; degree-1 control {:.3e} >= 0.1; \
             slowest manifold {slowest:.2}s <= 5s",
            control.max_residual
        ),
    );
}

#[test]
fn c02_bilinear_extraction() {
    let mut jet_worst = 0.0f64;
    for name in CATALOG {
        let m = manifold(name);
        for chart in m.chart_names() {
            let mut rng = rng_for(SEED, &format!("acc.c02.{name}.{chart}"));
            let e = extract_bilinear(
                m.spray.get(&chart).unwrap(),
                m.atlas.chart(&chart).unwrap(),
                100,
                1e-6,
                m.sbox(),
                m.vbox(),
                &mut rng,
            )
            .unwrap();
            jet_worst = jet_worst.max(e.crosscheck.max_residual);
        }
    }

    let mut oracle_worst = 0.0f64;
    for name in ["sphere2", "hyperbolic2"] {
        let m = manifold(name);
        let metrics = m.metrics.as_ref().unwrap();
        for chart in m.chart_names() {
            let mut rng = rng_for(SEED, &format!("acc.c02.oracle.{name}.{chart}"));
            let out = check_christoffel_oracle(
                m.bilinear.get(&chart).unwrap(),
                metrics.get(&chart).unwrap(),
                m.atlas.chart(&chart).unwrap(),
                100,
                1e-5,
                m.sbox(),
                &mut rng,
            )
            .unwrap();
            oracle_worst = oracle_worst.max(out.max_residual);
        }
    }

    let pass = jet_worst <= 1e-8 && oracle_worst <= 1e-5;
    verdict(
        "02 bilinear extraction",
        pass,
        &format!(
            "polarization vs jet {jet_worst:.3e} <= 1e-8; \
             B vs fd Christoffel oracle {oracle_worst:.3e} <= 1e-5 at 100 points"
        ),
    );
}

#[test]
fn c03_covariant_derivative_axioms() {
    let mut axiom_worst = 0.0f64;
    let mut torsion_worst = 0.0f64;
    for name in CATALOG {
        let m = manifold(name);
        for chart in m.chart_names() {
            let mut rng = rng_for(SEED, &format!("acc.c03.{name}.{chart}"));
            let out = check_cd_axioms(
                m.bilinear.get(&chart).unwrap(),
                m.atlas.chart(&chart).unwrap(),
                &[],
                &[],
                50,
                m.sbox(),
                &mut rng,
            )
            .unwrap();
            axiom_worst = axiom_worst
                .max(out.tensorial.max_residual)
                .max(out.leibniz.max_residual)
                .max(out.bilinear.max_residual);
            torsion_worst = torsion_worst.max(out.torsion.max_residual);
        }
    }
    let pass = axiom_worst <= 1e-8 && torsion_worst <= 1e-12;
    verdict(
        "03 covariant-derivative axioms",
        pass,
        &format!(
            "tensorial/Leibniz/bilinear residual {axiom_worst:.3e} <= 1e-8; \
             torsion residual {torsion_worst:.3e} <= 1e-12 (50 samples each)"
        ),
    );
}

#[test]
fn c04_nabla_equals_k_compose_t() {
    let mut worst = 0.0f64;
    for name in CATALOG {
        let m = manifold(name);
        for chart in m.chart_names() {
            let chart_ref = m.atlas.chart(&chart).unwrap();
            let k = ConnectionMap::new(m.bilinear.get(&chart).unwrap().clone());
            let fields = polynomial_test_fields(chart_ref.dim);
            let mut rng = rng_for(SEED, &format!("acc.c04.{name}.{chart}"));
            let mut total = CheckOutcome::default();
            let per_pair = (100usize).div_ceil(fields.len() * fields.len());
            for xf in &fields {
                for yf in &fields {
                    let out = check_nabla_equals_k_of_t(
                        &k,
                        xf,
                        yf,
                        chart_ref,
                        per_pair,
                        m.sbox(),
                        &mut rng,
                    )
                    .unwrap();
                    total.merge(&out);
                }
            }
            assert!(total.samples >= 100);
            worst = worst.max(total.max_residual);
        }
    }
    verdict(
        "04 theorem nabla = K o T",
        worst <= 1e-9,
        &format!("two code paths agree within {worst:.3e} <= 1e-9 on >=100 samples per manifold"),
    );
}

#[test]
fn c05_exact_coordinate_identities() {
    let mut worst = 0.0f64;
    let mut names: Vec<&str> = Vec::new();
    for name in CATALOG {
        let m = manifold(name);
        for chart in m.chart_names() {
            let mut rng = rng_for(SEED, &format!("acc.c05.{name}.{chart}"));
            let results = exact_identity_checks(
                m.bilinear.get(&chart).unwrap(),
                m.atlas.chart(&chart).unwrap(),
                500,
                m.sbox(),
                m.vbox(),
                &mut rng,
            )
            .unwrap();
            assert_eq!(results.len(), 12);
            for (id, out) in results {
                if out.max_residual > worst {
                    worst = out.max_residual;
                }
                if !names.contains(&id) {
                    names.push(id);
                }
            }
        }
    }
    verdict(
        "05 exact coordinate identities",
        worst <= 1e-15,
        &format!(
            "{} identities x 500 vectors per chart, worst residual {worst:.3e} <= 1e-15",
            names.len()
        ),
    );
}

#[test]
fn c06_chart_transformation_law() {
    let m = manifold("sphere2");
    let mut law_worst = 0.0f64;
    let mut rt_worst = 0.0f64;
    for t in &m.atlas.transitions {
        let from = m.atlas.chart(&t.from).unwrap();
        let to = m.atlas.chart(&t.to).unwrap();
        let mut rng = rng_for(SEED, &format!("acc.c06.{}__{}", t.from, t.to));
        let law = check_transformation_law(
            m.bilinear.get(&t.from).unwrap(),
            m.bilinear.get(&t.to).unwrap(),
            t,
            from,
            to,
            100,
            m.sbox(),
            m.vbox(),
            &mut rng,
        )
        .unwrap();
        law_worst = law_worst.max(law.max_residual);
        let rt = check_pushforward_roundtrip(
            m.spray.get(&t.from).unwrap(),
            t,
            from,
            to,
            100,
            m.sbox(),
            m.vbox(),
            &mut rng,
        )
        .unwrap();
        rt_worst = rt_worst.max(rt.max_residual);
    }
    let pass = law_worst <= 1e-8 && rt_worst <= 1e-8;
    verdict(
        "06 chart transformation law",
        pass,
        &format!(
            "stereographic overlap residual {law_worst:.3e} <= 1e-8 (100 samples); \
             pushforward round-trip {rt_worst:.3e} <= 1e-8"
        ),
    );
}

#[test]
fn c07_conjugacy_suite() {
    // Constructed-conjugate pairs pass on every catalog manifold.
    let mut conj_worst = 0.0f64;
    let mut lin_worst = 0.0f64;
    for name in CATALOG {
        let m = manifold(name);
        let chart = &m.atlas.charts[0];
        let diffeo = m.diffeo.clone();
        let (mu, mu_inv) = match &diffeo {
            Some(d) => (d.mu.clone(), d.mu_inverse.clone().unwrap()),
            None => {
                let names = spraygeo::expr::coord_names("x", chart.dim);
                let fwd: Vec<String> = (0..chart.dim).map(|i| format!("2*x{i}")).collect();
                let bwd: Vec<String> = (0..chart.dim).map(|i| format!("x{i}/2")).collect();
                (
                    ExprMap::parse(&format!("[{}]", fwd.join(", ")), &names).unwrap(),
                    ExprMap::parse(&format!("[{}]", bwd.join(", ")), &names).unwrap(),
                )
            }
        };
        let t = spraygeo::atlas::Transition {
            from: chart.name.clone(),
            to: chart.name.clone(),
            map: mu.clone(),
            inverse: Some(mu_inv),
        };
        let pushed =
            spraygeo::spray::pushforward_spray(m.spray.get(&chart.name).unwrap(), &t).unwrap();
        let b2 = BilinearMap::Polarized(Box::new(pushed));
        let mut rng = rng_for(SEED, &format!("acc.c07.{name}"));
        let conj = check_conjugacy(
            m.bilinear.get(&chart.name).unwrap(),
            &b2,
            &mu,
            chart,
            None,
            100,
            m.sbox(),
            m.vbox(),
            &mut rng,
        )
        .unwrap();
        conj_worst = conj_worst.max(conj.max_residual);
        let lin = check_t2mu_linearity(
            m.bilinear.get(&chart.name).unwrap(),
            &b2,
            &mu,
            chart,
            None,
            100,
            m.sbox(),
            m.vbox(),
            &mut rng,
        )
        .unwrap();
        lin_worst = lin_worst.max(lin.linearity.max_residual);
    }

    // Negative control: mu(x) = x² with flat sprays on both sides.
    let m = manifold("poly1");
    let chart = &m.atlas.charts[0];
    let flat = BilinearMap::flat(1);
    let mu = componentwise_square(1);
    let mut rng = rng_for(SEED, "acc.c07.witness");
    let witness = check_conjugacy(
        &flat,
        &flat,
        &mu,
        chart,
        None,
        100,
        m.sbox(),
        m.vbox(),
        &mut rng,
    )
    .unwrap();

    let pass = conj_worst <= 1e-9 && lin_worst <= 1e-8 && witness.max_residual >= 1e-3;
    verdict(
        "07 conjugacy suite",
        pass,
        &format!(
            "constructed pairs {conj_worst:.3e} <= 1e-9; T2mu linearity {lin_worst:.3e} <= 1e-8; \
             non-conjugate witness {:.3e} >= 1e-3",
            witness.max_residual
        ),
    );
}

#[test]
fn c08_splitting_connection_roundtrips() {
    let mut intensional_worst = 0.0f64;
    let mut blackbox_worst = 0.0f64;
    for name in CATALOG {
        let m = manifold(name);
        for chart in m.chart_names() {
            let b = m.bilinear.get(&chart).unwrap();
            let chart_ref = m.atlas.chart(&chart).unwrap();
            let split = ConnectionSplitting::new(b.clone());
            let k = connection_from_splitting(&split);
            let mut rng = rng_for(SEED, &format!("acc.c08.{name}.{chart}"));
            let oracle: Arc<dyn SplittingOracle> = Arc::new(ConnectionSplitting::new(b.clone()));
            let k_bb =
                connection_from_splitting_oracle(oracle, 25, 1e-9, m.sbox(), m.vbox(), &mut rng)
                    .unwrap();
            for _ in 0..100 {
                let x = spraygeo::atlas::sample_in_chart(&mut rng, m.sbox(), chart_ref, 10_000)
                    .unwrap();
                let u = sample_point(&mut rng, m.vbox(), chart_ref.dim);
                let v = sample_point(&mut rng, m.vbox(), chart_ref.dim);
                let want = b.eval(&x, &u, &v).unwrap();
                let got = k.b.eval(&x, &u, &v).unwrap();
                intensional_worst = intensional_worst.max(sup_dist(&got, &want));
                let got_bb = k_bb.b.eval(&x, &u, &v).unwrap();
                blackbox_worst = blackbox_worst.max(sup_dist(&got_bb, &want));
            }
        }
    }
    let pass = intensional_worst == 0.0 && blackbox_worst <= 1e-12;
    verdict(
        "08 spray <-> splitting <-> connection map round-trips",
        pass,
        &format!(
            "intensional round-trip residual {intensional_worst:.3e} (exactly 0 required); \
             black-box recovery {blackbox_worst:.3e} <= 1e-12"
        ),
    );
}

#[test]
fn c09_second_order_connection_roundtrip() {
    let mut identity_worst = 0.0f64;
    let mut roundtrip_worst = 0.0f64;
    for name in CATALOG {
        let m = manifold(name);
        for chart in m.chart_names() {
            let b = m.bilinear.get(&chart).unwrap();
            let chart_ref = m.atlas.chart(&chart).unwrap();
            let induced = induce_second_order_connection(&ConnectionSplitting::new(b.clone()));
            let mut rng = rng_for(SEED, &format!("acc.c09.{name}.{chart}"));

            for _ in 0..200 {
                let x = spraygeo::atlas::sample_in_chart(&mut rng, m.sbox(), chart_ref, 10_000)
                    .unwrap();
                let n = chart_ref.dim;
                let t = SecondOrderTangent {
                    base: SecondOrderTriv::new(
                        x,
                        sample_point(&mut rng, m.vbox(), n),
                        sample_point(&mut rng, m.vbox(), n),
                    )
                    .unwrap(),
                    dx: vec![0.0; n],
                    dh: sample_point(&mut rng, m.vbox(), n),
                    dk: sample_point(&mut rng, m.vbox(), n),
                };
                let (zx, zh, zk) = induced.apply(&t).unwrap();
                identity_worst = identity_worst
                    .max(spraygeo::sample::sup_norm(&zx))
                    .max(sup_dist(&zh, &t.dh))
                    .max(sup_dist(&zk, &t.dk));
            }

            let oracle: Arc<dyn SecondOrderSplittingOracle> = Arc::new(induced);
            let reduced =
                reduce_to_first_order_connection(oracle, 25, 1e-9, m.sbox(), m.vbox(), &mut rng)
                    .unwrap();
            for _ in 0..100 {
                let x = spraygeo::atlas::sample_in_chart(&mut rng, m.sbox(), chart_ref, 10_000)
                    .unwrap();
                let u = sample_point(&mut rng, m.vbox(), chart_ref.dim);
                let v = sample_point(&mut rng, m.vbox(), chart_ref.dim);
                let got = reduced.b.eval(&x, &u, &v).unwrap();
                let want = b.eval(&x, &u, &v).unwrap();
                roundtrip_worst = roundtrip_worst.max(sup_dist(&got, &want));
            }
        }
    }
    let pass = roundtrip_worst <= 1e-12 && identity_worst <= 1e-12;
    verdict(
        "09 induced second-order connection round-trip",
        pass,
        &format!(
            "induce-then-reduce residual {roundtrip_worst:.3e} <= 1e-12; \
             splitting identity on 200 samples {identity_worst:.3e} <= 1e-12"
        ),
    );
}

#[test]
fn c10_geodesics() {
    let opts = IntegrateOpts::default();

    // Flat: RK4 reproduces straight lines to rounding.
    let flat = manifold("flat2");
    let traj = geodesic::integrate(
        &flat.atlas,
        &flat.bilinear,
        "main",
        &[0.1, -0.2],
        &[0.7, 0.4],
        1.0,
        1e-3,
        opts,
    )
    .unwrap();
    let end = traj.end();
    let flat_err = sup_dist(&end.x, &[0.8, 0.2]);

    // Sphere: great-circle deviation at t = 1 with h = 1e-3, within 2 s.
    let sphere = manifold("sphere2");
    let start = Instant::now();
    let traj = geodesic::integrate(
        &sphere.atlas,
        &sphere.bilinear,
        "north",
        &[0.0, 0.0],
        &[1.0, 0.0],
        1.0,
        1e-3,
        opts,
    )
    .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let sphere_dev = oracle_deviation(OracleKind::GreatCircle, &traj)
        .unwrap()
        .max_residual;

    // Energy drift and its h^4 scaling.
    let metrics = sphere.metrics.as_ref().unwrap();
    let drift = energy_monitor(metrics, &traj).unwrap().max_residual;
    let mut drifts = Vec::new();
    for h in [1e-2, 5e-3, 2.5e-3] {
        let t = geodesic::integrate(
            &sphere.atlas,
            &sphere.bilinear,
            "north",
            &[0.0, 0.0],
            &[1.0, 0.0],
            1.0,
            h,
            opts,
        )
        .unwrap();
        drifts.push(energy_monitor(metrics, &t).unwrap().max_residual);
    }
    let scaling_ok = drifts
        .windows(2)
        .all(|w| (w[0] / w[1] - 16.0).abs() / 16.0 <= 0.2);

    // Reparametrization and time reversal on the sphere.
    let reparam = check_homogeneity_reparam(
        &sphere.atlas,
        &sphere.bilinear,
        "north",
        &[0.0, 0.0],
        &[1.0, 0.0],
        2.0,
        0.5,
        1e-3,
        opts,
    )
    .unwrap()
    .max_residual;
    let reversal = check_time_reversal(
        &sphere.atlas,
        &sphere.bilinear,
        "north",
        &[0.0, 0.0],
        &[1.0, 0.0],
        1.0,
        1e-3,
        opts,
    )
    .unwrap()
    .max_residual;

    let pass = flat_err <= 1e-12
        && sphere_dev <= 1e-6
        && elapsed <= 2.0
        && drift <= 1e-8
        && scaling_ok
        && reparam <= 1e-7
        && reversal <= 1e-6;
    verdict(
        "10 geodesics",
        pass,
        &format!(
            "flat endpoint {flat_err:.3e} <= 1e-12; great-circle deviation {sphere_dev:.3e} <= 1e-6 \
             in {elapsed:.2}s <= 2s; energy drift {drift:.3e} <= 1e-8 with drifts \
             {:.2e}/{:.2e}/{:.2e} scaling x16 +/- 20%; reparam {reparam:.3e} <= 1e-7; \
             reversal {reversal:.3e} <= 1e-6",
            drifts[0], drifts[1], drifts[2]
        ),
    );
}

#[test]
fn c11_truncation_stability() {
    let def = load_catalog("loop8").unwrap();
    let hi = def.instantiate_at_level(2).unwrap();
    let lo = def.instantiate_at_level(1).unwrap();
    let d_lo = lo.dim();
    let mut rng = rng_for(SEED, "acc.c11");

    // Connection-side agreement on shared coordinates.
    let b_hi = hi.bilinear.get("main").unwrap();
    let b_lo = lo.bilinear.get("main").unwrap();
    let mut conn_worst = 0.0f64;
    for _ in 0..200 {
        let x = sample_point(&mut rng, hi.sbox(), hi.dim());
        let u = sample_point(&mut rng, hi.vbox(), hi.dim());
        let v = sample_point(&mut rng, hi.vbox(), hi.dim());
        let w = sample_point(&mut rng, hi.vbox(), hi.dim());
        let full = b_hi.eval(&x, &u, &v).unwrap();
        let low = b_lo.eval(&x[..d_lo], &u[..d_lo], &v[..d_lo]).unwrap();
        let k_full: Vec<f64> = w.iter().zip(&full).map(|(w, b)| w - b).collect();
        let k_low: Vec<f64> = w[..d_lo].iter().zip(&low).map(|(w, b)| w - b).collect();
        conn_worst = conn_worst
            .max(sup_dist(&full[..d_lo], &low))
            .max(sup_dist(&k_full[..d_lo], &k_low));
    }

    // Geodesic agreement on shared coordinates.
    let opts = IntegrateOpts::default();
    let x0 = sample_point(&mut rng, hi.sbox(), hi.dim());
    let v0 = sample_point(&mut rng, hi.vbox(), hi.dim());
    let t_hi = geodesic::integrate(&hi.atlas, &hi.bilinear, "main", &x0, &v0, 1.0, 1e-3, opts)
        .unwrap();
    let t_lo = geodesic::integrate(
        &lo.atlas,
        &lo.bilinear,
        "main",
        &x0[..d_lo],
        &v0[..d_lo],
        1.0,
        1e-3,
        opts,
    )
    .unwrap();
    let mut geo_worst = 0.0f64;
    for (a, b) in t_hi.samples.iter().zip(t_lo.samples.iter()) {
        geo_worst = geo_worst
            .max(sup_dist(&a.x[..d_lo], &b.x))
            .max(sup_dist(&a.v[..d_lo], &b.v));
    }

    // The connection suite passes at both levels.
    let mut levels_pass = true;
    for m in [&lo, &hi] {
        let report = spraygeo::suite::run_suite(
            m,
            spraygeo::suite::Suite::Connection,
            &spraygeo::suite::SuiteOptions::default(),
        );
        levels_pass &= report.overall_pass;
    }

    let pass = conn_worst <= 1e-8 && geo_worst <= 1e-8 && levels_pass;
    verdict(
        "11 truncation stability",
        pass,
        &format!(
            "levels 4/8 agreement: connection {conn_worst:.3e} <= 1e-8, geodesic {geo_worst:.3e} \
             <= 1e-8; connection suite passes at both levels: {levels_pass}"
        ),
    );
}

#[test]
fn c12_report_determinism() {
    let exe = env!("CARGO_BIN_EXE_spraygeo");
    let dir = std::env::temp_dir();
    let r1 = dir.join("spraygeo_acc_c12_a.json");
    let r2 = dir.join("spraygeo_acc_c12_b.json");
    for path in [&r1, &r2] {
        let status = std::process::Command::new(exe)
            .args([
                "verify",
                "--manifold",
                "sphere2",
                "--suite",
                "all",
                "--seed",
                "42",
                "--report",
                path.to_str().unwrap(),
            ])
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "verify run failed");
    }
    let strip = |text: &str| -> String {
        text.lines()
            .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = strip(&std::fs::read_to_string(&r1).unwrap());
    let b = strip(&std::fs::read_to_string(&r2).unwrap());
    let identical = a == b;
    let _ = std::fs::remove_file(&r1);
    let _ = std::fs::remove_file(&r2);
    verdict(
        "12 report determinism",
        identical,
        "two seed-42 runs of `verify --suite all` on sphere2 are byte-identical modulo timestamp",
    );
}

#[test]
fn dtv_blocks_are_validated() {
    // Companion sanity check used by several criteria above.
    assert!(DoubleTangentVector::new(vec![0.0], vec![0.0], vec![0.0], vec![]).is_err());
}
