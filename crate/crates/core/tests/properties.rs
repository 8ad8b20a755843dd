//! Property tests for the library invariants: truncation projections,
//! jet/finite-difference agreement, lift structure preservation, and the
//! algebra of polarization-extracted bilinear maps.

use proptest::prelude::*;
use spraygeo::atlas::{double_tangent_lift_unchecked, DoubleTangentVector};
use spraygeo::connection::{involution, ConnectionMap, ConnectionSplitting};
use spraygeo::diff::{dir_derivative, fd_oracle, second_dir_derivative, FdOrder};
use spraygeo::expr::{coord_names, stacked_names, ExprMap};
use spraygeo::jet::Jet2;
use spraygeo::manifold::load_catalog;
use spraygeo::sample::{rng_for, sup_dist, sup_norm};
use spraygeo::space::{ModelSpace, SeminormKind, Vector};
use spraygeo::spray::{homogeneity_residual, BilinearMap, SprayMap};

// ---- expression generators -------------------------------------------------

/// Random polynomial expression over the given inputs, as source text.
/// Coefficients and depth are kept small so finite differences stay clean.
fn poly_expr(inputs: Vec<String>, depth: u32) -> BoxedStrategy<String> {
    let consts = (-15..=15i32).prop_map(|c| format!("{:.1}", c as f64 / 10.0));
    let leaf = prop_oneof![
        consts,
        (0..inputs.len()).prop_map(move |i| inputs[i].clone()),
    ];
    leaf.prop_recursive(depth, 16, 2, |inner| {
        (
            inner.clone(),
            prop_oneof![Just("+"), Just("-"), Just("*")],
            inner,
        )
            .prop_map(|(a, op, b)| format!("({a} {op} {b})"))
    })
    .boxed()
}

fn poly_map(dim_in: usize, dim_out: usize, depth: u32) -> BoxedStrategy<ExprMap> {
    let names = coord_names("x", dim_in);
    prop::collection::vec(poly_expr(names.clone(), depth), dim_out)
        .prop_map(move |comps| {
            let src = format!("[{}]", comps.join(", "));
            ExprMap::parse(&src, &names).unwrap()
        })
        .boxed()
}

/// Random quadratic spray component: S2_i = sum of (a + b·x_m)·v_j·v_k terms.
fn quadratic_spray(dim: usize) -> BoxedStrategy<SprayMap> {
    let names = stacked_names(&[("x", dim), ("v", dim)]);
    let term = (
        0..dim,
        0..dim,
        0..dim,
        (-12..=12i32),
        (-12..=12i32),
    )
        .prop_map(move |(j, k, m, a, b)| {
            format!(
                "({:.1} + {:.1}*x{m})*v{j}*v{k}",
                a as f64 / 10.0,
                b as f64 / 10.0
            )
        });
    prop::collection::vec(prop::collection::vec(term, 1..4), dim)
        .prop_map(move |rows| {
            let comps: Vec<String> = rows
                .into_iter()
                .map(|terms| terms.join(" + "))
                .collect();
            let src = format!("[{}]", comps.join(", "));
            SprayMap::Expr(ExprMap::parse(&src, &names).unwrap())
        })
        .boxed()
}

fn small_coords(dim: usize) -> BoxedStrategy<Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).boxed()
}

// ---- model space -----------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_transitive(
        dims in prop::collection::vec(1usize..4, 1..4),
        seed in any::<u64>(),
    ) {
        // Build strictly increasing cumulative grades from block sizes.
        let mut grades = Vec::new();
        let mut total = 0;
        for d in dims {
            total += d;
            grades.push(total);
        }
        let levels = grades.len();
        let space = ModelSpace::new(grades.clone(), levels, SeminormKind::Sup).unwrap();
        let mut rng = rng_for(seed, "prop.space");
        let coords = spraygeo::sample::sample_point(
            &mut rng, spraygeo::sample::SampleBox::new(-2.0, 2.0), total);
        let x = Vector::new(coords).unwrap();
        for b in 1..=levels {
            for c in 1..=b {
                let via_b = space.project(&space.project(&x, levels, b).unwrap(), b, c).unwrap();
                let direct = space.project(&x, levels, c).unwrap();
                prop_assert_eq!(via_b.coords(), direct.coords());
            }
        }
        // Monotone in level.
        for k in 1..levels {
            let lo = space.seminorm(&x, k).unwrap();
            let hi = space.seminorm(&x, k + 1).unwrap();
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn seminorm_is_a_seminorm(
        a in prop::collection::vec(-3.0f64..3.0, 5),
        b in prop::collection::vec(-3.0f64..3.0, 5),
        s in -4.0f64..4.0,
    ) {
        let space = ModelSpace::new(vec![2, 5], 2, SeminormKind::Sup).unwrap();
        let xa = Vector::new(a.clone()).unwrap();
        let xb = Vector::new(b.clone()).unwrap();
        let sum = Vector::new(a.iter().zip(&b).map(|(p, q)| p + q).collect()).unwrap();
        let scaled = Vector::new(a.iter().map(|p| s * p).collect()).unwrap();
        for level in 1..=2 {
            let na = space.seminorm(&xa, level).unwrap();
            let nb = space.seminorm(&xb, level).unwrap();
            let nsum = space.seminorm(&sum, level).unwrap();
            let nscaled = space.seminorm(&scaled, level).unwrap();
            prop_assert!(nsum <= na + nb + 1e-15 * (1.0 + na + nb));
            prop_assert!((nscaled - s.abs() * na).abs() <= 1e-15 * (1.0 + na.abs()));
        }
    }
}

// ---- jets vs finite differences ---------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn jet_derivative_matches_fd_on_random_polynomials(
        f in poly_map(2, 2, 3),
        x in small_coords(2),
        h in small_coords(2),
    ) {
        let jet = dir_derivative(&f, &x, &h).unwrap();
        let fd = fd_oracle(&f, &x, &h, FdOrder::First, 1e-5).unwrap();
        let scale = 1.0 + sup_norm(&fd);
        prop_assert!(sup_dist(&jet, &fd) <= 1e-6 * scale,
            "jet {jet:?} vs fd {fd:?} for {}", f.source());
    }

    #[test]
    fn polarized_second_derivative_is_bitwise_symmetric(
        f in poly_map(3, 2, 3),
        x in small_coords(3),
        h1 in small_coords(3),
        h2 in small_coords(3),
    ) {
        let a = second_dir_derivative(&f, &x, &h1, &h2).unwrap();
        let b = second_dir_derivative(&f, &x, &h2, &h1).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn jet_chain_rule_on_polynomial_composition(
        f in poly_map(2, 2, 2),
        g in poly_map(2, 2, 2),
        x in small_coords(2),
        h in small_coords(2),
    ) {
        // Jet evaluation of g after f equals evaluating g over f's jets.
        let f_jets: Vec<Jet2<f64>> = spraygeo::diff::jet_along(&f, &x, &h).unwrap();
        let composed = g.eval(&f_jets).unwrap();
        // Reference: derivatives assembled from pieces.
        let f_x = f.eval::<f64>(&x).unwrap();
        let df_h = dir_derivative(&f, &x, &h).unwrap();
        let g_of_fx = g.eval::<f64>(&f_x).unwrap();
        let dg = dir_derivative(&g, &f_x, &df_h).unwrap();
        for (i, jet) in composed.iter().enumerate() {
            prop_assert!((jet.val - g_of_fx[i]).abs() <= 1e-12 * (1.0 + g_of_fx[i].abs()));
            prop_assert!((jet.d1 - dg[i]).abs() <= 1e-12 * (1.0 + dg[i].abs()));
        }
    }
}

// ---- lifts -------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn double_lift_preserves_verticality_and_symmetry(
        phi in poly_map(2, 2, 3),
        x in small_coords(2),
        u in small_coords(2),
        w in small_coords(2),
    ) {
        let vertical = DoubleTangentVector::new(
            x.clone(), u.clone(), vec![0.0; 2], w.clone()).unwrap();
        let out = double_tangent_lift_unchecked(&phi, &vertical).unwrap();
        prop_assert!(out.is_vertical());

        let symmetric = DoubleTangentVector::new(
            x.clone(), u.clone(), u.clone(), w.clone()).unwrap();
        let out = double_tangent_lift_unchecked(&phi, &symmetric).unwrap();
        prop_assert!(out.is_symmetric());
    }

    #[test]
    fn tangent_lift_is_fiberwise_linear(
        phi in poly_map(2, 2, 3),
        x in small_coords(2),
        v1 in small_coords(2),
        v2 in small_coords(2),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let d1 = dir_derivative(&phi, &x, &v1).unwrap();
        let d2 = dir_derivative(&phi, &x, &v2).unwrap();
        let combo: Vec<f64> = v1.iter().zip(&v2).map(|(p, q)| a * p + b * q).collect();
        let dc = dir_derivative(&phi, &x, &combo).unwrap();
        let expect: Vec<f64> = d1.iter().zip(&d2).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(sup_dist(&dc, &expect) <= 1e-12 * (1.0 + sup_norm(&expect)));
    }
}

// ---- sprays and connections ---------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polarization_recovers_quadratic_form(
        s2 in quadratic_spray(2),
        x in small_coords(2),
        v in small_coords(2),
        s in -2.0f64..2.0,
    ) {
        let b = BilinearMap::Polarized(Box::new(s2.clone()));
        let quad = b.eval(&x, &v, &v).unwrap();
        let direct = s2.eval(&x, &v).unwrap();
        prop_assert!(sup_dist(&quad, &direct) <= 1e-9 * (1.0 + sup_norm(&direct)));
        prop_assert!(homogeneity_residual(&s2, &x, &v, s).unwrap() <= 1e-9);
    }

    #[test]
    fn connection_map_is_involution_invariant(
        s2 in quadratic_spray(2),
        x in small_coords(2),
        u in small_coords(2),
        v in small_coords(2),
        w in small_coords(2),
    ) {
        let b = BilinearMap::Polarized(Box::new(s2));
        // Bitwise symmetry of the polarized map.
        prop_assert_eq!(b.eval(&x, &u, &v).unwrap(), b.eval(&x, &v, &u).unwrap());

        let k = ConnectionMap::new(b.clone());
        let xi = DoubleTangentVector::new(x.clone(), u, v, w).unwrap();
        let (_, k1) = k.apply(&xi).unwrap();
        let (_, k2) = k.apply(&involution(&xi)).unwrap();
        prop_assert_eq!(k1, k2);

        // Splitting is idempotent on its image, exactly.
        let c = ConnectionSplitting::new(b);
        let once = c.apply(&xi).unwrap();
        let twice = c.apply(&once).unwrap();
        prop_assert_eq!(once, twice);
    }
}

// ---- catalog expressions against the oracle -----------------------------------

#[test]
fn catalog_expression_maps_agree_with_fd_oracle() {
    for name in ["flat2", "sphere2", "hyperbolic2", "poly1", "loop8"] {
        let m = load_catalog(name).unwrap().instantiate().unwrap();
        let mut maps: Vec<ExprMap> = Vec::new();
        for chart in &m.atlas.charts {
            maps.push(chart.domain.clone());
        }
        for t in &m.atlas.transitions {
            maps.push(t.map.clone());
            if let Some(inv) = &t.inverse {
                maps.push(inv.clone());
            }
        }
        for s2 in m.spray.per_chart.values() {
            if let SprayMap::Expr(e) = s2 {
                maps.push(e.clone());
            }
        }
        for f in m.fields.values() {
            maps.extend(f.per_chart.values().cloned());
        }
        for s in m.scalars.values() {
            maps.extend(s.values().cloned());
        }

        let mut rng = rng_for(42, &format!("prop.catalog_fd.{name}"));
        for f in &maps {
            let dim = f.arity_in();
            let mut checked = 0;
            let mut tries = 0;
            while checked < 200 && tries < 4000 {
                tries += 1;
                let x = spraygeo::sample::sample_point(
                    &mut rng, m.sbox(), dim);
                let h = spraygeo::sample::sample_point(
                    &mut rng, m.vbox(), dim);
                let jet = match dir_derivative(f, &x, &h) {
                    Ok(j) => j,
                    Err(_) => continue,
                };
                let fd = match fd_oracle(f, &x, &h, FdOrder::First, 1e-5) {
                    Ok(d) => d,
                    Err(_) => continue,
                };
                let scale = 1.0 + sup_norm(&fd);
                assert!(
                    sup_dist(&jet, &fd) <= 1e-6 * scale,
                    "{name}: map `{}` jet vs fd mismatch at {x:?}",
                    f.source()
                );
                checked += 1;
            }
            assert!(checked >= 100, "{name}: too few valid samples for `{}`", f.source());
        }
    }
}
