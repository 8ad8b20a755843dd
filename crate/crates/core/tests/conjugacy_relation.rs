//! Conjugacy of connection maps is an equivalence relation on catalog data:
//! reflexive under the identity, symmetric under the inverse diffeomorphism,
//! and transitive under composition, each verified by residual.

use spraygeo::atlas::Transition;
use spraygeo::expr::{coord_names, ExprMap};
use spraygeo::manifold::load_catalog;
use spraygeo::sample::rng_for;
use spraygeo::second_order::check_conjugacy;
use spraygeo::spray::{pushforward_spray, BilinearMap};

fn map1(src: &str) -> ExprMap {
    ExprMap::parse(src, &coord_names("x", 1)).unwrap()
}

fn transition(map: &str, inverse: &str) -> Transition {
    Transition {
        from: "main".into(),
        to: "main".into(),
        map: map1(map),
        inverse: Some(map1(inverse)),
    }
}

#[test]
fn conjugacy_is_an_equivalence_relation() {
    let m = load_catalog("poly1").unwrap().instantiate().unwrap();
    let chart = m.atlas.chart("main").unwrap();
    let s1 = m.spray.get("main").unwrap();
    let b1 = m.bilinear.get("main").unwrap();
    let tol = 1e-8;

    // Reflexive: K ~ K under the identity.
    let identity = map1("x0");
    let mut rng = rng_for(7, "equiv.reflexive");
    let out = check_conjugacy(
        b1, b1, &identity, chart, None, 100, m.sbox(), m.vbox(), &mut rng,
    )
    .unwrap();
    assert!(out.max_residual <= tol, "reflexive: {}", out.max_residual);

    // Symmetric: K1 ~ K2 under mu implies K2 ~ K1 under mu^{-1}.
    let mu = transition("2*x0", "x0/2");
    let s2 = pushforward_spray(s1, &mu).unwrap();
    let b2 = BilinearMap::Polarized(Box::new(s2.clone()));
    let mut rng = rng_for(7, "equiv.forward");
    let fwd = check_conjugacy(
        b1,
        &b2,
        &mu.map,
        chart,
        None,
        100,
        m.sbox(),
        m.vbox(),
        &mut rng,
    )
    .unwrap();
    assert!(fwd.max_residual <= tol, "forward: {}", fwd.max_residual);
    let mu_inv = map1("x0/2");
    let mut rng = rng_for(7, "equiv.symmetric");
    let bwd = check_conjugacy(
        &b2,
        b1,
        &mu_inv,
        chart,
        None,
        100,
        m.sbox(),
        m.vbox(),
        &mut rng,
    )
    .unwrap();
    assert!(bwd.max_residual <= tol, "symmetric: {}", bwd.max_residual);

    // Transitive: pushing forward again along nu, K1 ~ K3 under nu . mu.
    let nu = transition("x0/4", "4*x0");
    let s3 = pushforward_spray(&s2, &nu).unwrap();
    let b3 = BilinearMap::Polarized(Box::new(s3));
    let composed = map1("x0/2"); // (nu . mu)(x) = (2x)/4
    let mut rng = rng_for(7, "equiv.transitive");
    let out = check_conjugacy(
        b1,
        &b3,
        &composed,
        chart,
        None,
        100,
        m.sbox(),
        m.vbox(),
        &mut rng,
    )
    .unwrap();
    assert!(out.max_residual <= tol, "transitive: {}", out.max_residual);
}

#[test]
fn covariant_derivative_vanishes_at_sphere_origin() {
    // Constant fields at the stereographic chart origin, where B(0;.,.) = 0.
    let m = load_catalog("sphere2").unwrap().instantiate().unwrap();
    let names = coord_names("x", 2);
    let e1 = ExprMap::parse("[1, 0]", &names).unwrap();
    let e2 = ExprMap::parse("[0, 1]", &names).unwrap();
    let out = spraygeo::connection::covariant_derivative(
        m.bilinear.get("north").unwrap(),
        &e1,
        &e2,
        m.atlas.chart("north").unwrap(),
        &[0.0, 0.0],
    )
    .unwrap();
    assert!(out.iter().all(|c| c.abs() < 1e-14), "{out:?}");
}
