//! Library tour on the round sphere: extract the bilinear map, apply the
//! connection calculus at a point, integrate a geodesic, and run one suite.
//!
//! Run with: cargo run -p spraygeo --example sphere_tour

use spraygeo::atlas::DoubleTangentVector;
use spraygeo::connection::{projectors, ConnectionMap, ConnectionSplitting};
use spraygeo::geodesic::{self, IntegrateOpts};
use spraygeo::manifold::load_catalog;
use spraygeo::suite::{run_suite, Suite, SuiteOptions};

fn main() -> spraygeo::Result<()> {
    let m = load_catalog("sphere2")?.instantiate()?;
    let b = m.bilinear.get("north")?;

    // The bilinear map at a point, through the connection calculus.
    let x = vec![0.3, 0.4];
    let xi = DoubleTangentVector::new(x.clone(), vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0])?;
    let k = ConnectionMap::new(b.clone());
    let (_, kv) = k.apply(&xi)?;
    println!("K(x, e1, e2, 0) = {kv:?}");
    let c = ConnectionSplitting::new(b.clone());
    let (vp, hp) = projectors(&c, &xi)?;
    println!("Vp w-block = {:?}, Hp w-block = {:?}", vp.w, hp.w);

    // A geodesic from the chart origin; it crosses into the south chart.
    let traj = geodesic::integrate(
        &m.atlas,
        &m.bilinear,
        "north",
        &[0.0, 0.0],
        &[1.0, 0.0],
        2.4,
        1e-3,
        IntegrateOpts::default(),
    )?;
    let end = traj.end();
    println!(
        "geodesic end: chart `{}`, x = {:?} after {} switches",
        end.chart,
        end.x,
        traj.switches.len()
    );

    // One full verification pass.
    let report = run_suite(&m, Suite::Spray, &SuiteOptions::default());
    println!(
        "spray suite: {} ({} checks)",
        if report.overall_pass { "pass" } else { "FAIL" },
        report.checks.len()
    );
    Ok(())
}
