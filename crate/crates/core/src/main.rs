//! Command-line front end: verification suites, pointwise derivations,
//! geodesic integration, and conjugacy experiments over the manifold
//! catalog or user definition files.

use clap::{Parser, Subcommand};
use spraygeo::atlas::{DoubleTangentVector, Transition};
use spraygeo::connection::{projectors, ConnectionMap, ConnectionSplitting};
use spraygeo::error::Error;
use spraygeo::expr::{coord_names, ExprMap};
use spraygeo::geodesic::{self, IntegrateOpts, Method};
use spraygeo::manifold::{catalog_names, resolve_manifold, Manifold};
use spraygeo::sample::rng_for;
use spraygeo::second_order::check_t2mu_linearity;
use spraygeo::spray::{pushforward_spray, BilinearMap};
use spraygeo::suite::{run_suite, Suite, SuiteOptions};
use std::collections::BTreeMap;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spraygeo",
    about = "Sprays, connection maps, and second-order tangent bundles in chart coordinates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a JSON report.
    Verify {
        /// Catalog name or path to a definition file.
        #[arg(long)]
        manifold: String,
        /// spray | connection | second-order | geodesic | truncation | all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// RNG seed (overrides the definition's seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Tolerance overrides, e.g. --tol spray.homogeneity=1e-8.
        #[arg(long = "tol", value_name = "GROUP=VALUE")]
        tol: Vec<String>,
        /// Sample-count overrides, e.g. --samples cd=100.
        #[arg(long = "samples", value_name = "GROUP=N")]
        samples: Vec<String>,
        /// Write the JSON report here (stdout summary is always printed).
        #[arg(long)]
        report: Option<String>,
        /// Truncation level to instantiate (defaults to the top level).
        #[arg(long)]
        level: Option<usize>,
    },
    /// Print B, K, and the projectors at a point.
    Derive {
        #[arg(long)]
        manifold: String,
        #[arg(long)]
        chart: Option<String>,
        /// Base point, comma-separated.
        #[arg(long)]
        at: String,
        /// Optional u/v/w blocks of a double tangent vector.
        #[arg(long)]
        u: Option<String>,
        #[arg(long)]
        v: Option<String>,
        #[arg(long)]
        w: Option<String>,
    },
    /// Integrate a geodesic and write a CSV trajectory.
    Geodesic {
        #[arg(long)]
        manifold: String,
        #[arg(long)]
        chart: Option<String>,
        #[arg(long)]
        x0: String,
        #[arg(long)]
        v0: String,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        step: f64,
        /// rk4 | euler.
        #[arg(long, default_value = "rk4")]
        method: String,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        output: Option<String>,
        /// Append a metric-energy column (requires a metric declaration).
        #[arg(long, default_value_t = false)]
        energy: bool,
    },
    /// Check conjugacy of two sprays under a diffeomorphism.
    Conjugate {
        #[arg(long)]
        manifold: String,
        /// Chart expression for mu, e.g. "[2*x0, 2*x1]".
        #[arg(long)]
        mu: String,
        /// Inverse expression (needed when --k2 pushforward).
        #[arg(long)]
        mu_inv: Option<String>,
        /// Spray name: "default" or a [sprays.<name>] entry.
        #[arg(long, default_value = "default")]
        k1: String,
        /// Spray name, or "pushforward" to construct the conjugate of k1.
        #[arg(long, default_value = "pushforward")]
        k2: String,
        #[arg(long)]
        chart: Option<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the embedded manifold catalog.
    Catalog,
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (e.g. `spraygeo verify | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn parse_coords(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid coordinate `{p}`")))
        })
        .collect()
}

fn load(manifold: &str, level: Option<usize>) -> Result<Manifold, Error> {
    let def = resolve_manifold(manifold)?;
    match level {
        Some(l) => def.instantiate_at_level(l),
        None => def.instantiate(),
    }
}

fn pick_chart(m: &Manifold, chart: &Option<String>) -> Result<String, Error> {
    match chart {
        Some(c) => {
            m.atlas.chart(c)?;
            Ok(c.clone())
        }
        None => Ok(m.atlas.charts[0].name.clone()),
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Verify {
            manifold,
            suite,
            seed,
            tol,
            samples,
            report,
            level,
        } => {
            let m = load(&manifold, level)?;
            let suite: Suite = suite.parse()?;
            let mut tol_overrides = BTreeMap::new();
            for spec in tol {
                let (key, value) = spec.split_once('=').ok_or_else(|| {
                    Error::Config(format!("--tol expects GROUP=VALUE, got `{spec}`"))
                })?;
                let parsed: f64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid tolerance `{value}`")))?;
                tol_overrides.insert(key.to_string(), parsed);
            }
            let mut sample_overrides = BTreeMap::new();
            for spec in samples {
                let (key, value) = spec.split_once('=').ok_or_else(|| {
                    Error::Config(format!("--samples expects GROUP=N, got `{spec}`"))
                })?;
                let parsed: usize = value
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid sample count `{value}`")))?;
                sample_overrides.insert(key.to_string(), parsed);
            }
            let opts = SuiteOptions {
                seed,
                tol_overrides,
                sample_overrides,
            };
            let rep = run_suite(&m, suite, &opts);
            for line in rep.summary_lines() {
                println!("{line}");
            }
            println!(
                "{}: suite `{}` on `{}` ({} checks)",
                if rep.overall_pass { "PASS" } else { "FAIL" },
                rep.suite,
                rep.manifold,
                rep.checks.len()
            );
            if let Some(path) = report {
                std::fs::write(&path, rep.to_json())?;
                println!("report written to {path}");
            }
            Ok(if rep.overall_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Command::Derive {
            manifold,
            chart,
            at,
            u,
            v,
            w,
        } => {
            let m = load(&manifold, None)?;
            let chart = pick_chart(&m, &chart)?;
            let x = parse_coords(&at)?;
            let dim = m.dim();
            if x.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "--at has {} coordinates, chart dimension is {dim}",
                    x.len()
                )));
            }
            m.atlas.chart(&chart)?.require_inside(&x)?;
            let b = m.bilinear.get(&chart)?;
            let tensor = b.tensor(&x)?;
            println!("manifold `{}`, chart `{chart}`, x = {x:?}", m.name);
            println!("bilinear map components B[k][i][j] = B(x; e_i, e_j)_k:");
            for (k, slice) in tensor.iter().enumerate() {
                for (i, row) in slice.iter().enumerate() {
                    for (j, val) in row.iter().enumerate() {
                        if val.abs() > 1e-14 {
                            println!("  B[{k}][{i}][{j}] = {val:+.12e}");
                        }
                    }
                }
            }
            let unit = |k: usize| {
                let mut e = vec![0.0; dim];
                e[k % dim] = 1.0;
                e
            };
            let ub = u.map(|s| parse_coords(&s)).transpose()?.unwrap_or_else(|| unit(0));
            let vb = v.map(|s| parse_coords(&s)).transpose()?.unwrap_or_else(|| unit(1));
            let wb = w
                .map(|s| parse_coords(&s))
                .transpose()?
                .unwrap_or_else(|| vec![0.0; dim]);
            let xi = DoubleTangentVector::new(x.clone(), ub, vb, wb)?;
            let k = ConnectionMap::new(b.clone());
            let (_, kval) = k.apply(&xi)?;
            println!("xi = (x, u={:?}, v={:?}, w={:?})", xi.u, xi.v, xi.w);
            println!("K(xi)  = {kval:?}");
            let c = ConnectionSplitting::new(b.clone());
            let split = c.apply(&xi)?;
            println!("c(xi)  = (x, u, 0, {:?})", split.w);
            let (vp, hp) = projectors(&c, &xi)?;
            println!("Vp(xi) = (x, u, {:?}, {:?})", vp.v, vp.w);
            println!("Hp(xi) = (x, u, {:?}, {:?})", hp.v, hp.w);
            Ok(ExitCode::SUCCESS)
        }

        Command::Geodesic {
            manifold,
            chart,
            x0,
            v0,
            t1,
            step,
            method,
            output,
            energy,
        } => {
            let m = load(&manifold, None)?;
            let chart = pick_chart(&m, &chart)?;
            let x0 = parse_coords(&x0)?;
            let v0 = parse_coords(&v0)?;
            let method: Method = method.parse()?;
            let opts = IntegrateOpts {
                method,
                ..IntegrateOpts::default()
            };
            let traj =
                geodesic::integrate(&m.atlas, &m.bilinear, &chart, &x0, &v0, t1, step, opts)?;
            let metrics = if energy {
                Some(m.metrics.as_ref().ok_or_else(|| {
                    Error::Config(format!(
                        "--energy requires a metric declaration on `{}`",
                        m.name
                    ))
                })?)
            } else {
                None
            };
            let csv = geodesic::trajectory_csv(&traj, metrics)?;
            match output {
                Some(path) => {
                    std::fs::write(&path, csv)?;
                    let end = traj.end();
                    println!(
                        "integrated to t = {} in chart `{}`; {} samples, {} switches; wrote {path}",
                        end.t,
                        end.chart,
                        traj.samples.len(),
                        traj.switches.len()
                    );
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Conjugate {
            manifold,
            mu,
            mu_inv,
            k1,
            k2,
            chart,
            samples,
            seed,
        } => {
            let m = load(&manifold, None)?;
            let chart_name = pick_chart(&m, &chart)?;
            let chart_ref = m.atlas.chart(&chart_name)?;
            let names = coord_names("x", m.dim());
            let mu_map = ExprMap::parse(&mu, &names)?;
            if mu_map.arity_out() != m.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "--mu has {} outputs, chart dimension is {}",
                    mu_map.arity_out(),
                    m.dim()
                )));
            }
            let mu_inv_map = mu_inv
                .as_deref()
                .map(|s| ExprMap::parse(s, &names))
                .transpose()?;

            let (_, b1) = m.named_spray(&k1)?;
            let b1 = b1.get(&chart_name)?.clone();
            let b2: BilinearMap = if k2 == "pushforward" {
                let inv = mu_inv_map.clone().ok_or_else(|| {
                    Error::Config("--k2 pushforward requires --mu-inv".to_string())
                })?;
                let t = Transition {
                    from: chart_name.clone(),
                    to: chart_name.clone(),
                    map: mu_map.clone(),
                    inverse: Some(inv),
                };
                let (s1, _) = m.named_spray(&k1)?;
                let pushed = pushforward_spray(s1.get(&chart_name)?, &t)?;
                BilinearMap::Polarized(Box::new(pushed))
            } else {
                let (_, bc) = m.named_spray(&k2)?;
                bc.get(&chart_name)?.clone()
            };

            let seed = seed.unwrap_or(m.seed);
            let mut rng = rng_for(seed, "cli.conjugate");
            let conj = spraygeo::second_order::check_conjugacy(
                &b1,
                &b2,
                &mu_map,
                chart_ref,
                None,
                samples,
                m.sbox(),
                m.vbox(),
                &mut rng,
            )?;
            let lin = check_t2mu_linearity(
                &b1,
                &b2,
                &mu_map,
                chart_ref,
                None,
                samples,
                m.sbox(),
                m.vbox(),
                &mut rng,
            )?;
            let tol = 1e-8;
            println!("conjugacy check on `{}`, chart `{chart_name}`:", m.name);
            println!("  Tmu . K1 = K2 . TTmu   max residual {:.3e}", conj.max_residual);
            println!(
                "  T2mu fiber linearity    max residual {:.3e}",
                lin.linearity.max_residual
            );
            println!(
                "  direct (Dmu h, Dmu k)   max residual {:.3e}",
                lin.direct_form.max_residual
            );
            let pass = conj.max_residual <= 1e-8 && lin.linearity.max_residual <= tol;
            println!("  verdict: {}", if pass { "conjugate" } else { "NOT conjugate" });
            Ok(if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }

        Command::Catalog => {
            for name in catalog_names() {
                let def = resolve_manifold(name)?;
                println!("{name}: {}", def.description);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
