//! CLI contract tests: exit codes, report files, CSV output, and the
//! conjugate command, all through the built binary.

use std::process::Command;

fn spraygeo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spraygeo"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("spraygeo_cli_{name}_{}", std::process::id()))
}

#[test]
fn verify_pass_exits_zero_and_writes_report() {
    let report = tmp("report.json");
    let out = spraygeo()
        .args([
            "verify",
            "--manifold",
            "poly1",
            "--suite",
            "spray",
            "--seed",
            "42",
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["suite"], "spray");
    assert_eq!(json["manifold"], "poly1");
    assert_eq!(json["overall_pass"], true);
    assert_eq!(json["environment"]["seed"], 42);
    assert!(json["checks"].as_array().unwrap().len() > 3);
    let _ = std::fs::remove_file(&report);
}

#[test]
fn verify_check_failure_exits_one_with_symmetry_first() {
    // Deliberately corrupted declared B: symmetry broken.
    let def = tmp("corrupt.toml");
    std::fs::write(
        &def,
        r#"
name = "corrupt"
[space]
grades = [2]
[sampling]
box = [-1.0, 1.0]
[[charts]]
name = "main"
domain = "1"
[spray.B]
main = "[u0*v0 + 0.001*u0*v1, u1*v1]"
"#,
    )
    .unwrap();
    let out = spraygeo()
        .args(["verify", "--manifold", def.to_str().unwrap(), "--suite", "all"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let first_fail = stdout.lines().find(|l| l.starts_with("FAIL")).unwrap();
    assert!(
        first_fail.contains("spray.symmetry"),
        "first failure was: {first_fail}"
    );
    let _ = std::fs::remove_file(&def);
}

#[test]
fn configuration_errors_exit_two() {
    let out = spraygeo()
        .args(["verify", "--manifold", "no-such-manifold", "--suite", "all"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let def = tmp("twosprays.toml");
    std::fs::write(
        &def,
        r#"
name = "bad"
[space]
grades = [1]
[sampling]
box = [-1.0, 1.0]
[[charts]]
name = "main"
domain = "1"
[spray.S2]
main = "[v0^2]"
[spray.metric]
main = "[[1]]"
"#,
    )
    .unwrap();
    let out = spraygeo()
        .args(["verify", "--manifold", def.to_str().unwrap(), "--suite", "all"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("exactly one of"), "stderr: {stderr}");
    let _ = std::fs::remove_file(&def);
}

#[test]
fn geodesic_csv_has_expected_columns() {
    let csv_path = tmp("traj.csv");
    let out = spraygeo()
        .args([
            "geodesic",
            "--manifold",
            "sphere2",
            "--x0",
            "0,0",
            "--v0",
            "1,0",
            "--t1",
            "0.2",
            "--step",
            "0.01",
            "--energy",
            "--output",
            csv_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,chart,x0,x1,v0,v1,energy");
    assert_eq!(lines.count(), 21);
    let _ = std::fs::remove_file(&csv_path);
}

#[test]
fn conjugate_flat_vs_default_on_poly1() {
    // Pushforward-constructed partner is conjugate.
    let out = spraygeo()
        .args([
            "conjugate",
            "--manifold",
            "poly1",
            "--mu",
            "2*x0",
            "--mu-inv",
            "x0/2",
            "--k1",
            "default",
            "--k2",
            "pushforward",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: conjugate"));

    // The named flat spray is not conjugate to the default under x -> 2x.
    let out = spraygeo()
        .args([
            "conjugate",
            "--manifold",
            "poly1",
            "--mu",
            "2*x0",
            "--mu-inv",
            "x0/2",
            "--k1",
            "default",
            "--k2",
            "flat",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("NOT conjugate"));
}

#[test]
fn derive_prints_connection_data() {
    let out = spraygeo()
        .args(["derive", "--manifold", "poly1", "--at", "0.5", "--u", "2", "--v", "3", "--w", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    // B(x; u, v) = u·v for poly1, so K = 10 − 6 = 4.
    assert!(stdout.contains("K(xi)  = [4.0]"), "stdout: {stdout}");
}

#[test]
fn truncation_suite_runs_from_cli() {
    let out = spraygeo()
        .args(["verify", "--manifold", "loop8", "--suite", "truncation", "--seed", "7"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("truncation.connection_agree.level1_2"));
    assert!(stdout.contains("truncation.geodesic_agree.level1_2"));
}

#[test]
fn catalog_directory_env_var_overrides_embedded_entries() {
    let dir = tmp("catalog_dir");
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(
        dir.join("flat2.toml"),
        r#"
name = "flat2-override"
[space]
grades = [1]
[sampling]
box = [-1.0, 1.0]
[[charts]]
name = "main"
domain = "1"
[spray.S2]
main = "[0]"
"#,
    )
    .unwrap();
    let out = spraygeo()
        .env("SPRAYGEO_CATALOG", dir.to_str().unwrap())
        .args(["verify", "--manifold", "flat2", "--suite", "spray"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("flat2-override"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_at_lower_level_via_flag() {
    let out = spraygeo()
        .args([
            "verify",
            "--manifold",
            "loop8",
            "--suite",
            "connection",
            "--level",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
