use std::path::Path;
use std::process::{Command, Output};

use clap::Parser;
use hodge_cli::output::{aggregate_of, data_lines};
use hodge_cli::{run_with_wedge, Cli};
use hodge_core::forms::wedge;
use hodge_core::skeleton::fixtures;
use hodge_core::{ComplexSkeleton, Form, Result};
use serde_json::Value;

fn hodge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hodge")).args(args).env_remove("HODGE_THREADS").output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

/// Wedge with an extra graded sign (−1)^{kl}; agrees with the real one
/// whenever either factor has even level.
fn graded_sign_wedge(a: &Form, b: &Form, s: &ComplexSkeleton) -> Result<Form> {
    let w = wedge(a, b, s)?;
    Ok(if a.level() * b.level() % 2 == 1 { w.scale(-1.0) } else { w })
}

#[test]
fn identities_pass_and_cover_the_families() {
    let o = hodge(&["identities", "--instances", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["passed"], true);
    assert!(v["report"]["families"].as_array().unwrap().len() >= 8);
}

#[test]
fn graded_sign_mutant_fails_at_the_product_rule() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ids.json");
    let cli = Cli::parse_from(["hodge", "--out", out.to_str().unwrap(), "identities", "--instances", "30"]);
    let code = run_with_wedge(cli, graded_sign_wedge);
    assert_eq!(code, std::process::ExitCode::from(1));
    let v: Value = serde_json::from_str(&read(&out)).unwrap();
    assert_eq!(v["report"]["first_failure"], "leibniz_rule");
    let averaging =
        v["report"]["families"].as_array().unwrap().iter().find(|f| f["name"] == "wedge_averaging").unwrap();
    assert_eq!(averaging["passed"], true);
}

#[test]
fn dirichlet_rows_and_aggregate() {
    let o = hodge(&["dirichlet", "--n", "80", "--seed", "3"]);
    assert!(o.status.success());
    let doc = stdout(&o);
    assert!(doc.starts_with("experiment,n,t,ell,seed,mode,value,analytic,abs_error,tuples,elapsed_ms,version\n"));
    let rows = data_lines(&doc);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.len(), 12);
        assert_eq!(r[1], "80");
        assert_eq!(r[5], "complete");
        assert_eq!(r[9], "3160");
        assert!(r[10].is_empty());
    }
    let agg = aggregate_of(&doc).unwrap();
    assert!((agg["analytic"].as_f64().unwrap() - 39.4784).abs() < 1e-4);
    assert_eq!(agg["cells"].as_array().unwrap().len(), 3);
    assert!(agg["error_vs_t"][0]["fit"]["slope"].is_f64());
}

#[test]
fn torus_analytic_value() {
    let o = hodge(&["dirichlet", "--preset", "torus", "--n", "40", "--t", "0.04", "--seed", "1"]);
    assert!(o.status.success());
    let doc = stdout(&o);
    let agg = aggregate_of(&doc).unwrap();
    assert!((agg["analytic"].as_f64().unwrap() - 1558.545).abs() < 1e-3);
    assert_eq!(data_lines(&doc)[0][5], "truncated");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["dirichlet", "--n", "120", "--t", "0.02"];
    let oa = hodge(&[&base[..], &["--threads", "1", "--out", a.to_str().unwrap()]].concat());
    let ob = Command::new(env!("CARGO_BIN_EXE_hodge"))
        .args(base)
        .args(["--out", b.to_str().unwrap()])
        .env("HODGE_THREADS", "3")
        .output()
        .unwrap();
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(read(&a), read(&b));
}

#[test]
fn configs_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"small","manifold":"circle","functions":[{"kind":"cos","freq":[1]}],"n":[30,60],"t":[0.05],"seeds":[1,2,3],"bootstrap":50}"#,
    )
    .unwrap();
    let o = hodge(&["dirichlet", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = stdout(&o);
    assert_eq!(data_lines(&doc).len(), 6);
    assert!(aggregate_of(&doc).unwrap()["std_vs_n"][0]["fit"]["ci95"].is_array());

    std::fs::write(&cfg, r#"{"experiment":"x","manifold":"circle","functions":[{"kind":"cos","freq":[1]}],"n":[30],"t":[2.0],"seeds":[1]}"#)
        .unwrap();
    assert_eq!(hodge(&["dirichlet", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hodge(&["dirichlet", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(hodge(&["dirichlet", "--preset", "arcs"]).status.code(), Some(2));
    assert_eq!(hodge(&["identities", "--threads", "0"]).status.code(), Some(2));
    let bad_env = Command::new(env!("CARGO_BIN_EXE_hodge"))
        .args(["identities", "--instances", "1"])
        .env("HODGE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn bias_table() {
    let o = hodge(&["bias"]);
    assert!(o.status.success());
    let doc = stdout(&o);
    let rows = data_lines(&doc);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[1].is_empty() && r[4].is_empty() && r[5] == "quadrature"));
    let slope = aggregate_of(&doc).unwrap()["error_vs_t_slope"].as_f64().unwrap();
    assert!((0.7..=1.3).contains(&slope), "{slope}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"flat","manifold":"circle","functions":[{"kind":"constant","value":2.0}],"t":[0.04,0.01]}"#,
    )
    .unwrap();
    let o = hodge(&["bias", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = stdout(&o);
    assert!(data_lines(&doc).iter().all(|r| r[8] == "0.0"));
    assert!(aggregate_of(&doc).unwrap()["error_vs_t_slope"].is_null());
}

#[test]
fn spectrum_of_a_stored_complex() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hollow.json");
    std::fs::write(&path, fixtures::hollow_triangle().to_json().unwrap()).unwrap();
    let coo = dir.path().join("coo");
    let o = hodge(&["spectrum", "--fixture", path.to_str().unwrap(), "--coo-dir", coo.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["levels"][0]["betti"], 1);
    assert_eq!(v["levels"][1]["betti"], 1);
    assert!(read(&coo.join("laplacian_1.coo")).starts_with("3 3 "));
}

#[test]
fn spectrum_of_sampled_clouds() {
    let o = hodge(&["spectrum"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["levels"][0]["betti"], 1);
    assert_eq!(v["levels"][0]["spectrum"]["dimension"], 300);

    let o = hodge(&["spectrum", "--preset", "arcs"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["levels"][0]["betti"], 2);

    let o = hodge(&["--config", "/dev/null", "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_fixture_is_the_hollow_triangle() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/hollow_triangle.json");
    let stored = ComplexSkeleton::from_json(&read(&path)).unwrap();
    assert_eq!(stored.to_json().unwrap(), fixtures::hollow_triangle().to_json().unwrap());
}
