//! End-to-end runs of the `graphanon` binary.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphanon"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json_lines(o: &Output) -> Vec<serde_json::Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn fixtures_and_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(&["fixtures", "--out", "fx"], d);
    assert!(o.status.success(), "{o:?}");
    for name in ["fig3a", "fig3b", "fig3c", "fig4"] {
        assert!(d.join(format!("fx/{name}.el")).exists());
        let text = std::fs::read_to_string(d.join(format!("fx/{name}.expected.json"))).unwrap();
        let reports: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
        assert!(!reports.is_empty());
    }

    let o = run(&["check", "--property", "k-symmetry", "--k", "2", "fx/fig3a.el"], d);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_lines(&o)[0]["holds"], true);

    let o = run(&["check", "--property", "kl-anonymity", "--k", "2", "--l", "2", "fx/fig3a.el"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(json_lines(&o)[0]["witness"].is_object());

    let o = run(&["check", "--k", "2", "--l", "1", "fx/fig3b.el"], d);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_lines(&o).len(), 6);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["check", "--no-such-flag"][..],
        &["check", "--property", "k-nothing", "--k", "2", "x.el"],
        &["anonymize", "--method", "shuffle", "a", "b"],
        &["oracle"],
        &["frobnicate"],
    ] {
        let o = run(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    // a (k,l) property without --l
    std::fs::write(dir.path().join("g.el"), "3\n0 1\n").unwrap();
    let o = run(&["check", "--property", "kl-anonymity", "--k", "2", "g.el"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generate_inject_attack_anonymize() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(&["generate", "--kind", "er", "--n", "30", "--density", "0.2", "--count", "2", "--seed", "5", "--out", "g"], d);
    assert!(o.status.success(), "{o:?}");
    let manifest: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(d.join("g/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.len(), 2);
    assert_eq!(manifest[0]["spec"]["kind"], "er");

    let o = run(&["generate", "--kind", "ba", "--m", "2", "--seed-order", "5", "--growth", "10", "--out", "ba"], d);
    assert!(o.status.success(), "{o:?}");
    let ba = std::fs::read_to_string(d.join("ba/graph-0000.el")).unwrap();
    assert_eq!(ba.lines().next(), Some("15"));

    let o = run(&["inject", "g/graph-0000.el", "--ell", "4", "--seed", "1", "--out", "env.json", "--extended", "plus.el"], d);
    assert!(o.status.success(), "{o:?}");
    assert!(d.join("plus.el").exists());

    let o = run(&["attack", "env.json", "--method", "pseudonym-only", "--seed", "2", "--published", "pub.el"], d);
    assert!(o.status.success(), "{o:?}");
    let v = &json_lines(&o)[0];
    assert_eq!(v["success_rate"], "1/1");
    assert!(d.join("pub.el").exists());

    let o = run(&["attack", "env.json", "--method", "kmatch", "--k", "3", "--seed", "2"], d);
    assert!(o.status.success(), "{o:?}");
    let v = &json_lines(&o)[0];
    assert!(v["success"].as_f64().unwrap() <= 1.0 / 3.0 + 1e-9);

    let o = run(&["anonymize", "--method", "kmatch", "--k", "4", "--seed", "3", "g/graph-0001.el", "out.el", "--vat", "vat.json"], d);
    assert!(o.status.success(), "{o:?}");
    let v = &json_lines(&o)[0];
    assert_eq!(v["conditions_hold"], true);
    assert_eq!(v["n_out"], 32);
    let vat: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("vat.json")).unwrap()).unwrap();
    assert_eq!(vat["k"], 4);
    let o = run(&["check", "--property", "k-symmetry", "--k", "4", "out.el"], d);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn oracle_outputs_exact_fractions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(&["fixtures", "--out", "fx"], d).status.success());
    let o = run(&["oracle", "--max-attack", "fx/fig3c.el", "--ell", "2", "--model", "isomorphic"], d);
    assert!(o.status.success(), "{o:?}");
    let v = &json_lines(&o)[0];
    assert_eq!(v["probability"], "3/8");
    assert_eq!(v["decimal"], 0.375);

    assert!(run(&["generate", "--kind", "er", "--n", "7", "--density", "0.4", "--out", "g"], d).status.success());
    assert!(run(&["inject", "g/graph-0000.el", "--ell", "2", "--victims", "2", "--out", "env.json"], d).status.success());
    let o = run(&["oracle", "--bundle", "env.json", "--method", "kmatch", "--k", "3"], d);
    assert!(o.status.success(), "{o:?}");
    let lines = json_lines(&o);
    assert_eq!(lines.len(), 2);
    for l in lines {
        let p = l["probability"].as_str().unwrap();
        let (a, b) = p.split_once('/').unwrap();
        let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        assert!(a / b <= 1.0 / 3.0 + 1e-12, "{p}");
    }
}

#[test]
fn experiment_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = r#"{"grids":[{"kind":"er","n":20,"densities":[0.3],"count":1}],"ell":{"fixed":3},"ks":[2],
        "methods":["pseudonym-only","kmatch"],"master_seed":3,"output":"res.csv","threads":1}"#;
    std::fs::write(d.join("c.json"), config).unwrap();
    let o = run(&["experiment", "--config", "c.json"], d);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(d.join("res.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(d.join("res.csv.summary.json").exists());

    let o = run(&["experiment", "--paper-scale", "--dry-run"], d);
    assert!(o.status.success());
    let cfg: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cfg["grids"][0]["count"], 10000);
    assert_eq!(cfg["grids"][0]["densities"].as_array().unwrap().len(), 19);
}
