use clap::Parser;
use orlicz_var::cli::{execute, parse_config, Cli, Outcome, EXIT_OK, EXIT_VALIDATION};
use std::fs;
use std::path::{Path, PathBuf};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Outcome {
    let mut argv = vec!["orlicz-var"];
    argv.extend_from_slice(args);
    let (c, o) = (config.to_str().unwrap(), out.to_str().unwrap());
    argv.extend_from_slice(&["--config", c, "--out", o]);
    execute(&Cli::try_parse_from(argv).unwrap())
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn shipped_configs_round_trip() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let c = parse_config(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parse_config(&c.to_text()).unwrap(), c, "{}", path.display());
    }
}

#[test]
fn manufactured_solve_succeeds() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &["solve", "--grid", "17x17"],
        &configs().join("manufactured.ov"),
        dir.path(),
    );
    assert_eq!(o.code, EXIT_OK, "{:?}", o.messages);
    let r = report(dir.path());
    assert_eq!(r["diagnostics"]["status"], "ok");
    assert_eq!(r["diagnostics"]["resolution"], serde_json::json!([17, 17]));
    assert!(r["result"]["error"]["l2"].as_f64().unwrap() < 1e-3, "{r}");
    let field = fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert_eq!(field.lines().next(), Some("17,17"));
    assert_eq!(field.lines().count(), 1 + 17);
}

#[test]
fn delta2_violation_exits_with_witness() {
    let dir = TempDir::new().unwrap();
    let o = run(&["verify"], &configs().join("delta2_violation.ov"), dir.path());
    assert_eq!(o.code, EXIT_VALIDATION);
    let row = o.stdout.lines().find(|l| l.contains("(Delta2) M")).unwrap();
    assert!(row.starts_with("FAIL") && row.contains(" at "), "{row}");
    assert_eq!(report(dir.path())["diagnostics"]["exit_code"], 1);
}

#[test]
fn nonmonotone_flux_fails_a3() {
    let dir = TempDir::new().unwrap();
    let o = run(&["verify"], &configs().join("nonmonotone.ov"), dir.path());
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(
        o.stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("(a3)")),
        "{}",
        o.stdout
    );
}

#[test]
fn conjugate_csv_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let o = run(&["conjugate"], &configs().join("model.ov"), dir.path());
    assert_eq!(o.code, EXIT_OK, "{:?}", o.messages);
    let csv = fs::read_to_string(dir.path().join("conjugate.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,phi_star"));
    // (t^p)* = (p-1) (s/p)^{p/(p-1)}, p = 2.5
    let p: f64 = 2.5;
    for line in lines {
        let (s, v) = line.split_once(',').unwrap();
        let (s, v): (f64, f64) = (s.parse().unwrap(), v.parse().unwrap());
        let exact = (p - 1.0) * (s / p).powf(p / (p - 1.0));
        assert!((v - exact).abs() <= 1e-8 * exact, "s={s}: {v} vs {exact}");
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("sub.ov");
    let text = fs::read_to_string(configs().join("model.ov"))
        .unwrap()
        .replace("power: 2.5", "power: 1.5");
    fs::write(&config, text).unwrap();
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        let o = run(&["embed", "--grid", "9x9", "--seed", "7"], &config, dir.path());
        assert_eq!(o.code, EXIT_OK, "{:?}", o.messages);
    }
    let read = |d: &TempDir| fs::read(d.path().join("embed.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let c = TempDir::new().unwrap();
    run(&["embed", "--grid", "9x9", "--seed", "8"], &config, c.path());
    assert_ne!(read(&a), read(&c));
}

#[test]
fn syntax_error_reports_position() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.ov");
    fs::write(
        &bad,
        "orlicz-var v1\n[domain]\nintervals = [0, 1] x [0, 1]\nresolution = 9x9\n[family]\nphi1 = power: 2 +* 1\n",
    )
    .unwrap();
    let o = run(&["solve"], &bad, &dir.path().join("out"));
    assert_eq!(o.code, EXIT_VALIDATION);
    assert!(o.messages.iter().any(|m| m.contains("line 6")), "{:?}", o.messages);
}
