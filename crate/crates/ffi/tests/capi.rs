use orlicz_var_ffi::*;
use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

const PROBLEM: &str = "orlicz-var v1
[domain]
intervals = [0, 1] x [0, 1]
resolution = 9x9
[family]
phi1 = power: 1.5
phi2 = power: 1.5
[data]
f = 1
";

fn parse(text: &str) -> (OvStatus, *mut OvProblem) {
    let c = CString::new(text).unwrap();
    let mut p = ptr::null_mut();
    let s = unsafe { ov_problem_parse(c.as_ptr(), &mut p) };
    (s, p)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ov_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn parse_errors_map_to_status() {
    let (s, p) = parse(
        "orlicz-var v1\n[domain]\nintervals = [0, 1] x [0, 1]\nresolution = 9x9\n[family]\nphi1 = power: 2 +* 1\n",
    );
    assert_eq!(s, OvStatus::Syntax);
    assert!(p.is_null());
    assert!(last_error().contains("line 6"), "{}", last_error());
    let (s, _) = parse(&PROBLEM.replace("power: 1.5\nphi2", "power: 0.5\nphi2"));
    assert_eq!(s, OvStatus::Semantic);
    assert_eq!(
        unsafe { ov_problem_parse(ptr::null(), ptr::null_mut()) },
        OvStatus::NullPointer
    );
}

#[test]
fn conjugate_and_sobolev_match_closed_forms() {
    let (s, p) = parse(PROBLEM);
    assert_eq!(s, OvStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { ov_problem_dim(p) }, 2);
    assert_eq!(unsafe { ov_problem_node_count(p) }, 81);
    let x = [0.25, 0.75];
    let mut v = 0.0;
    // (t^1.5)* = 0.5 (s/1.5)^3
    assert_eq!(unsafe { ov_conjugate(p, 2, x.as_ptr(), 2, 2.0, &mut v) }, OvStatus::Ok);
    assert!((v - 0.5 * (2.0f64 / 1.5).powi(3)).abs() < 1e-9, "{v}");
    // p* = 6, forward = (t/6)^6
    assert_eq!(
        unsafe { ov_sobolev_forward(p, x.as_ptr(), 2, 3.0, &mut v) },
        OvStatus::Ok
    );
    assert!((v / 0.5f64.powi(6) - 1.0).abs() < 1e-4, "{v}");
    assert_eq!(
        unsafe { ov_conjugate(p, 3, x.as_ptr(), 2, 1.0, &mut v) },
        OvStatus::InvalidInput
    );
    assert_eq!(
        unsafe { ov_conjugate(p, 1, x.as_ptr(), 3, 1.0, &mut v) },
        OvStatus::InvalidInput
    );
    unsafe { ov_problem_free(p) };
}

#[test]
fn field_round_trip_and_norm() {
    let (_, p) = parse(PROBLEM);
    let values = vec![2.0; 81];
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { ov_field_new(p, values.as_ptr(), 81, &mut f) }, OvStatus::Ok);
    assert_eq!(unsafe { ov_field_len(f) }, 81);
    let mut buf = vec![0.0; 81];
    assert_eq!(unsafe { ov_field_values(f, buf.as_mut_ptr(), 81) }, OvStatus::Ok);
    assert_eq!(buf, values);
    assert_eq!(
        unsafe { ov_field_values(f, buf.as_mut_ptr(), 80) },
        OvStatus::InvalidInput
    );
    // constant 2 on the unit square: L^1.5 norm is 2
    let mut n = 0.0;
    assert_eq!(unsafe { ov_luxemburg_norm(p, 1, f, &mut n) }, OvStatus::Ok);
    assert!((n - 2.0).abs() < 1e-9, "{n}");
    let mut bad = ptr::null_mut();
    assert_eq!(
        unsafe { ov_field_new(p, values.as_ptr(), 80, &mut bad) },
        OvStatus::InvalidInput
    );
    unsafe {
        ov_field_free(f);
        ov_problem_free(p);
    }
}

#[test]
fn solve_matches_library() {
    let (_, p) = parse(PROBLEM);
    let (mut f, mut energy, mut converged) = (ptr::null_mut(), 0.0, false);
    assert_eq!(
        unsafe { ov_solve(p, &mut f, &mut energy, &mut converged) },
        OvStatus::Ok
    );
    assert!(converged);
    let config = orlicz_var::cli::parse_config(PROBLEM).unwrap();
    let spec = config.problem().unwrap();
    let r = orlicz_var::solver::minimize(
        &spec,
        &orlicz_var::spaces::DiscreteField::zeros(spec.grid.clone()),
        &config.solver_options(),
    )
    .unwrap();
    let mut buf = vec![0.0; 81];
    unsafe { ov_field_values(f, buf.as_mut_ptr(), 81) };
    assert_eq!(buf, r.minimizer.values());
    assert_eq!(energy, r.energy());
    unsafe {
        ov_field_free(f);
        ov_problem_free(p);
    }
}

#[test]
fn verify_reports_witness_table() {
    let (_, p) = parse(&format!("{PROBLEM}M = expr: exp(t) - t - 1\nk1 = 1\n"));
    let (mut passed, mut table) = (true, ptr::null_mut());
    assert_eq!(unsafe { ov_verify(p, 0, &mut passed, &mut table) }, OvStatus::Ok);
    assert!(!passed);
    let text = unsafe { CStr::from_ptr(table) }.to_string_lossy().into_owned();
    assert!(
        text.lines().any(|l| l.starts_with("FAIL") && l.contains("(Delta2) M")),
        "{text}"
    );
    unsafe {
        ov_string_free(table);
        ov_problem_free(p);
    }
}

#[test]
fn null_handles_are_rejected() {
    let mut v = 0.0;
    let x = [0.5, 0.5];
    assert_eq!(
        unsafe { ov_conjugate(ptr::null(), 1, x.as_ptr(), 2, 1.0, &mut v) },
        OvStatus::NullPointer
    );
    assert!(last_error().contains("null"));
    assert_eq!(unsafe { ov_problem_dim(ptr::null()) }, 0);
    unsafe {
        ov_problem_free(ptr::null_mut());
        ov_field_free(ptr::null_mut());
        ov_string_free(ptr::null_mut());
    }
    let path = CString::new("/nonexistent/problem.ov").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ov_problem_load(path.as_ptr(), &mut p) }, OvStatus::Io);
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/capi-<hash>
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("liborlicz_var_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ov_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("nodes=81"));
}
