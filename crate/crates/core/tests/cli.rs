use std::fs;
use std::path::Path;
use std::process::Command;

use sourceforge::io::{read_pgm, RunManifest, MANIFEST_FILE};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sourceforge"))
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn phantom_writes_image_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("p");
    let st = bin().args(["phantom", "--size", "64", "--out"]).arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let img = read_pgm(&out.join("phantom.pgm")).unwrap();
    assert_eq!(img.dim(), (64, 64));
    assert_eq!(fs::metadata(out.join("phantom.pgm")).unwrap().len(), 64 * 64 * 2 + "P5\n64 64\n65535\n".len() as u64);
    let m = manifest(&out);
    assert_eq!(m.command, "phantom");
    assert!(m.artifacts.iter().all(|a| out.join(a).is_file()));
}

#[test]
fn output_root_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["phantom", "--size", "16"])
        .env("SOURCEFORGE_OUT", tmp.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(tmp.path().join("phantom").join(MANIFEST_FILE).is_file());
}

#[test]
fn usage_and_config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(bin().arg("nope").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["phantom", "--bogus"]).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "degree = 5\nunknown_key = 1\n").unwrap();
    let o = bin().arg("lasso1d").arg("--config").arg(&cfg).arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown_key"));
    let o = bin().args(["phantom", "--size", "4"]).arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn lasso_run_reports_v_norm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("deg5.toml");
    fs::write(&cfg, toml::to_string(&sourceforge::experiments::Lasso1DConfig::degree5()).unwrap()).unwrap();
    let out = tmp.path().join("a");
    let st = bin().arg("lasso1d").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["solver"]["v_norm"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn verify_round_trip_and_assert() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("f.toml");
    fs::write(&cfg, "size = [24, 24]\nmask = { kind = \"full\" }\n[budget]\ncd_iters = 5000\ncd_tol = 1e-10\npdhg_iters = 50\n").unwrap();
    let out = tmp.path().join("f");
    let st = bin().arg("fourier2d").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let verify = |v: &str, assert: bool| {
        let mut c = bin();
        c.arg("verify")
            .arg("--u")
            .arg(out.join("u_dag.pfm"))
            .arg("--v")
            .arg(out.join(v))
            .arg("--q")
            .arg(out.join("q.pfm"))
            .args(["--tol", "1e-6"]);
        if assert {
            c.arg("--assert");
        }
        c.output().unwrap().status.code()
    };
    assert_eq!(verify("kstar_v.pfm", true), Some(0));
    // the zero-filled baseline has the right size but is not K*v
    assert_eq!(verify("baseline.pfm", true), Some(3));
    assert_eq!(verify("baseline.pfm", false), Some(0));
    // |q| lives on the (n-1) x (n-1) grid
    assert_eq!(verify("q_norm.pfm", true), Some(2));
    // a spectrum has three channels and is refused as K*v
    assert_eq!(verify("v.pfm", true), Some(1));
}
