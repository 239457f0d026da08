use std::path::Path;
use std::process::{Command, Output};

use merocx::json;
use merocx::report::compare_reports;
use merocx_core::cell::{random_cochain, AxiomSet, Truncation};
use merocx_core::complex::Engine;
use merocx_core::{Model, ModelParams};
use serde_json::Value;

fn merocx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_merocx")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cohomology_default_model_writes_betti_csv() {
    let d = tempfile::tempdir().unwrap();
    let out = merocx(&["--out", path(d.path()), "cohomology"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.path().join("betti.csv")).unwrap();
    assert!(csv.starts_with("l,k,cell_dim,stable_dim,kernel,image_in,betti\n"));
    assert_eq!(csv.lines().count(), 1 + 12);
    let r = report(d.path());
    let dd: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().starts_with("dd_zero")).collect();
    assert_eq!(dd.len(), 12);
    assert!(dd.iter().all(|c| c["ok"] == true));
    assert_eq!(r["config"]["model"]["N"], 3);
    assert!(r["code_version"].is_string() && r["schema"] == "merocx-report/1");
}

#[test]
fn malformed_config_exits_with_field_path() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    std::fs::write(&cfg, r#"{"scenario": "star", "star": {"grid": "eight"}}"#).unwrap();
    let out = merocx(&["--config", path(&cfg), "run"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("star.grid"), "{err}");

    std::fs::write(&cfg, r#"{"model": {"N": 3, "M": 6, "B0": 2, "Lmax": 3, "extra": 1}}"#).unwrap();
    let out = merocx(&["--config", path(&cfg), "run"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.extra"));
}

#[test]
fn config_overrides_flags_and_reruns_are_identical() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.json");
    std::fs::write(&cfg, r#"{"scenario": "cohomology", "l_max": 1, "k_max": 1, "window": 3}"#).unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for o in [&a, &b] {
        let out = merocx(&["--config", path(&cfg), "--out", path(o), "cohomology", "--l-max", "3"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(report(&a)["config"]["l_max"], 1);
    assert_eq!(report(&a)["config"]["window"], 3);
    assert_eq!(compare_reports(&a, &b).unwrap(), None);
    let ta: Value = report(&a)["timings"].clone();
    assert!(ta.as_array().unwrap().iter().all(|t| t["elapsed_s"].as_f64().unwrap() >= 0.0));
}

#[test]
fn star_from_factor_files() {
    let d = tempfile::tempdir().unwrap();
    let p = ModelParams::DEFAULT;
    let model = Model::new(p).unwrap();
    let mut eng = Engine::new(&model, Truncation { e: 6, axioms: AxiomSet::cohomology_default() });
    let f = random_cochain(&eng.stable(1, 1).unwrap(), 3, 4).unwrap();
    let g = random_cochain(&eng.stable(1, 2).unwrap(), 4, 4).unwrap();
    let (fp, gp) = (d.path().join("f.json"), d.path().join("g.json"));
    std::fs::write(&fp, json::cochain_to_json(&model, &f.to_laurent()).to_string()).unwrap();
    std::fs::write(&gp, json::cochain_to_json(&model, &g.to_laurent()).to_string()).unwrap();
    let out_dir = d.path().join("out");
    let out = merocx(&["--out", path(&out_dir), "star", "--factors", path(&fp), path(&gp), "--lambda-order", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_dir);
    assert_eq!(r["objects"]["star"]["target"], serde_json::json!([2, 1]));
    assert_eq!(r["objects"]["membership"]["ok"], true);
    assert!(d.path().join("out/bounds.csv").exists());
}

#[test]
fn cech_from_atlas_file() {
    let d = tempfile::tempdir().unwrap();
    let a = d.path().join("atlas.json");
    std::fs::write(
        &a,
        r#"{"sections": [{"id": "U", "interval": [0, 1]}, {"id": "V", "interval": [0, 2]}],
            "holonomies": [{"from": "U", "to": "V", "poly": ["1/2", 1]}]}"#,
    )
    .unwrap();
    let o = d.path().join("out");
    let out = merocx(&["--out", path(&o), "cech", "--atlas", path(&a), "--kmax", "2", "--dmax", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(o.join("cech_betti.csv")).unwrap();
    let row0: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row0[3..], ["0", row0[4], row0[5], "1", "1"]);
}

#[test]
fn invariance_with_given_rho() {
    let d = tempfile::tempdir().unwrap();
    let out = merocx(&["--out", path(d.path()), "--seeds", "0,1", "invariance", "--rho", "z + 1/2*z^2 - z^3", "--order", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.path().join("invariance.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|l| l.contains(",true,0,true")), "{csv}");
}

#[test]
fn unknown_preset_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let out = merocx(&["--out", path(d.path()), "invariant", "gv", "--preset", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant.preset"));
}
