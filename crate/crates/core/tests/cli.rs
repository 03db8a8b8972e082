use std::process::{Command, Output};

fn qlame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlame")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = qlame(&["verify", "--m", "0,1", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().last().unwrap().ends_with("PASS"));
    assert!(stdout.lines().any(|l| {
        let f: Vec<&str> = l.split_whitespace().collect();
        f.len() > 2 && f[..3] == ["PASS", "family.commute_l_ml", "m=1"]
    }));

    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["schema_version"], "qlame.report/1");
    assert_eq!(report["overall_pass"], true);
    assert_eq!(report["summary"]["failed"], 0);
}

#[test]
fn impossible_tolerance_fails_checks() {
    let o = qlame(&["verify", "--m", "1", "--tol-eigen", "1e-30"]);
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL bethe.eigen_l")));
}

#[test]
fn bad_input_is_a_usage_error() {
    assert_eq!(code(&qlame(&["verify", "--tau-im", "-1"])), 2);
    assert_eq!(code(&qlame(&["verify", "--tol-nonsense", "1e-3"])), 2);
    assert_eq!(code(&qlame(&["verify", "--m", "x"])), 2);
    assert_eq!(code(&qlame(&["bethe", "--c-re", "1e5"])), 2);
    assert_eq!(code(&qlame(&["frobnicate"])), 2);
    let o = qlame(&["verify", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/run.cfg"));
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "m = 0\ntol.kernel = 1e-30\n").unwrap();
    let o = qlame(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL kernel.")));
    assert!(!stdout.lines().any(|l| l.contains("bethe.") && l.contains("m=1 ")));
}

#[test]
fn bethe_prints_records() {
    let o = qlame(&["bethe", "--m", "2", "--c-re", "0.8", "--c-im", "0.5"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let records = v.as_array().unwrap();
    assert!(!records.is_empty());
    for r in records {
        assert_eq!(r["m"], 2);
        assert_eq!(r["t"].as_array().unwrap().len(), 2);
        assert!(r["residual"].as_f64().unwrap() < 1e-10);
    }
}

#[test]
fn curve_output_is_deterministic() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let o = qlame(&["curve", "--m", "1", "--curve-samples", "20", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read(dir.path().join("curve_m1.csv")).unwrap();
        let fit = std::fs::read(dir.path().join("curve_m1_fit.json")).unwrap();
        (csv, fit)
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let csv = String::from_utf8(a.0).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "re_x,im_x,re_y,im_y,partner");
    assert!(csv.lines().count() > 20);
    let fit: serde_json::Value = serde_json::from_slice(&a.1).unwrap();
    assert_eq!(fit["coeffs"].as_array().unwrap().len(), 4);
}

#[test]
fn too_few_curve_samples_is_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let o = qlame(&["curve", "--m", "2", "--curve-samples", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}
