use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_probrenorm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

#[test]
fn power_s2_fits_minus_one_twelfth() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"family": {"name": "power"}, "s": [2, 0]}"#);
    let out = run(&["renormalize", "--config", p(&cfg), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let fit = &v["strong_fit"];
    assert_eq!(fit["verdict"], "strong");
    let (s_re, s_im) = complex(&fit["S"]);
    let (c_re, c_im) = complex(&fit["c"]);
    assert!((s_re + 1.0 / 12.0).abs() < 1e-8 && s_im.abs() < 1e-8);
    assert!((c_re - 2.0).abs() < 1e-8 && c_im.abs() < 1e-8);
    let per_m = v["report"]["per_m"].as_array().unwrap();
    assert_eq!(per_m.len(), 5);
    let (e2, _) = complex(&per_m[0]["expectation"]);
    assert!((e2 - 0.25).abs() < 1e-10);
}

#[test]
fn power_minus_one_rho_zero_recovers_zeta2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"family": {"name": "power"}, "s": [-1, 0], "rho": 0}"#);
    let out = run(&["renormalize", "--config", p(&cfg), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let fit = &json(&out)["strong_fit"];
    let (s_re, _) = complex(&fit["S"]);
    let (c_re, _) = complex(&fit["c"]);
    assert!((s_re - ZETA2).abs() < 1e-6, "S = {s_re}");
    assert!((c_re + 2.0).abs() < 1e-6, "c = {c_re}");
}

#[test]
fn rho_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"family": {"name": "power"}, "s": [-1, 0], "rho": 1}"#);
    let out = run(&["renormalize", "--config", p(&cfg), "--rho", "0", "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["report"]["rho"], 0);
    assert_eq!(code(&run(&["renormalize", "--config", p(&cfg), "--rho", "2"])), 1);
}

#[test]
fn grandi_drift_is_a_result() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g.json", r#"{"family": {"name": "grandi"}, "rho": 0, "m_list": [2, 3]}"#);
    let out = run(&["renormalize", "--config", p(&cfg), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let per_m = v["report"]["per_m"].as_array().unwrap();
    assert_eq!(per_m[0]["verdict"], "drift");
    assert_eq!(per_m[1]["verdict"], "extension_divergence");
    assert_eq!(v["report"]["weakly_renormalizable"], false);
    assert!(v["strong_fit"].is_null());
}

#[test]
fn csv_has_header_and_full_precision_floats() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"family": {"name": "power"}, "s": [2, 0], "m_list": [2, 3, 4]}"#);
    let out = run(&["renormalize", "--config", p(&cfg)]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "record,m,re_value,im_value,verdict,constancy_deviation,residual,re_c,im_c"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "expectation");
    assert_eq!(first[1], "2");
    // {:.16e}: one leading digit, sixteen after the point
    let mantissa = first[2].split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{}", first[2]);
    assert_eq!(first[2].parse::<f64>().unwrap(), 0.25);
    assert!(text.lines().any(|l| l.starts_with("strong_fit,")));
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"family": {"name": "eta"}, "s": [-2, 0], "m_list": [2, 3, 4]}"#);
    for format in ["csv", "json"] {
        let a = dir.path().join(format!("a.{format}"));
        let b = dir.path().join(format!("b.{format}"));
        for path in [&a, &b] {
            let out = run(&["renormalize", "--config", p(&cfg), "--format", format, "--output", p(path)]);
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}

#[test]
fn json_report_round_trips_and_refits() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "c.json",
        r#"{"family": {"name": "power"}, "s": [0.5, 0], "output": {"path": null, "format": "json"}}"#,
    );
    let report = dir.path().join("r.json");
    assert_eq!(code(&run(&["renormalize", "--config", p(&cfg), "--output", p(&report)])), 0);
    let text = std::fs::read_to_string(&report).unwrap();
    let parsed: Value = serde_json::from_str(&text).unwrap();
    let again: Value = serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
    assert_eq!(parsed, again);

    let out = run(&["fit", "--input", p(&report), "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out), parsed["strong_fit"]);
}

#[test]
fn fit_rejects_reports_without_enough_points() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g.json", r#"{"family": {"name": "grandi"}, "rho": 0, "m_list": [2, 4]}"#);
    let report = dir.path().join("r.json");
    assert_eq!(code(&run(&["renormalize", "--config", p(&cfg), "--format", "json", "--output", p(&report)])), 0);
    assert_eq!(code(&run(&["fit", "--input", p(&report)])), 1);
    let junk = write_config(&dir, "junk.json", "{\"not\": \"a report\"}");
    assert_eq!(code(&run(&["fit", "--input", p(&junk)])), 1);
}

#[test]
fn config_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let unknown_key = write_config(&dir, "a.json", r#"{"family": {"name": "power"}, "s": [2, 0], "colour": 1}"#);
    let unknown_family = write_config(&dir, "b.json", r#"{"family": {"name": "fibonacci"}, "s": [2, 0]}"#);
    let missing_s = write_config(&dir, "c.json", r#"{"family": {"name": "power"}}"#);
    let bad_m = write_config(&dir, "d.json", r#"{"family": {"name": "power"}, "s": [2, 0], "m_list": [1]}"#);
    for cfg in [&unknown_key, &unknown_family, &missing_s, &bad_m] {
        let out = run(&["renormalize", "--config", p(cfg)]);
        assert_eq!(code(&out), 1, "{}", cfg.display());
    }
    assert_eq!(code(&run(&["renormalize", "--config", "/nonexistent/cfg.json"])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn unwritable_output_is_not_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.json", r#"{"family": {"name": "power"}, "s": [2, 0], "m_list": [2, 3, 4]}"#);
    let out = run(&["renormalize", "--config", p(&cfg), "--output", "/nonexistent/dir/out.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bernoulli_eval_power() {
    let out = run(&["bernoulli-eval", "--family", "power", "--s", "2", "--t", "1", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let (b, _) = complex(&v["b"]);
    assert!((b - 1.0 / 6.0).abs() < 1e-10);
    assert!(v["reference_diff"].as_f64().unwrap() < 1e-10);

    let out = run(&["bernoulli-eval", "--family", "power", "--s", "0", "--format", "json"]);
    let (b, _) = complex(&json(&out)["b"]);
    assert!((b - 1.0).abs() < 1e-12);
    assert!(json(&out)["dirichlet"].is_null());
}

#[test]
fn bernoulli_eval_hurwitz_converges() {
    let out = run(&["bernoulli-eval", "--family", "hurwitz", "--s", "-2", "--t", "1.5", "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["status"], "Converged");
}

#[test]
fn bernoulli_eval_unknown_family_exits_one() {
    let out = run(&["bernoulli-eval", "--family", "fibonacci", "--s", "2"]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&run(&["bernoulli-eval", "--family", "power", "--s", "two"])), 1);
}

#[test]
fn list_families_reports_catalogue() {
    let out = run(&["list-families"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "name,nu,sigma_star,growth_exponent,closed_form");
    for name in ["power", "hurwitz", "eta", "gauss"] {
        assert!(text.lines().skip(1).any(|l| l.contains(name)), "{name} missing");
    }
    let v = json(&run(&["list-families", "--format", "json"]));
    assert!(v.as_array().unwrap().len() >= 6);
}

#[test]
fn verify_renorm_passes() {
    let out = run(&["verify", "renorm", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let checks = json(&out);
    let checks = checks.as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["pass"] == true && c["bound"].as_f64().unwrap() >= 0.0));
}

#[test]
fn verify_oracle_passes() {
    assert_eq!(code(&run(&["verify", "oracle"])), 0);
}

#[test]
fn verify_families_passes() {
    assert_eq!(code(&run(&["verify", "families"])), 0);
}
