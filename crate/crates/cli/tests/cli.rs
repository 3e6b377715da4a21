use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn longmix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_longmix")).arg("--out-dir").arg(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn simulated(subjects: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    let out = longmix(dir.path(), &["--seed", "7", "simulate", "--subjects", subjects]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn cohort(dir: &TempDir) -> String {
    dir.path().join("cohort.csv").to_string_lossy().into_owned()
}

#[test]
fn simulate_is_byte_reproducible() {
    let a = simulated("40");
    let b = simulated("40");
    for f in ["cohort.csv", "truth.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let c = TempDir::new().unwrap();
    longmix(c.path(), &["--seed", "8", "simulate", "--subjects", "40"]);
    assert_ne!(
        std::fs::read(a.path().join("cohort.csv")).unwrap(),
        std::fs::read(c.path().join("cohort.csv")).unwrap()
    );
}

#[test]
fn tiny_cohort_has_one_row_per_subject() {
    let dir = TempDir::new().unwrap();
    let out = longmix(dir.path(), &["simulate", "--subjects", "2", "--visits", "1"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("cohort.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("subject_id,ga_weeks,pcrh,ct_sum"));
}

#[test]
fn fit_writes_report_and_is_reproducible() {
    let dir = simulated("60");
    let input = cohort(&dir);
    let out = longmix(dir.path(), &["fit", "--input", &input]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read(dir.path().join("fit.json")).unwrap();
    let report = json(&dir.path().join("fit.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["criterion"], "reml");
    let coefs = report["coefficients"].as_array().unwrap();
    assert_eq!(coefs.len(), 9);
    let ga = coefs.iter().find(|c| c["label"] == "GA").unwrap();
    assert!(ga["estimate"].as_f64().unwrap() > 0.0);
    for f in ["residuals.csv", "qq.csv", "blups.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    longmix(dir.path(), &["fit", "--input", &input]);
    assert_eq!(first, std::fs::read(dir.path().join("fit.json")).unwrap());
}

#[test]
fn hinge_model_has_ten_coefficients() {
    let dir = simulated("60");
    let out = longmix(dir.path(), &["fit", "--input", &cohort(&dir), "--model", "model5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("fit.json"));
    assert_eq!(report["coefficients"].as_array().unwrap().len(), 10);
}

#[test]
fn bayes_fit_writes_chain_and_summary() {
    let dir = simulated("30");
    let out = longmix(dir.path(), &["fit", "--input", &cohort(&dir), "--bayes", "--iters", "600", "--export-b"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("bayes_summary.json"));
    assert_eq!(s["n_iter"], 600);
    assert_eq!(s["n_retained"], 480);
    let pb = s["p_b"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pb));
    let chain = std::fs::read_to_string(dir.path().join("chain.csv")).unwrap();
    assert_eq!(chain.lines().count(), 481);
    assert!(chain.lines().next().unwrap().contains("sigma_eps_sq"));
    for f in ["acf.csv", "ppc.csv", "random_effects.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn compare_self_and_jump_term() {
    let dir = simulated("60");
    let input = cohort(&dir);
    let out = longmix(dir.path(), &["compare", "--input", &input, "--null", "model4", "--alt", "model4"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(&dir.path().join("compare.json"));
    assert_eq!(c["lrt"]["statistic"].as_f64().unwrap(), 0.0);
    assert_eq!(c["lrt"]["p_value"].as_f64().unwrap(), 1.0);

    let out = longmix(dir.path(), &["compare", "--input", &input, "--null", "model5", "--alt", "model5+jump@20"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let c = json(&dir.path().join("compare.json"));
    assert_eq!(c["criterion"], "ml");
    assert_eq!(c["lrt"]["df"], 1);
    assert_eq!(c["lrt"]["method"], "standard");
}

fn effect_rows(dir: &TempDir) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(dir.path().join("effects.csv")).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn effects_reproduce_published_percentages() {
    let dir = TempDir::new().unwrap();
    let out = longmix(dir.path(), &["effects", "--coefs", "interaction", "--ga", "40", "--ct", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = effect_rows(&dir);
    let pct: f64 = rows[0][5].parse().unwrap();
    assert!((pct - 11.9).abs() <= 0.15, "{pct}");

    let out = longmix(dir.path(), &["effects", "--coefs", "interaction", "--set", "CT-Sum=0,CT-Sum*GA=0"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for row in effect_rows(&dir).iter().filter(|r| r[0] == "effect") {
        assert_eq!(row[5].parse::<f64>().unwrap(), 0.0, "{row:?}");
    }
}

#[test]
fn exit_codes() {
    let dir = simulated("30");
    let input = cohort(&dir);
    assert_eq!(code(&longmix(dir.path(), &["fit", "--bogus"])), 2);
    assert_eq!(code(&longmix(dir.path(), &["fit", "--input", &input, "--model", "bogus"])), 2);
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&longmix(dir.path(), &["describe", "--input", empty.to_str().unwrap()])), 3);
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&longmix(dir.path(), &["describe", "--input", missing.to_str().unwrap()])), 1);
    assert_eq!(code(&longmix(dir.path(), &["fit", "--input", &input, "--model", "model2", "--max-iter", "1"])), 4);
    assert_eq!(code(&longmix(dir.path(), &["describe", "--input", &input])), 0);
}
