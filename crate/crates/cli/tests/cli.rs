use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_policyguard"))
        .args(args)
        .env_remove("POLICYGUARD_SOLVER")
        .env_remove("POLICYGUARD_TRANSLATOR")
        .env_remove("POLICYGUARD_THRESHOLD")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lint_clean_and_contradictory_models() {
    let o = run(&["lint", &fx("models/ryanair_vetted.json")]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fx("models/ryanair.json")).unwrap()).unwrap();
    v["rules"].as_array_mut().unwrap().push(serde_json::json!({"id": "3", "smtlib": "(not isRefundEligible)"}));
    v["rules"].as_array_mut().unwrap().push(serde_json::json!({"id": "4", "smtlib": "isRefundEligible"}));
    std::fs::write(&bad, v.to_string()).unwrap();
    let o = run(&["lint", "--json", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["errors"][0]["code"], "CONTRADICTORY_RULES");
}

#[test]
fn validate_exit_codes_follow_the_verdict() {
    let scripted = format!("scripted:{}", fx("scripted/ryanair"));
    let qa = fx("qa/ryanair.json");
    let o = run(&["validate", &fx("models/ryanair.json"), "--qa", &qa, "--translator", &scripted, "--explain"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("IMPOSSIBLE"), "{}", stdout(&o));
    assert!(stdout(&o).contains("[2]"));

    let o = run(&["validate", &fx("models/ryanair_vetted.json"), "--qa", &qa, "--translator", &scripted, "--json"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["category"], "VALID");
    assert_eq!(v["valid"], true);
}

#[test]
fn audit_dir_receives_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let audit = dir.path().join("audit");
    let o = run(&[
        "validate",
        &fx("models/ryanair_vetted.json"),
        "--qa",
        &fx("qa/ryanair.json"),
        "--translator",
        &format!("scripted:{}", fx("scripted/ryanair")),
        "--audit-dir",
        audit.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(std::fs::read_dir(&audit).unwrap().count() > 0);
}

#[test]
fn test_and_stamp() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vetted.json");
    let o = run(&[
        "test",
        &fx("models/ryanair_vetted.json"),
        &fx("suites/ryanair_suite.json"),
        "--translator",
        &format!("scripted:{}", fx("scripted/ryanair")),
        "--stamp-by",
        "reviewer",
        "--stamp-out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("4 passed, 0 failed"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["metadata"]["vetted"]["by"], "reviewer");

    // The unvetted model fails the qa case and is not stamped.
    let o = run(&[
        "test",
        &fx("models/ryanair.json"),
        &fx("suites/ryanair_suite.json"),
        "--translator",
        &format!("scripted:{}", fx("scripted/ryanair")),
        "--stamp-by",
        "reviewer",
        "--stamp-out",
        dir.path().join("no.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("no.json").exists());
}

#[test]
fn natural_language_cases_need_a_translator() {
    let o = run(&["test", &fx("models/ryanair_vetted.json"), &fx("suites/ryanair_suite.json")]);
    assert_eq!(o.status.code(), Some(2), "{o:?}");
}

#[test]
fn build_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let (model, report) = (dir.path().join("park.json"), dir.path().join("report.json"));
    let o = run(&[
        "build",
        &fx("docs/park.md"),
        "-o",
        model.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--translator",
        &format!("scripted:{}", fx("scripted/park-build")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let o = run(&["report", report.to_str().unwrap()]);
    let csv = stdout(&o);
    assert_eq!(csv.lines().next(), Some("span,datatypes,variables,rules"));
    assert_eq!(csv.lines().last(), Some("4,1,15,17"));
    let o = run(&["lint", model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn gen_tests_output_runs_green() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("gen.json");
    let model = fx("models/ryanair_vetted.json");
    let o = run(&["gen-tests", &model, "-n", "20", "--seed", "3", "-o", suite.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let o = run(&["test", &model, suite.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("20 passed"));
}

#[test]
fn eval_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval.json");
    let o = run(&[
        "eval",
        &fx("models/ryanair_vetted.json"),
        &fx("eval/ryanair.json"),
        "--translator",
        &format!("scripted:{}", fx("scripted/ryanair-eval")),
        "--threshold",
        "2/3",
        "--threshold",
        "1/1",
        "--workers",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert!(lines[0].starts_with("threshold 2/3 TP 2 FP 1 TN 1 FN 0 S 75.0"), "{lines:?}");
    assert!(lines[1].starts_with("threshold 1/1 TP 2 FP 0 TN 2 FN 0 S 100.0"), "{lines:?}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn refine_until_valid() {
    let o = run(&[
        "refine",
        &fx("models/park.json"),
        "--qa",
        &fx("qa/park.json"),
        "--translator",
        &format!("scripted:{}", fx("scripted/park-refine")),
        "--domain",
        "theme park admission",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let steps: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(steps.as_array().unwrap().len(), 2);
    assert_eq!(steps[1]["category"], "VALID");
}

#[test]
fn config_file_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("policyguard.toml");
    std::fs::write(
        &cfg,
        format!("[translator]\nbackend = \"scripted:{}\"\n[verifier]\nthreshold = \"1/1\"\n", fx("scripted/ryanair")),
    )
    .unwrap();
    let args = [
        "--config",
        cfg.to_str().unwrap(),
        "validate",
        &fx("models/ryanair_vetted.json"),
        "--qa",
        &fx("qa/ryanair.json"),
    ];
    assert_eq!(run(&args).status.code(), Some(0));

    let o = Command::new(env!("CARGO_BIN_EXE_policyguard"))
        .args(args)
        .env("POLICYGUARD_SOLVER", "/nonexistent/z3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{o:?}");

    std::fs::write(&cfg, "[solver]\nbinnary = \"z3\"\n").unwrap();
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["validate", &fx("models/ryanair.json")]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["lint", "/nonexistent/model.json"]).status.code(), Some(2));
}
