use std::path::PathBuf;
use std::process::{Command, Output};

use apconform::verify::VerificationReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_apconform"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn bundled_configs_pass() {
    for name in ["identity.json", "e1.json", "e2.json"] {
        let o = run(&["check", config(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        assert!(stdout(&o).contains("ALL PASS"));
    }
}

#[test]
fn reports_match_golden_files() {
    for name in ["identity", "e1", "e2"] {
        let o = run(&[
            "report",
            config(&format!("{name}.json")).to_str().unwrap(),
            "--format",
            "json",
        ]);
        assert_eq!(o.status.code(), Some(0));
        let got: VerificationReport = serde_json::from_str(&stdout(&o)).unwrap();
        let text = std::fs::read_to_string(config(&format!("{name}.expected.json"))).unwrap();
        let want: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(got.checks.len(), want.checks.len());
        assert_eq!(got.seed, want.seed);
        assert_eq!(got.label, want.label);
        for (g, w) in got.checks.iter().zip(&want.checks) {
            assert_eq!(g.name, w.name);
            assert_eq!(g.pass, w.pass, "{}", g.name);
            assert!((g.max_abs - w.max_abs).abs() <= 1e-12, "{}", g.name);
            assert!((g.max_rel - w.max_rel).abs() <= 1e-12, "{}", g.name);
        }
    }
}

#[test]
fn reruns_are_bit_identical() {
    let path = config("e2.json");
    let args = ["report", path.to_str().unwrap(), "--format", "json"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = [
        "check",
        path.to_str().unwrap(),
        "--seed",
        "9",
        "--points",
        "5",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn eval_prints_labelled_components() {
    let e2 = config("e2.json");
    let o = run(&[
        "eval",
        e2.to_str().unwrap(),
        "--point",
        "0,0.7853981633974483",
        "--tensor",
        "C",
    ]);
    assert_eq!(stdout(&o).trim(), "C_1 = 1, C_2 = 0");
    let o = run(&[
        "eval",
        e2.to_str().unwrap(),
        "--point",
        "0,0.7853981633974483",
        "--tensor",
        "C",
        "--transformed",
    ]);
    assert_eq!(stdout(&o).trim(), "C_1 = 2, C_2 = 0");
    let o = run(&[
        "eval",
        config("e1.json").to_str().unwrap(),
        "--point",
        "-0.4,0.2",
        "--tensor",
        "lambda",
    ]);
    assert_eq!(stdout(&o).trim(), "all components 0");
    let o = run(&[
        "eval",
        config("identity.json").to_str().unwrap(),
        "--point",
        "0.1,0.2",
        "--tensor",
        "T",
    ]);
    assert_eq!(stdout(&o).trim(), "all components 0");
}

#[test]
fn eval_rejects_bad_input() {
    let e2 = config("e2.json");
    let e2 = e2.to_str().unwrap();
    let o = run(&["eval", e2, "--point", "0,0.5", "--tensor", "Z"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", e2, "--point", "0", "--tensor", "C"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--point"));
    let o = run(&["eval", e2, "--point", "5,0", "--tensor", "C"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("outside the domain"));
}

#[test]
fn report_text_and_bad_format() {
    let e2 = config("e2.json");
    let o = run(&["report", e2.to_str().unwrap(), "--format", "text"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("law.curvature_levi_civita"));
    let o = run(&["report", e2.to_str().unwrap(), "--format", "yaml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_configs_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"dimension": 1, "frame": [["1"]]}"#,
            "dimension must be ≥ 2",
        ),
        (r#"{"dimension": 2, "frame": [["1", "0"]]}"#, "frame:"),
        (
            r#"{"dimension": 2, "frame": [["1", "0"], ["0", "foo"]]}"#,
            "frame[1][1]",
        ),
        (
            r#"{"dimension": 2, "frame": [["1", "0"], ["0", "1"]], "rho": "x1 +"}"#,
            "rho:",
        ),
        (
            r#"{"dimension": 2, "frame": [["1", "0"], ["0", "1"]], "stroke": "x"}"#,
            "stroke:",
        ),
        (
            r#"{"dimension": 2, "frame": [["1", "0"], ["0", "1"]], "tolerances": {"law.nope": 1}}"#,
            "tolerances:",
        ),
        (
            r#"{"dimension": 2, "frame": [["1", "0"], ["0", "1"]],"#,
            "line 1",
        ),
    ];
    for (k, (text, needle)) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{k}.json"));
        std::fs::write(&path, text).unwrap();
        let o = run(&["check", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = stderr(&o);
        assert!(err.contains(&format!("bad{k}.json")), "{err}");
        assert!(err.contains(needle), "{needle} not in {err}");
    }
}

#[test]
fn failing_check_exits_1_and_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sym.json");
    std::fs::write(
        &cfg,
        r#"{"label": "symmetric stroke", "dimension": 3,
            "frame": [["1 + 0.2*x2", "0.1*sin(x3)", "0"],
                      ["0.3*x1", "1", "0.2*x3*x1"],
                      ["0", "0.25*cos(x1)", "1 + 0.1*x2"]],
            "rho": "x1*x2", "stroke": "symmetric", "samples": 5}"#,
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "check",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: VerificationReport =
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let b = report.check("ident.conn_hat_curvature").unwrap();
    assert!(!b.pass);
    assert!(b.note.as_deref().unwrap().contains("convention mismatch"));
}
