//! End-to-end checks of the `collab` binary: exit codes, output format,
//! and byte-level determinism of the CSV artifacts.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn collab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_collab"))
}

fn temp_path(name: &str) -> PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let unique = COUNTER.fetch_add(1, Ordering::Relaxed);
    let mut p = std::env::temp_dir();
    p.push(format!("collab-cli-test-{}-{unique}-{name}", std::process::id()));
    p
}

fn write_sqrt_linear_instance(n: usize) -> PathBuf {
    let players: Vec<String> = (0..n)
        .map(|i| {
            format!(
                r#"{{"id": "p{i}", "cost": {{"kind": "soft_linear"}},
                     "projects": {{"s": {{"kind": "linear_ability", "ability": 1.0}}}}}}"#
            )
        })
        .collect();
    let doc = format!(
        r#"{{"sharing": "proportional",
             "players": [{}],
             "projects": [{{"id": "s", "value": {{"kind": "sqrt"}}}}]}}"#,
        players.join(",")
    );
    let path = temp_path(&format!("sqrt-linear-{n}.json"));
    fs::write(&path, doc).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_reports_ratio_and_exits_zero() {
    let path = write_sqrt_linear_instance(2);
    let out = collab().args(["run", "--instance"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("ratio (OPT/eq):      1.333333"), "{text}");
    assert!(text.contains("converged: true"), "{text}");
    fs::remove_file(path).ok();
}

#[test]
fn run_writes_result_record() {
    let path = write_sqrt_linear_instance(2);
    let record = temp_path("record.json");
    let out = collab()
        .args(["run", "--instance"])
        .arg(&path)
        .arg("--out")
        .arg(&record)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&record).unwrap()).unwrap();
    assert_eq!(json["converged"], serde_json::Value::Bool(true));
    assert!((json["welfare"].as_f64().unwrap() - 0.1875).abs() < 1e-6);
    assert_eq!(json["profile"].as_array().unwrap().len(), 2);
    fs::remove_file(path).ok();
    fs::remove_file(record).ok();
}

#[test]
fn malformed_file_exits_one() {
    let path = temp_path("malformed.json");
    fs::write(&path, "{not json").unwrap();
    let out = collab().args(["run", "--instance"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    fs::remove_file(path).ok();
}

#[test]
fn invalid_instance_exits_one() {
    let path = temp_path("badalpha.json");
    fs::write(
        &path,
        r#"{"sharing": "proportional",
            "players": [{"id": "a", "cost": {"kind": "hard_budget", "budget": 1.0},
                         "projects": {"p": {"kind": "linear_ability", "ability": 1.0}}}],
            "projects": [{"id": "p", "value": {"kind": "power", "weight": 1.0, "alpha": 1.5}}]}"#,
    )
    .unwrap();
    let out = collab().args(["run", "--instance"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha out of range"));
    fs::remove_file(path).ok();
}

#[test]
fn iteration_cap_exits_two_with_residual() {
    let path = write_sqrt_linear_instance(4);
    let out = collab()
        .args(["run", "--solver.max-iters", "1", "--instance"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stdout(&out));
    assert!(stdout(&out).contains("converged: false"));
    assert!(stdout(&out).contains("max residual best-response gain"));
    fs::remove_file(path).ok();
}

#[test]
fn reproduce_nonmonotone_rows_pass() {
    let out =
        collab().args(["reproduce", "--experiment", "nonmonotone"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{text}");
}

#[test]
fn winner_take_all_needs_the_fallback_flag() {
    let path = temp_path("wta.json");
    fs::write(
        &path,
        r#"{"sharing": "winner_take_all",
            "players": [
              {"id": "a", "cost": {"kind": "hard_budget", "budget": 1.0},
               "projects": {"p": {"kind": "linear_ability", "ability": 1.0}}},
              {"id": "b", "cost": {"kind": "hard_budget", "budget": 1.0},
               "projects": {"p": {"kind": "linear_ability", "ability": 2.0}}}],
            "projects": [{"id": "p", "value": {"kind": "max_quality"}}]}"#,
    )
    .unwrap();
    let refused = collab().args(["run", "--instance"]).arg(&path).output().unwrap();
    assert_eq!(refused.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("non-concave"));

    let out = collab()
        .args(["run", "--solver.fallback", "--instance"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // The stronger player wins the whole project value.
    assert!(stdout(&out).contains("equilibrium welfare: 2.0"), "{}", stdout(&out));
    fs::remove_file(path).ok();
}

#[test]
fn reproduce_lowerbound_row_passes() {
    let out = collab()
        .args(["reproduce", "--experiment", "lowerbound", "--n-list", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("lowerbound,2,"), "{row}");
    assert!(row.ends_with(",true"), "{row}");
    // Predicted ratio column for n = 2 is 1 + (1/2)²(1−e^{−β})/β.
    assert!(row.contains("1.249875"), "{row}");
}

#[test]
fn reproduce_unknown_experiment_exits_one() {
    let out = collab().args(["reproduce", "--experiment", "nosuch"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let args = [
        "sweep",
        "--n-grid",
        "1,2",
        "--alpha-grid",
        "0.4,0.8",
        "--seed",
        "7",
    ];
    let a = collab().args(args).output().unwrap();
    let b = collab().args(args).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "sweep output must be byte-identical");
    let text = stdout(&a);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 5); // header + 2x2 grid, lexicographic order
    assert!(rows[1].starts_with("1,0.4"), "{text}");
    assert!(rows[2].starts_with("1,0.8"), "{text}");
    assert!(rows[3].starts_with("2,0.4"), "{text}");
    assert!(rows[4].starts_with("2,0.8"), "{text}");
}

#[test]
fn sweep_alpha_range_syntax() {
    let out = collab()
        .args(["sweep", "--n-grid", "1", "--alpha-grid", "0.1:1.0:10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 11);
}

#[test]
fn empty_grid_yields_header_only() {
    let out =
        collab().args(["sweep", "--n-grid", "", "--alpha-grid", "0.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("n,alpha,"));
}

#[test]
fn reproduce_is_deterministic_given_seed() {
    let args = ["reproduce", "--experiment", "softbudget", "--cases", "3", "--seed", "11"];
    let a = collab().args(args).output().unwrap();
    let b = collab().args(args).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    // A different seed draws different instances.
    let c = collab()
        .args(["reproduce", "--experiment", "softbudget", "--cases", "3", "--seed", "12"])
        .output()
        .unwrap();
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn env_overrides_apply() {
    let target = temp_path("env-out.csv");
    let out = collab()
        .args(["reproduce", "--experiment", "linearcost", "--n-list", "1,2"])
        .env("COLLAB_OUT", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    let written = fs::read_to_string(&target).unwrap();
    assert_eq!(written.lines().count(), 3);
    fs::remove_file(target).ok();
}
