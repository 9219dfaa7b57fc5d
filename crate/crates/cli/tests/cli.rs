use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TWO_ON_WINDOW: &str = r#"
[model]
kind = "piecewise_constant"
breakpoints = [0.0, 2.0]
levels = [2.0]
tail = 1.0
"#;

const CONSTANT: &str = r#"
[model]
kind = "constant"
rate = 2.0
"#;

const HAWKES: &str = r#"
[model]
kind = "classical_hawkes"
alpha = 1.0

[model.kernel]
kind = "exponential"
a = 0.5
b = 1.0

[model.phi]
kind = "identity"

[run]
horizon = 5.0
seed = 11
"#;

fn ghawkes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghawkes")).args(args).output().expect("spawn ghawkes")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn without_wall_time(mut v: Value) -> Value {
    v["report"].as_object_mut().unwrap().remove("wall_time_secs");
    v
}

#[test]
fn entropy_check_example() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "two.toml", TWO_ON_WINDOW);
    let out = dir.path().join("report.json");
    let o = ghawkes(&["entropy-check", "--model", s(&model), "--replicates", "100000", "--seed", "7", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let r = &v["report"];
    let (est, se) = (r["estimate"].as_f64().unwrap(), r["standard_error"].as_f64().unwrap());
    assert!((r["target"].as_f64().unwrap() - 0.6137056388801094).abs() < 1e-12);
    assert!((est - 0.6137056388801094).abs() <= 3.0 * se, "{est} ± {se}");
    assert_eq!(r["verdict"], "pass");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["library_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["model"]["kind"], "piecewise_constant");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "c.toml", CONSTANT);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, threads) in [(&a, "1"), (&b, "4")] {
        let o = ghawkes(&[
            "simulate", "--model", s(&model), "--horizon", "1", "--seed", "7", "--replicates", "50", "--threads", threads, "--out", s(out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("replicate_id,jump_index,jump_time\n"));
}

#[test]
fn simulate_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "h.toml", HAWKES);
    let out = dir.path().join("paths.json");
    let o = ghawkes(&["simulate", "--model", s(&model), "--replicates", "3", "--algo", "thinning", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["paths"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["horizon"], 5.0);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["config"]["algo"], "thinning");
}

#[test]
fn reports_match_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "h.toml", HAWKES);
    let run = |threads: &str| {
        let o = ghawkes(&["gof", "--model", s(&model), "--replicates", "20", "--n-jumps", "300", "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        without_wall_time(report(&o))
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn contraction_above_one_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "super.toml", &HAWKES.replace("a = 0.5", "a = 2.0"));
    let o = ghawkes(&["weak-uniqueness", "--model", s(&model), "--replicates", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("contraction ≥ 1"), "{}", stderr(&o));
}

#[test]
fn weak_uniqueness_passes() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "h.toml", HAWKES);
    let table = dir.path().join("rows.csv");
    let o = ghawkes(&["weak-uniqueness", "--model", s(&model), "--replicates", "500", "--permutations", "200", "--csv", s(&table)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = std::fs::read_to_string(&table).unwrap();
    assert_eq!(rows.lines().count(), 501);
    assert_eq!(report(&o)["config"]["permutations"], 200);
}

#[test]
fn statistical_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "c.toml", CONSTANT);
    // At this level the KS test rejects almost surely.
    let o = ghawkes(&["gof", "--model", s(&model), "--replicates", "1", "--n-jumps", "2000", "--alpha", "0.999999"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(report(&o)["report"]["verdict"], "fail");
}

#[test]
fn config_errors_report_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "bad.toml", &HAWKES.replace("b = 1.0", "b = \"one\""));
    let o = ghawkes(&["simulate", "--model", s(&model)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("model.kernel.b (line 9)"), "{}", stderr(&o));

    let model = write(dir.path(), "run.toml", &format!("{CONSTANT}\n[run]\nreplicate = 3\n"));
    let o = ghawkes(&["simulate", "--model", s(&model), "--horizon", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replicate"), "{}", stderr(&o));
}

#[test]
fn budget_flags_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "c.toml", CONSTANT);
    let o = ghawkes(&["simulate", "--model", s(&model)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--horizon or --n-jumps"), "{}", stderr(&o));
}

#[test]
fn density_of_simulated_path() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "h.toml", HAWKES);
    let csv = dir.path().join("z.csv");
    let o = ghawkes(&["simulate", "--model", s(&model), "--replicates", "2", "--out", s(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = ghawkes(&["density", "--model", s(&model), "--path", s(&csv), "--replicate", "1", "--p", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = report(&o);
    let (n_side, y_side) = (v["entropy_n_side"].as_f64().unwrap(), v["entropy_ystar_side"].as_f64().unwrap());
    assert!((n_side - y_side).abs() <= 1e-7 * n_side.max(1.0));
    assert_eq!(v["p"], 3.0);
    assert_eq!(v["horizon"], 5.0);
}

#[test]
fn variational_and_quasi_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(
        dir.path(),
        "grid.toml",
        "levels = [0.25, 0.5, 1.0, 2.0]\nwindow = 2.0\n\n[functional]\nkind = \"poisson_log_density\"\nat = 2.0\nrate = 2.0\n",
    );
    let o = ghawkes(&["variational", "--grid", s(&grid), "--replicates", "20000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(report(&o)["report"]["details"]["argmax_level"], 0.5);

    let model = write(dir.path(), "two.toml", TWO_ON_WINDOW);
    let o = ghawkes(&[
        "quasi-invariance", "--model", s(&model), "--t", "1", "--functional", "{kind = \"count\", at = 1.0}", "--replicates", "20000",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = report(&o);
    assert_eq!(v["config"]["functional"]["kind"], "count");
    assert_eq!(v["report"]["target"], 1.0);
}
