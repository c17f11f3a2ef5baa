use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"
strategy = "aeig"
batch_size = 15
rounds = 3
repetitions = 2

[dataset.synthetic]
num_classes = 3
dimension = 4
train_counts = [120, 30, 20]
valid_counts = [30, 8, 6]
test_counts = [30, 8, 6]
cluster_separation = 2.5

[model]
hidden_units = 8

[train]
epochs = 6
"#;

fn infogain(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_infogain"));
    cmd.args(args).env_remove("INFOGAIN_OUT_DIR");
    if let Some(dir) = env_out {
        cmd.env("INFOGAIN_OUT_DIR", dir);
    }
    cmd.output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_preset_is_complete_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    let table = ok(&infogain(&["generate", "--preset", "dr-like", "--seed", "0", "--out", s(&a)], None));
    ok(&infogain(&["generate", "--preset", "dr-like", "--seed", "0", "--out", s(&b)], None));
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 8001);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(table.contains("3657"), "{table}");
}

#[test]
fn generate_names_unknown_spec_field() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.toml");
    fs::write(
        &spec,
        "num_classes = 2\ndimension = 2\ntrain_counts = [5, 5]\nvalid_counts = [2, 2]\ntest_counts = [2, 2]\ncluster_separation = 1.0\nseperation = 3\n",
    )
    .unwrap();
    let out = infogain(&["generate", "--spec", s(&spec), "--out", s(&tmp.path().join("d.csv"))], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seperation"));
}

#[test]
fn generate_names_invalid_spec_value() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.toml");
    fs::write(
        &spec,
        "num_classes = 3\ndimension = 2\ntrain_counts = [5, 5, 5]\nvalid_counts = [2, 2, 2]\ntest_counts = [2, 2, 2]\ncluster_separation = 1.0\n",
    )
    .unwrap();
    let out = infogain(&["generate", "--spec", s(&spec), "--out", s(&tmp.path().join("d.csv"))], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
}

#[test]
fn run_accepts_strategy_names_in_any_case() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let out_dir = tmp.path().join("out");
    ok(&infogain(&["run", s(&config), "--strategy", "CfIg", "--out-dir", s(&out_dir)], None));
    let curve = fs::read_to_string(out_dir.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 2 * 3);
    assert!(curve.lines().skip(1).all(|l| l.starts_with("cfig,")));
}

#[test]
fn run_rejects_unknown_strategy() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let out = infogain(&["run", s(&config), "--strategy", "bogus", "--out-dir", s(tmp.path())], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn run_rejects_budget_beyond_pool_before_training() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &CONFIG.replace("batch_size = 15", "batch_size = 100"));
    let out_dir = tmp.path().join("out");
    let out = infogain(&["run", s(&config), "--out-dir", s(&out_dir)], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("batch_size"));
    assert!(!out_dir.exists());
}

#[test]
fn run_names_unknown_config_field() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &CONFIG.replace("repetitions = 2", "repetitons = 2"));
    let out = infogain(&["run", s(&config), "--out-dir", s(tmp.path())], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("repetitons"));
}

#[test]
fn compare_with_one_strategy_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let (a, b) = (tmp.path().join("run"), tmp.path().join("compare"));
    ok(&infogain(&["run", s(&config), "--out-dir", s(&a)], None));
    let text = ok(&infogain(&["compare", s(&config), "--strategies", "aeig", "--out-dir", s(&b)], None));
    for f in ["curve.csv", "aggregate.csv", "acquisitions.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(b.join("reference.csv").exists());
    assert!(text.contains("all-95%"));
}

#[test]
fn compare_uses_shared_seed_rounds() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let out_dir = tmp.path().join("out");
    ok(&infogain(&["compare", s(&config), "--strategies", "random,coreset", "--out-dir", s(&out_dir)], None));
    let curve = fs::read_to_string(out_dir.join("curve.csv")).unwrap();
    let round0: Vec<Vec<&str>> = curve
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[3] == "0")
        .collect();
    assert_eq!(round0.len(), 4);
    for rep in ["0", "1"] {
        let aucs: Vec<&str> = round0.iter().filter(|f| f[1] == rep).map(|f| f[6]).collect();
        assert_eq!(aucs[0], aucs[1]);
    }
}

#[test]
fn report_reproduces_aggregate_file() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let out_dir = tmp.path().join("out");
    ok(&infogain(&["run", s(&config), "--out-dir", s(&out_dir)], None));
    let text = ok(&infogain(&["report", s(&out_dir)], None));
    assert_eq!(text, fs::read_to_string(out_dir.join("aggregate.csv")).unwrap());
}

#[test]
fn report_suffixes_repeated_strategy_names() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&infogain(&["run", s(&config), "--out-dir", s(&a)], None));
    ok(&infogain(&["run", s(&config), "--out-dir", s(&b), "--seed", "9"], None));
    let text = ok(&infogain(&["report", s(&a), s(&b)], None));
    assert!(text.lines().any(|l| l.starts_with("aeig,")));
    assert!(text.lines().any(|l| l.starts_with("aeig#2,")));
}

#[test]
fn report_names_missing_column() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("curve.csv"), "strategy,repetition,seed,round\naeig,0,0,0\n").unwrap();
    let out = infogain(&["report", s(tmp.path())], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("labeled_count"));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let env_dir = tmp.path().join("from_env");
    ok(&infogain(&["run", s(&config), "--repetitions", "1"], Some(&env_dir)));
    assert!(env_dir.join("curve.csv").exists());
    let copy = fs::read_to_string(env_dir.join("config.toml")).unwrap();
    assert!(copy.contains("from_env"));

    let flag_dir = tmp.path().join("from_flag");
    ok(&infogain(&["run", s(&config), "--repetitions", "1", "--out-dir", s(&flag_dir)], Some(&env_dir)));
    assert!(flag_dir.join("curve.csv").exists());
}

#[test]
fn saved_config_reruns_to_identical_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&infogain(&["run", s(&config), "--strategy", "mcd-bald", "--out-dir", s(&a)], None));
    ok(&infogain(&["run", s(&a.join("config.toml")), "--out-dir", s(&b)], None));
    assert_eq!(fs::read(a.join("curve.csv")).unwrap(), fs::read(b.join("curve.csv")).unwrap());
}

#[test]
fn jobs_flag_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&infogain(&["--jobs", "1", "run", s(&config), "--out-dir", s(&a)], None));
    ok(&infogain(&["--jobs", "8", "run", s(&config), "--out-dir", s(&b)], None));
    assert_eq!(fs::read(a.join("curve.csv")).unwrap(), fs::read(b.join("curve.csv")).unwrap());
}

#[test]
fn json_flag_writes_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), CONFIG);
    let out_dir = tmp.path().join("out");
    ok(&infogain(&["--json", "run", s(&config), "--out-dir", s(&out_dir)], None));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["strategy"], "aeig");

    let text = ok(&infogain(&["--json", "bench", s(&config), "--out-dir", s(&out_dir)], None));
    assert!(text.contains("coreset"));
    let bench: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("bench.json")).unwrap()).unwrap();
    let rows = bench.as_array().unwrap();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0]["forwards_per_candidate"], 0.0);
}
