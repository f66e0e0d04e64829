use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use marxbench_core::fredmd::synthetic::{generate, to_fredmd_csv, SyntheticConfig};
use marxbench_core::YearMonth;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_marxbench"));
    cmd.env_remove("MARXBENCH_DATA").env_remove("MARXBENCH_WORKERS").env("RUST_LOG", "warn");
    cmd
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        "targets = [\"INDPRO\", \"UNRATE\"]\nhorizons = [1, 3]\nmodels = [\"AR\", \"FM\"]\n\
         poos_start = \"1990-01\"\npoos_end = \"1990-06\"\nseed = 11\n",
    )
    .unwrap();
    path
}

fn data_file(dir: &Path) -> PathBuf {
    let raw = generate(&SyntheticConfig {
        n_series: 12,
        end: YearMonth::new(1992, 12).unwrap(),
        late_series: false,
        ..Default::default()
    });
    let path = dir.join("panel.csv");
    fs::write(&path, to_fredmd_csv(&raw)).unwrap();
    path
}

fn run_small(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let config = small_config(dir);
    let data = data_file(dir);
    bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--data")
        .arg(&data)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn dry_run_lists_the_filtered_grid() {
    let o = bin()
        .args(["run", "--config"])
        .arg(repo_file("configs/smoke.toml"))
        .args(["--horizons", "1,3", "--targets", "INDPRO", "--dry-run"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let cells: Vec<&str> = text.lines().filter(|l| l.contains("/h")).collect();
    assert_eq!(cells.len(), 2 * 4);
    assert!(cells.iter().all(|c| c.starts_with("INDPRO/")));
    assert!(text.contains("8 cells x 132 origins = 1056 forecasts"), "{text}");
}

#[test]
fn run_writes_restricted_store_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_small(dir.path(), "a", &["--targets", "INDPRO", "--horizons", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("a/forecasts.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 6);
    assert!(rows.iter().all(|r| r.starts_with("INDPRO,1,")));
    for f in ["rmse.csv", "rmse.txt", "best_specs.csv", "gr_paths.csv", "manifest.json", "marginal_marx.csv"] {
        assert!(dir.path().join("a/report").join(f).exists(), "{f}");
    }
    let manifest = fs::read_to_string(dir.path().join("a/report/manifest.json")).unwrap();
    assert!(manifest.contains("\"config_hash\"") && manifest.contains("\"seed\": 11"));
}

#[test]
fn repeated_runs_give_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path(), "a", &[]).status.success());
    assert!(run_small(dir.path(), "b", &["--workers", "2"]).status.success());
    for f in ["forecasts.csv", "report/rmse.csv", "report/cumulative_errors.csv", "report/manifest.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn resume_refuses_a_changed_seed() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path(), "a", &[]).status.success());
    let again = run_small(dir.path(), "a", &[]);
    assert!(!again.status.success());
    assert!(stderr(&again).contains("already exists"));

    let config = small_config(dir.path());
    let resume = |extra: &[&str]| {
        bin()
            .args(["resume", "--config"])
            .arg(&config)
            .arg("--data")
            .arg(dir.path().join("panel.csv"))
            .arg("--out")
            .arg(dir.path().join("a"))
            .args(extra)
            .output()
            .unwrap()
    };
    let same = resume(&[]);
    assert!(same.status.success(), "{}", stderr(&same));
    assert!(stdout(&same).contains("0 computed now"));
    let changed = resume(&["--seed", "12"]);
    assert_eq!(changed.status.code(), Some(1));
    assert!(stderr(&changed).contains("seed: 11 -> 12"), "{}", stderr(&changed));
}

#[test]
fn report_takes_the_benchmark_as_a_parameter() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path(), "a", &["--no-report"]).status.success());
    let o = bin()
        .args(["report", "--store"])
        .arg(dir.path().join("a"))
        .args(["--benchmark", "AR", "--mcs-reps", "200"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let rmse = fs::read_to_string(dir.path().join("a/report/rmse.csv")).unwrap();
    let ar_rows: Vec<&str> = rmse.lines().filter(|l| l.contains(",AR,AR,")).collect();
    assert_eq!(ar_rows.len(), 4);
    assert!(ar_rows.iter().all(|l| l.split(',').nth(6) == Some("1.0000000000")));
}

#[test]
fn validate_reports_problems() {
    let dir = tempfile::tempdir().unwrap();
    let clean = data_file(dir.path());
    let o = bin().arg("validate").arg("--data").arg(&clean).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 errors, 0 warnings"));

    let text = fs::read_to_string(&clean).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines.remove(40);
    // INDPRO is the first series and has tcode 5
    let mut cells: Vec<String> = lines[50].split(',').map(str::to_string).collect();
    cells[1] = "-3".into();
    lines[50] = cells.join(",");
    let broken = dir.path().join("broken.csv");
    fs::write(&broken, lines.join("\n") + "\n").unwrap();
    let o = bin().arg("validate").arg("--data").arg(&broken).output().unwrap();
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.contains("date gap"), "{out}");
    assert!(out.contains("domain violation"), "{out}");
    assert!(out.contains("2 errors"), "{out}");
}

#[test]
fn bad_invocations_fail() {
    let o = bin().args(["run", "--no-such-flag"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["run", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot read"));
    let o = bin().args(["validate", "--data", "/nonexistent.csv"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn selftest_is_green() {
    let o = bin().arg("selftest").output().unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn shipped_full_config_is_the_default() {
    let cfg = marxbench_core::harness::ExperimentConfig::load(&repo_file("configs/full.toml")).unwrap();
    assert_eq!(cfg, marxbench_core::harness::ExperimentConfig::default());
}
