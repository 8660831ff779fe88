use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use tradegame::artifacts::{Manifest, Summary};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tradegame"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        format!(
            "horizon = 4\nvolumes = [6, 6]\nlower = -3\nupper = 4\nkappas = [0, 1.5, 10]\nrounds = 60\nruns = 3\nregret_stride = 20\n{extra}"
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn run_is_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ma = fs::read(a.join("manifest.json")).unwrap();
    assert_eq!(ma, fs::read(b.join("manifest.json")).unwrap());
    let manifest: Manifest = serde_json::from_slice(&ma).unwrap();
    // 3 κ × 3 runs × 3 files, plus the combined metrics and summary.
    assert_eq!(manifest.files.len(), 29);
    for f in &manifest.files {
        assert_eq!(fs::read(a.join(&f.path)).unwrap(), fs::read(b.join(&f.path)).unwrap());
    }
    assert!(manifest.files.iter().any(|f| f.path == "kappa_1.5/run_2/trace.csv"));

    let c = dir.path().join("c");
    let o = run(&["run", "--config", &cfg, "--seed", "9", "--out", c.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(fs::read(c.join("manifest.json")).unwrap(), ma);
}

#[test]
fn artifact_schemas_and_summary_consistency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("out");
    assert!(run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());

    let (h, rows) = read_csv(&out.join("kappa_0/run_0/trace.csv"));
    assert_eq!(h, ["run_id", "round", "player", "schedule", "realized_cost"]);
    assert_eq!(rows.len(), 60 * 2);
    assert_eq!(rows[0][..3], ["0", "1", "1"]);
    assert_eq!(rows[0][3].split(',').count(), 4);

    let (h, rows) = read_csv(&out.join("kappa_10/run_1/regret.csv"));
    assert_eq!(h, ["run_id", "player", "round", "cumulative_regret", "average_regret"]);
    assert_eq!(rows.len(), 2 * 3);

    let (h, rows) = read_csv(&out.join("metrics.csv"));
    assert_eq!(
        h,
        ["run_id", "kappa", "rounds", "regret_p1", "regret_p2", "dist_ne", "dist_ce", "dist_cce", "tv", "welfare"]
    );
    assert_eq!(rows.len(), 9);

    let summary: Summary = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.cells.len(), 3);
    for cell in &summary.cells {
        let kappa_rows: Vec<&Vec<String>> = rows
            .iter()
            .filter(|r| r[1].parse::<f64>().unwrap() == cell.kappa)
            .collect();
        assert_eq!(kappa_rows.len(), 3);
        for (col, name) in h.iter().enumerate().skip(3) {
            let vals: Vec<f64> = kappa_rows.iter().map(|r| r[col].parse().unwrap()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((cell.mean[name] - mean).abs() <= 1e-12, "{name}");
        }
        assert_eq!(cell.eta, 50.0);
    }
}

#[test]
fn metrics_subcommand_recomputes_run_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("out");
    assert!(run(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let run_dir = out.join("kappa_1.5/run_1");
    let o = run(&[
        "metrics",
        "--config",
        &cfg,
        "--kappa",
        "1.5",
        "--trace",
        run_dir.join("trace.csv").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), fs::read_to_string(run_dir.join("metrics.csv")).unwrap());

    let missing = run(&["metrics", "--trace", "/nonexistent/trace.csv", "--kappa", "1"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn swap_and_br_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "swap_depth = 2\n");
    let out = dir.path().join("swap");
    let o = run(&["run", "--config", &cfg, "--algo", "swap", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&out.join("kappa_0/run_0/trace.csv"));
    assert_eq!(h.last().unwrap(), "level");
    assert!(rows.iter().all(|r| r[5] == "0" || r[5] == "1"));
    // The level column does not disturb trace parsing.
    let o = run(&[
        "metrics",
        "--config",
        &cfg,
        "--kappa",
        "0",
        "--trace",
        out.join("kappa_0/run_0/trace.csv").to_str().unwrap(),
    ]);
    assert!(o.status.success());

    let derived = run(&["run", "--config", &cfg, "--algo", "swap", "--rounds", "500", "--out", out.to_str().unwrap()]);
    assert!(derived.status.success(), "block is derived from rounds when unset");

    let cfg = small_config(dir.path(), "swap_block = 5\n");
    let bad = run(&["run", "--config", &cfg, "--algo", "swap", "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));

    let out = dir.path().join("br");
    let o = run(&["run", "--algo", "br_dynamics", "--kappa", "0", "--runs", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, _) = read_csv(&out.join("kappa_0/run_0/trace.csv"));
    assert_eq!(h, ["run_id", "sweep", "player", "old_cost", "new_cost", "potential"]);
    assert!(!out.join("kappa_0/run_0/regret.csv").exists());
    let summary: Summary = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.cells[0].converged_runs, Some(2));
}

#[test]
fn single_round_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one");
    let o = run(&["run", "--rounds", "1", "--runs", "1", "--kappa", "2.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (_, trace) = read_csv(&out.join("kappa_2.5/run_0/trace.csv"));
    let cost_sum: f64 = trace.iter().map(|r| r[4].parse::<f64>().unwrap()).sum();
    let (h, rows) = read_csv(&out.join("metrics.csv"));
    let welfare_col = h.iter().position(|c| c == "welfare").unwrap();
    assert_eq!(rows[0][welfare_col].parse::<f64>().unwrap(), cost_sum);
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", "--samples", "500", "--dp-instances", "100"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout(&ok);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    assert!(text.contains("36.0, 33.0, 35.0, 34.0, 32.0, 31.0"));

    let bad = run(&["validate", "--samples", "500", "--dp-instances", "10", "--inject-fault", "perm-kappa"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stdout(&bad).contains("FAIL decomposition_identity"));
}

#[test]
fn br_subcommand_reads_stdin() {
    let o = run_stdin(
        &["br", "--player", "2", "--kappa", "1", "--lower", "0", "--upper", "5"],
        "# cycle start\n2,2,1,0,0\n1,1,1,1,1\n",
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "best_response=3,1,0,0,1\ncost=33\ncurrent_cost=36\n");

    let o = run_stdin(&["br", "--kappa", "0", "--lower", "0", "--upper", "10"], "0,0,0,0,10\n");
    assert_eq!(stdout(&o), "best_response=2,2,2,2,2\ncost=20\ncurrent_cost=100\n");

    let o = run_stdin(&["br", "--player", "3", "--kappa", "1"], "2,2,1,0,0\n1,1,1,1,1\n");
    assert_eq!(o.status.code(), Some(1));
    let o = run_stdin(&["br", "--kappa", "1", "--lower", "0", "--upper", "2"], "3,1,1,0,0\n");
    assert_eq!(o.status.code(), Some(1));
    let o = run_stdin(&["br", "--kappa", "1"], "");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_configs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "runs = 0\n").unwrap();
    let o = run(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("runs"));
    assert_eq!(run(&["run", "--kappa", "-1"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--eta", "fast"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--algo", "mwu"]).status.code(), Some(1));
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["sweep.toml", "swap.toml"] {
        let text = fs::read_to_string(dir.join(name)).unwrap();
        let cfg = tradegame::ExperimentConfig::from_toml(&text).unwrap();
        cfg.validate().unwrap();
    }
}
