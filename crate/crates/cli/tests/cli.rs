use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mracrl::harness::read_summary_csv;
use mracrl::quad::{observation_scaling, TaskConfig, ACTION_DIM};
use mracrl::rl::Policy;
use mracrl::seed::stream_rng;

fn mracrl(args: &[&str], output_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mracrl"));
    cmd.args(args).env_remove("MRACRL_OUTPUT_DIR");
    if let Some(dir) = output_dir {
        cmd.env("MRACRL_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Short episodes and small random policies so every command finishes fast.
fn quick_setup(dir: &Path) -> PathBuf {
    let task = TaskConfig { t_max: 1.0, ..TaskConfig::default() };
    for (name, seed) in [("rl.json", 3), ("dr.json", 4)] {
        let policy =
            Policy::random(observation_scaling(&task), ACTION_DIM, &[8], -1.0, &mut stream_rng(seed, 0)).unwrap();
        policy.save(&dir.join(name)).unwrap();
    }
    let config = serde_json::json!({
        "task": { "T_max": 1.0 },
        "episodes": 2,
        "seed_base": 40,
        "output_dir": dir.join("out"),
        "policies": { "rl": dir.join("rl.json"), "dr_rl": dir.join("dr.json") },
    });
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn eval_with_zero_episodes_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_setup(dir.path());
    let out = mracrl(&["eval", "--config", config.to_str().unwrap(), "--condition", "rl", "--episodes", "0"], None);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("episodes"), "{err}");
}

#[test]
fn unknown_config_key_and_missing_policy_fail_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"episdoes": 3}"#).unwrap();
    let out = mracrl(&["compare", "--config", bad.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert_eq!(stderr(&out).trim_end().lines().count(), 1);

    let cfg = dir.path().join("nopolicy.json");
    fs::write(&cfg, format!(r#"{{"output_dir": {:?}}}"#, dir.path().join("out"))).unwrap();
    let out = mracrl(&["eval", "--config", cfg.to_str().unwrap(), "--condition", "mrac-rl"], None);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("rl_policy.json") && err.trim_end().lines().count() == 1, "{err}");
}

#[test]
fn compare_emits_one_row_per_condition_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_setup(dir.path());
    let out = mracrl(&["compare", "--config", config.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_summary_csv(out.stdout.as_slice()).unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r.condition.label()).collect();
    assert_eq!(labels, ["RL", "MRAC-RL", "DR-RL"]);
    assert!(rows.iter().all(|r| r.episodes == 2 && r.uncertainty == "parametric_25pct"));

    let first = dir.path().join("out");
    let csv = fs::read_to_string(first.join("compare.csv")).unwrap();
    assert_eq!(csv.as_bytes(), out.stdout.as_slice());
    assert!(first.join("records/mrac-rl/parametric_25pct/seed_41.json").exists());
    assert!(first.join("trajectories/baseline_seed_40.csv").exists());
    assert!(!first.join(".mracrl.lock").exists());

    let echoed = first.join("resolved_config.json");
    let second = dir.path().join("again");
    let out = mracrl(&["compare", "--config", echoed.to_str().unwrap()], Some(&second));
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(second.join("compare.csv")).unwrap(), csv);
    let rec = "records/rl/parametric_25pct/seed_40.json";
    assert_eq!(fs::read(first.join(rec)).unwrap(), fs::read(second.join(rec)).unwrap());
}

#[test]
fn sweep_and_eval_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_setup(dir.path());
    let c = config.to_str().unwrap();
    let out = mracrl(&["sweep-loe", "--config", c, "--betas", "0.9,0.5"], None);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_summary_csv(out.stdout.as_slice()).unwrap();
    let cells: Vec<(String, &str)> = rows.iter().map(|r| (r.uncertainty.clone(), r.condition.label())).collect();
    assert_eq!(
        cells,
        [
            ("loe_10pct_prop4".to_string(), "RL"),
            ("loe_10pct_prop4".to_string(), "MRAC-RL"),
            ("loe_50pct_prop4".to_string(), "RL"),
            ("loe_50pct_prop4".to_string(), "MRAC-RL"),
        ]
    );
    assert!(!mracrl(&["sweep-loe", "--config", c, "--betas", "0.5,1.5"], None).status.success());

    let policy = dir.path().join("dr.json");
    let out = mracrl(&["eval", "--config", c, "--condition", "dr-rl", "--policy", policy.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_summary_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(dir.path().join("out/eval_dr-rl.csv").exists());
}

#[test]
fn held_lock_blocks_a_second_run() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_setup(dir.path());
    fs::create_dir_all(dir.path().join("out")).unwrap();
    fs::write(dir.path().join("out/.mracrl.lock"), "1\n").unwrap();
    let out = mracrl(&["compare", "--config", config.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("locked"));
}

fn write_line_csv(path: &Path) {
    let mut text = String::from("t,x1,x2,x3,u1\n");
    for k in 0..5 {
        let t = k as f64 * 0.5;
        text.push_str(&format!("{t},{},{},{},0\n", t, -t, 3.0 - t));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn plot_of_identical_files_overlaps_and_reparses() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_line_csv(&a);
    write_line_csv(&b);
    let svg_path = dir.path().join("fig.svg");
    let traj = format!("{},{}", a.display(), b.display());
    let out = mracrl(&["plot", "--trajectories", &traj, "--out", svg_path.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", stderr(&out));

    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(!svg.is_empty());
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let comment = doc.root().children().find(|n| n.is_comment()).and_then(|n| n.text()).unwrap();
    assert!(comment.contains("a.csv") && comment.contains("b.csv"));
    let panels: Vec<_> = doc.descendants().filter(|n| n.attribute("class") == Some("panel")).collect();
    assert_eq!(panels.len(), 3);
    for panel in panels {
        let lines: Vec<_> = panel.descendants().filter(|n| n.has_tag_name("polyline")).collect();
        assert_eq!(lines.len(), 2);
        let pts: Vec<&str> = lines.iter().map(|n| n.attribute("points").unwrap()).collect();
        assert_eq!(pts[0], pts[1]);
        assert_eq!(pts[0].split_whitespace().count(), 5);
    }
    assert_eq!(
        doc.descendants().filter_map(|n| n.attribute("data-label")).take(2).collect::<Vec<_>>(),
        ["a", "b"]
    );
}

#[test]
fn plot_rejects_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.svg");
    let res = mracrl(&["plot", "--trajectories", "/nonexistent.csv", "--out", out.to_str().unwrap()], None);
    assert!(!res.status.success());
    assert!(stderr(&res).contains("nonexistent.csv"));
}
