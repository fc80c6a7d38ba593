use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mailab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mailab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Column `name` of every data row.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

#[test]
fn gen_fig1_writes_five_files_with_expected_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mailab(
        tmp.path(),
        &["gen", "--name", "fig1", "--horizon", "8", "--out", "d"],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);
    let expected = json(&tmp.path().join("d/expected.json"));
    assert_eq!(expected["expected"]["regret_gap"], 6.0);
}

#[test]
fn gen_multi_ce_nfg_writes_two_games() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&mailab(
            tmp.path(),
            &["gen", "--name", "multi-ce-nfg", "--out", "n"]
        )),
        0
    );
    let games = fs::read_dir(tmp.path().join("n"))
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with("-game.json")
        })
        .count();
    assert_eq!(games, 2);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&mailab(tmp.path(), &["gen", "--name", "nope"])), 2);
    assert_eq!(
        code(&mailab(tmp.path(), &["verify", "--suite", "thm99"])),
        2
    );
    assert_eq!(
        code(&mailab(
            tmp.path(),
            &["gen", "--name", "fig1", "--horizon", "1"]
        )),
        2
    );
    fs::write(
        tmp.path().join("empty.json"),
        r#"{"base_seed": 1, "grid": {}, "fixture": "fig1", "algo": "none", "jobs": 1, "out": "s"}"#,
    )
    .unwrap();
    assert_eq!(
        code(&mailab(tmp.path(), &["sweep", "--config", "empty.json"])),
        2
    );
}

#[test]
fn eval_reports_fig1_gap_and_zero_self_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    mailab(
        dir,
        &["gen", "--name", "fig1", "--horizon", "6", "--out", "d"],
    );
    let out = mailab(
        dir,
        &[
            "eval",
            "--game",
            "d/game.json",
            "--expert",
            "d/expert.json",
            "--learner",
            "d/learner.json",
            "--expected",
            "d/expected.json",
            "--out",
            "e",
        ],
    );
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.join("e/report.csv")).unwrap();
    assert_eq!(column(&csv, "regret_gap"), vec!["4.0"]);
    assert_eq!(json(&dir.join("e/eval.json"))["value_gap"], 0.0);

    mailab(
        dir,
        &[
            "eval",
            "--game",
            "d/game.json",
            "--expert",
            "d/expert.json",
            "--learner",
            "d/expert.json",
            "--out",
            "self",
        ],
    );
    let report = json(&dir.join("self/eval.json"));
    assert_eq!(report["regret_gap"], 0.0);
    assert_eq!(report["value_gap"], 0.0);

    // only identities in the file: nobody gains by deviating
    fs::write(dir.join("ident.json"), "[]").unwrap();
    mailab(
        dir,
        &[
            "eval",
            "--game",
            "d/game.json",
            "--expert",
            "d/expert.json",
            "--learner",
            "d/learner.json",
            "--deviations",
            "file",
            "--deviation-file",
            "ident.json",
            "--out",
            "id",
        ],
    );
    assert_eq!(json(&dir.join("id/eval.json"))["regret"], 0.0);
}

#[test]
fn coverage_violations_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    mailab(
        dir,
        &["gen", "--name", "fig1", "--horizon", "5", "--out", "d"],
    );
    let train = mailab(
        dir,
        &[
            "train",
            "--algo",
            "malice",
            "--game",
            "d/game.json",
            "--expert",
            "d/expert.json",
        ],
    );
    assert_eq!(code(&train), 3);
    let eval = mailab(
        dir,
        &[
            "eval",
            "--game",
            "d/game.json",
            "--expert",
            "d/expert.json",
            "--learner",
            "d/learner.json",
            "--require-coverage",
        ],
    );
    assert_eq!(code(&eval), 3);
}

#[test]
fn train_blades_on_fig1_logs_queries_and_closes_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    mailab(
        dir,
        &["gen", "--name", "fig1", "--horizon", "8", "--out", "d"],
    );
    let out = mailab(
        dir,
        &[
            "train",
            "--algo",
            "blades",
            "--game",
            "d/game.json",
            "--expert",
            "d/expert.json",
            "--deviations",
            "file",
            "--deviation-file",
            "d/deviations.json",
            "--rule",
            "ftl",
            "--rounds",
            "20",
            "--demos",
            "10",
            "--out",
            "t",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.join("t/summary.json"));
    assert!(summary["regret_gap"].as_f64().unwrap() <= 1e-6);
    let queries = summary["query_count"].as_u64().unwrap();
    assert!(queries > 0);
    let log = fs::read_to_string(dir.join("t/queries.jsonl")).unwrap();
    assert_eq!(log.lines().count() as u64, queries);
    let trace = fs::read_to_string(dir.join("t/trace.csv")).unwrap();
    assert_eq!(column(&trace, "round").len(), 20);
    assert!(dir.join("t/policy.json").exists());
}

#[test]
fn train_jbc_exact_on_full_coverage_has_zero_loss() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    mailab(
        dir,
        &[
            "gen",
            "--name",
            "coverage-lb",
            "--horizon",
            "6",
            "--u",
            "4",
            "--beta",
            "0.1",
            "--eps",
            "0.01",
            "--out",
            "d",
        ],
    );
    let out = mailab(
        dir,
        &[
            "train",
            "--algo",
            "jbc",
            "--game",
            "d/game.json",
            "--expert",
            "d/expert.json",
            "--out",
            "t",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.join("t/summary.json"))["final_loss"], 0.0);
}

#[test]
fn train_malice_respects_its_bound_on_random_games() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("s.json"),
        r#"{"base_seed": 5, "grid": {"seed": [1, 2, 3]}, "fixture": "random", "algo": "malice", "jobs": 3, "out": "s"}"#,
    )
    .unwrap();
    let out = mailab(dir, &["sweep", "--config", "s.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.join("s/sweep.csv")).unwrap();
    assert!(column(&csv, "pass").iter().all(|p| p == "true"));
}

#[test]
fn verify_thm3_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mailab(tmp.path(), &["verify", "--suite", "thm3", "--out", "r.csv"]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(tmp.path().join("r.csv")).unwrap();
    assert_eq!(column(&csv, "pass").len(), 12);
    assert!(column(&csv, "schema_version").iter().all(|v| v == "1"));
}

#[test]
fn sweep_over_horizon_has_unit_slope_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let config = |jobs: usize, out: &str| {
        format!(
            r#"{{"base_seed": 3, "grid": {{"H": [4, 6, 8, 12]}}, "fixture": "fig1", "algo": "none", "jobs": {jobs}, "out": "{out}"}}"#
        )
    };
    fs::write(dir.join("a.json"), config(1, "a")).unwrap();
    fs::write(dir.join("b.json"), config(4, "b")).unwrap();
    assert_eq!(code(&mailab(dir, &["sweep", "--config", "a.json"])), 0);
    assert_eq!(code(&mailab(dir, &["sweep", "--config", "b.json"])), 0);
    let a = fs::read_to_string(dir.join("a/sweep.csv")).unwrap();
    let b = fs::read_to_string(dir.join("b/sweep.csv")).unwrap();
    assert_eq!(column(&a, "regret_gap"), vec!["2.0", "4.0", "6.0", "10.0"]);
    assert_eq!(column(&a, "regret_gap"), column(&b, "regret_gap"));
    assert_eq!(column(&a, "seed"), column(&b, "seed"));
    let slope = &json(&dir.join("a/summary.json"))["regret_gap_slope"];
    assert!((slope["slope"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_over_eps_is_linear_on_coverage_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("c.json"),
        r#"{"base_seed": 1, "grid": {"H": [20], "u": [10], "beta": [0.05], "eps": [0.0005, 0.001, 0.002]}, "fixture": "coverage-lb", "algo": "none", "jobs": 2, "out": "c"}"#,
    )
    .unwrap();
    assert_eq!(code(&mailab(dir, &["sweep", "--config", "c.json"])), 0);
    let slope = json(&dir.join("c/summary.json"))["regret_gap_slope"]["slope"]
        .as_f64()
        .unwrap();
    // H (u' - 2) / (2 beta)
    let expected = 20.0 * (10.0 - 2.0) / (2.0 * 0.05);
    assert!((slope - expected).abs() < 1e-6, "{slope} vs {expected}");
}
