// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn chiploop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chiploop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/chip_lifecycle.jsonl")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn example_scenario_ends_dismantled() {
    let out = chiploop(&["run", s(&scenario())]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(
        stdout.contains("product laptop: app 1 Dismantled"),
        "{stdout}"
    );
    assert!(stdout.contains("chip gpu: asset 2 (destroyed)"), "{stdout}");
}

#[test]
fn block_logs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let logs: Vec<Vec<u8>> = ["a.jsonl", "b.jsonl"]
        .iter()
        .map(|name| {
            let path = dir.path().join(name);
            let out = chiploop(&["run", s(&scenario()), "--out", s(&path)]);
            assert!(out.status.success());
            fs::read(path).unwrap()
        })
        .collect();
    assert!(!logs[0].is_empty());
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn snapshot_then_load_keeps_the_state_hash() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("ledger.json");
    let copy = dir.path().join("copy.json");
    let run = chiploop(&["run", s(&scenario()), "--ledger", s(&ledger)]);
    assert!(run.status.success());
    let hash_line = |out: &Output| {
        text(&out.stdout)
            .lines()
            .find(|l| l.starts_with("state hash: "))
            .map(str::to_owned)
            .expect("hash printed")
    };
    let snap = chiploop(&["snapshot", "--ledger", s(&ledger), "--out", s(&copy)]);
    assert!(snap.status.success());
    let load = chiploop(&["load", "--ledger", s(&copy)]);
    assert!(load.status.success(), "{}", text(&load.stderr));
    assert!(text(&load.stdout).contains("replay: ok"));
    assert_eq!(hash_line(&run), hash_line(&load));
    assert_eq!(hash_line(&snap), hash_line(&load));
}

#[test]
fn tampered_snapshot_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("ledger.json");
    assert!(chiploop(&["run", s(&scenario()), "--ledger", s(&ledger)])
        .status
        .success());
    let original = fs::read_to_string(&ledger).unwrap();
    let forged = original.replacen("\"balance\":1000000", "\"balance\":1000001", 1);
    assert_ne!(original, forged);
    fs::write(&ledger, forged).unwrap();
    let out = chiploop(&["load", "--ledger", s(&ledger)]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stdout));
}

#[test]
fn trace_reports_history_and_unknown_assets() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("ledger.json");
    let record = dir.path().join("record.json");
    assert!(chiploop(&["run", s(&scenario()), "--ledger", s(&ledger)])
        .status
        .success());

    let out = chiploop(&["trace", "2", "--ledger", s(&ledger), "--out", s(&record)]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&fs::read(&record).unwrap()).unwrap();
    let names: Vec<&str> = json["events"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["event"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "minted",
            "transferred",
            "bound",
            "released",
            "recycled",
            "destroyed"
        ]
    );

    let missing = chiploop(&["trace", "77", "--ledger", s(&ledger)]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(text(&missing.stderr).contains("unknown asset"));
}

#[test]
fn bench_prints_one_csv_row_per_size() {
    let out = chiploop(&["bench", "--sizes", "1000,5000,10000", "--parallelism", "2"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 4, "{stdout}");
    assert!(lines[0].starts_with("batch_size,blocks_used"));
    let blocks: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(blocks, ["1", "1", "2"]);
}

#[test]
fn bench_writes_csv_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = chiploop(&["bench", "--sizes", "10,20", "--out", s(&csv)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 3);
}

#[test]
fn init_seeds_accounts_from_a_roles_header() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("g.json");
    let out = chiploop(&["init", "--ledger", s(&ledger), "--genesis", s(&scenario())]);
    assert!(out.status.success());
    assert!(text(&out.stdout).contains("with 4 accounts"));
    assert!(chiploop(&["load", "--ledger", s(&ledger)]).status.success());
}

#[test]
fn exit_codes_separate_usage_from_validation() {
    assert_eq!(chiploop(&[]).status.code(), Some(1));
    assert_eq!(chiploop(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(chiploop(&["bench", "--sizes", "x"]).status.code(), Some(1));
    assert_eq!(chiploop(&["--help"]).status.code(), Some(0));
    assert_eq!(
        chiploop(&["load", "--ledger", "/definitely/not/here"])
            .status
            .code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    let good = fs::read_to_string(scenario()).unwrap();
    fs::write(
        &bad,
        good.replace("\"to\": \"computer\"", "\"to\": \"nobody\""),
    )
    .unwrap();
    let out = chiploop(&["run", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("unknown actor"));

    // Recycling a product nobody returned fails in the lifecycle, not the parser.
    let early = dir.path().join("early.jsonl");
    let mut lines: Vec<&str> = good.lines().collect();
    let assemble = lines.iter().position(|l| l.contains("assemble")).unwrap();
    lines.remove(assemble + 2);
    fs::write(&early, lines.join("\n")).unwrap();
    assert_eq!(chiploop(&["run", s(&early)]).status.code(), Some(2));
}
