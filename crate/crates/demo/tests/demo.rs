// SPDX-License-Identifier: Apache-2.0

use chiploop_demo::{confirmation_curve, lifecycle_trace, throughput, MAX_BATCH};
use serde_json::Value;

fn json(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn curve_steps_once_per_full_block() {
    let curve = json(confirmation_curve(5000, 4500, 20_000, 8).unwrap());
    let points = curve.as_array().unwrap();
    assert_eq!(points.len(), 8);
    for p in points {
        let n = p["batch_size"].as_u64().unwrap();
        let blocks = n.div_ceil(5000);
        assert_eq!(p["blocks"].as_u64().unwrap(), blocks);
        assert_eq!(p["seconds"].as_f64().unwrap(), blocks as f64 * 4.5);
    }
    assert_eq!(points.last().unwrap()["batch_size"], 20_000);
}

#[test]
fn curve_follows_custom_parameters() {
    let curve = json(confirmation_curve(17, 1000, 60, 60).unwrap());
    let blocks: Vec<u64> = curve
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["blocks"].as_u64().unwrap())
        .collect();
    let expected: Vec<u64> = (1..=60u64).map(|n| n.div_ceil(17)).collect();
    assert_eq!(blocks, expected);
}

#[test]
fn curve_rejects_bad_input() {
    assert!(confirmation_curve(0, 4500, 10, 2).is_err());
    assert!(confirmation_curve(15, 4500, 10, 2).is_err());
    assert!(confirmation_curve(5000, 0, 10, 2).is_err());
    assert!(confirmation_curve(5000, 4500, 0, 2).is_err());
    assert!(confirmation_curve(5000, 4500, MAX_BATCH + 1, 2).is_err());
}

#[test]
fn throughput_matches_capacity_over_round() {
    let t = json(throughput(5000, 4500).unwrap());
    let tps = t["transactions_per_second"].as_f64().unwrap();
    assert!((tps - 10_000.0 / 9.0).abs() < 1e-9);
    assert!(tps > t["assumed"].as_f64().unwrap());
    let half = json(throughput(2500, 4500).unwrap());
    assert!((half["transactions_per_second"].as_f64().unwrap() - tps / 2.0).abs() < 1e-9);
}

fn last_events(report: &Value) -> Vec<String> {
    report["chips"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            let steps = c["steps"].as_array().unwrap();
            steps.last().unwrap()["event"].as_str().unwrap().to_owned()
        })
        .collect()
}

#[test]
fn lifecycle_reuse_ends_with_the_maker() {
    let report = json(lifecycle_trace(false).unwrap());
    assert_eq!(report["products"]["laptop"], "Dismantled");
    assert_eq!(last_events(&report), ["recycled", "recycled"]);
    let cpu = &report["chips"][0];
    assert_eq!(cpu["serial"], "CPU-0001");
    let names: Vec<&str> = cpu["steps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["event"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["minted", "transferred", "bound", "released", "recycled"]
    );
    assert_eq!(cpu["steps"][0]["detail"], "by auth");
    assert_eq!(cpu["steps"][4]["detail"], "out of app 1 to computer");
}

#[test]
fn lifecycle_destroy_burns_every_chip() {
    let report = json(lifecycle_trace(true).unwrap());
    assert_eq!(report["products"]["laptop"], "Dismantled");
    assert_eq!(last_events(&report), ["destroyed", "destroyed"]);
}
