// SPDX-License-Identifier: Apache-2.0

//! Browser demo. The plain functions return JSON strings so they can be
//! tested natively; the `wasm_*` exports wrap them for JavaScript.

use std::collections::BTreeMap;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use chiploop::bench;
use chiploop::ledger::{Address, LedgerParams, MAX_GROUP_SIZE, ROUND_MILLIS};
use chiploop::lifecycle::scenario::{DispositionSpec, Scenario};
use chiploop::lifecycle::{trace, ProvenanceEvent};

/// The scenario shipped with the command-line tool.
pub const SCENARIO: &str = include_str!("../../cli/scenarios/chip_lifecycle.jsonl");

/// Largest batch the demo will simulate in one call.
pub const MAX_BATCH: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub batch_size: usize,
    pub blocks: u64,
    pub seconds: f64,
}

fn params(capacity: usize, round_millis: u64) -> Result<LedgerParams, String> {
    if capacity < MAX_GROUP_SIZE {
        return Err(format!("block capacity must be at least {MAX_GROUP_SIZE}"));
    }
    if round_millis == 0 {
        return Err("round length must be positive".into());
    }
    Ok(LedgerParams {
        block_capacity: capacity,
        round_millis,
        ..LedgerParams::default()
    })
}

/// Confirmation time against batch size, from `points` evenly spaced batches
/// up to `max_batch`, each actually minted on a fresh ledger.
pub fn confirmation_curve(
    capacity: usize,
    round_millis: u64,
    max_batch: usize,
    points: usize,
) -> Result<String, String> {
    let params = params(capacity, round_millis)?;
    if max_batch == 0 || max_batch > MAX_BATCH {
        return Err(format!("batch size must be within 1..={MAX_BATCH}"));
    }
    let points = points.clamp(1, 200);
    let mut curve = Vec::with_capacity(points);
    for i in 1..=points {
        let n = (max_batch * i).div_ceil(points);
        let (mut ledger, auth) = bench::batch_ledger(params.clone(), n);
        let run = bench::simulate_batch(&mut ledger, n, auth, 1).map_err(|e| e.to_string())?;
        curve.push(CurvePoint {
            batch_size: n,
            blocks: run.blocks_used,
            seconds: run.blocks_used as f64 * round_millis as f64 / 1000.0,
        });
    }
    Ok(serde_json::to_string(&curve).expect("curve serializes"))
}

#[derive(Serialize)]
struct Throughput {
    transactions_per_second: f64,
    assumed: f64,
    default_round_millis: u64,
}

pub fn throughput(capacity: usize, round_millis: u64) -> Result<String, String> {
    let params = params(capacity, round_millis)?;
    Ok(serde_json::to_string(&Throughput {
        transactions_per_second: bench::throughput_for(&params),
        assumed: bench::ASSUMED_THROUGHPUT_TPS,
        default_round_millis: ROUND_MILLIS,
    })
    .expect("throughput serializes"))
}

#[derive(Serialize)]
struct Step {
    round: u64,
    position: usize,
    event: &'static str,
    detail: String,
}

#[derive(Serialize)]
struct ChipHistory {
    chip: String,
    asset_id: u64,
    serial: String,
    steps: Vec<Step>,
}

#[derive(Serialize)]
struct LifecycleReport {
    rounds: u64,
    products: BTreeMap<String, String>,
    chips: Vec<ChipHistory>,
}

/// Runs the bundled scenario with every chip either reused by its maker or
/// destroyed, and returns each chip's provenance with actor names resolved.
pub fn lifecycle_trace(destroy: bool) -> Result<String, String> {
    let mut scenario = Scenario::parse(SCENARIO).map_err(|e| e.to_string())?;
    for (_, action) in &mut scenario.actions {
        if let chiploop::lifecycle::scenario::Action::Recycle { dispositions, .. } = action {
            for d in dispositions.values_mut() {
                *d = if destroy {
                    DispositionSpec::Destroy
                } else {
                    DispositionSpec::Reuse("computer".into())
                };
            }
        }
    }
    let run = scenario.run().map_err(|e| e.to_string())?;
    let names: BTreeMap<Address, &str> = run
        .actors
        .iter()
        .map(|(name, addr)| (*addr, name.as_str()))
        .collect();
    let who = |a: &Address| {
        names
            .get(a)
            .map_or_else(|| a.to_string(), |n| n.to_string())
    };

    let mut chips = Vec::new();
    for (chip, id) in &run.chips {
        let record = trace(&run.ledger, *id).map_err(|e| e.to_string())?;
        let steps = record
            .events
            .iter()
            .map(|e| Step {
                round: e.round,
                position: e.position,
                event: e.event.name(),
                detail: match &e.event {
                    ProvenanceEvent::Minted { by } => format!("by {}", who(by)),
                    ProvenanceEvent::Transferred { from, to } => {
                        format!("{} to {}", who(from), who(to))
                    }
                    ProvenanceEvent::Bound { app } | ProvenanceEvent::Released { app } => {
                        format!("product app {}", app.0)
                    }
                    ProvenanceEvent::Recycled { app, to } => {
                        format!("out of app {} to {}", app.0, who(to))
                    }
                    ProvenanceEvent::Destroyed => String::new(),
                },
            })
            .collect();
        chips.push(ChipHistory {
            chip: chip.clone(),
            asset_id: id.0,
            serial: run.passports[chip].chip_serial.clone(),
            steps,
        });
    }
    let products = run
        .products
        .iter()
        .map(|(name, app)| {
            let state = run.ledger.state().app(*app).expect("assembled").state;
            (name.clone(), format!("{state:?}"))
        })
        .collect();
    Ok(serde_json::to_string(&LifecycleReport {
        rounds: run.ledger.round(),
        products,
        chips,
    })
    .expect("report serializes"))
}

#[wasm_bindgen(js_name = confirmationCurve)]
pub fn wasm_confirmation_curve(
    capacity: usize,
    round_millis: u32,
    max_batch: usize,
    points: usize,
) -> Result<String, JsError> {
    confirmation_curve(capacity, round_millis.into(), max_batch, points)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = throughput)]
pub fn wasm_throughput(capacity: usize, round_millis: u32) -> Result<String, JsError> {
    throughput(capacity, round_millis.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = lifecycleTrace)]
pub fn wasm_lifecycle_trace(destroy: bool) -> Result<String, JsError> {
    lifecycle_trace(destroy).map_err(|e| JsError::new(&e))
}
