// SPDX-License-Identifier: Apache-2.0

//! Batch token creation benchmark.
//!
//! A batch of `n` asset creations, all issued by the authenticator, is pushed
//! into the pool (optionally from several submitting threads) and blocks are
//! produced until the pool is empty. Simulated confirmation time follows the
//! block clock, so it is `ceil(n / capacity) * round_seconds`; wall time is
//! whatever this machine needs to submit and apply the batch.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::ledger::{Address, AssetParams, Ledger, LedgerParams, Transaction, TxError};

/// The throughput figure the scheme is sized against, in transactions per second.
pub const ASSUMED_THROUGHPUT_TPS: f64 = 1000.0;

/// Upper bound on confirmed transactions per second: full blocks every round.
pub fn theoretical_throughput() -> f64 {
    throughput_for(&LedgerParams::default())
}

pub fn throughput_for(params: &LedgerParams) -> f64 {
    params.block_capacity as f64 * 1000.0 / params.round_millis as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub batch_size: usize,
    pub blocks_used: u64,
    pub simulated_seconds: f64,
    pub wall_seconds: f64,
    #[serde(rename = "rejected")]
    pub txns_rejected: usize,
}

/// Block-level outcome of a batch, without timing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchRun {
    pub blocks_used: u64,
    pub rejected: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("no batch sizes given")]
    NoSizes,
    #[error(transparent)]
    Rejected(#[from] TxError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn batch_token(submitter: Address, i: u64) -> Transaction {
    Transaction::asset_create(
        submitter,
        AssetParams::nft("BATCH", &format!("token-{i}"), submitter),
    )
    .with_note(i)
}

/// A fresh ledger whose authenticator can pay for `n` creations.
pub fn batch_ledger(params: LedgerParams, n: usize) -> (Ledger, Address) {
    let fee = params.flat_fee;
    let mut ledger = Ledger::with_params(params);
    let auth = ledger.create_account(fee * n as u64);
    ledger
        .appoint_authenticator(auth)
        .expect("account was just created");
    (ledger, auth)
}

/// Submits `n` creations from `parallelism` threads and produces blocks until
/// the pool drains.
pub fn simulate_batch(
    ledger: &mut Ledger,
    n: usize,
    submitter: Address,
    parallelism: usize,
) -> Result<BatchRun, TxError> {
    let needed = ledger.params().flat_fee * n as u64;
    let available = ledger
        .state()
        .balance(&submitter)
        .ok_or(TxError::UnknownAccount { address: submitter })?;
    if available < needed {
        return Err(TxError::InsufficientBalance { needed, available });
    }

    let threads = parallelism.clamp(1, n.max(1));
    if threads == 1 {
        for i in 0..n as u64 {
            ledger.submit(batch_token(submitter, i))?;
        }
    } else {
        let shared: &Ledger = ledger;
        let per = n.div_ceil(threads);
        std::thread::scope(|s| -> Result<(), TxError> {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let lo = (t * per).min(n) as u64;
                    let hi = ((t + 1) * per).min(n) as u64;
                    s.spawn(move || -> Result<(), TxError> {
                        for i in lo..hi {
                            shared.submit(batch_token(submitter, i))?;
                        }
                        Ok(())
                    })
                })
                .collect();
            for h in handles {
                h.join().expect("submitter thread panicked")?;
            }
            Ok(())
        })?;
    }

    let mut run = BatchRun {
        blocks_used: 0,
        rejected: 0,
    };
    while ledger.pool_len() > 0 {
        run.rejected += ledger.produce_block().rejected();
        run.blocks_used += 1;
    }
    Ok(run)
}

/// Runs one batch on `ledger` and times it.
pub fn run_batch_creation(
    ledger: &mut Ledger,
    n: usize,
    submitter: Address,
    parallelism: usize,
) -> Result<BenchResult, TxError> {
    let round_seconds = ledger.params().round_millis as f64 / 1000.0;
    let start = Instant::now();
    let run = simulate_batch(ledger, n, submitter, parallelism)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    Ok(BenchResult {
        batch_size: n,
        blocks_used: run.blocks_used,
        simulated_seconds: run.blocks_used as f64 * round_seconds,
        wall_seconds,
        txns_rejected: run.rejected,
    })
}

/// Least-squares line through a set of points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "fit", rename_all = "snake_case")]
pub enum LinearFit {
    Line {
        slope: f64,
        intercept: f64,
        r_squared: f64,
    },
    /// Fewer than two distinct x values.
    Degenerate,
}

impl LinearFit {
    pub fn of(points: &[(f64, f64)]) -> LinearFit {
        let n = points.len() as f64;
        if points.is_empty() {
            return LinearFit::Degenerate;
        }
        let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
        if sxx == 0.0 {
            return LinearFit::Degenerate;
        }
        let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        let slope = sxy / sxx;
        let intercept = mean_y - slope * mean_x;
        let ss_res: f64 = points
            .iter()
            .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
            .sum();
        let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
        let r_squared = if ss_tot == 0.0 {
            1.0
        } else {
            1.0 - ss_res / ss_tot
        };
        LinearFit::Line {
            slope,
            intercept,
            r_squared,
        }
    }

    pub fn r_squared(&self) -> Option<f64> {
        match self {
            LinearFit::Line { r_squared, .. } => Some(*r_squared),
            LinearFit::Degenerate => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub results: Vec<BenchResult>,
    pub simulated_fit: LinearFit,
    pub wall_fit: LinearFit,
}

/// One batch per size, each on a fresh ledger, followed by linear fits of
/// simulated and wall time against batch size.
pub fn run_sweep(sizes: &[usize], parallelism: usize) -> Result<SweepReport, BenchError> {
    run_sweep_with(LedgerParams::default(), sizes, parallelism, 1)
}

/// Like [`run_sweep`], running each size `repeats` times and keeping the run
/// with the median wall time.
pub fn run_sweep_with(
    params: LedgerParams,
    sizes: &[usize],
    parallelism: usize,
    repeats: usize,
) -> Result<SweepReport, BenchError> {
    if sizes.is_empty() {
        return Err(BenchError::NoSizes);
    }
    let mut results = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut runs = Vec::with_capacity(repeats.max(1));
        for _ in 0..repeats.max(1) {
            let (mut ledger, auth) = batch_ledger(params.clone(), n);
            runs.push(run_batch_creation(&mut ledger, n, auth, parallelism)?);
        }
        runs.sort_by(|a, b| a.wall_seconds.total_cmp(&b.wall_seconds));
        results.push(runs.swap_remove(runs.len() / 2));
    }
    let points = |f: fn(&BenchResult) -> f64| -> Vec<(f64, f64)> {
        results
            .iter()
            .map(|r| (r.batch_size as f64, f(r)))
            .collect()
    };
    let simulated_fit = LinearFit::of(&points(|r| r.simulated_seconds));
    let wall_fit = LinearFit::of(&points(|r| r.wall_seconds));
    Ok(SweepReport {
        results,
        simulated_fit,
        wall_fit,
    })
}

pub const CSV_HEADER: &str = "batch_size,blocks_used,simulated_seconds,wall_seconds,rejected";

/// Writes one row per batch under [`CSV_HEADER`].
pub fn write_csv<W: Write>(out: W, results: &[BenchResult]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    if results.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in results {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
