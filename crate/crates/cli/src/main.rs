// SPDX-License-Identifier: Apache-2.0

//! `chiploop`: run lifecycle scenarios, trace chips, benchmark batch minting
//! and manage ledger snapshots.
//!
//! Exit status is 0 on success, 1 for usage errors (bad flags, unreadable
//! files) and 2 when a scenario, snapshot or query fails validation.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use chiploop::bench;
use chiploop::ledger::{write_block_log, LedgerParams, SnapshotError};
use chiploop::lifecycle::scenario::Scenario;
use chiploop::lifecycle::trace;
use chiploop::{AssetId, Ledger, TxError};

#[derive(Parser)]
#[command(
    name = "chiploop",
    version,
    about = "Token ledger for second-life chips"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a ledger snapshot, optionally seeded from a scenario's roles header.
    Init {
        #[arg(long)]
        ledger: PathBuf,
        /// Scenario file whose roles become the genesis accounts; actions are ignored.
        #[arg(long)]
        genesis: Option<PathBuf>,
    },
    /// Run a JSONL scenario from a fresh genesis.
    Run {
        scenario: PathBuf,
        /// Save the resulting ledger here.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Write the block log (one JSON block per line) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time batch token creation for each size.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 5000, 10000])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// CSV destination; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the provenance of one asset.
    Trace {
        asset_id: u64,
        #[arg(long)]
        ledger: PathBuf,
        /// Also write the record as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Copy a ledger to a new snapshot file.
    Snapshot {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a snapshot and verify it by replaying its block log.
    Load {
        #[arg(long)]
        ledger: PathBuf,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Invalid(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invalid(_) => 2,
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Init { ledger, genesis } => init(&ledger, genesis.as_deref()),
        Command::Run {
            scenario,
            ledger,
            out,
        } => run(&scenario, ledger.as_deref(), out.as_deref()),
        Command::Bench {
            sizes,
            parallelism,
            out,
        } => bench_sizes(&sizes, parallelism, out.as_deref()),
        Command::Trace {
            asset_id,
            ledger,
            out,
        } => trace_asset(AssetId(asset_id), &ledger, out.as_deref()),
        Command::Snapshot { ledger, out } => snapshot(&ledger, &out),
        Command::Load { ledger } => load(&ledger),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Invalid(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn read_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    Scenario::parse(&text)
        .with_context(|| format!("scenario {}", path.display()))
        .map_err(invalid)
}

fn open_ledger(path: &Path) -> Result<Ledger, Failure> {
    Ledger::load_snapshot(path).map_err(|e| {
        let e = match e {
            SnapshotError::Io(io) => {
                return usage(anyhow!(io).context(format!("reading {}", path.display())))
            }
            other => other,
        };
        invalid(anyhow!(e).context(format!("snapshot {}", path.display())))
    })
}

fn save_ledger(ledger: &Ledger, path: &Path) -> Outcome {
    ledger
        .save_snapshot(path)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(usage)
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(usage)
}

fn init(path: &Path, genesis: Option<&Path>) -> Outcome {
    let ledger = match genesis {
        None => Ledger::new(),
        Some(g) => {
            let scenario = read_scenario(g)?;
            scenario
                .genesis(LedgerParams::default())
                .map_err(invalid)?
                .0
        }
    };
    save_ledger(&ledger, path)?;
    println!(
        "initialized {} at round {} with {} accounts",
        path.display(),
        ledger.round(),
        ledger.state().accounts().count()
    );
    Ok(())
}

fn run(path: &Path, ledger_out: Option<&Path>, log_out: Option<&Path>) -> Outcome {
    let scenario = read_scenario(path)?;
    let mut outcome = scenario.run().map_err(invalid)?;
    // Leave nothing pending so the log covers every action.
    if outcome.ledger.pool_len() > 0 {
        outcome.ledger.produce_block();
    }
    let ledger = &outcome.ledger;

    println!("rounds: {}", ledger.round());
    println!("state hash: {}", ledger.state_hash());
    for (name, id) in &outcome.chips {
        let fate = match ledger.state().asset(*id) {
            Some(a) if !a.destroyed => "live",
            _ => "destroyed",
        };
        println!("chip {name}: asset {} ({fate})", id.0);
    }
    for (name, app) in &outcome.products {
        let state = ledger.state().app(*app).expect("assembled product").state;
        println!("product {name}: app {} {state:?}", app.0);
    }

    if let Some(p) = log_out {
        let out = create(p)?;
        write_block_log(out, ledger.blocks())
            .with_context(|| format!("writing {}", p.display()))
            .map_err(usage)?;
    }
    if let Some(p) = ledger_out {
        save_ledger(ledger, p)?;
    }
    Ok(())
}

fn bench_sizes(sizes: &[usize], parallelism: usize, out: Option<&Path>) -> Outcome {
    if parallelism == 0 {
        return Err(usage(anyhow!("parallelism must be at least 1")));
    }
    let report = bench::run_sweep(sizes, parallelism).map_err(invalid)?;
    match out {
        Some(p) => {
            let mut w = create(p)?;
            bench::write_csv(&mut w, &report.results).map_err(invalid)?;
            w.flush().map_err(usage)?;
            for r in &report.results {
                println!(
                    "{:>8} txns  {:>4} blocks  {:>10.1} s simulated  {:>8.3} s wall",
                    r.batch_size, r.blocks_used, r.simulated_seconds, r.wall_seconds
                );
            }
            if let Some(r2) = report.wall_fit.r_squared() {
                println!("wall-time linear fit R^2 = {r2:.4}");
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            bench::write_csv(&mut lock, &report.results).map_err(invalid)?;
        }
    }
    Ok(())
}

fn trace_asset(asset: AssetId, path: &Path, out: Option<&Path>) -> Outcome {
    let ledger = open_ledger(path)?;
    let record = match trace(&ledger, asset) {
        Ok(r) => r,
        Err(TxError::UnknownAsset { .. }) => {
            return Err(invalid(anyhow!("unknown asset {}", asset.0)));
        }
        Err(e) => return Err(invalid(e)),
    };
    for e in &record.events {
        println!(
            "round {:>4}  #{:<4} {}",
            e.round,
            e.position,
            serde_json::to_string(&e.event).expect("event serializes")
        );
    }
    if let Some(p) = out {
        let mut w = create(p)?;
        serde_json::to_writer_pretty(&mut w, &record).map_err(usage)?;
        writeln!(w).and_then(|_| w.flush()).map_err(usage)?;
    }
    Ok(())
}

fn snapshot(path: &Path, out: &Path) -> Outcome {
    let ledger = open_ledger(path)?;
    save_ledger(&ledger, out)?;
    println!("state hash: {}", ledger.state_hash());
    Ok(())
}

fn load(path: &Path) -> Outcome {
    let ledger = open_ledger(path)?;
    let replayed = Ledger::replay(ledger.params().clone(), ledger.blocks())
        .context("replaying the block log")
        .map_err(invalid)?;
    if let Some(last) = ledger.blocks().last() {
        if replayed.state_hash() != last.state_hash {
            return Err(invalid(anyhow!(
                "replayed state does not match the last block"
            )));
        }
    }
    println!("rounds: {}", ledger.round());
    println!("pending transactions: {}", ledger.pool_len());
    println!("state hash: {}", ledger.state_hash());
    println!("replay: ok");
    Ok(())
}
