// SPDX-License-Identifier: Apache-2.0

//! Snapshot files and block logs.
//!
//! A snapshot is a versioned JSON document holding the parameters, the
//! committed state, the full block list and anything still pending (pool
//! entries and unrecorded account events), so a loaded ledger continues
//! exactly where the saved one stopped. A block log is one JSON block per line.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::state::LedgerState;
use super::{AdminEvent, Block, Ledger, LedgerParams, Pool, Transaction};

pub const SNAPSHOT_VERSION: u32 = 1;
const SNAPSHOT_FORMAT: &str = "chiploop-snapshot";

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("decode: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("unsupported snapshot format {format:?} version {version}")]
    Version { format: String, version: u32 },
    #[error("snapshot state does not match its last block")]
    Inconsistent,
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    format: String,
    version: u32,
    params: LedgerParams,
    state: LedgerState,
    blocks: Vec<Block>,
    pending_admin: Vec<AdminEvent>,
    pool: Vec<Vec<Transaction>>,
}

impl Ledger {
    pub fn to_snapshot_bytes(&self) -> Vec<u8> {
        let pool = self.pool.lock().expect("pool lock");
        let file = SnapshotFile {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            params: self.params.clone(),
            state: self.state.clone(),
            blocks: self.blocks.clone(),
            pending_admin: self.pending_admin.clone(),
            pool: pool.entries.iter().cloned().collect(),
        };
        let mut bytes = serde_json::to_vec(&file).expect("ledger serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_snapshot_bytes(bytes: &[u8]) -> Result<Ledger, SnapshotError> {
        let file: SnapshotFile = serde_json::from_slice(bytes)?;
        if file.format != SNAPSHOT_FORMAT || file.version != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version {
                format: file.format,
                version: file.version,
            });
        }
        let mut state = file.state;
        state.rebuild_derived();
        if file.pending_admin.is_empty() {
            if let Some(last) = file.blocks.last() {
                if last.state_hash != state.hash() || last.round != state.round {
                    return Err(SnapshotError::Inconsistent);
                }
            }
        }
        let txns = file.pool.iter().map(Vec::len).sum();
        Ok(Ledger {
            params: file.params,
            state,
            pool: Mutex::new(Pool {
                entries: file.pool.into(),
                txns,
            }),
            blocks: file.blocks,
            pending_admin: file.pending_admin,
        })
    }

    pub fn save_snapshot(&self, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
        std::fs::write(path, self.to_snapshot_bytes())?;
        Ok(())
    }

    pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Ledger, SnapshotError> {
        Self::from_snapshot_bytes(&std::fs::read(path)?)
    }
}

pub fn write_block_log<W: Write>(mut out: W, blocks: &[Block]) -> Result<(), SnapshotError> {
    for b in blocks {
        serde_json::to_writer(&mut out, b)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_block_log<R: BufRead>(input: R) -> Result<Vec<Block>, SnapshotError> {
    let mut blocks = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        blocks.push(serde_json::from_str(&line)?);
    }
    Ok(blocks)
}
