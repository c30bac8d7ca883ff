// SPDX-License-Identifier: Apache-2.0

//! Deterministic account-based ledger.
//!
//! Transactions enter a FIFO pool through [`Ledger::submit`], which any number
//! of threads may call through a shared reference. [`Ledger::produce_block`]
//! is the single writer: it drains up to `block_capacity` pooled transactions
//! (groups are taken whole or deferred whole), validates and applies them
//! against the committed state, records every rejection with its reason, and
//! closes the round with a digest of the canonical state.

mod commitment;
mod error;
mod ops;
mod snapshot;
pub(crate) mod state;
mod types;

use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use error::TxError;
pub use snapshot::{read_block_log, write_block_log, SnapshotError, SNAPSHOT_VERSION};
pub use state::{Effect, LedgerState};
pub use types::*;

use crate::codec::{Canonical, Digest, Sink};

/// Ledger mutations that happen outside transactions (account funding and
/// authenticator appointment). They are recorded in the next block so that the
/// block list alone is enough to replay the ledger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AdminEvent {
    AccountCreated { address: Address, balance: u64 },
    AuthenticatorAppointed { address: Address },
}

impl Canonical for AdminEvent {
    fn encode<S: Sink>(&self, out: &mut S) {
        match self {
            AdminEvent::AccountCreated { address, balance } => {
                0u8.encode(out);
                address.encode(out);
                balance.encode(out);
            }
            AdminEvent::AuthenticatorAppointed { address } => {
                1u8.encode(out);
                address.encode(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "snake_case")]
pub enum Outcome {
    Applied(Effect),
    Rejected(TxError),
}

impl Outcome {
    pub fn is_applied(&self) -> bool {
        matches!(self, Outcome::Applied(_))
    }
}

impl Canonical for Outcome {
    fn encode<S: Sink>(&self, out: &mut S) {
        match self {
            Outcome::Applied(e) => {
                0u8.encode(out);
                e.encode(out);
            }
            Outcome::Rejected(r) => {
                1u8.encode(out);
                r.to_string().encode(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub tx: Transaction,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub round: u64,
    /// Simulated time, `round * round_millis`.
    pub timestamp_ms: u64,
    pub prev_hash: Digest,
    pub admin: Vec<AdminEvent>,
    pub entries: Vec<BlockEntry>,
    pub state_hash: Digest,
}

impl Block {
    pub fn timestamp_secs(&self) -> f64 {
        self.timestamp_ms as f64 / 1000.0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rejected(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| !e.outcome.is_applied())
            .count()
    }

    pub fn hash(&self) -> Digest {
        Digest::of_canonical("BLOCK", self)
    }
}

impl Canonical for Block {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.round.encode(out);
        self.timestamp_ms.encode(out);
        self.prev_hash.encode(out);
        self.admin.encode(out);
        (self.entries.len() as u32).encode(out);
        for e in &self.entries {
            e.tx.encode(out);
            e.outcome.encode(out);
        }
        self.state_hash.encode(out);
    }
}

/// Where a transaction ended up after [`Ledger::execute`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Receipt {
    pub round: u64,
    pub effects: Vec<Effect>,
}

impl Receipt {
    pub fn created_asset(&self) -> Option<AssetId> {
        self.effects.iter().find_map(|e| match e {
            Effect::AssetCreated(id) => Some(*id),
            _ => None,
        })
    }

    pub fn created_app(&self) -> Option<AppId> {
        self.effects.iter().find_map(|e| match e {
            Effect::AppCreated(id) => Some(*id),
            _ => None,
        })
    }
}

#[derive(Debug, Default)]
struct Pool {
    entries: VecDeque<Vec<Transaction>>,
    txns: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("block at position {position} has round {found}")]
    RoundGap { position: usize, found: u64 },
    #[error("round {round}: {what} differs from the recorded block")]
    Divergence { round: u64, what: &'static str },
    #[error("round {round}: recorded entry is not a well-formed submission: {reason}")]
    Unsubmittable { round: u64, reason: TxError },
}

#[derive(Debug)]
pub struct Ledger {
    params: LedgerParams,
    state: LedgerState,
    pool: Mutex<Pool>,
    blocks: Vec<Block>,
    pending_admin: Vec<AdminEvent>,
}

impl Clone for Ledger {
    fn clone(&self) -> Self {
        let pool = self.pool.lock().expect("pool lock");
        Ledger {
            params: self.params.clone(),
            state: self.state.clone(),
            pool: Mutex::new(Pool {
                entries: pool.entries.clone(),
                txns: pool.txns,
            }),
            blocks: self.blocks.clone(),
            pending_admin: self.pending_admin.clone(),
        }
    }
}

impl Default for Ledger {
    fn default() -> Self {
        Self::new()
    }
}

impl Ledger {
    pub fn new() -> Self {
        Self::with_params(LedgerParams::default())
    }

    pub fn with_params(params: LedgerParams) -> Self {
        assert!(
            params.block_capacity >= 1,
            "block capacity must be positive"
        );
        assert!(
            params.max_group_size >= 1 && params.max_group_size <= params.block_capacity,
            "a maximal group must fit in one block"
        );
        Ledger {
            params,
            state: LedgerState::new(),
            pool: Mutex::new(Pool::default()),
            blocks: Vec::new(),
            pending_admin: Vec::new(),
        }
    }

    pub fn params(&self) -> &LedgerParams {
        &self.params
    }

    /// Committed state.
    pub fn state(&self) -> &LedgerState {
        &self.state
    }

    pub fn state_hash(&self) -> Digest {
        self.state.hash()
    }

    pub fn round(&self) -> u64 {
        self.state.round
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn pool_len(&self) -> usize {
        self.pool.lock().expect("pool lock").txns
    }

    /// Opens a funded account.
    pub fn create_account(&mut self, initial_balance: u64) -> Address {
        let address = self.state.create_account(initial_balance);
        self.state.commit();
        self.pending_admin.push(AdminEvent::AccountCreated {
            address,
            balance: initial_balance,
        });
        address
    }

    pub fn appoint_authenticator(&mut self, address: Address) -> Result<(), TxError> {
        if self.state.account(&address).is_none() {
            return Err(TxError::UnknownAccount { address });
        }
        self.state.registry.authenticator = Some(address);
        self.state.commit();
        self.pending_admin
            .push(AdminEvent::AuthenticatorAppointed { address });
        Ok(())
    }

    fn check_well_formed(&self, txns: &[Transaction]) -> Result<(), TxError> {
        if txns.is_empty() {
            return Err(TxError::malformed("empty group"));
        }
        if txns.len() > self.params.max_group_size {
            return Err(TxError::malformed(format!(
                "group of {} exceeds the limit of {}",
                txns.len(),
                self.params.max_group_size
            )));
        }
        if txns.len() > 1 {
            if !TransactionGroup::from_stamped(txns.to_vec()).is_consistent() {
                return Err(TxError::malformed("group id does not match its members"));
            }
            let ids: std::collections::BTreeSet<TxId> = txns.iter().map(Transaction::id).collect();
            if ids.len() != txns.len() {
                return Err(TxError::malformed("group repeats a member"));
            }
        }
        for t in txns {
            if t.fee != self.params.flat_fee {
                return Err(TxError::malformed(format!(
                    "fee must be {}, got {}",
                    self.params.flat_fee, t.fee
                )));
            }
            if txns.len() == 1 && t.group.is_some() {
                return Err(TxError::malformed("singleton carries a group id"));
            }
            if let TxBody::AssetCreate(p) = &t.body {
                if p.unit_name.len() > MAX_UNIT_NAME_BYTES {
                    return Err(TxError::malformed("unit name longer than 8 bytes"));
                }
                if p.asset_name.len() > MAX_ASSET_NAME_BYTES {
                    return Err(TxError::malformed("asset name longer than 32 bytes"));
                }
                if p.url.len() > MAX_URL_BYTES {
                    return Err(TxError::malformed("url longer than 96 bytes"));
                }
            }
            if let TxBody::AppCall { args, .. } = &t.body {
                if args.is_empty() {
                    return Err(TxError::malformed("application call without arguments"));
                }
            }
        }
        Ok(())
    }

    fn enqueue(&self, txns: Vec<Transaction>) {
        let mut pool = self.pool.lock().expect("pool lock");
        pool.txns += txns.len();
        pool.entries.push_back(txns);
    }

    /// Queues a single transaction. Validation against state happens at block production.
    pub fn submit(&self, tx: Transaction) -> Result<TxId, TxError> {
        self.check_well_formed(std::slice::from_ref(&tx))?;
        let id = tx.id();
        self.enqueue(vec![tx]);
        Ok(id)
    }

    pub fn submit_group(&self, group: TransactionGroup) -> Result<GroupId, TxError> {
        self.check_well_formed(group.txns())?;
        let id = group.id().expect("checked non-empty");
        self.enqueue(group.into_txns());
        Ok(id)
    }

    pub fn produce_block(&mut self) -> &Block {
        let capacity = self.params.block_capacity;
        let taken = {
            let pool = self.pool.get_mut().expect("pool lock");
            let mut taken = Vec::new();
            let mut used = 0;
            while let Some(front) = pool.entries.front() {
                if used + front.len() > capacity {
                    break;
                }
                used += front.len();
                let entry = pool.entries.pop_front().expect("front exists");
                taken.push(entry);
            }
            pool.txns -= used;
            taken
        };

        self.state.round += 1;
        let mut entries = Vec::with_capacity(taken.iter().map(Vec::len).sum());
        for txns in taken {
            match state::apply_entry(&mut self.state, &self.params, &txns) {
                Ok(effects) => {
                    entries.extend(txns.into_iter().zip(effects).map(|(tx, e)| BlockEntry {
                        tx,
                        outcome: Outcome::Applied(e),
                    }))
                }
                Err((failed, reason)) => {
                    entries.extend(txns.into_iter().enumerate().map(|(i, tx)| BlockEntry {
                        tx,
                        outcome: Outcome::Rejected(if i == failed {
                            reason.clone()
                        } else {
                            TxError::GroupAborted
                        }),
                    }))
                }
            }
        }

        self.state.commit();
        let round = self.state.round;
        let block = Block {
            round,
            timestamp_ms: round * self.params.round_millis,
            prev_hash: self.blocks.last().map(Block::hash).unwrap_or(Digest::ZERO),
            admin: std::mem::take(&mut self.pending_admin),
            entries,
            state_hash: self.state.hash(),
        };
        self.blocks.push(block);
        self.blocks.last().expect("just pushed")
    }

    /// Validates `txns` against the committed state without changing it.
    pub fn dry_run(&mut self, txns: &[Transaction]) -> Result<(), TxError> {
        self.check_well_formed(txns)?;
        let mut scratch = state::StateTxn::new(&mut self.state, &self.params);
        let mut result = Ok(());
        for i in 0..txns.len() {
            if let Err(e) = state::apply_one(&mut scratch, txns, i) {
                result = Err(Self::entry_error(txns.len(), i, e));
                break;
            }
        }
        scratch.rollback();
        self.state.commit();
        result
    }

    fn entry_error(len: usize, index: usize, reason: TxError) -> TxError {
        if len > 1 {
            TxError::GroupRejected {
                index,
                reason: Box::new(reason),
            }
        } else {
            reason
        }
    }

    /// Checks, submits and produces blocks until the transaction is included.
    /// A transaction refused by the check never reaches the pool.
    pub fn execute(&mut self, tx: Transaction) -> Result<Receipt, TxError> {
        self.execute_entry(vec![tx])
    }

    pub fn execute_group(&mut self, group: TransactionGroup) -> Result<Receipt, TxError> {
        self.execute_entry(group.into_txns())
    }

    fn execute_entry(&mut self, txns: Vec<Transaction>) -> Result<Receipt, TxError> {
        self.dry_run(&txns)?;
        let len = txns.len();
        // Everything already pooled is scheduled ahead of this entry.
        let mut ahead = self.pool_len();
        self.enqueue(txns);
        loop {
            let block = self.produce_block();
            if ahead >= block.len() {
                ahead -= block.len();
                continue;
            }
            let members = &block.entries[ahead..ahead + len];
            let mut effects = Vec::with_capacity(len);
            for (i, m) in members.iter().enumerate() {
                match &m.outcome {
                    Outcome::Applied(e) => effects.push(*e),
                    Outcome::Rejected(TxError::GroupAborted) => {}
                    Outcome::Rejected(r) => return Err(Self::entry_error(len, i, r.clone())),
                }
            }
            return Ok(Receipt {
                round: block.round,
                effects,
            });
        }
    }

    /// Rebuilds a ledger from its block list, checking every block (outcomes,
    /// state hash and chaining) against the recorded one.
    pub fn replay(params: LedgerParams, blocks: &[Block]) -> Result<Ledger, ReplayError> {
        let mut ledger = Ledger::with_params(params);
        for (position, recorded) in blocks.iter().enumerate() {
            if recorded.round != position as u64 + 1 {
                return Err(ReplayError::RoundGap {
                    position,
                    found: recorded.round,
                });
            }
            let round = recorded.round;
            for event in &recorded.admin {
                match event {
                    AdminEvent::AccountCreated { address, balance } => {
                        if ledger.create_account(*balance) != *address {
                            return Err(ReplayError::Divergence {
                                round,
                                what: "account address",
                            });
                        }
                    }
                    AdminEvent::AuthenticatorAppointed { address } => {
                        ledger.appoint_authenticator(*address).map_err(|_| {
                            ReplayError::Divergence {
                                round,
                                what: "authenticator appointment",
                            }
                        })?;
                    }
                }
            }
            for entry in split_entries(&recorded.entries) {
                ledger
                    .check_well_formed(&entry)
                    .map_err(|reason| ReplayError::Unsubmittable { round, reason })?;
                ledger.enqueue(entry);
            }
            let produced = ledger.produce_block();
            if produced.entries != recorded.entries {
                return Err(ReplayError::Divergence {
                    round,
                    what: "transaction outcomes",
                });
            }
            if produced.state_hash != recorded.state_hash {
                return Err(ReplayError::Divergence {
                    round,
                    what: "state hash",
                });
            }
            if produced != recorded {
                return Err(ReplayError::Divergence {
                    round,
                    what: "block header",
                });
            }
        }
        Ok(ledger)
    }
}

/// Regroups a block's entries into the pool entries they were submitted as.
/// Consecutive members sharing a group id belong to one entry, unless a member
/// repeats the entry's first transaction (the same group submitted again).
fn split_entries(entries: &[BlockEntry]) -> Vec<Vec<Transaction>> {
    let mut out: Vec<Vec<Transaction>> = Vec::new();
    for e in entries {
        let continues = match (e.tx.group, out.last()) {
            (Some(g), Some(open)) => open[0].group == Some(g) && open[0] != e.tx,
            _ => false,
        };
        if continues {
            out.last_mut().expect("open entry").push(e.tx.clone());
        } else {
            out.push(vec![e.tx.clone()]);
        }
    }
    out
}
