// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::types::{Address, AppId, AssetId};
use crate::contract::ContractState;

/// Why a transaction (or a whole group) was refused.
///
/// Submission only reports [`TxError::MalformedTransaction`]; every other
/// variant is produced while a block is being built and is recorded next to
/// the transaction in the block.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TxError {
    #[error("malformed transaction: {reason}")]
    MalformedTransaction { reason: String },
    #[error("unknown account {address}")]
    UnknownAccount { address: Address },
    #[error("asset total must be at least 1")]
    InvalidTotal,
    #[error("insufficient balance: need {needed}, have {available}")]
    InsufficientBalance { needed: u64, available: u64 },
    #[error("unknown asset {asset}")]
    UnknownAsset { asset: AssetId },
    #[error("receiver {receiver} has not opted in to {asset}")]
    ReceiverNotOptedIn { receiver: Address, asset: AssetId },
    #[error("insufficient holding of {asset}: need {needed}, have {available}")]
    InsufficientHolding {
        asset: AssetId,
        needed: u64,
        available: u64,
    },
    #[error("{caller} is not the manager of {asset}")]
    NotManager { caller: Address, asset: AssetId },
    #[error("supply of {asset} is not consolidated at its manager")]
    SupplyNotConsolidated { asset: AssetId },
    #[error("{caller} is not the authenticator")]
    NotAuthenticator { caller: Address },
    #[error("{caller} is not a certified manufacturer")]
    NotCertifiedManufacturer { caller: Address },
    #[error("application accounts cannot authorize transactions")]
    ApplicationSender,
    #[error("unknown application {app}")]
    UnknownApp { app: AppId },
    #[error("unknown method selector {selector:?}")]
    UnknownMethod { selector: String },
    #[error("missing or malformed argument: {reason}")]
    BadArgument { reason: String },
    #[error("{caller} is not the creator of {app}")]
    NotCreator { caller: Address, app: AppId },
    #[error("{caller} is not the user of {app}")]
    NotUser { caller: Address, app: AppId },
    #[error("{caller} is not the trusted recycler of {app}")]
    NotTrustedRecycler { caller: Address, app: AppId },
    #[error("{app} is in state {state:?}")]
    WrongState { app: AppId, state: ContractState },
    #[error("Init needs at least one asset")]
    EmptyAssetList,
    #[error("{asset} is listed more than once")]
    DuplicateAsset { asset: AssetId },
    #[error("{app} does not custody {asset}")]
    NotBound { app: AppId, asset: AssetId },
    #[error("destinations do not cover exactly the assets bound to {app}")]
    IncompleteDestinations { app: AppId },
    #[error("custody of {app} can only be released together with its deletion")]
    ProductNotDestroyed { app: AppId },
    #[error("group member {index} rejected: {reason}")]
    GroupRejected { index: usize, reason: Box<TxError> },
    #[error("another member of the group was rejected")]
    GroupAborted,
}

impl TxError {
    pub fn malformed(reason: impl Into<String>) -> Self {
        TxError::MalformedTransaction {
            reason: reason.into(),
        }
    }

    /// The innermost cause, looking through [`TxError::GroupRejected`].
    pub fn root(&self) -> &TxError {
        match self {
            TxError::GroupRejected { reason, .. } => reason.root(),
            other => other,
        }
    }
}
