// SPDX-License-Identifier: Apache-2.0

//! The journey of a chip: certification, hand-over to a computer maker,
//! assembly into a product contract, distribution, return and recycling.
//!
//! Every step validates its transactions against the current state before
//! submitting them, so a refused step leaves the ledger as it was.

mod passport;
pub mod scenario;
mod trace;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use passport::{ChipPassport, PassportError};
pub use trace::{trace, ProvenanceEvent, ProvenanceRecord, TracedEvent};

use crate::contract::{self, Method, APP_FUNDING};
use crate::ledger::{
    Address, AppId, AssetId, AssetParams, Ledger, Transaction, TransactionGroup, TxBody, TxError,
};

/// Unit name of every chip certificate.
pub const CHIP_UNIT_NAME: &str = "CHIP";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LifecycleError {
    #[error(transparent)]
    Rejected(#[from] TxError),
    #[error("invalid passport: {0}")]
    InvalidPassport(#[from] PassportError),
    #[error("a product can bind at most {max} chips in one assembly")]
    TooManyChips { max: usize },
}

impl LifecycleError {
    /// The ledger-level reason, if the step was refused by the ledger.
    pub fn tx_error(&self) -> Option<&TxError> {
        match self {
            LifecycleError::Rejected(e) => Some(e.root()),
            _ => None,
        }
    }
}

/// What happens to a chip when its product is recycled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    /// Back into circulation with the given (opted-in or managing) account.
    Reuse(Address),
    /// Returned to its manager and destroyed.
    Destroy,
}

/// Issues the NFT certificate for one chip. Only the authenticator may do this;
/// it becomes both the first holder and the manager.
pub fn certify_chip(
    ledger: &mut Ledger,
    authenticator: Address,
    passport: &ChipPassport,
) -> Result<AssetId, LifecycleError> {
    passport.validate()?;
    if !ledger.state().registry().is_authenticator(&authenticator) {
        return Err(TxError::NotAuthenticator {
            caller: authenticator,
        }
        .into());
    }
    let params = AssetParams {
        url: passport.url.clone(),
        metadata_hash: Some(passport.metadata_hash()),
        ..AssetParams::nft(CHIP_UNIT_NAME, &passport.chip_serial, authenticator)
    };
    Ok(ledger.asset_create(authenticator, params)?)
}

/// True when `passport` hashes to the metadata committed by `asset`.
pub fn verify_passport(ledger: &Ledger, asset: AssetId, passport: &ChipPassport) -> bool {
    ledger
        .state()
        .asset(asset)
        .and_then(|a| a.metadata_hash)
        .is_some_and(|h| h == passport.metadata_hash())
}

/// Sells a certified chip to a computer maker: the maker receives the NFT and
/// its management rights in one atomic group.
pub fn transfer_to_manufacturer(
    ledger: &mut Ledger,
    authenticator: Address,
    manufacturer: Address,
    asset: AssetId,
) -> Result<(), LifecycleError> {
    if !ledger.state().registry().is_manufacturer(&manufacturer) {
        return Err(TxError::NotCertifiedManufacturer {
            caller: manufacturer,
        }
        .into());
    }
    if ledger.state().asset(asset).is_none_or(|a| a.destroyed) {
        return Err(TxError::UnknownAsset { asset }.into());
    }
    if ledger.state().holding(&manufacturer, asset).is_none() {
        return Err(TxError::ReceiverNotOptedIn {
            receiver: manufacturer,
            asset,
        }
        .into());
    }
    let group = TransactionGroup::new(vec![
        Transaction::asset_transfer(authenticator, manufacturer, asset, 1),
        Transaction::new(
            authenticator,
            TxBody::AssetReconfigure {
                asset_id: asset,
                manager: manufacturer,
            },
        ),
    ]);
    ledger.execute_group(group)?;
    Ok(())
}

/// Largest number of chips bound in one assembly: the funding payment and the
/// `Init` call share the group with one transfer per chip.
pub fn max_chips_per_product(ledger: &Ledger) -> usize {
    ledger.params().max_group_size - 2
}

/// Deploys a product contract and moves the listed chip NFTs into its custody.
///
/// The contract is created first; funding, `Init` and every transfer then go
/// in one atomic group, so either the contract ends up `Bound` holding all
/// chips or it holds none of them.
pub fn assemble_product(
    ledger: &mut Ledger,
    manufacturer: Address,
    assets: &[AssetId],
    trusted_recycler: Address,
) -> Result<AppId, LifecycleError> {
    if assets.is_empty() {
        return Err(TxError::EmptyAssetList.into());
    }
    let max = max_chips_per_product(ledger);
    if assets.len() > max {
        return Err(LifecycleError::TooManyChips { max });
    }
    for &asset in assets {
        let available = ledger.state().holding(&manufacturer, asset).unwrap_or(0);
        if available < 1 {
            return Err(TxError::InsufficientHolding {
                asset,
                needed: 1,
                available,
            }
            .into());
        }
    }

    let app_id = contract::app_create(ledger, manufacturer, trusted_recycler)?;
    let app_address = Address::for_application(app_id);
    let mut txns = vec![
        Transaction::payment(manufacturer, app_address, APP_FUNDING),
        contract::app_call_tx(manufacturer, app_id, &Method::Init, assets.to_vec()),
    ];
    txns.extend(
        assets
            .iter()
            .map(|&a| Transaction::asset_transfer(manufacturer, app_address, a, 1)),
    );
    ledger.execute_group(TransactionGroup::new(txns))?;
    Ok(app_id)
}

/// Hands a bound product to its user.
pub fn distribute(
    ledger: &mut Ledger,
    manufacturer: Address,
    app: AppId,
    user: Address,
) -> Result<(), LifecycleError> {
    Ok(contract::call_set_user(ledger, manufacturer, app, user)?)
}

/// The user gives the product back for recycling.
pub fn return_product(
    ledger: &mut Ledger,
    user: Address,
    app: AppId,
) -> Result<(), LifecycleError> {
    Ok(contract::call_release(ledger, user, app)?)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RecycleReport {
    pub reused: Vec<AssetId>,
    pub destroyed: Vec<AssetId>,
}

/// Dismantles a released product and settles each chip.
///
/// Runs as two groups: the dismantle group (every chip leaves custody, the
/// contract is deleted), then the destroy group for chips marked
/// [`Disposition::Destroy`], which were sent to their manager in the first
/// group. A failure in the second group does not undo the first.
pub fn recycle(
    ledger: &mut Ledger,
    recycler: Address,
    app_id: AppId,
    dispositions: &BTreeMap<AssetId, Disposition>,
) -> Result<RecycleReport, LifecycleError> {
    let mut destinations = BTreeMap::new();
    let mut report = RecycleReport::default();
    for (&asset, disposition) in dispositions {
        let to = match disposition {
            Disposition::Reuse(to) => {
                report.reused.push(asset);
                *to
            }
            Disposition::Destroy => {
                report.destroyed.push(asset);
                ledger
                    .state()
                    .asset(asset)
                    .ok_or(TxError::UnknownAsset { asset })?
                    .manager
            }
        };
        destinations.insert(asset, to);
    }
    contract::dismantle(ledger, recycler, app_id, &destinations)?;

    let chunk = ledger.params().max_group_size;
    let destroys: Vec<Transaction> = report
        .destroyed
        .iter()
        .map(|&a| Transaction::asset_destroy(destinations[&a], a))
        .collect();
    for batch in destroys.chunks(chunk) {
        let entry = batch.to_vec();
        if entry.len() == 1 {
            ledger.execute(entry.into_iter().next().expect("one member"))?;
        } else {
            ledger.execute_group(TransactionGroup::new(entry))?;
        }
    }
    Ok(report)
}
