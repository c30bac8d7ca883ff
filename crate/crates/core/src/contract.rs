// SPDX-License-Identifier: Apache-2.0

//! Product contracts: the application layer that custodies chip NFTs and gates
//! every lifecycle step on the caller's role.
//!
//! A contract walks `Deployed -> Bound -> InUse -> Released -> Dismantled`.
//! While it is `Bound`, `InUse` or `Released` its application account holds
//! exactly one unit of every bound asset. The only way units leave that
//! account is a group in which the trusted recycler moves each bound asset to
//! its manager (or an opted-in account) and deletes the application in the
//! same group.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::codec::{Canonical, Sink};
use crate::ledger::state::StateTxn;
use crate::ledger::{
    Address, AppId, AssetId, Ledger, Transaction, TransactionGroup, TxBody, TxError,
};

pub const SELECTOR_INIT: &[u8] = b"Init";
pub const SELECTOR_SET_USER: &[u8] = b"Set user";
pub const SELECTOR_RELEASE: &[u8] = b"Release";

/// Micro-units the manufacturer pays into a fresh application account before `Init`.
pub const APP_FUNDING: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Authenticator,
    Manufacturer,
    User,
    Recycler,
}

impl Role {
    pub const ALL: [Role; 4] = [
        Role::Authenticator,
        Role::Manufacturer,
        Role::User,
        Role::Recycler,
    ];
}

impl Canonical for Role {
    fn encode<S: Sink>(&self, out: &mut S) {
        (*self as u8).encode(out);
    }
}

/// Who may issue chip certificates, build products and dismantle them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRegistry {
    pub authenticator: Option<Address>,
    pub certified_manufacturers: BTreeSet<Address>,
    pub certified_recyclers: BTreeSet<Address>,
}

impl RoleRegistry {
    pub fn is_authenticator(&self, a: &Address) -> bool {
        self.authenticator.as_ref() == Some(a)
    }

    pub fn is_manufacturer(&self, a: &Address) -> bool {
        self.certified_manufacturers.contains(a)
    }

    pub fn is_recycler(&self, a: &Address) -> bool {
        self.certified_recyclers.contains(a)
    }
}

impl Canonical for RoleRegistry {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.authenticator.encode(out);
        self.certified_manufacturers.encode(out);
        self.certified_recyclers.encode(out);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractState {
    Deployed,
    Bound,
    InUse,
    Released,
    Dismantled,
}

impl ContractState {
    /// True in the states where the application account must custody every bound asset.
    pub fn holds_custody(self) -> bool {
        matches!(
            self,
            ContractState::Bound | ContractState::InUse | ContractState::Released
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductContract {
    pub app_id: AppId,
    /// Application account.
    pub address: Address,
    /// The manufacturer that deployed the contract.
    pub creator: Address,
    pub trusted_recycler: Address,
    pub user: Option<Address>,
    pub bound_assets: Vec<AssetId>,
    pub state: ContractState,
}

impl Canonical for ProductContract {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.app_id.encode(out);
        self.address.encode(out);
        self.creator.encode(out);
        self.trusted_recycler.encode(out);
        self.user.encode(out);
        self.bound_assets.encode(out);
        (self.state as u8).encode(out);
    }
}

/// A decoded application call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Init,
    SetUser(Address),
    Release,
}

impl Method {
    pub fn decode(args: &[Vec<u8>]) -> Result<Method, TxError> {
        let selector = args.first().ok_or(TxError::BadArgument {
            reason: "missing method selector".into(),
        })?;
        match selector.as_slice() {
            SELECTOR_INIT => Ok(Method::Init),
            SELECTOR_SET_USER => {
                let raw = args.get(1).ok_or(TxError::BadArgument {
                    reason: "Set user needs the user address".into(),
                })?;
                let bytes: [u8; 32] =
                    raw.as_slice()
                        .try_into()
                        .map_err(|_| TxError::BadArgument {
                            reason: format!("user address must be 32 bytes, got {}", raw.len()),
                        })?;
                Ok(Method::SetUser(Address(bytes)))
            }
            SELECTOR_RELEASE => Ok(Method::Release),
            other => Err(TxError::UnknownMethod {
                selector: String::from_utf8_lossy(other).into_owned(),
            }),
        }
    }

    pub fn encode(&self) -> Vec<Vec<u8>> {
        match self {
            Method::Init => vec![SELECTOR_INIT.to_vec()],
            Method::SetUser(user) => vec![SELECTOR_SET_USER.to_vec(), user.0.to_vec()],
            Method::Release => vec![SELECTOR_RELEASE.to_vec()],
        }
    }
}

// ---------------------------------------------------------------------------
// Approval logic, run inside block production.

fn live_app(tx: &StateTxn<'_>, app_id: AppId) -> Result<ProductContract, TxError> {
    match tx.view().app(app_id) {
        Some(app) if app.state != ContractState::Dismantled => Ok(app.clone()),
        _ => Err(TxError::UnknownApp { app: app_id }),
    }
}

fn require_state(app: &ProductContract, state: ContractState) -> Result<(), TxError> {
    if app.state != state {
        return Err(TxError::WrongState {
            app: app.app_id,
            state: app.state,
        });
    }
    Ok(())
}

fn require_recycler(
    tx: &StateTxn<'_>,
    app: &ProductContract,
    caller: Address,
) -> Result<(), TxError> {
    if caller != app.trusted_recycler || !tx.view().registry().is_recycler(&caller) {
        return Err(TxError::NotTrustedRecycler {
            caller,
            app: app.app_id,
        });
    }
    Ok(())
}

pub(crate) fn create(
    tx: &mut StateTxn<'_>,
    sender: Address,
    trusted_recycler: Address,
) -> Result<AppId, TxError> {
    if !tx.view().registry().is_manufacturer(&sender) {
        return Err(TxError::NotCertifiedManufacturer { caller: sender });
    }
    let app_id = tx.alloc_app_id();
    let address = Address::for_application(app_id);
    tx.insert_account(crate::ledger::Account::new(address, 0));
    tx.put_app(ProductContract {
        app_id,
        address,
        creator: sender,
        trusted_recycler,
        user: None,
        bound_assets: Vec::new(),
        state: ContractState::Deployed,
    });
    tx.add_created_app(sender, app_id);
    Ok(app_id)
}

pub(crate) fn call(
    tx: &mut StateTxn<'_>,
    sender: Address,
    app_id: AppId,
    args: &[Vec<u8>],
    foreign_assets: &[AssetId],
) -> Result<(), TxError> {
    let mut app = live_app(tx, app_id)?;
    match Method::decode(args)? {
        Method::Init => {
            // Init is accepted once: the contract must be fresh.
            if app.state != ContractState::Deployed || !app.bound_assets.is_empty() {
                return Err(TxError::WrongState {
                    app: app_id,
                    state: app.state,
                });
            }
            if sender != app.creator {
                return Err(TxError::NotCreator {
                    caller: sender,
                    app: app_id,
                });
            }
            if foreign_assets.is_empty() {
                return Err(TxError::EmptyAssetList);
            }
            let mut seen = BTreeSet::new();
            for &asset in foreign_assets {
                if !seen.insert(asset) {
                    return Err(TxError::DuplicateAsset { asset });
                }
                tx.live_asset(asset)?;
            }
            // The application account pays for its own opt-ins.
            let fees = tx.params().flat_fee * foreign_assets.len() as u64;
            tx.debit(app.address, fees)?;
            for &asset in foreign_assets {
                tx.set_holding(app.address, asset, Some(0));
            }
            app.bound_assets = foreign_assets.to_vec();
            tx.put_app(app);
        }
        Method::SetUser(user) => {
            require_state(&app, ContractState::Bound)?;
            if sender != app.creator {
                return Err(TxError::NotCreator {
                    caller: sender,
                    app: app_id,
                });
            }
            tx.account(&user)?;
            app.user = Some(user);
            app.state = ContractState::InUse;
            tx.put_app(app);
        }
        Method::Release => {
            require_state(&app, ContractState::InUse)?;
            if app.user != Some(sender) {
                return Err(TxError::NotUser {
                    caller: sender,
                    app: app_id,
                });
            }
            app.state = ContractState::Released;
            tx.put_app(app);
        }
    }
    Ok(())
}

pub(crate) fn delete(tx: &mut StateTxn<'_>, sender: Address, app_id: AppId) -> Result<(), TxError> {
    let mut app = live_app(tx, app_id)?;
    require_state(&app, ContractState::Released)?;
    require_recycler(tx, &app, sender)?;
    let account = tx.account(&app.address)?;
    if app
        .bound_assets
        .iter()
        .any(|a| account.holding(*a).unwrap_or(0) != 0)
    {
        return Err(TxError::IncompleteDestinations { app: app_id });
    }
    // Close the application account; leftover micro-units go back to the creator.
    let leftover = account.balance;
    tx.credit(app.creator, leftover)?;
    tx.remove_account(&app.address);
    app.state = ContractState::Dismantled;
    tx.put_app(app);
    Ok(())
}

/// Approves moving `asset` out of the custody of `app_account`. All three must hold:
/// the sender is the contract's trusted, currently certified recycler; the
/// receiver is the asset manager or opted in (checked by the transfer itself);
/// and the same group later deletes the application.
pub(crate) fn approve_custody_release(
    tx: &StateTxn<'_>,
    group: &[Transaction],
    index: usize,
    app_account: Address,
    asset: AssetId,
    _receiver: Address,
) -> Result<(), TxError> {
    let sender = group[index].sender;
    let app = tx
        .view()
        .app_at(&app_account)
        .cloned()
        .ok_or(TxError::BadArgument {
            reason: format!("custody account {app_account} is not an application account"),
        })?;
    if app.state != ContractState::Released {
        return Err(TxError::WrongState {
            app: app.app_id,
            state: app.state,
        });
    }
    require_recycler(tx, &app, sender)?;
    if !app.bound_assets.contains(&asset) {
        return Err(TxError::NotBound {
            app: app.app_id,
            asset,
        });
    }
    let deleted_later = group[index + 1..].iter().any(|t| {
        t.sender == sender && matches!(t.body, TxBody::AppDelete { app_id } if app_id == app.app_id)
    });
    if !deleted_later {
        return Err(TxError::ProductNotDestroyed { app: app.app_id });
    }
    Ok(())
}

/// Promotes a freshly initialised contract to `Bound` once it holds every bound asset.
pub(crate) fn on_units_received(tx: &mut StateTxn<'_>, receiver: Address) {
    let Some(app) = tx.view().app_at(&receiver) else {
        return;
    };
    if app.state != ContractState::Deployed || app.bound_assets.is_empty() {
        return;
    }
    let account = match tx.view().account(&receiver) {
        Some(a) => a,
        None => return,
    };
    if app
        .bound_assets
        .iter()
        .all(|a| account.holding(*a) == Some(1))
    {
        let mut app = app.clone();
        app.state = ContractState::Bound;
        tx.put_app(app);
    }
}

pub(crate) fn certify(
    tx: &mut StateTxn<'_>,
    sender: Address,
    role: Role,
    subject: Address,
    granted: bool,
) -> Result<(), TxError> {
    if !tx.view().registry().is_authenticator(&sender) {
        return Err(TxError::NotAuthenticator { caller: sender });
    }
    let mut registry = tx.view().registry().clone();
    let set = match role {
        Role::Manufacturer => &mut registry.certified_manufacturers,
        Role::Recycler => &mut registry.certified_recyclers,
        Role::Authenticator | Role::User => {
            return Err(TxError::BadArgument {
                reason: format!("{role:?} is not a certifiable role"),
            })
        }
    };
    if granted {
        set.insert(subject);
    } else {
        set.remove(&subject);
    }
    tx.set_registry(registry);
    Ok(())
}

// ---------------------------------------------------------------------------
// Transaction builders.

pub fn app_create_tx(creator: Address, trusted_recycler: Address) -> Transaction {
    Transaction::new(creator, TxBody::AppCreate { trusted_recycler })
}

pub fn app_call_tx(
    caller: Address,
    app_id: AppId,
    method: &Method,
    foreign_assets: Vec<AssetId>,
) -> Transaction {
    Transaction::new(
        caller,
        TxBody::AppCall {
            app_id,
            args: method.encode(),
            foreign_assets,
        },
    )
}

pub fn app_delete_tx(caller: Address, app_id: AppId) -> Transaction {
    Transaction::new(caller, TxBody::AppDelete { app_id })
}

pub fn certify_tx(
    authenticator: Address,
    role: Role,
    subject: Address,
    granted: bool,
) -> Transaction {
    Transaction::new(
        authenticator,
        TxBody::Certify {
            role,
            subject,
            granted,
        },
    )
}

/// Recycler-authorized transfer of one unit out of an application account.
pub fn custody_transfer_tx(
    recycler: Address,
    app_account: Address,
    asset_id: AssetId,
    receiver: Address,
) -> Transaction {
    Transaction::new(
        recycler,
        TxBody::AssetTransfer {
            asset_id,
            amount: 1,
            receiver,
            custody: Some(app_account),
        },
    )
}

/// One custody transfer per destination (in asset order) followed by the deletion.
pub fn dismantle_group(
    recycler: Address,
    app: &ProductContract,
    destinations: &BTreeMap<AssetId, Address>,
) -> TransactionGroup {
    let mut txns: Vec<Transaction> = destinations
        .iter()
        .map(|(&asset, &to)| custody_transfer_tx(recycler, app.address, asset, to))
        .collect();
    txns.push(app_delete_tx(recycler, app.app_id));
    TransactionGroup::new(txns)
}

// ---------------------------------------------------------------------------
// Operations against a ledger. Each checks its transaction against the current
// state first, so a refused call leaves the ledger untouched.

fn contract(ledger: &Ledger, app_id: AppId) -> Result<ProductContract, TxError> {
    ledger
        .state()
        .app(app_id)
        .cloned()
        .ok_or(TxError::UnknownApp { app: app_id })
}

pub fn app_create(
    ledger: &mut Ledger,
    creator: Address,
    trusted_recycler: Address,
) -> Result<AppId, TxError> {
    let receipt = ledger.execute(app_create_tx(creator, trusted_recycler))?;
    Ok(receipt
        .created_app()
        .expect("AppCreate yields an application"))
}

pub fn call_init(
    ledger: &mut Ledger,
    caller: Address,
    app_id: AppId,
    assets: &[AssetId],
) -> Result<(), TxError> {
    ledger.execute(app_call_tx(caller, app_id, &Method::Init, assets.to_vec()))?;
    Ok(())
}

pub fn call_set_user(
    ledger: &mut Ledger,
    caller: Address,
    app_id: AppId,
    user: Address,
) -> Result<(), TxError> {
    ledger.execute(app_call_tx(caller, app_id, &Method::SetUser(user), vec![]))?;
    Ok(())
}

pub fn call_release(ledger: &mut Ledger, caller: Address, app_id: AppId) -> Result<(), TxError> {
    ledger.execute(app_call_tx(caller, app_id, &Method::Release, vec![]))?;
    Ok(())
}

/// Moves every bound asset to its destination and deletes the contract, atomically.
pub fn dismantle(
    ledger: &mut Ledger,
    recycler: Address,
    app_id: AppId,
    destinations: &BTreeMap<AssetId, Address>,
) -> Result<(), TxError> {
    let app = contract(ledger, app_id)?;
    if app.state != ContractState::Released {
        return Err(TxError::WrongState {
            app: app_id,
            state: app.state,
        });
    }
    if recycler != app.trusted_recycler || !ledger.state().registry().is_recycler(&recycler) {
        return Err(TxError::NotTrustedRecycler {
            caller: recycler,
            app: app_id,
        });
    }
    let bound: BTreeSet<AssetId> = app.bound_assets.iter().copied().collect();
    let covered: BTreeSet<AssetId> = destinations.keys().copied().collect();
    if bound != covered {
        return Err(TxError::IncompleteDestinations { app: app_id });
    }
    ledger.execute_group(dismantle_group(recycler, &app, destinations))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors_are_exact_bytes() {
        assert_eq!(Method::decode(&[b"Init".to_vec()]).unwrap(), Method::Init);
        assert_eq!(
            Method::decode(&[b"Release".to_vec()]).unwrap(),
            Method::Release
        );
        let user = Address::for_account(3);
        assert_eq!(
            Method::decode(&Method::SetUser(user).encode()).unwrap(),
            Method::SetUser(user)
        );
        assert!(matches!(
            Method::decode(&[b"init".to_vec()]),
            Err(TxError::UnknownMethod { .. })
        ));
        assert!(matches!(
            Method::decode(&[b"Set user".to_vec()]),
            Err(TxError::BadArgument { .. })
        ));
        assert!(matches!(
            Method::decode(&[b"Set user".to_vec(), vec![1, 2, 3]]),
            Err(TxError::BadArgument { .. })
        ));
        assert!(matches!(
            Method::decode(&[]),
            Err(TxError::BadArgument { .. })
        ));
    }

    #[test]
    fn custody_states() {
        use ContractState::*;
        let held: Vec<_> = [Deployed, Bound, InUse, Released, Dismantled]
            .into_iter()
            .filter(|s| s.holds_custody())
            .collect();
        assert_eq!(held, vec![Bound, InUse, Released]);
    }
}
