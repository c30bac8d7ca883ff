// SPDX-License-Identifier: Apache-2.0

//! Committed ledger state and the journaled transaction applier.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::commitment::{Commitment, Leaf};
use super::error::TxError;
use super::types::*;
use crate::codec::{Canonical, Digest, Hasher, Sink};
use crate::contract::{self, ProductContract, RoleRegistry};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LedgerState {
    pub(crate) round: u64,
    pub(crate) accounts: BTreeMap<Address, Account>,
    pub(crate) assets: BTreeMap<AssetId, Asset>,
    pub(crate) apps: BTreeMap<AppId, ProductContract>,
    pub(crate) registry: RoleRegistry,
    pub(crate) next_account_seq: u64,
    pub(crate) next_asset_id: u64,
    pub(crate) next_app_id: u64,
    /// Application account address -> application. Derived from `apps`.
    #[serde(skip)]
    pub(crate) app_index: HashMap<Address, AppId>,
    #[serde(skip)]
    commitment: Commitment,
    #[serde(skip)]
    digest: Digest,
}

impl PartialEq for LedgerState {
    fn eq(&self, other: &Self) -> bool {
        self.round == other.round
            && self.accounts == other.accounts
            && self.assets == other.assets
            && self.apps == other.apps
            && self.registry == other.registry
            && self.next_account_seq == other.next_account_seq
            && self.next_asset_id == other.next_asset_id
            && self.next_app_id == other.next_app_id
    }
}

impl Eq for LedgerState {}

impl LedgerState {
    pub(crate) fn new() -> Self {
        let mut state = LedgerState {
            next_asset_id: 1,
            next_app_id: 1,
            ..Default::default()
        };
        state.commit();
        state
    }

    /// Recomputes the application index and the commitment after loading.
    pub(crate) fn rebuild_derived(&mut self) {
        self.app_index = self.apps.values().map(|a| (a.address, a.app_id)).collect();
        self.commitment = Commitment::build(self);
        self.digest = self.header_digest(self.commitment.root());
    }

    /// Folds every write since the last commit into the cached digest.
    pub(crate) fn commit(&mut self) {
        let mut c = std::mem::take(&mut self.commitment);
        let root = c.refresh(self);
        self.commitment = c;
        self.digest = self.header_digest(root);
    }

    fn touch(&mut self, leaf: Leaf) {
        self.commitment.touch(leaf);
    }

    fn touch_account(&mut self, acct: &Account) {
        self.touch(Leaf::Account(acct.address));
        for id in acct.holdings.keys() {
            self.touch(Leaf::Holding(acct.address, *id));
        }
    }

    fn header_digest(&self, root: Digest) -> Digest {
        let mut h = Hasher::new();
        "LEDGER-STATE".encode(&mut h);
        self.round.encode(&mut h);
        self.next_account_seq.encode(&mut h);
        self.next_asset_id.encode(&mut h);
        self.next_app_id.encode(&mut h);
        self.registry.encode(&mut h);
        root.encode(&mut h);
        h.finish()
    }

    /// The digest computed from scratch, ignoring every cache.
    #[cfg(test)]
    pub(crate) fn recompute_hash(&self) -> Digest {
        self.header_digest(Commitment::build(self).refresh(self))
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn account(&self, addr: &Address) -> Option<&Account> {
        self.accounts.get(addr)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    pub fn asset(&self, id: AssetId) -> Option<&Asset> {
        self.assets.get(&id)
    }

    pub fn assets(&self) -> impl Iterator<Item = &Asset> {
        self.assets.values()
    }

    pub fn app(&self, id: AppId) -> Option<&ProductContract> {
        self.apps.get(&id)
    }

    pub fn apps(&self) -> impl Iterator<Item = &ProductContract> {
        self.apps.values()
    }

    pub fn app_at(&self, addr: &Address) -> Option<&ProductContract> {
        self.app_index.get(addr).and_then(|id| self.apps.get(id))
    }

    pub fn registry(&self) -> &RoleRegistry {
        &self.registry
    }

    pub fn balance(&self, addr: &Address) -> Option<u64> {
        self.accounts.get(addr).map(|a| a.balance)
    }

    pub fn holding(&self, addr: &Address, asset: AssetId) -> Option<u64> {
        self.accounts.get(addr).and_then(|a| a.holding(asset))
    }

    /// Sum of every account's holding of `asset`.
    pub fn circulating(&self, asset: AssetId) -> u64 {
        self.accounts
            .values()
            .filter_map(|a| a.holding(asset))
            .sum()
    }

    /// Digest over the round, the id counters, the registry and a
    /// commitment to every account, holding, asset and application.
    pub fn hash(&self) -> Digest {
        debug_assert!(self.commitment.is_clean(), "uncommitted writes");
        self.digest
    }

    pub(crate) fn create_account(&mut self, balance: u64) -> Address {
        let address = Address::for_account(self.next_account_seq);
        self.next_account_seq += 1;
        self.accounts
            .insert(address, Account::new(address, balance));
        self.touch(Leaf::Account(address));
        address
    }
}

/// What an applied transaction created, if anything.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    None,
    AssetCreated(AssetId),
    AppCreated(AppId),
}

impl Canonical for Effect {
    fn encode<S: Sink>(&self, out: &mut S) {
        match self {
            Effect::None => 0u8.encode(out),
            Effect::AssetCreated(id) => {
                1u8.encode(out);
                id.encode(out);
            }
            Effect::AppCreated(id) => {
                2u8.encode(out);
                id.encode(out);
            }
        }
    }
}

enum Undo {
    Balance(Address, u64),
    Holding(Address, AssetId, Option<u64>),
    Asset(AssetId, Option<Asset>),
    App(AppId, Option<ProductContract>),
    AppIndexed(Address),
    CreatedApp(Address, AppId),
    AccountInserted(Address),
    AccountRemoved(Box<Account>),
    Registry(Box<RoleRegistry>),
    NextAssetId(u64),
    NextAppId(u64),
}

/// Mutable view of the state that records how to undo every write.
pub(crate) struct StateTxn<'a> {
    state: &'a mut LedgerState,
    params: &'a LedgerParams,
    undo: Vec<Undo>,
}

impl<'a> StateTxn<'a> {
    pub(crate) fn new(state: &'a mut LedgerState, params: &'a LedgerParams) -> Self {
        StateTxn {
            state,
            params,
            undo: Vec::new(),
        }
    }

    pub(crate) fn view(&self) -> &LedgerState {
        self.state
    }

    pub(crate) fn params(&self) -> &LedgerParams {
        self.params
    }

    pub(crate) fn rollback(mut self) {
        while let Some(u) = self.undo.pop() {
            let s = &mut *self.state;
            match u {
                Undo::Balance(a, v) => {
                    s.touch(Leaf::Account(a));
                    if let Some(acct) = s.accounts.get_mut(&a) {
                        acct.balance = v;
                    }
                }
                Undo::Holding(a, asset, v) => {
                    s.touch(Leaf::Holding(a, asset));
                    if let Some(acct) = s.accounts.get_mut(&a) {
                        match v {
                            Some(v) => acct.holdings.insert(asset, v),
                            None => acct.holdings.remove(&asset),
                        };
                    }
                }
                Undo::Asset(id, v) => {
                    s.touch(Leaf::Asset(id));
                    match v {
                        Some(v) => s.assets.insert(id, v),
                        None => s.assets.remove(&id),
                    };
                }
                Undo::App(id, v) => {
                    s.touch(Leaf::App(id));
                    match v {
                        Some(v) => s.apps.insert(id, v),
                        None => s.apps.remove(&id),
                    };
                }
                Undo::AppIndexed(a) => {
                    s.app_index.remove(&a);
                }
                Undo::CreatedApp(a, id) => {
                    s.touch(Leaf::Account(a));
                    if let Some(acct) = s.accounts.get_mut(&a) {
                        acct.created_apps.remove(&id);
                    }
                }
                Undo::AccountInserted(a) => {
                    if let Some(acct) = s.accounts.remove(&a) {
                        s.touch_account(&acct);
                    }
                }
                Undo::AccountRemoved(acct) => {
                    s.touch_account(&acct);
                    s.accounts.insert(acct.address, *acct);
                }
                Undo::Registry(r) => s.registry = *r,
                Undo::NextAssetId(v) => s.next_asset_id = v,
                Undo::NextAppId(v) => s.next_app_id = v,
            }
        }
    }

    pub(crate) fn account(&self, addr: &Address) -> Result<&Account, TxError> {
        self.state
            .accounts
            .get(addr)
            .ok_or(TxError::UnknownAccount { address: *addr })
    }

    pub(crate) fn live_asset(&self, id: AssetId) -> Result<&Asset, TxError> {
        match self.state.assets.get(&id) {
            Some(a) if !a.destroyed => Ok(a),
            _ => Err(TxError::UnknownAsset { asset: id }),
        }
    }

    pub(crate) fn set_balance(&mut self, addr: Address, value: u64) {
        let acct = self.state.accounts.get_mut(&addr).expect("account checked");
        self.undo.push(Undo::Balance(addr, acct.balance));
        acct.balance = value;
        self.state.touch(Leaf::Account(addr));
    }

    pub(crate) fn debit(&mut self, addr: Address, amount: u64) -> Result<(), TxError> {
        let available = self.account(&addr)?.balance;
        if available < amount {
            return Err(TxError::InsufficientBalance {
                needed: amount,
                available,
            });
        }
        self.set_balance(addr, available - amount);
        Ok(())
    }

    pub(crate) fn credit(&mut self, addr: Address, amount: u64) -> Result<(), TxError> {
        let balance = self.account(&addr)?.balance;
        let next = balance
            .checked_add(amount)
            .ok_or_else(|| TxError::malformed("balance overflow"))?;
        self.set_balance(addr, next);
        Ok(())
    }

    pub(crate) fn set_holding(&mut self, addr: Address, asset: AssetId, value: Option<u64>) {
        let acct = self.state.accounts.get_mut(&addr).expect("account checked");
        let prev = match value {
            Some(v) => acct.holdings.insert(asset, v),
            None => acct.holdings.remove(&asset),
        };
        self.undo.push(Undo::Holding(addr, asset, prev));
        self.state.touch(Leaf::Holding(addr, asset));
    }

    pub(crate) fn put_asset(&mut self, asset: Asset) {
        let prev = self.state.assets.insert(asset.id, asset.clone());
        self.undo.push(Undo::Asset(asset.id, prev));
        self.state.touch(Leaf::Asset(asset.id));
    }

    pub(crate) fn put_app(&mut self, app: ProductContract) {
        let id = app.app_id;
        let address = app.address;
        let prev = self.state.apps.insert(id, app);
        if prev.is_none() {
            self.state.app_index.insert(address, id);
            self.undo.push(Undo::AppIndexed(address));
        }
        self.undo.push(Undo::App(id, prev));
        self.state.touch(Leaf::App(id));
    }

    pub(crate) fn add_created_app(&mut self, creator: Address, app: AppId) {
        let acct = self
            .state
            .accounts
            .get_mut(&creator)
            .expect("account checked");
        if acct.created_apps.insert(app) {
            self.undo.push(Undo::CreatedApp(creator, app));
            self.state.touch(Leaf::Account(creator));
        }
    }

    pub(crate) fn insert_account(&mut self, account: Account) {
        let addr = account.address;
        debug_assert!(!self.state.accounts.contains_key(&addr));
        self.state.touch_account(&account);
        self.state.accounts.insert(addr, account);
        self.undo.push(Undo::AccountInserted(addr));
    }

    pub(crate) fn remove_account(&mut self, addr: &Address) {
        if let Some(acct) = self.state.accounts.remove(addr) {
            self.state.touch_account(&acct);
            self.undo.push(Undo::AccountRemoved(Box::new(acct)));
        }
    }

    pub(crate) fn set_registry(&mut self, registry: RoleRegistry) {
        let prev = std::mem::replace(&mut self.state.registry, registry);
        self.undo.push(Undo::Registry(Box::new(prev)));
    }

    fn alloc_asset_id(&mut self) -> AssetId {
        let id = self.state.next_asset_id;
        self.undo.push(Undo::NextAssetId(id));
        self.state.next_asset_id = id + 1;
        AssetId(id)
    }

    pub(crate) fn alloc_app_id(&mut self) -> AppId {
        let id = self.state.next_app_id;
        self.undo.push(Undo::NextAppId(id));
        self.state.next_app_id = id + 1;
        AppId(id)
    }

    /// Moves `amount` units of `asset` between two opted-in accounts.
    pub(crate) fn move_units(
        &mut self,
        from: Address,
        to: Address,
        asset: AssetId,
        amount: u64,
    ) -> Result<(), TxError> {
        let available = self.account(&from)?.holding(asset).unwrap_or(0);
        if self.account(&from)?.holding(asset).is_none() || available < amount {
            return Err(TxError::InsufficientHolding {
                asset,
                needed: amount,
                available,
            });
        }
        let Some(held) = self.account(&to)?.holding(asset) else {
            return Err(TxError::ReceiverNotOptedIn {
                receiver: to,
                asset,
            });
        };
        if from == to {
            return Ok(());
        }
        self.set_holding(from, asset, Some(available - amount));
        self.set_holding(to, asset, Some(held + amount));
        Ok(())
    }
}

/// Applies `txns` in order. On the first failure everything is undone and
/// the failing index is reported.
pub(crate) fn apply_entry(
    state: &mut LedgerState,
    params: &LedgerParams,
    txns: &[Transaction],
) -> Result<Vec<Effect>, (usize, TxError)> {
    let mut tx = StateTxn::new(state, params);
    let mut effects = Vec::with_capacity(txns.len());
    for i in 0..txns.len() {
        match apply_one(&mut tx, txns, i) {
            Ok(e) => effects.push(e),
            Err(e) => {
                tx.rollback();
                return Err((i, e));
            }
        }
    }
    Ok(effects)
}

pub(crate) fn apply_one(
    tx: &mut StateTxn<'_>,
    group: &[Transaction],
    index: usize,
) -> Result<Effect, TxError> {
    let t = &group[index];
    let sender = t.sender;
    tx.account(&sender)?;
    if tx.view().app_index.contains_key(&sender) {
        return Err(TxError::ApplicationSender);
    }

    let effect = match &t.body {
        TxBody::Payment { receiver, amount } => {
            tx.account(receiver)?;
            tx.debit(sender, *amount)?;
            tx.credit(*receiver, *amount)?;
            Effect::None
        }
        TxBody::AssetCreate(p) => Effect::AssetCreated(asset_create(tx, sender, p)?),
        TxBody::AssetOptIn { asset_id } => {
            asset_transfer(tx, group, index, *asset_id, 0, sender, None)?;
            Effect::None
        }
        TxBody::AssetTransfer {
            asset_id,
            amount,
            receiver,
            custody,
        } => {
            asset_transfer(tx, group, index, *asset_id, *amount, *receiver, *custody)?;
            Effect::None
        }
        TxBody::AssetReconfigure { asset_id, manager } => {
            let asset = tx.live_asset(*asset_id)?;
            if asset.manager != sender {
                return Err(TxError::NotManager {
                    caller: sender,
                    asset: *asset_id,
                });
            }
            let mut updated = asset.clone();
            updated.manager = *manager;
            tx.put_asset(updated);
            Effect::None
        }
        TxBody::AssetDestroy { asset_id } => {
            asset_destroy(tx, sender, *asset_id)?;
            Effect::None
        }
        TxBody::AppCreate { trusted_recycler } => {
            Effect::AppCreated(contract::create(tx, sender, *trusted_recycler)?)
        }
        TxBody::AppCall {
            app_id,
            args,
            foreign_assets,
        } => {
            contract::call(tx, sender, *app_id, args, foreign_assets)?;
            Effect::None
        }
        TxBody::AppDelete { app_id } => {
            contract::delete(tx, sender, *app_id)?;
            Effect::None
        }
        TxBody::Certify {
            role,
            subject,
            granted,
        } => {
            contract::certify(tx, sender, *role, *subject, *granted)?;
            Effect::None
        }
    };

    tx.debit(sender, t.fee)?;
    Ok(effect)
}

fn asset_create(
    tx: &mut StateTxn<'_>,
    sender: Address,
    p: &AssetParams,
) -> Result<AssetId, TxError> {
    if p.total < 1 {
        return Err(TxError::InvalidTotal);
    }
    // Passport-backed NFTs may only be issued by the authenticator.
    if p.is_nft() && p.metadata_hash.is_some() && tx.view().registry.authenticator != Some(sender) {
        return Err(TxError::NotAuthenticator { caller: sender });
    }
    let id = tx.alloc_asset_id();
    tx.put_asset(Asset {
        id,
        creator: sender,
        manager: p.manager,
        total: p.total,
        decimals: p.decimals,
        unit_name: p.unit_name.clone(),
        asset_name: p.asset_name.clone(),
        url: p.url.clone(),
        metadata_hash: p.metadata_hash,
        destroyed: false,
    });
    tx.set_holding(sender, id, Some(p.total));
    Ok(id)
}

fn asset_transfer(
    tx: &mut StateTxn<'_>,
    group: &[Transaction],
    index: usize,
    asset: AssetId,
    amount: u64,
    receiver: Address,
    custody: Option<Address>,
) -> Result<(), TxError> {
    let sender = group[index].sender;
    let manager = tx.live_asset(asset)?.manager;
    tx.account(&receiver)?;

    let source = match custody {
        None => sender,
        Some(app_account) => {
            contract::approve_custody_release(tx, group, index, app_account, asset, receiver)?;
            // Units released from custody may always go back to the asset manager.
            if receiver == manager && tx.account(&receiver)?.holding(asset).is_none() {
                tx.set_holding(receiver, asset, Some(0));
            }
            app_account
        }
    };

    if source == receiver && amount == 0 {
        // Opt-in: establishes the holding, idempotent.
        if tx.account(&receiver)?.holding(asset).is_none() {
            if tx.view().app_index.contains_key(&receiver) {
                return Err(TxError::ApplicationSender);
            }
            tx.set_holding(receiver, asset, Some(0));
        }
        return Ok(());
    }

    tx.move_units(source, receiver, asset, amount)?;
    if amount > 0 {
        contract::on_units_received(tx, receiver);
    }
    Ok(())
}

fn asset_destroy(tx: &mut StateTxn<'_>, sender: Address, id: AssetId) -> Result<(), TxError> {
    let asset = tx.live_asset(id)?;
    if asset.manager != sender {
        return Err(TxError::NotManager {
            caller: sender,
            asset: id,
        });
    }
    let total = asset.total;
    if tx.account(&sender)?.holding(id) != Some(total) {
        return Err(TxError::SupplyNotConsolidated { asset: id });
    }
    let mut destroyed = asset.clone();
    destroyed.destroyed = true;
    tx.put_asset(destroyed);
    let holders: Vec<Address> = tx
        .view()
        .accounts
        .values()
        .filter(|a| a.holdings.contains_key(&id))
        .map(|a| a.address)
        .collect();
    for h in holders {
        tx.set_holding(h, id, None);
    }
    Ok(())
}
