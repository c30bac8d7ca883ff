// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codec::{Canonical, Digest, Hasher, Sink};
use crate::contract::Role;

/// Opaque 32-byte account identifier, rendered as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 32]);

impl Address {
    /// Address of the `seq`-th account created on a ledger.
    pub fn for_account(seq: u64) -> Self {
        Address(Digest::of_canonical("account", &seq).0)
    }

    /// Address of the account controlled by application `app`.
    pub fn for_application(app: AppId) -> Self {
        Address(Digest::of_canonical("appID", &app.0).0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", &hex::encode(self.0)[..10])
    }
}

#[derive(Debug, thiserror::Error)]
#[error("malformed address: {0}")]
pub struct ParseAddressError(String);

impl FromStr for Address {
    type Err = ParseAddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| ParseAddressError(s.to_string()))?;
        Ok(Address(out))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Canonical for Address {
    fn encode<S: Sink>(&self, out: &mut S) {
        out.put(&self.0);
    }
}

macro_rules! id_newtype {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl Canonical for $name {
            fn encode<S: Sink>(&self, out: &mut S) {
                self.0.encode(out);
            }
        }
    };
}

id_newtype!(AssetId, "asset#");
id_newtype!(AppId, "app#");

/// Digest of a transaction's canonical encoding.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxId(pub Digest);

/// Shared identifier of every member of an atomic group.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub Digest);

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Protocol constants. The defaults are the values every test and the CLI use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerParams {
    pub block_capacity: usize,
    pub round_millis: u64,
    pub flat_fee: u64,
    pub max_group_size: usize,
}

pub const BLOCK_CAPACITY: usize = 5000;
pub const ROUND_MILLIS: u64 = 4500;
pub const ROUND_SECONDS: f64 = 4.5;
pub const FLAT_FEE: u64 = 1000;
pub const MAX_GROUP_SIZE: usize = 16;

pub const MAX_UNIT_NAME_BYTES: usize = 8;
pub const MAX_ASSET_NAME_BYTES: usize = 32;
pub const MAX_URL_BYTES: usize = 96;

impl Default for LedgerParams {
    fn default() -> Self {
        LedgerParams {
            block_capacity: BLOCK_CAPACITY,
            round_millis: ROUND_MILLIS,
            flat_fee: FLAT_FEE,
            max_group_size: MAX_GROUP_SIZE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub address: Address,
    pub balance: u64,
    /// Present iff the account opted in to the asset.
    pub holdings: BTreeMap<AssetId, u64>,
    pub created_apps: BTreeSet<AppId>,
}

impl Account {
    pub fn new(address: Address, balance: u64) -> Self {
        Account {
            address,
            balance,
            holdings: BTreeMap::new(),
            created_apps: BTreeSet::new(),
        }
    }

    pub fn holding(&self, asset: AssetId) -> Option<u64> {
        self.holdings.get(&asset).copied()
    }
}

impl Canonical for Account {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.address.encode(out);
        self.balance.encode(out);
        self.holdings.encode(out);
        self.created_apps.encode(out);
    }
}

/// Creation parameters of an asset. `total == 1 && decimals == 0` makes an NFT.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetParams {
    pub total: u64,
    pub decimals: u32,
    pub unit_name: String,
    pub asset_name: String,
    pub url: String,
    pub metadata_hash: Option<Digest>,
    pub manager: Address,
}

impl AssetParams {
    /// A single-unit, indivisible asset.
    pub fn nft(unit_name: &str, asset_name: &str, manager: Address) -> Self {
        AssetParams {
            total: 1,
            decimals: 0,
            unit_name: unit_name.to_string(),
            asset_name: asset_name.to_string(),
            url: String::new(),
            metadata_hash: None,
            manager,
        }
    }

    pub fn is_nft(&self) -> bool {
        self.total == 1 && self.decimals == 0
    }
}

impl Canonical for AssetParams {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.total.encode(out);
        self.decimals.encode(out);
        self.unit_name.encode(out);
        self.asset_name.encode(out);
        self.url.encode(out);
        self.metadata_hash.encode(out);
        self.manager.encode(out);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Asset {
    pub id: AssetId,
    pub creator: Address,
    pub manager: Address,
    pub total: u64,
    pub decimals: u32,
    pub unit_name: String,
    pub asset_name: String,
    pub url: String,
    pub metadata_hash: Option<Digest>,
    pub destroyed: bool,
}

impl Asset {
    pub fn is_nft(&self) -> bool {
        self.total == 1 && self.decimals == 0
    }
}

impl Canonical for Asset {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.id.encode(out);
        self.creator.encode(out);
        self.manager.encode(out);
        self.total.encode(out);
        self.decimals.encode(out);
        self.unit_name.encode(out);
        self.asset_name.encode(out);
        self.url.encode(out);
        self.metadata_hash.encode(out);
        self.destroyed.encode(out);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TxBody {
    Payment {
        receiver: Address,
        amount: u64,
    },
    AssetCreate(AssetParams),
    /// Same effect as a zero-amount transfer from the sender to itself.
    AssetOptIn {
        asset_id: AssetId,
    },
    AssetTransfer {
        asset_id: AssetId,
        amount: u64,
        receiver: Address,
        /// Application account the units are taken from, when the sender is
        /// acting on a product contract's custody. `None` moves the sender's own units.
        custody: Option<Address>,
    },
    /// Hands the manager authority of an asset to another account.
    AssetReconfigure {
        asset_id: AssetId,
        manager: Address,
    },
    AssetDestroy {
        asset_id: AssetId,
    },
    AppCreate {
        trusted_recycler: Address,
    },
    AppCall {
        app_id: AppId,
        args: Vec<Vec<u8>>,
        foreign_assets: Vec<AssetId>,
    },
    AppDelete {
        app_id: AppId,
    },
    /// Grants or revokes a certification. Only the authenticator may issue it.
    Certify {
        role: Role,
        subject: Address,
        granted: bool,
    },
}

impl TxBody {
    fn tag(&self) -> u8 {
        match self {
            TxBody::Payment { .. } => 0,
            TxBody::AssetCreate(_) => 1,
            TxBody::AssetOptIn { .. } => 2,
            TxBody::AssetTransfer { .. } => 3,
            TxBody::AssetReconfigure { .. } => 4,
            TxBody::AssetDestroy { .. } => 5,
            TxBody::AppCreate { .. } => 6,
            TxBody::AppCall { .. } => 7,
            TxBody::AppDelete { .. } => 8,
            TxBody::Certify { .. } => 9,
        }
    }
}

impl Canonical for TxBody {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.tag().encode(out);
        match self {
            TxBody::Payment { receiver, amount } => {
                receiver.encode(out);
                amount.encode(out);
            }
            TxBody::AssetCreate(p) => p.encode(out),
            TxBody::AssetOptIn { asset_id } => asset_id.encode(out),
            TxBody::AssetTransfer {
                asset_id,
                amount,
                receiver,
                custody,
            } => {
                asset_id.encode(out);
                amount.encode(out);
                receiver.encode(out);
                custody.encode(out);
            }
            TxBody::AssetReconfigure { asset_id, manager } => {
                asset_id.encode(out);
                manager.encode(out);
            }
            TxBody::AssetDestroy { asset_id } => asset_id.encode(out),
            TxBody::AppCreate { trusted_recycler } => trusted_recycler.encode(out),
            TxBody::AppCall {
                app_id,
                args,
                foreign_assets,
            } => {
                app_id.encode(out);
                (args.len() as u32).encode(out);
                for a in args {
                    a.as_slice().encode(out);
                }
                foreign_assets.encode(out);
            }
            TxBody::AppDelete { app_id } => app_id.encode(out),
            TxBody::Certify {
                role,
                subject,
                granted,
            } => {
                role.encode(out);
                subject.encode(out);
                granted.encode(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    /// Authorizing account; pays the fee.
    pub sender: Address,
    pub fee: u64,
    /// Free-form nonce that lets otherwise identical transactions have distinct ids.
    #[serde(default)]
    pub note: u64,
    #[serde(default)]
    pub group: Option<GroupId>,
    pub body: TxBody,
}

impl Transaction {
    pub fn new(sender: Address, body: TxBody) -> Self {
        Transaction {
            sender,
            fee: FLAT_FEE,
            note: 0,
            group: None,
            body,
        }
    }

    pub fn with_note(mut self, note: u64) -> Self {
        self.note = note;
        self
    }

    pub fn payment(sender: Address, receiver: Address, amount: u64) -> Self {
        Self::new(sender, TxBody::Payment { receiver, amount })
    }

    pub fn asset_create(sender: Address, params: AssetParams) -> Self {
        Self::new(sender, TxBody::AssetCreate(params))
    }

    pub fn opt_in(account: Address, asset_id: AssetId) -> Self {
        Self::new(account, TxBody::AssetOptIn { asset_id })
    }

    pub fn asset_transfer(
        sender: Address,
        receiver: Address,
        asset_id: AssetId,
        amount: u64,
    ) -> Self {
        Self::new(
            sender,
            TxBody::AssetTransfer {
                asset_id,
                amount,
                receiver,
                custody: None,
            },
        )
    }

    pub fn asset_destroy(manager: Address, asset_id: AssetId) -> Self {
        Self::new(manager, TxBody::AssetDestroy { asset_id })
    }

    pub fn id(&self) -> TxId {
        TxId(Digest::of_canonical("TX", self))
    }
}

impl Canonical for Transaction {
    fn encode<S: Sink>(&self, out: &mut S) {
        self.sender.encode(out);
        self.fee.encode(out);
        self.note.encode(out);
        self.group.map(|g| g.0).encode(out);
        self.body.encode(out);
    }
}

/// Ordered transactions that commit or fail together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionGroup {
    txns: Vec<Transaction>,
}

impl TransactionGroup {
    /// Stamps every member with the group id derived from the members' ids.
    /// Size limits are enforced at submission.
    pub fn new(mut txns: Vec<Transaction>) -> Self {
        for t in &mut txns {
            t.group = None;
        }
        let id = Self::derive_id(&txns);
        for t in &mut txns {
            t.group = Some(id);
        }
        TransactionGroup { txns }
    }

    fn derive_id(ungrouped: &[Transaction]) -> GroupId {
        let mut h = Hasher::new();
        "TG".encode(&mut h);
        for t in ungrouped {
            t.id().0.encode(&mut h);
        }
        GroupId(h.finish())
    }

    /// Reassembles a group from members that already carry their group id.
    pub(crate) fn from_stamped(txns: Vec<Transaction>) -> Self {
        TransactionGroup { txns }
    }

    pub fn id(&self) -> Option<GroupId> {
        self.txns.first().and_then(|t| t.group)
    }

    pub fn txns(&self) -> &[Transaction] {
        &self.txns
    }

    pub fn len(&self) -> usize {
        self.txns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txns.is_empty()
    }

    pub fn into_txns(self) -> Vec<Transaction> {
        self.txns
    }

    /// True when every member carries the id derived from the members themselves.
    pub fn is_consistent(&self) -> bool {
        let Some(id) = self.id() else {
            return false;
        };
        if self.txns.iter().any(|t| t.group != Some(id)) {
            return false;
        }
        let stripped: Vec<Transaction> = self
            .txns
            .iter()
            .cloned()
            .map(|mut t| {
                t.group = None;
                t
            })
            .collect();
        Self::derive_id(&stripped) == id
    }
}
