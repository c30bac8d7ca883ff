// SPDX-License-Identifier: Apache-2.0

//! Incremental digest over the ledger state.
//!
//! Every account, holding, asset and application is a leaf. Leaves are
//! spread over 65536 buckets by a hash of their key; buckets are grouped
//! under 256 mid nodes, and the root covers the mid nodes. Only leaves
//! touched since the last refresh are re-read, so the cost of a refresh
//! follows the number of writes rather than the size of the state.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::state::LedgerState;
use super::types::{Address, AppId, AssetId};
use crate::codec::{Canonical, Digest, Hasher, Sink};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Leaf {
    Account(Address),
    Holding(Address, AssetId),
    Asset(AssetId),
    App(AppId),
}

impl Canonical for Leaf {
    fn encode<S: Sink>(&self, out: &mut S) {
        match self {
            Leaf::Account(a) => {
                0u8.encode(out);
                a.encode(out);
            }
            Leaf::Holding(a, id) => {
                1u8.encode(out);
                a.encode(out);
                id.encode(out);
            }
            Leaf::Asset(id) => {
                2u8.encode(out);
                id.encode(out);
            }
            Leaf::App(id) => {
                3u8.encode(out);
                id.encode(out);
            }
        }
    }
}

impl Leaf {
    fn bucket(&self) -> u16 {
        let d = Digest::of_canonical("LEAF-KEY", self);
        u16::from_be_bytes([d.0[0], d.0[1]])
    }

    /// Digest of the leaf's current value, or `None` if it does not exist.
    fn digest(&self, state: &LedgerState) -> Option<Digest> {
        let mut h = Hasher::new();
        "LEAF".encode(&mut h);
        self.encode(&mut h);
        match self {
            Leaf::Account(a) => {
                let acct = state.accounts.get(a)?;
                acct.balance.encode(&mut h);
                acct.created_apps.encode(&mut h);
            }
            Leaf::Holding(a, id) => state.accounts.get(a)?.holdings.get(id)?.encode(&mut h),
            Leaf::Asset(id) => state.assets.get(id)?.encode(&mut h),
            Leaf::App(id) => state.apps.get(id)?.encode(&mut h),
        }
        Some(h.finish())
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Commitment {
    buckets: HashMap<u16, BTreeMap<Leaf, Digest>>,
    mids: BTreeMap<u8, BTreeMap<u8, Digest>>,
    mid_digests: BTreeMap<u8, Digest>,
    dirty: HashSet<Leaf>,
}

impl Commitment {
    pub(crate) fn touch(&mut self, leaf: Leaf) {
        self.dirty.insert(leaf);
    }

    pub(crate) fn is_clean(&self) -> bool {
        self.dirty.is_empty()
    }

    /// A commitment built from nothing but `state`.
    pub(crate) fn build(state: &LedgerState) -> Commitment {
        let mut c = Commitment::default();
        for acct in state.accounts.values() {
            c.touch(Leaf::Account(acct.address));
            for id in acct.holdings.keys() {
                c.touch(Leaf::Holding(acct.address, *id));
            }
        }
        c.dirty
            .extend(state.assets.keys().map(|id| Leaf::Asset(*id)));
        c.dirty.extend(state.apps.keys().map(|id| Leaf::App(*id)));
        c.refresh(state);
        c
    }

    /// Re-reads every touched leaf and returns the new root.
    pub(crate) fn refresh(&mut self, state: &LedgerState) -> Digest {
        let mut dirty_buckets = BTreeSet::new();
        for leaf in std::mem::take(&mut self.dirty) {
            let b = leaf.bucket();
            let bucket = self.buckets.entry(b).or_default();
            match leaf.digest(state) {
                Some(d) => bucket.insert(leaf, d),
                None => bucket.remove(&leaf),
            };
            dirty_buckets.insert(b);
        }

        let mut dirty_mids = BTreeSet::new();
        for b in dirty_buckets {
            let [hi, lo] = b.to_be_bytes();
            let leaves = &self.buckets[&b];
            if leaves.is_empty() {
                self.buckets.remove(&b);
                if let Some(m) = self.mids.get_mut(&hi) {
                    m.remove(&lo);
                }
            } else {
                let mut h = Hasher::new();
                for d in leaves.values() {
                    d.encode(&mut h);
                }
                self.mids.entry(hi).or_default().insert(lo, h.finish());
            }
            dirty_mids.insert(hi);
        }

        for hi in dirty_mids {
            match self.mids.get(&hi) {
                Some(children) if !children.is_empty() => {
                    let mut h = Hasher::new();
                    for (lo, d) in children {
                        lo.encode(&mut h);
                        d.encode(&mut h);
                    }
                    self.mid_digests.insert(hi, h.finish());
                }
                _ => {
                    self.mids.remove(&hi);
                    self.mid_digests.remove(&hi);
                }
            }
        }
        self.root()
    }

    pub(crate) fn root(&self) -> Digest {
        let mut h = Hasher::new();
        "STATE-ROOT".encode(&mut h);
        for (hi, d) in &self.mid_digests {
            hi.encode(&mut h);
            d.encode(&mut h);
        }
        h.finish()
    }
}
