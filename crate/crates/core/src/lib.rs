// SPDX-License-Identifier: Apache-2.0

//! Two-layer token management for second-life chips.
//!
//! The lower layer ([`ledger`]) is an account-based ledger with opt-in
//! assets; a chip's passport is an NFT (total supply 1) whose metadata hash
//! commits to the passport fields. The upper layer ([`contract`]) is a product
//! contract that custodies the NFTs of every chip built into a product and
//! gates each lifecycle step on the caller's role. [`lifecycle`] drives the
//! journey of a chip from certification to recycling and answers provenance
//! queries from the block log; [`bench`] measures batch token creation.

pub mod bench;
pub mod codec;
pub mod contract;
pub mod ledger;
pub mod lifecycle;

pub use codec::Digest;
pub use contract::{ContractState, ProductContract, Role, RoleRegistry};
pub use ledger::{Address, AppId, AssetId, Block, Ledger, Transaction, TransactionGroup, TxError};
