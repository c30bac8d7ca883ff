// SPDX-License-Identifier: Apache-2.0

//! One-call wrappers around [`Ledger::execute`] for the asset operations.

use super::{Address, AssetId, AssetParams, Ledger, Transaction, TxError};

impl Ledger {
    pub fn pay(&mut self, sender: Address, receiver: Address, amount: u64) -> Result<(), TxError> {
        self.execute(Transaction::payment(sender, receiver, amount))?;
        Ok(())
    }

    pub fn asset_create(
        &mut self,
        creator: Address,
        params: AssetParams,
    ) -> Result<AssetId, TxError> {
        let receipt = self.execute(Transaction::asset_create(creator, params))?;
        Ok(receipt
            .created_asset()
            .expect("AssetCreate yields an asset"))
    }

    /// Opts `account` in to `asset`. An account that already holds an entry is
    /// left alone (no transaction, no fee).
    pub fn asset_opt_in(&mut self, account: Address, asset: AssetId) -> Result<(), TxError> {
        let live = self.state().asset(asset).is_some_and(|a| !a.destroyed);
        if live && self.state().holding(&account, asset).is_some() {
            return Ok(());
        }
        self.execute(Transaction::opt_in(account, asset))?;
        Ok(())
    }

    pub fn asset_transfer(
        &mut self,
        sender: Address,
        receiver: Address,
        asset: AssetId,
        amount: u64,
    ) -> Result<(), TxError> {
        self.execute(Transaction::asset_transfer(sender, receiver, asset, amount))?;
        Ok(())
    }

    pub fn asset_destroy(&mut self, caller: Address, asset: AssetId) -> Result<(), TxError> {
        self.execute(Transaction::asset_destroy(caller, asset))?;
        Ok(())
    }
}
