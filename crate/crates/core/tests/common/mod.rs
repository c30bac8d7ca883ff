// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::collections::BTreeMap;

use chiploop::contract::{self, certify_tx, ContractState};
use chiploop::ledger::{Address, AppId, AssetId, AssetParams, Ledger};
use chiploop::lifecycle::{self, ChipPassport, Disposition};
use chiploop::Role;

pub const RICH: u64 = 1_000_000_000;

/// One account per role, with the manufacturer and recycler certified.
pub struct World {
    pub ledger: Ledger,
    pub auth: Address,
    pub maker: Address,
    pub user: Address,
    pub recycler: Address,
}

impl World {
    pub fn new() -> World {
        let mut ledger = Ledger::new();
        let [auth, maker, user, recycler] = [(); 4].map(|_| ledger.create_account(RICH));
        ledger.appoint_authenticator(auth).unwrap();
        ledger
            .execute(certify_tx(auth, Role::Manufacturer, maker, true))
            .unwrap();
        ledger
            .execute(certify_tx(auth, Role::Recycler, recycler, true))
            .unwrap();
        World {
            ledger,
            auth,
            maker,
            user,
            recycler,
        }
    }

    pub fn actor(&self, role: Role) -> Address {
        match role {
            Role::Authenticator => self.auth,
            Role::Manufacturer => self.maker,
            Role::User => self.user,
            Role::Recycler => self.recycler,
        }
    }

    /// A certified chip sitting with the authenticator, maker already opted in.
    pub fn minted_chip(&mut self, serial: &str) -> AssetId {
        let id = lifecycle::certify_chip(&mut self.ledger, self.auth, &passport(serial)).unwrap();
        self.ledger.asset_opt_in(self.maker, id).unwrap();
        id
    }

    pub fn chip_at_maker(&mut self, serial: &str) -> AssetId {
        let id = self.minted_chip(serial);
        lifecycle::transfer_to_manufacturer(&mut self.ledger, self.auth, self.maker, id).unwrap();
        id
    }

    pub fn product_in(&mut self, state: ContractState, serials: &[&str]) -> (AppId, Vec<AssetId>) {
        if state == ContractState::Deployed {
            let app = contract::app_create(&mut self.ledger, self.maker, self.recycler).unwrap();
            self.ledger
                .pay(
                    self.maker,
                    Address::for_application(app),
                    contract::APP_FUNDING,
                )
                .unwrap();
            return (app, vec![]);
        }
        let chips: Vec<AssetId> = serials.iter().map(|s| self.chip_at_maker(s)).collect();
        let app = lifecycle::assemble_product(&mut self.ledger, self.maker, &chips, self.recycler)
            .unwrap();
        if matches!(
            state,
            ContractState::InUse | ContractState::Released | ContractState::Dismantled
        ) {
            lifecycle::distribute(&mut self.ledger, self.maker, app, self.user).unwrap();
        }
        if matches!(state, ContractState::Released | ContractState::Dismantled) {
            lifecycle::return_product(&mut self.ledger, self.user, app).unwrap();
        }
        if state == ContractState::Dismantled {
            let plan = chips
                .iter()
                .map(|c| (*c, Disposition::Reuse(self.maker)))
                .collect();
            lifecycle::recycle(&mut self.ledger, self.recycler, app, &plan).unwrap();
        }
        (app, chips)
    }
}

pub fn passport(serial: &str) -> ChipPassport {
    ChipPassport {
        chip_serial: serial.into(),
        chip_type: "GPU".into(),
        manufacturer_of_chip: "Fab One".into(),
        manufacture_date: "2021-03-14".into(),
        months_in_service: 0,
        url: format!("https://passports.example/{serial}"),
    }
}

pub fn fungible(manager: Address, total: u64) -> AssetParams {
    AssetParams {
        total,
        decimals: 0,
        unit_name: "uname".into(),
        asset_name: "token".into(),
        url: String::new(),
        metadata_hash: None,
        manager,
    }
}

/// Sum of every account's units of `asset`, computed straight from the state.
pub fn units_held(ledger: &Ledger, asset: AssetId) -> u64 {
    ledger
        .state()
        .accounts()
        .filter_map(|a| a.holdings.get(&asset).copied())
        .sum()
}

/// Who holds each unit of a single-unit asset.
pub fn holder_of(ledger: &Ledger, asset: AssetId) -> Option<Address> {
    let holders: Vec<Address> = ledger
        .state()
        .accounts()
        .filter(|a| a.holdings.get(&asset).copied().unwrap_or(0) > 0)
        .map(|a| a.address)
        .collect();
    assert!(
        holders.len() <= 1,
        "single-unit asset held by several accounts"
    );
    holders.first().copied()
}

pub fn reuse_all(chips: &[AssetId], to: Address) -> BTreeMap<AssetId, Disposition> {
    chips.iter().map(|c| (*c, Disposition::Reuse(to))).collect()
}
