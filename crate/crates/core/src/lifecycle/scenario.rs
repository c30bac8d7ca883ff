// SPDX-License-Identifier: Apache-2.0

//! Line-delimited scenario files.
//!
//! The first record declares the actors; every following line is one action.
//! Blank lines and lines starting with `#` are ignored.
//!
//! ```text
//! {"roles": [{"name": "auth", "role": "authenticator", "balance": 100000000},
//!            {"name": "computer", "role": "manufacturer", "balance": 100000000}, ...]}
//! {"action": "mint", "chip": "cpu", "passport": {...}}
//! {"action": "opt_in", "actor": "computer", "chip": "cpu"}
//! {"action": "transfer", "chip": "cpu", "to": "computer"}
//! {"action": "assemble", "product": "laptop", "manufacturer": "computer", "chips": ["cpu"], "recycler": "recycler"}
//! {"action": "distribute", "product": "laptop", "user": "alice"}
//! {"action": "return", "product": "laptop"}
//! {"action": "recycle", "product": "laptop", "dispositions": {"cpu": {"reuse": "computer"}}}
//! {"action": "produce_block"}
//! ```
//!
//! The whole file is parsed and every name resolved before the ledger is
//! touched, so an unknown action or actor aborts with no state change.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    assemble_product, certify_chip, distribute, recycle, return_product, transfer_to_manufacturer,
    ChipPassport, Disposition, LifecycleError,
};
use crate::contract::{certify_tx, Role};
use crate::ledger::{Address, AppId, AssetId, Ledger, LedgerParams, Outcome};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDecl {
    pub name: String,
    pub role: Role,
    pub balance: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    roles: Vec<RoleDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispositionSpec {
    Reuse(String),
    Destroy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    Mint {
        chip: String,
        passport: ChipPassport,
    },
    OptIn {
        actor: String,
        chip: String,
    },
    Transfer {
        chip: String,
        to: String,
    },
    Assemble {
        product: String,
        manufacturer: String,
        chips: Vec<String>,
        recycler: String,
    },
    Distribute {
        product: String,
        user: String,
    },
    Return {
        product: String,
    },
    Recycle {
        product: String,
        #[serde(default)]
        recycler: Option<String>,
        dispositions: BTreeMap<String, DispositionSpec>,
    },
    ProduceBlock,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown {kind} {name:?}")]
    UnknownName {
        line: usize,
        kind: &'static str,
        name: String,
    },
    #[error("genesis: {0}")]
    Genesis(String),
    #[error("line {line}: {source}")]
    Step {
        line: usize,
        #[source]
        source: LifecycleError,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub roles: Vec<RoleDecl>,
    /// Actions with their 1-based line numbers.
    pub actions: Vec<(usize, Action)>,
}

/// Ledger and name bindings produced by running a scenario.
#[derive(Debug)]
pub struct ScenarioRun {
    pub ledger: Ledger,
    pub actors: BTreeMap<String, Address>,
    pub chips: BTreeMap<String, AssetId>,
    pub passports: BTreeMap<String, ChipPassport>,
    pub products: BTreeMap<String, AppId>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut header: Option<Header> = None;
        let mut actions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if header.is_none() {
                let h: Header =
                    serde_json::from_str(trimmed).map_err(|e| ScenarioError::Parse {
                        line,
                        message: format!("expected the roles header: {e}"),
                    })?;
                header = Some(h);
                continue;
            }
            let action: Action =
                serde_json::from_str(trimmed).map_err(|e| ScenarioError::Parse {
                    line,
                    message: e.to_string(),
                })?;
            actions.push((line, action));
        }
        let header = header.ok_or(ScenarioError::Parse {
            line: 0,
            message: "missing roles header".into(),
        })?;
        let scenario = Scenario {
            roles: header.roles,
            actions,
        };
        scenario.check_names()?;
        Ok(scenario)
    }

    fn check_names(&self) -> Result<(), ScenarioError> {
        let mut actors = BTreeSet::new();
        for r in &self.roles {
            if !actors.insert(r.name.as_str()) {
                return Err(ScenarioError::Genesis(format!(
                    "actor {:?} declared twice",
                    r.name
                )));
            }
        }
        let authenticators = self
            .roles
            .iter()
            .filter(|r| r.role == Role::Authenticator)
            .count();
        if authenticators != 1 {
            return Err(ScenarioError::Genesis(format!(
                "exactly one authenticator is required, found {authenticators}"
            )));
        }

        let mut chips = BTreeSet::new();
        let mut products = BTreeSet::new();
        for (line, action) in &self.actions {
            let line = *line;
            let actor = |name: &str| -> Result<(), ScenarioError> {
                if actors.contains(name) {
                    Ok(())
                } else {
                    Err(ScenarioError::UnknownName {
                        line,
                        kind: "actor",
                        name: name.into(),
                    })
                }
            };
            let chip = |chips: &BTreeSet<String>, name: &str| -> Result<(), ScenarioError> {
                if chips.contains(name) {
                    Ok(())
                } else {
                    Err(ScenarioError::UnknownName {
                        line,
                        kind: "chip",
                        name: name.into(),
                    })
                }
            };
            let product = |products: &BTreeSet<String>, name: &str| -> Result<(), ScenarioError> {
                if products.contains(name) {
                    Ok(())
                } else {
                    Err(ScenarioError::UnknownName {
                        line,
                        kind: "product",
                        name: name.into(),
                    })
                }
            };
            match action {
                Action::Mint { chip: name, .. } => {
                    if !chips.insert(name.clone()) {
                        return Err(ScenarioError::Parse {
                            line,
                            message: format!("chip {name:?} minted twice"),
                        });
                    }
                }
                Action::OptIn { actor: a, chip: c } => {
                    actor(a)?;
                    chip(&chips, c)?;
                }
                Action::Transfer { chip: c, to } => {
                    chip(&chips, c)?;
                    actor(to)?;
                }
                Action::Assemble {
                    product: p,
                    manufacturer,
                    chips: cs,
                    recycler,
                } => {
                    actor(manufacturer)?;
                    actor(recycler)?;
                    for c in cs {
                        chip(&chips, c)?;
                    }
                    if !products.insert(p.clone()) {
                        return Err(ScenarioError::Parse {
                            line,
                            message: format!("product {p:?} assembled twice"),
                        });
                    }
                }
                Action::Distribute { product: p, user } => {
                    product(&products, p)?;
                    actor(user)?;
                }
                Action::Return { product: p } => product(&products, p)?,
                Action::Recycle {
                    product: p,
                    recycler,
                    dispositions,
                } => {
                    product(&products, p)?;
                    if let Some(r) = recycler {
                        actor(r)?;
                    }
                    for (c, d) in dispositions {
                        chip(&chips, c)?;
                        if let DispositionSpec::Reuse(to) = d {
                            actor(to)?;
                        }
                    }
                }
                Action::ProduceBlock => {}
            }
        }
        Ok(())
    }

    /// Creates the declared accounts, appoints the authenticator and certifies
    /// every declared manufacturer and recycler (one block).
    pub fn genesis(
        &self,
        params: LedgerParams,
    ) -> Result<(Ledger, BTreeMap<String, Address>), ScenarioError> {
        let mut ledger = Ledger::with_params(params);
        let mut actors = BTreeMap::new();
        for r in &self.roles {
            actors.insert(r.name.clone(), ledger.create_account(r.balance));
        }
        let auth_name = &self
            .roles
            .iter()
            .find(|r| r.role == Role::Authenticator)
            .expect("checked at parse")
            .name;
        let auth = actors[auth_name];
        ledger
            .appoint_authenticator(auth)
            .map_err(|e| ScenarioError::Genesis(e.to_string()))?;
        for r in &self.roles {
            if matches!(r.role, Role::Manufacturer | Role::Recycler) {
                ledger
                    .submit(certify_tx(auth, r.role, actors[&r.name], true))
                    .map_err(|e| ScenarioError::Genesis(e.to_string()))?;
            }
        }
        let block = ledger.produce_block();
        if let Some(bad) = block.entries.iter().find_map(|e| match &e.outcome {
            Outcome::Rejected(r) => Some(r.clone()),
            Outcome::Applied(_) => None,
        }) {
            return Err(ScenarioError::Genesis(bad.to_string()));
        }
        Ok((ledger, actors))
    }

    pub fn run(&self) -> Result<ScenarioRun, ScenarioError> {
        self.run_with(LedgerParams::default())
    }

    pub fn run_with(&self, params: LedgerParams) -> Result<ScenarioRun, ScenarioError> {
        let (ledger, actors) = self.genesis(params)?;
        let mut run = ScenarioRun {
            ledger,
            actors,
            chips: BTreeMap::new(),
            passports: BTreeMap::new(),
            products: BTreeMap::new(),
        };
        let authenticator = run
            .ledger
            .state()
            .registry()
            .authenticator
            .expect("appointed at genesis");
        for (line, action) in &self.actions {
            run.step(authenticator, action)
                .map_err(|source| ScenarioError::Step {
                    line: *line,
                    source,
                })?;
        }
        Ok(run)
    }
}

impl ScenarioRun {
    fn step(&mut self, authenticator: Address, action: &Action) -> Result<(), LifecycleError> {
        let ledger = &mut self.ledger;
        match action {
            Action::Mint { chip, passport } => {
                let id = certify_chip(ledger, authenticator, passport)?;
                self.chips.insert(chip.clone(), id);
                self.passports.insert(chip.clone(), passport.clone());
            }
            Action::OptIn { actor, chip } => {
                ledger.asset_opt_in(self.actors[actor], self.chips[chip])?;
            }
            Action::Transfer { chip, to } => {
                transfer_to_manufacturer(ledger, authenticator, self.actors[to], self.chips[chip])?;
            }
            Action::Assemble {
                product,
                manufacturer,
                chips,
                recycler,
            } => {
                let ids: Vec<AssetId> = chips.iter().map(|c| self.chips[c]).collect();
                let app = assemble_product(
                    ledger,
                    self.actors[manufacturer],
                    &ids,
                    self.actors[recycler],
                )?;
                self.products.insert(product.clone(), app);
            }
            Action::Distribute { product, user } => {
                let app = self.products[product];
                let maker = ledger.state().app(app).expect("assembled").creator;
                distribute(ledger, maker, app, self.actors[user])?;
            }
            Action::Return { product } => {
                let app = self.products[product];
                let user = ledger.state().app(app).expect("assembled").user;
                // An unset user cannot release; let the contract report it.
                let caller = user.unwrap_or(authenticator);
                return_product(ledger, caller, app)?;
            }
            Action::Recycle {
                product,
                recycler,
                dispositions,
            } => {
                let app = self.products[product];
                let recycler = match recycler {
                    Some(name) => self.actors[name],
                    None => ledger.state().app(app).expect("assembled").trusted_recycler,
                };
                let plan = dispositions
                    .iter()
                    .map(|(chip, d)| {
                        let d = match d {
                            DispositionSpec::Reuse(to) => Disposition::Reuse(self.actors[to]),
                            DispositionSpec::Destroy => Disposition::Destroy,
                        };
                        (self.chips[chip], d)
                    })
                    .collect();
                recycle(ledger, recycler, app, &plan)?;
            }
            Action::ProduceBlock => {
                ledger.produce_block();
            }
        }
        Ok(())
    }
}
