// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::contract::Method;
use crate::ledger::{Address, AppId, AssetId, Effect, Ledger, Outcome, TxBody, TxError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ProvenanceEvent {
    Minted { by: Address },
    Transferred { from: Address, to: Address },
    Bound { app: AppId },
    Released { app: AppId },
    Recycled { app: AppId, to: Address },
    Destroyed,
}

impl ProvenanceEvent {
    pub fn name(&self) -> &'static str {
        match self {
            ProvenanceEvent::Minted { .. } => "minted",
            ProvenanceEvent::Transferred { .. } => "transferred",
            ProvenanceEvent::Bound { .. } => "bound",
            ProvenanceEvent::Released { .. } => "released",
            ProvenanceEvent::Recycled { .. } => "recycled",
            ProvenanceEvent::Destroyed => "destroyed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracedEvent {
    pub round: u64,
    /// Index of the transaction inside its block.
    pub position: usize,
    #[serde(flatten)]
    pub event: ProvenanceEvent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub asset_id: AssetId,
    pub events: Vec<TracedEvent>,
}

impl ProvenanceRecord {
    pub fn names(&self) -> Vec<&'static str> {
        self.events.iter().map(|e| e.event.name()).collect()
    }
}

/// Reconstructs the history of `asset` from the block log.
pub fn trace(ledger: &Ledger, asset: AssetId) -> Result<ProvenanceRecord, TxError> {
    if ledger.state().asset(asset).is_none() {
        return Err(TxError::UnknownAsset { asset });
    }
    let mut app_at: HashMap<Address, AppId> = HashMap::new();
    let mut bound: BTreeMap<AppId, Vec<AssetId>> = BTreeMap::new();
    let mut events = Vec::new();

    for block in ledger.blocks() {
        for (position, entry) in block.entries.iter().enumerate() {
            let Outcome::Applied(effect) = &entry.outcome else {
                continue;
            };
            let tx = &entry.tx;
            let event = match (&tx.body, effect) {
                (TxBody::AppCreate { .. }, Effect::AppCreated(app)) => {
                    app_at.insert(Address::for_application(*app), *app);
                    None
                }
                (TxBody::AssetCreate(_), Effect::AssetCreated(id)) if *id == asset => {
                    Some(ProvenanceEvent::Minted { by: tx.sender })
                }
                (
                    TxBody::AssetTransfer {
                        asset_id,
                        amount,
                        receiver,
                        custody,
                    },
                    _,
                ) if *asset_id == asset && *amount > 0 => {
                    let source = custody.unwrap_or(tx.sender);
                    if source == *receiver {
                        None
                    } else if let Some(app) = custody.and_then(|c| app_at.get(&c)) {
                        Some(ProvenanceEvent::Recycled {
                            app: *app,
                            to: *receiver,
                        })
                    } else if let Some(app) = app_at.get(receiver) {
                        Some(ProvenanceEvent::Bound { app: *app })
                    } else {
                        Some(ProvenanceEvent::Transferred {
                            from: source,
                            to: *receiver,
                        })
                    }
                }
                (
                    TxBody::AppCall {
                        app_id,
                        args,
                        foreign_assets,
                    },
                    _,
                ) => match Method::decode(args) {
                    Ok(Method::Init) => {
                        bound.insert(*app_id, foreign_assets.clone());
                        None
                    }
                    Ok(Method::Release)
                        if bound.get(app_id).is_some_and(|b| b.contains(&asset)) =>
                    {
                        Some(ProvenanceEvent::Released { app: *app_id })
                    }
                    _ => None,
                },
                (TxBody::AssetDestroy { asset_id }, _) if *asset_id == asset => {
                    Some(ProvenanceEvent::Destroyed)
                }
                _ => None,
            };
            if let Some(event) = event {
                events.push(TracedEvent {
                    round: block.round,
                    position,
                    event,
                });
            }
        }
    }
    Ok(ProvenanceRecord {
        asset_id: asset,
        events,
    })
}
