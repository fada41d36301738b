//! Reading transfer records, registries and method labels; spam filtering;
//! grouping transfers into per-ego transactions.

mod methods;
mod registry;
mod transfers;

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use methods::{
    group_methods, normalize_method, parse_group_name, parse_method_labels, LabelLoad, MethodGroup,
    MethodLabel, MethodMapping,
};
pub use registry::{
    is_null_address, normalize_address, AccountRegistry, AccountType, TokenCategory, TokenInfo,
    TokenRegistry,
};
pub use transfers::{
    load_transfers, parse_transfers, LoadReport, RejectReason, Rejection, TokenTransfer,
    TransferLoad, TRANSFER_COLUMNS,
};

/// All transfers of one transaction as seen from one ego's history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_hash: String,
    #[serde(rename = "ego")]
    pub ego_account: String,
    pub transfers: Vec<TokenTransfer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method_group: Option<MethodGroup>,
}

impl Transaction {
    /// Checks the grouping invariants: nonempty, one tx_hash, one ego.
    pub fn validate(&self) -> Result<(), String> {
        if self.transfers.is_empty() {
            return Err(format!("transaction {} has no transfers", self.tx_hash));
        }
        for t in &self.transfers {
            if t.tx_hash != self.tx_hash || t.ego_account != self.ego_account {
                return Err(format!(
                    "transaction {} holds a transfer of {}/{}",
                    self.tx_hash, t.tx_hash, t.ego_account
                ));
            }
        }
        Ok(())
    }
}

/// Partitions transfers by `(tx_hash, ego)`. Transactions appear in order of
/// their first transfer; transfers keep input order.
pub fn group_transactions(transfers: Vec<TokenTransfer>) -> Vec<Transaction> {
    let mut groups: IndexMap<(String, String), Vec<TokenTransfer>> = IndexMap::new();
    for t in transfers {
        groups
            .entry((t.tx_hash.clone(), t.ego_account.clone()))
            .or_default()
            .push(t);
    }
    groups
        .into_iter()
        .map(|((tx_hash, ego_account), transfers)| Transaction {
            tx_hash,
            ego_account,
            transfers,
            raw_method: None,
            method_group: None,
        })
        .collect()
}

/// Drops every transaction that moves at least one spam token.
pub fn filter_spam(transactions: Vec<Transaction>, tokens: &TokenRegistry) -> Vec<Transaction> {
    transactions
        .into_iter()
        .filter(|tx| {
            !tx.transfers.is_empty()
                && !tx
                    .transfers
                    .iter()
                    .any(|t| tokens.is_spam(&t.token_contract, &t.token_symbol))
        })
        .collect()
}

/// Attaches raw methods and groups by tx_hash. Every ego view of a labelled
/// transaction receives the same label.
pub fn attach_labels(transactions: &mut [Transaction], labels: &[MethodLabel]) {
    let by_hash: HashMap<&str, &MethodLabel> =
        labels.iter().map(|l| (l.tx_hash.as_str(), l)).collect();
    for tx in transactions {
        if let Some(l) = by_hash.get(tx.tx_hash.as_str()) {
            tx.raw_method = Some(l.raw_method.clone());
            tx.method_group = l.method_group;
        }
    }
}
