//! Token and account registries loaded from `tokens.json` / `accounts.json`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token categories. The vocabulary is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenCategory {
    Cryptocurrency,
    Stablecoin,
    Marketplace,
    Other,
    #[serde(rename = "NFT & Metaverse")]
    NftMetaverse,
    Network,
    #[serde(rename = "Financial Service")]
    FinancialService,
    Synthetic,
    Bridge,
    Unlabeled,
}

impl TokenCategory {
    pub const ALL: [TokenCategory; 10] = [
        TokenCategory::Cryptocurrency,
        TokenCategory::Stablecoin,
        TokenCategory::Marketplace,
        TokenCategory::Other,
        TokenCategory::NftMetaverse,
        TokenCategory::Network,
        TokenCategory::FinancialService,
        TokenCategory::Synthetic,
        TokenCategory::Bridge,
        TokenCategory::Unlabeled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TokenCategory::Cryptocurrency => "Cryptocurrency",
            TokenCategory::Stablecoin => "Stablecoin",
            TokenCategory::Marketplace => "Marketplace",
            TokenCategory::Other => "Other",
            TokenCategory::NftMetaverse => "NFT & Metaverse",
            TokenCategory::Network => "Network",
            TokenCategory::FinancialService => "Financial Service",
            TokenCategory::Synthetic => "Synthetic",
            TokenCategory::Bridge => "Bridge",
            TokenCategory::Unlabeled => "Unlabeled",
        }
    }
}

impl fmt::Display for TokenCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TokenCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TokenCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::invalid("token category", format!("unknown category {s:?}")))
    }
}

/// Node type of an account inside an ego transfer network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccountType {
    Ego,
    Address,
    Contract,
    Null,
}

impl AccountType {
    /// One-letter code used in feature keys.
    pub fn code(self) -> char {
        match self {
            AccountType::Ego => 'E',
            AccountType::Address => 'A',
            AccountType::Contract => 'C',
            AccountType::Null => 'N',
        }
    }
}

impl fmt::Display for AccountType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Lowercased, trimmed form of an account or contract id.
pub fn normalize_address(raw: &str) -> String {
    raw.trim().to_ascii_lowercase()
}

/// The all-zero address (`0x000...0`), used for minting and burning.
pub fn is_null_address(addr: &str) -> bool {
    let body = addr
        .strip_prefix("0x")
        .or_else(|| addr.strip_prefix("0X"))
        .unwrap_or(addr);
    !body.is_empty() && body.bytes().all(|b| b == b'0')
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenInfo {
    #[serde(default)]
    pub contract: String,
    #[serde(default)]
    pub symbol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<TokenCategory>,
    #[serde(default)]
    pub is_spam: bool,
}

#[derive(Debug, Deserialize)]
struct RawTokenInfo {
    #[serde(default)]
    contract: Option<String>,
    #[serde(default)]
    symbol: Option<String>,
    #[serde(default)]
    category: Option<String>,
    #[serde(default)]
    is_spam: bool,
}

/// Token metadata keyed by contract address, with the symbol as a fallback
/// for transfers that carry no contract (native ETH).
#[derive(Debug, Clone, Default)]
pub struct TokenRegistry {
    entries: Vec<TokenInfo>,
    by_contract: HashMap<String, usize>,
    by_symbol: HashMap<String, usize>,
}

impl TokenRegistry {
    pub fn new(entries: Vec<TokenInfo>) -> Result<Self> {
        let mut reg = TokenRegistry::default();
        for mut info in entries {
            info.contract = normalize_address(&info.contract);
            info.symbol = info.symbol.trim().to_string();
            if info.is_spam {
                info.category = None;
            } else if info.category.is_none() {
                info.category = Some(TokenCategory::Unlabeled);
            }
            if info.contract.is_empty() && info.symbol.is_empty() {
                return Err(Error::invalid(
                    "token registry",
                    "entry has neither contract nor symbol",
                ));
            }
            if !info.contract.is_empty() {
                if let Some(&prev) = reg.by_contract.get(&info.contract) {
                    if reg.entries[prev] != info {
                        return Err(Error::invalid(
                            "token registry",
                            format!("conflicting entries for contract {}", info.contract),
                        ));
                    }
                    continue;
                }
                reg.by_contract
                    .insert(info.contract.clone(), reg.entries.len());
            }
            reg.entries.push(info);
        }
        // Contract-less entries win the symbol index; spam clones reuse
        // legitimate symbols, so a contract-bearing entry only fills gaps.
        for pass_contractless in [true, false] {
            for (i, info) in reg.entries.iter().enumerate() {
                if info.symbol.is_empty() || info.contract.is_empty() != pass_contractless {
                    continue;
                }
                reg.by_symbol.entry(info.symbol.clone()).or_insert(i);
            }
        }
        Ok(reg)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let raw: Vec<RawTokenInfo> = serde_json::from_slice(bytes)?;
        let entries = raw
            .into_iter()
            .map(|r| {
                let category = match r.category.as_deref().map(str::trim) {
                    None | Some("") => None,
                    Some(c) => Some(c.parse::<TokenCategory>()?),
                };
                Ok(TokenInfo {
                    contract: r.contract.unwrap_or_default(),
                    symbol: r.symbol.unwrap_or_default(),
                    category,
                    is_spam: r.is_spam,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TokenRegistry::new(entries)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec_pretty(&self.entries)?)
    }

    pub fn entries(&self) -> &[TokenInfo] {
        &self.entries
    }

    /// Contract first; the symbol is consulted only when the transfer has
    /// no contract address.
    pub fn lookup(&self, contract: &str, symbol: &str) -> Option<&TokenInfo> {
        let idx = if contract.is_empty() {
            self.by_symbol.get(symbol)
        } else {
            self.by_contract.get(contract)
        };
        idx.map(|&i| &self.entries[i])
    }

    /// Category of a token; unknown tokens are `Unlabeled`.
    pub fn category(&self, contract: &str, symbol: &str) -> TokenCategory {
        self.lookup(contract, symbol)
            .and_then(|t| t.category)
            .unwrap_or(TokenCategory::Unlabeled)
    }

    pub fn is_spam(&self, contract: &str, symbol: &str) -> bool {
        self.lookup(contract, symbol).is_some_and(|t| t.is_spam)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AccountEntry {
    address: String,
    #[serde(rename = "type")]
    kind: AccountType,
}

/// Declared account types. Accounts absent from the registry are plain
/// addresses; the zero address is always `Null`.
#[derive(Debug, Clone, Default)]
pub struct AccountRegistry {
    declared: BTreeMap<String, AccountType>,
}

impl AccountRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let entries: Vec<AccountEntry> = serde_json::from_slice(bytes)?;
        let mut reg = AccountRegistry::new();
        for e in entries {
            reg.declare(&e.address, e.kind)?;
        }
        Ok(reg)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let entries: Vec<AccountEntry> = self
            .declared
            .iter()
            .map(|(a, &k)| AccountEntry {
                address: a.clone(),
                kind: k,
            })
            .collect();
        Ok(serde_json::to_vec_pretty(&entries)?)
    }

    pub fn declare(&mut self, address: &str, kind: AccountType) -> Result<()> {
        let address = normalize_address(address);
        if address.is_empty() {
            return Err(Error::invalid("account registry", "empty address"));
        }
        let kind = if is_null_address(&address) {
            AccountType::Null
        } else {
            kind
        };
        match self.declared.get(&address) {
            Some(&prev) if prev != kind => Err(Error::invalid(
                "account registry",
                format!("address {address} declared as both {prev:?} and {kind:?}"),
            )),
            _ => {
                self.declared.insert(address, kind);
                Ok(())
            }
        }
    }

    /// Registers every ego under analysis, leaving existing declarations of
    /// the zero address untouched.
    pub fn declare_egos<'a>(&mut self, egos: impl IntoIterator<Item = &'a str>) {
        for ego in egos {
            let ego = normalize_address(ego);
            if ego.is_empty() || is_null_address(&ego) {
                continue;
            }
            self.declared.insert(ego, AccountType::Ego);
        }
    }

    pub fn account_type(&self, address: &str) -> AccountType {
        if is_null_address(address) {
            return AccountType::Null;
        }
        self.declared
            .get(address)
            .copied()
            .unwrap_or(AccountType::Address)
    }

    /// Type of `address` when it appears as a non-ego node. Other egos are
    /// externally owned accounts from this network's point of view.
    pub fn counterpart_type(&self, address: &str) -> AccountType {
        match self.account_type(address) {
            AccountType::Ego => AccountType::Address,
            t => t,
        }
    }

    pub fn len(&self) -> usize {
        self.declared.len()
    }

    pub fn is_empty(&self) -> bool {
        self.declared.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_address_detection() {
        assert!(is_null_address(
            "0x0000000000000000000000000000000000000000"
        ));
        assert!(is_null_address("0x0"));
        assert!(!is_null_address("0x"));
        assert!(!is_null_address(
            "0x0000000000000000000000000000000000000001"
        ));
    }

    #[test]
    fn null_takes_precedence_over_contract() {
        let json = br#"[{"address":"0x0000000000000000000000000000000000000000","type":"contract"},
                        {"address":"0xABC","type":"contract"}]"#;
        let reg = AccountRegistry::from_json(json).unwrap();
        assert_eq!(
            reg.account_type("0x0000000000000000000000000000000000000000"),
            AccountType::Null
        );
        assert_eq!(reg.account_type("0xabc"), AccountType::Contract);
        assert_eq!(reg.account_type("0xdef"), AccountType::Address);
    }

    #[test]
    fn other_ego_is_an_address_counterpart() {
        let mut reg = AccountRegistry::new();
        reg.declare_egos(["0xEGO1", "0xego2"]);
        assert_eq!(reg.account_type("0xego1"), AccountType::Ego);
        assert_eq!(reg.counterpart_type("0xego2"), AccountType::Address);
    }

    #[test]
    fn conflicting_account_declaration_is_rejected() {
        let json = br#"[{"address":"0xa","type":"contract"},{"address":"0xA","type":"address"}]"#;
        assert!(AccountRegistry::from_json(json).is_err());
    }

    #[test]
    fn token_lookup_prefers_contract() {
        let json = br#"[
            {"contract":"0xdAC1","symbol":"USDT","category":"Stablecoin","is_spam":false},
            {"contract":"0xbad","symbol":"USDT","is_spam":true},
            {"contract":"","symbol":"ETH","category":"Cryptocurrency","is_spam":false}
        ]"#;
        let reg = TokenRegistry::from_json(json).unwrap();
        assert_eq!(reg.category("0xdac1", "USDT"), TokenCategory::Stablecoin);
        assert!(reg.is_spam("0xbad", "USDT"));
        assert_eq!(reg.category("0xbad", "USDT"), TokenCategory::Unlabeled);
        assert_eq!(reg.category("", "ETH"), TokenCategory::Cryptocurrency);
        // Unknown contract with a known symbol is not resolved by symbol.
        assert_eq!(reg.category("0x999", "USDT"), TokenCategory::Unlabeled);
        assert!(!reg.is_spam("0x999", "USDT"));
    }

    #[test]
    fn spam_token_has_no_category() {
        let json = br#"[{"contract":"0x1","symbol":"X","category":"Stablecoin","is_spam":true}]"#;
        let reg = TokenRegistry::from_json(json).unwrap();
        assert_eq!(reg.entries()[0].category, None);
    }

    #[test]
    fn category_vocabulary_is_closed() {
        let json = br#"[{"contract":"0x1","symbol":"X","category":"Memecoin","is_spam":false}]"#;
        assert!(TokenRegistry::from_json(json).is_err());
        for c in TokenCategory::ALL {
            assert_eq!(c.as_str().parse::<TokenCategory>().unwrap(), c);
        }
    }
}
