//! `transfers.csv` parsing with per-row rejection accounting.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::registry::normalize_address;
use crate::error::{read_file, Error, Result};

pub const TRANSFER_COLUMNS: [&str; 8] = [
    "tx_hash",
    "ego",
    "from",
    "to",
    "token_contract",
    "token_symbol",
    "amount",
    "block_number",
];

/// One directed token movement inside a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenTransfer {
    pub tx_hash: String,
    #[serde(rename = "ego")]
    pub ego_account: String,
    #[serde(rename = "from")]
    pub from_account: String,
    #[serde(rename = "to")]
    pub to_account: String,
    pub token_contract: String,
    pub token_symbol: String,
    /// Decimal token amount, kept verbatim after validation.
    pub amount: String,
    pub block_number: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MalformedRow,
    MissingTxHash,
    MissingAccount,
    SelfTransfer,
    NegativeAmount,
    InvalidAmount,
    InvalidBlockNumber,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line of the record (header is line 1).
    pub line: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub accepted: usize,
    pub rejected: usize,
    pub by_reason: BTreeMap<RejectReason, usize>,
    pub rejections: Vec<Rejection>,
}

impl LoadReport {
    fn reject(&mut self, line: u64, reason: RejectReason) {
        self.rejected += 1;
        *self.by_reason.entry(reason).or_default() += 1;
        self.rejections.push(Rejection { line, reason });
    }
}

#[derive(Debug, Clone, Default)]
pub struct TransferLoad {
    pub transfers: Vec<TokenTransfer>,
    pub report: LoadReport,
}

pub fn load_transfers(path: &Path) -> Result<TransferLoad> {
    parse_transfers(&read_file(path)?[..])
}

/// Parses `transfers.csv`. Column order is taken from the required header
/// row; malformed records are counted in the report, never dropped silently.
pub fn parse_transfers<R: Read>(input: R) -> Result<TransferLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let headers = rdr.byte_headers()?.clone();
    if headers.is_empty() {
        return Err(Error::invalid("transfers.csv", "missing header row"));
    }
    let mut cols = [usize::MAX; 8];
    for (slot, name) in cols.iter_mut().zip(TRANSFER_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| trim_bytes(h) == name.as_bytes())
            .ok_or_else(|| Error::invalid("transfers.csv", format!("missing column {name:?}")))?;
    }

    let mut out = TransferLoad::default();
    let mut record = csv::ByteRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => match parse_row(&record, &cols, headers.len()) {
                Ok(t) => {
                    out.report.accepted += 1;
                    out.transfers.push(t);
                }
                Err(reason) => out.report.reject(record_line(&record, line), reason),
            },
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(_) => out.report.reject(line, RejectReason::MalformedRow),
        }
    }
    Ok(out)
}

fn record_line(record: &csv::ByteRecord, fallback: u64) -> u64 {
    record.position().map_or(fallback, |p| p.line())
}

fn trim_bytes(b: &[u8]) -> &[u8] {
    let start = b
        .iter()
        .position(|c| !c.is_ascii_whitespace())
        .unwrap_or(b.len());
    let end = b
        .iter()
        .rposition(|c| !c.is_ascii_whitespace())
        .map_or(start, |e| e + 1);
    &b[start..end]
}

fn parse_row(
    record: &csv::ByteRecord,
    cols: &[usize; 8],
    width: usize,
) -> std::result::Result<TokenTransfer, RejectReason> {
    if record.len() != width {
        return Err(RejectReason::MalformedRow);
    }
    let mut fields: [&str; 8] = [""; 8];
    for (f, &c) in fields.iter_mut().zip(cols) {
        let raw = record.get(c).ok_or(RejectReason::MalformedRow)?;
        *f = std::str::from_utf8(raw)
            .map_err(|_| RejectReason::MalformedRow)?
            .trim();
    }
    let [tx_hash, ego, from, to, contract, symbol, amount, block] = fields;

    if tx_hash.is_empty() {
        return Err(RejectReason::MissingTxHash);
    }
    let (ego, from, to) = (
        normalize_address(ego),
        normalize_address(from),
        normalize_address(to),
    );
    if ego.is_empty() || from.is_empty() || to.is_empty() {
        return Err(RejectReason::MissingAccount);
    }
    if from == to {
        return Err(RejectReason::SelfTransfer);
    }
    validate_amount(amount)?;
    let block_number = block
        .parse::<u64>()
        .map_err(|_| RejectReason::InvalidBlockNumber)?;

    Ok(TokenTransfer {
        tx_hash: tx_hash.to_ascii_lowercase(),
        ego_account: ego,
        from_account: from,
        to_account: to,
        token_contract: normalize_address(contract),
        token_symbol: symbol.to_string(),
        amount: amount.to_string(),
        block_number,
    })
}

fn validate_amount(amount: &str) -> std::result::Result<(), RejectReason> {
    if amount.starts_with('-') {
        // "-0" is still a negative literal in the input.
        return match amount.parse::<f64>() {
            Ok(v) if !v.is_nan() => Err(RejectReason::NegativeAmount),
            _ => Err(RejectReason::InvalidAmount),
        };
    }
    let valid = !amount.is_empty()
        && amount
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
        && amount.bytes().any(|b| b.is_ascii_digit())
        && amount.parse::<f64>().is_ok_and(f64::is_finite);
    if valid {
        Ok(())
    } else {
        Err(RejectReason::InvalidAmount)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "tx_hash,ego,from,to,token_contract,token_symbol,amount,block_number\n";

    #[test]
    fn one_valid_row() {
        let csv = format!("{HEADER}0xT1,0xE,0xE,0xC,0xusdc,USDC,1.5,100\n");
        let load = parse_transfers(csv.as_bytes()).unwrap();
        assert_eq!(load.transfers.len(), 1);
        assert_eq!(load.report.rejected, 0);
        let t = &load.transfers[0];
        assert_eq!(t.tx_hash, "0xt1");
        assert_eq!(t.from_account, "0xe");
        assert_eq!(t.amount, "1.5");
    }

    #[test]
    fn negative_amount_is_rejected_with_reason() {
        let csv = format!(
            "{HEADER}0xT1,0xE,0xE,0xC,0xusdc,USDC,1,100\n0xT2,0xE,0xE,0xC,0xusdc,USDC,-3,101\n"
        );
        let load = parse_transfers(csv.as_bytes()).unwrap();
        assert_eq!(load.transfers.len(), 1);
        assert_eq!(load.report.rejected, 1);
        assert_eq!(
            load.report.rejections[0].reason,
            RejectReason::NegativeAmount
        );
        assert_eq!(load.report.rejections[0].line, 3);
    }

    #[test]
    fn reject_reasons() {
        let rows = [
            (",0xE,0xE,0xC,0xa,A,1,1", RejectReason::MissingTxHash),
            ("0x1,0xE,,0xC,0xa,A,1,1", RejectReason::MissingAccount),
            ("0x1,0xE,0xC,0xc,0xa,A,1,1", RejectReason::SelfTransfer),
            ("0x1,0xE,0xE,0xC,0xa,A,abc,1", RejectReason::InvalidAmount),
            (
                "0x1,0xE,0xE,0xC,0xa,A,1,-1",
                RejectReason::InvalidBlockNumber,
            ),
            ("0x1,0xE,0xE,0xC,0xa,A,1", RejectReason::MalformedRow),
        ];
        for (row, reason) in rows {
            let csv = format!("{HEADER}{row}\n");
            let load = parse_transfers(csv.as_bytes()).unwrap();
            assert_eq!(load.report.rejections.len(), 1, "{row}");
            assert_eq!(load.report.rejections[0].reason, reason, "{row}");
        }
    }

    #[test]
    fn header_is_required_and_may_be_reordered() {
        assert!(parse_transfers(&b""[..]).is_err());
        assert!(parse_transfers(&b"tx_hash,ego\n"[..]).is_err());
        let csv = "amount,block_number,tx_hash,ego,from,to,token_contract,token_symbol\n2,7,0xt,0xe,0xe,0xa,,ETH\n";
        let load = parse_transfers(csv.as_bytes()).unwrap();
        assert_eq!(load.transfers[0].block_number, 7);
        assert_eq!(load.transfers[0].token_symbol, "ETH");
    }

    #[test]
    fn header_only_is_empty() {
        let load = parse_transfers(HEADER.as_bytes()).unwrap();
        assert!(load.transfers.is_empty());
        assert_eq!(load.report, LoadReport::default());
    }
}
