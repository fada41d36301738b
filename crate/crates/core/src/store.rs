//! The normalized transaction store written by `ingest`: a directory with one
//! transaction per JSON line plus the registries needed to type networks.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{create_file, read_file, Error, Result};
use crate::ingest::{AccountRegistry, MethodGroup, TokenRegistry, Transaction};

pub const TRANSACTIONS_FILE: &str = "transactions.jsonl";
pub const TOKENS_FILE: &str = "tokens.json";
pub const ACCOUNTS_FILE: &str = "accounts.json";
pub const LABELS_FILE: &str = "labels.csv";

#[derive(Debug, Clone, Default)]
pub struct Store {
    pub transactions: Vec<Transaction>,
    pub accounts: AccountRegistry,
    pub tokens: TokenRegistry,
}

pub fn write_transactions<W: Write>(mut w: W, transactions: &[Transaction]) -> Result<()> {
    for tx in transactions {
        serde_json::to_writer(&mut w, tx)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates a transactions JSON-lines stream.
pub fn read_transactions<R: BufRead>(r: R) -> Result<Vec<Transaction>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tx: Transaction = serde_json::from_str(&line)?;
        tx.validate()
            .map_err(|m| Error::invalid("transaction store", format!("line {}: {m}", i + 1)))?;
        out.push(tx);
    }
    Ok(out)
}

impl Store {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_transactions(
            create_file(&dir.join(TRANSACTIONS_FILE))?,
            &self.transactions,
        )?;
        write_bytes(&dir.join(TOKENS_FILE), &self.tokens.to_json()?)?;
        write_bytes(&dir.join(ACCOUNTS_FILE), &self.accounts.to_json()?)?;
        let labels: Vec<SampleLabel> = self
            .transactions
            .iter()
            .filter_map(|tx| {
                tx.method_group.map(|group| SampleLabel {
                    tx_hash: tx.tx_hash.clone(),
                    ego: tx.ego_account.clone(),
                    method_group: group,
                })
            })
            .collect();
        write_labels(create_file(&dir.join(LABELS_FILE))?, &labels)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(TRANSACTIONS_FILE);
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Store {
            transactions: read_transactions(BufReader::new(file))?,
            tokens: TokenRegistry::from_json(&read_file(&dir.join(TOKENS_FILE))?)?,
            accounts: AccountRegistry::from_json(&read_file(&dir.join(ACCOUNTS_FILE))?)?,
        })
    }

    pub fn find(&self, tx_hash: &str) -> impl Iterator<Item = &Transaction> {
        let h = tx_hash.trim().to_ascii_lowercase();
        self.transactions.iter().filter(move |t| t.tx_hash == h)
    }
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Supervision target of one `(tx_hash, ego)` sample.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SampleLabel {
    pub tx_hash: String,
    pub ego: String,
    pub method_group: MethodGroup,
}

pub fn write_labels<W: Write>(w: W, labels: &[SampleLabel]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["tx_hash", "ego", "method_group"])?;
    for l in labels {
        wtr.write_record([l.tx_hash.as_str(), l.ego.as_str(), l.method_group.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_labels<R: std::io::Read>(r: R) -> Result<Vec<SampleLabel>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::invalid(
                "labels",
                "expected tx_hash,ego,method_group",
            ));
        }
        out.push(SampleLabel {
            tx_hash: rec[0].trim().to_ascii_lowercase(),
            ego: rec[1].trim().to_ascii_lowercase(),
            method_group: rec[2].parse()?,
        });
    }
    Ok(out)
}

pub fn load_labels(path: &Path) -> Result<Vec<SampleLabel>> {
    read_labels(&read_file(path)?[..])
}
