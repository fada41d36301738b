//! Labeled synthetic transfer corpora generated from archetype templates.
//!
//! Each archetype is a method group with a distribution over ETN shapes. A
//! shape lists ego-incident edges between named slots (`ego`, `null`, `c1`,
//! `c2`.. for contracts, `a1`.. for plain addresses) and a token-category
//! distribution per edge. Noise appends one extra edge to a fresh
//! counterpart.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{read_file, Error, Result};
use crate::ingest::{
    AccountType, MethodGroup, MethodMapping, TokenCategory, TokenInfo, TokenTransfer,
    TRANSFER_COLUMNS,
};
use crate::signatures::SignatureMatch;
use crate::store::write_bytes;

pub const BUILTIN_CONFIG: &str = include_str!("../data/archetypes.json");

pub const NULL_ADDRESS: &str = "0x0000000000000000000000000000000000000000";

/// Method-group frequencies of the labeled reference corpus.
pub const OBSERVED_COUNTS: [(MethodGroup, u64); 8] = [
    (MethodGroup::Transfer, 404_130),
    (MethodGroup::Swap, 112_387),
    (MethodGroup::Withdraw, 3_619),
    (MethodGroup::Deposit, 3_325),
    (MethodGroup::ClaimReward, 2_881),
    (MethodGroup::Borrow, 1_389),
    (MethodGroup::Repay, 1_256),
    (MethodGroup::Mint, 1_189),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Ego,
    Null,
    /// 1-based contract slot.
    Contract(u32),
    /// 1-based address slot.
    Address(u32),
}

impl FromStr for Slot {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad slot '{s}' (expected ego, null, c<k> or a<k>)"));
        match s {
            "ego" => Ok(Slot::Ego),
            "null" => Ok(Slot::Null),
            _ => {
                let (kind, num) = s.split_at(s.len().min(1));
                let k: u32 = num.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                match kind {
                    "c" => Ok(Slot::Contract(k)),
                    "a" => Ok(Slot::Address(k)),
                    _ => Err(bad()),
                }
            }
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Ego => f.write_str("ego"),
            Slot::Null => f.write_str("null"),
            Slot::Contract(k) => write!(f, "c{k}"),
            Slot::Address(k) => write!(f, "a{k}"),
        }
    }
}

impl Serialize for Slot {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Slot {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeTemplate {
    pub from: Slot,
    pub to: Slot,
    /// Probabilities summing to 1.
    pub categories: BTreeMap<TokenCategory, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    #[serde(default = "one")]
    pub weight: f64,
    pub edges: Vec<EdgeTemplate>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub name: MethodGroup,
    /// Share of generated transactions under `Skew::Config`.
    pub weight: f64,
    /// Raw method names written to methods.csv; each must map to `name`.
    pub methods: Vec<String>,
    pub shapes: Vec<Shape>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub egos: usize,
    pub contracts: usize,
    pub addresses: usize,
    /// Probability of one extra random edge per transaction.
    pub noise: f64,
    pub noise_categories: Vec<TokenCategory>,
    pub archetypes: Vec<Archetype>,
}

fn check_distribution(what: &str, weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Config(format!(
                "{what}: weight {w} is not a non-negative number"
            )));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "{what}: weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl SynthConfig {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_CONFIG.as_bytes()).expect("builtin archetypes are valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: SynthConfig = serde_json::from_slice(bytes)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.egos == 0 {
            return cfg_err("egos must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return cfg_err(format!("noise {} outside [0, 1]", self.noise));
        }
        if self.noise > 0.0 && self.noise_categories.is_empty() {
            return cfg_err("noise needs at least one noise category".into());
        }
        if self.archetypes.is_empty() {
            return cfg_err("no archetypes".into());
        }
        check_distribution("archetypes", self.archetypes.iter().map(|a| a.weight))?;
        let mapping = MethodMapping::builtin();
        let mut names = BTreeSet::new();
        let (mut max_c, mut max_a) = (0u32, 0u32);
        for a in &self.archetypes {
            if !names.insert(a.name) {
                return cfg_err(format!("archetype {} listed twice", a.name));
            }
            if a.methods.is_empty() {
                return cfg_err(format!("archetype {} has no method names", a.name));
            }
            for m in &a.methods {
                if mapping.group(m) != Some(a.name) {
                    return cfg_err(format!("method '{m}' does not map to {}", a.name));
                }
            }
            if a.shapes.is_empty() {
                return cfg_err(format!("archetype {} has no shapes", a.name));
            }
            let total: f64 = a.shapes.iter().map(|s| s.weight).sum();
            if a.shapes
                .iter()
                .any(|s| !s.weight.is_finite() || s.weight < 0.0)
                || total <= 0.0
            {
                return cfg_err(format!(
                    "archetype {}: shape weights must be non-negative with a positive sum",
                    a.name
                ));
            }
            for s in &a.shapes {
                if s.edges.is_empty() {
                    return cfg_err(format!("archetype {} has an empty shape", a.name));
                }
                for e in &s.edges {
                    if (e.from == Slot::Ego) == (e.to == Slot::Ego) {
                        return cfg_err(format!(
                            "archetype {}: edge {}->{} must touch the ego once",
                            a.name, e.from, e.to
                        ));
                    }
                    check_distribution(
                        &format!("archetype {} edge categories", a.name),
                        e.categories.values().copied(),
                    )?;
                    for slot in [e.from, e.to] {
                        match slot {
                            Slot::Contract(k) => max_c = max_c.max(k),
                            Slot::Address(k) => max_a = max_a.max(k),
                            _ => {}
                        }
                    }
                }
            }
        }
        // One spare of each kind for the noise counterpart.
        if self.contracts < max_c as usize + 1 || self.addresses < max_a as usize + 1 {
            return cfg_err(format!(
                "pools too small: need {} contracts and {} addresses",
                max_c + 1,
                max_a + 1
            ));
        }
        Ok(())
    }
}

/// How archetype frequencies are chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Skew {
    /// Shares of the reference corpus (Transfer far ahead of Mint).
    #[default]
    Observed,
    Uniform,
    /// The weights in the config file.
    Config,
}

impl FromStr for Skew {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "observed" => Ok(Skew::Observed),
            "uniform" => Ok(Skew::Uniform),
            "config" => Ok(Skew::Config),
            other => Err(Error::Config(format!("unknown skew '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateOptions {
    pub n: usize,
    pub seed: u64,
    pub skew: Skew,
    /// Fraction of each archetype left out of methods.csv.
    pub holdout: f64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            n: 10_000,
            seed: 0,
            skew: Skew::Observed,
            holdout: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRow {
    pub tx_hash: String,
    pub ego: String,
    pub method_group: MethodGroup,
    /// Index into the archetype's shapes.
    pub shape: usize,
    pub noisy: bool,
    pub holdout: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SynthCorpus {
    pub transfers: Vec<TokenTransfer>,
    /// `(tx_hash, raw_method)` for labeled transactions.
    pub methods: Vec<(String, String)>,
    pub tokens: Vec<TokenInfo>,
    pub contracts: Vec<String>,
    pub truth: Vec<TruthRow>,
}

pub const TRUTH_FILE: &str = "truth.csv";

/// Representative tokens per category.
const TOKEN_SYMBOLS: [(TokenCategory, [&str; 5]); 10] = [
    (
        TokenCategory::Cryptocurrency,
        ["ETH", "WETH", "WBTC", "SHIB", "PAXG"],
    ),
    (
        TokenCategory::Stablecoin,
        ["USDT", "USDC", "BUSD", "DAI", "TUSD"],
    ),
    (
        TokenCategory::Marketplace,
        ["COMP", "UNI", "SNX", "CRV", "CHI"],
    ),
    (TokenCategory::Other, ["LINK", "ENS", "GRT", "NMR", "CVX"]),
    (
        TokenCategory::NftMetaverse,
        ["MANA", "APE", "CHZ", "AXS", "LOOKS"],
    ),
    (
        TokenCategory::Network,
        ["MATIC", "FTM", "OMG", "INJ", "LRC"],
    ),
    (
        TokenCategory::FinancialService,
        ["CEL", "BADGER", "SXP", "RAY", "MTA"],
    ),
    (
        TokenCategory::Synthetic,
        ["stETH", "WNXM", "UNI-V3-POS", "XRPBULL", "variableDebtUSDT"],
    ),
    (TokenCategory::Bridge, ["REN", "SYN", "QNT", "T", "NU"]),
    (
        TokenCategory::Unlabeled,
        ["MIC", "AKRO", "XCN", "POLY", "EMB"],
    ),
];

fn random_hex<R: Rng>(rng: &mut R, bytes: usize) -> String {
    let mut buf = vec![0u8; bytes];
    rng.fill(&mut buf[..]);
    format!("0x{}", hex::encode(buf))
}

fn address_pool<R: Rng>(rng: &mut R, n: usize, taken: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = random_hex(rng, 20);
        if taken.insert(a.clone()) && !crate::ingest::is_null_address(&a) {
            out.push(a);
        }
    }
    out
}

fn pick<'a, R: Rng, T>(rng: &mut R, items: &'a [(T, f64)]) -> &'a T {
    let total: f64 = items.iter().map(|i| i.1).sum();
    let mut x = rng.gen::<f64>() * total;
    for (item, w) in items {
        if x < *w {
            return item;
        }
        x -= w;
    }
    &items
        .iter()
        .rev()
        .find(|i| i.1 > 0.0)
        .unwrap_or(&items[items.len() - 1])
        .0
}

/// Splits `n` into parts proportional to `weights` by largest remainder;
/// ties go to the earlier entry.
fn allocate(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

struct Pools {
    egos: Vec<String>,
    contracts: Vec<String>,
    addresses: Vec<String>,
    tokens: Vec<TokenInfo>,
    by_category: BTreeMap<TokenCategory, Vec<usize>>,
}

impl Pools {
    fn new<R: Rng>(cfg: &SynthConfig, rng: &mut R) -> Self {
        let mut taken = HashSet::new();
        let mut tokens = Vec::new();
        let mut by_category: BTreeMap<TokenCategory, Vec<usize>> = BTreeMap::new();
        for (category, symbols) in TOKEN_SYMBOLS {
            for symbol in symbols {
                // Native ETH moves without a token contract.
                let contract = if symbol == "ETH" {
                    String::new()
                } else {
                    address_pool(rng, 1, &mut taken).remove(0)
                };
                by_category.entry(category).or_default().push(tokens.len());
                tokens.push(TokenInfo {
                    contract,
                    symbol: symbol.to_string(),
                    category: Some(category),
                    is_spam: false,
                });
            }
        }
        Pools {
            egos: address_pool(rng, cfg.egos, &mut taken),
            contracts: address_pool(rng, cfg.contracts, &mut taken),
            addresses: address_pool(rng, cfg.addresses, &mut taken),
            tokens,
            by_category,
        }
    }

    fn token<R: Rng>(&self, rng: &mut R, category: TokenCategory) -> &TokenInfo {
        let ids = &self.by_category[&category];
        &self.tokens[ids[rng.gen_range(0..ids.len())]]
    }
}

fn amount<R: Rng>(rng: &mut R) -> String {
    format!("{:.4}", rng.gen_range(0.01..10_000.0f64))
}

impl SynthConfig {
    fn shares(&self, skew: Skew) -> Vec<f64> {
        match skew {
            Skew::Config => self.archetypes.iter().map(|a| a.weight).collect(),
            Skew::Uniform => vec![1.0; self.archetypes.len()],
            Skew::Observed => self
                .archetypes
                .iter()
                .map(|a| {
                    OBSERVED_COUNTS
                        .iter()
                        .find(|c| c.0 == a.name)
                        .map_or(0.0, |c| c.1 as f64)
                })
                .collect(),
        }
    }
}

/// Generates a corpus. Output depends only on `cfg` and `opts`.
pub fn generate(cfg: &SynthConfig, opts: &GenerateOptions) -> Result<SynthCorpus> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&opts.holdout) {
        return Err(Error::Config(format!(
            "holdout {} outside [0, 1]",
            opts.holdout
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pools = Pools::new(cfg, &mut rng);

    let counts = allocate(opts.n, &cfg.shares(opts.skew));
    let mut plan: Vec<(usize, bool)> = Vec::with_capacity(opts.n);
    for (a, &count) in counts.iter().enumerate() {
        let held = (count as f64 * opts.holdout).round() as usize;
        plan.extend((0..count).map(|i| (a, i < held)));
    }
    plan.shuffle(&mut rng);

    let mut corpus = SynthCorpus {
        tokens: pools.tokens.clone(),
        contracts: pools.contracts.clone(),
        ..Default::default()
    };
    let shapes: Vec<Vec<(usize, f64)>> = cfg
        .archetypes
        .iter()
        .map(|a| {
            a.shapes
                .iter()
                .enumerate()
                .map(|(i, s)| (i, s.weight))
                .collect()
        })
        .collect();
    let mut seen = HashSet::new();
    for (i, &(a, held)) in plan.iter().enumerate() {
        let arch = &cfg.archetypes[a];
        let tx_hash = loop {
            let h = random_hex(&mut rng, 32);
            if seen.insert(h.clone()) {
                break h;
            }
        };
        let ego = pools.egos[rng.gen_range(0..pools.egos.len())].clone();
        let shape_idx = *pick(&mut rng, &shapes[a]);
        let shape = &arch.shapes[shape_idx];
        let block = 15_000_000 + i as u64;

        let (mut n_c, mut n_a) = (0, 0);
        for e in &shape.edges {
            for s in [e.from, e.to] {
                match s {
                    Slot::Contract(k) => n_c = n_c.max(k as usize),
                    Slot::Address(k) => n_a = n_a.max(k as usize),
                    _ => {}
                }
            }
        }
        // The extra slot of each kind is the noise counterpart.
        let contracts =
            rand::seq::index::sample(&mut rng, pools.contracts.len(), n_c + 1).into_vec();
        let addresses =
            rand::seq::index::sample(&mut rng, pools.addresses.len(), n_a + 1).into_vec();
        let resolve = |s: Slot| -> &str {
            match s {
                Slot::Ego => &ego,
                Slot::Null => NULL_ADDRESS,
                Slot::Contract(k) => &pools.contracts[contracts[k as usize - 1]],
                Slot::Address(k) => &pools.addresses[addresses[k as usize - 1]],
            }
        };
        let mut push = |rng: &mut ChaCha8Rng, from: &str, to: &str, category: TokenCategory| {
            let token = pools.token(rng, category);
            corpus.transfers.push(TokenTransfer {
                tx_hash: tx_hash.clone(),
                ego_account: ego.clone(),
                from_account: from.to_string(),
                to_account: to.to_string(),
                token_contract: token.contract.clone(),
                token_symbol: token.symbol.clone(),
                amount: amount(rng),
                block_number: block,
            });
        };
        for e in &shape.edges {
            let cats: Vec<(TokenCategory, f64)> =
                e.categories.iter().map(|(&c, &w)| (c, w)).collect();
            let category = *pick(&mut rng, &cats);
            push(&mut rng, resolve(e.from), resolve(e.to), category);
        }
        let noisy = cfg.noise > 0.0 && rng.gen::<f64>() < cfg.noise;
        if noisy {
            let other = if rng.gen_bool(0.5) {
                &pools.contracts[contracts[n_c]]
            } else {
                &pools.addresses[addresses[n_a]]
            };
            let category = *cfg.noise_categories.choose(&mut rng).expect("validated");
            if rng.gen_bool(0.5) {
                push(&mut rng, &ego, other, category);
            } else {
                push(&mut rng, other, &ego, category);
            }
        }
        if !held {
            let method = arch.methods.choose(&mut rng).expect("validated").clone();
            corpus.methods.push((tx_hash.clone(), method));
        }
        corpus.truth.push(TruthRow {
            tx_hash,
            ego,
            method_group: arch.name,
            shape: shape_idx,
            noisy,
            holdout: held,
        });
    }
    Ok(corpus)
}

impl SynthCorpus {
    pub fn transfers_csv(&self) -> Result<Vec<u8>> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(TRANSFER_COLUMNS)?;
        for t in &self.transfers {
            let block = t.block_number.to_string();
            wtr.write_record([
                t.tx_hash.as_str(),
                &t.ego_account,
                &t.from_account,
                &t.to_account,
                &t.token_contract,
                &t.token_symbol,
                &t.amount,
                &block,
            ])?;
        }
        wtr.into_inner().map_err(|e| Error::Stream(e.into_error()))
    }

    pub fn methods_csv(&self) -> Result<Vec<u8>> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["tx_hash", "raw_method"])?;
        for (h, m) in &self.methods {
            wtr.write_record([h, m])?;
        }
        wtr.into_inner().map_err(|e| Error::Stream(e.into_error()))
    }

    pub fn tokens_json(&self) -> Result<Vec<u8>> {
        Ok(serde_json::to_vec_pretty(&self.tokens)?)
    }

    /// Declares the contract pool; egos are declared at ingest.
    pub fn accounts_json(&self) -> Result<Vec<u8>> {
        #[derive(Serialize)]
        struct Entry<'a> {
            address: &'a str,
            #[serde(rename = "type")]
            kind: AccountType,
        }
        let entries: Vec<Entry> = self
            .contracts
            .iter()
            .map(|c| Entry {
                address: c,
                kind: AccountType::Contract,
            })
            .collect();
        Ok(serde_json::to_vec_pretty(&entries)?)
    }

    pub fn truth_csv(&self) -> Result<Vec<u8>> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for row in &self.truth {
            wtr.serialize(row)?;
        }
        if self.truth.is_empty() {
            wtr.write_record([
                "tx_hash",
                "ego",
                "method_group",
                "shape",
                "noisy",
                "holdout",
            ])?;
        }
        wtr.into_inner().map_err(|e| Error::Stream(e.into_error()))
    }

    /// Writes transfers.csv, methods.csv, tokens.json, accounts.json and
    /// truth.csv into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_bytes(&dir.join("transfers.csv"), &self.transfers_csv()?)?;
        write_bytes(&dir.join("methods.csv"), &self.methods_csv()?)?;
        write_bytes(&dir.join("tokens.json"), &self.tokens_json()?)?;
        write_bytes(&dir.join("accounts.json"), &self.accounts_json()?)?;
        write_bytes(&dir.join(TRUTH_FILE), &self.truth_csv()?)
    }
}

pub fn parse_truth<R: std::io::Read>(r: R) -> Result<Vec<TruthRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRow>> {
    parse_truth(&read_file(path)?[..])
}

/// Signature-match streams for accounts with planted activity mixes, used to
/// exercise profiling and clustering without a full corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityConfig {
    pub accounts: usize,
    pub archetypes: usize,
    pub leaves: usize,
    pub min_tx: usize,
    pub max_tx: usize,
    /// Probability that a match falls in the archetype's own leaf block.
    pub focus: f64,
}

impl Default for ActivityConfig {
    fn default() -> Self {
        ActivityConfig {
            accounts: 60,
            archetypes: 3,
            leaves: 12,
            min_tx: 50,
            max_tx: 200,
            focus: 0.85,
        }
    }
}

/// Returns the matches and each account's archetype, keyed by account.
pub fn generate_activity(
    cfg: &ActivityConfig,
    seed: u64,
) -> Result<(Vec<SignatureMatch>, BTreeMap<String, usize>)> {
    if cfg.archetypes == 0
        || cfg.leaves < cfg.archetypes
        || cfg.min_tx > cfg.max_tx
        || !(0.0..=1.0).contains(&cfg.focus)
    {
        return Err(Error::Config(
            "activity: need 1 <= archetypes <= leaves, min_tx <= max_tx, focus in [0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = cfg.leaves / cfg.archetypes;
    let mut matches = Vec::new();
    let mut truth = BTreeMap::new();
    for i in 0..cfg.accounts {
        let account = format!("0x{i:040x}");
        let arch = i % cfg.archetypes;
        let own = arch * block..(arch + 1) * block;
        for t in 0..rng.gen_range(cfg.min_tx..=cfg.max_tx) {
            let leaf = if rng.gen::<f64>() < cfg.focus {
                rng.gen_range(own.clone())
            } else {
                rng.gen_range(0..cfg.leaves)
            };
            matches.push(SignatureMatch {
                tx_hash: format!("0x{i:08x}{t:056x}"),
                ego: account.clone(),
                leaves: vec![leaf],
                groups: Vec::new(),
            });
        }
        truth.insert(account, arch);
    }
    Ok((matches, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_method_labels, parse_transfers, TokenRegistry};

    fn small(n: usize, seed: u64) -> SynthCorpus {
        let opts = GenerateOptions {
            n,
            seed,
            skew: Skew::Uniform,
            holdout: 0.2,
        };
        generate(&SynthConfig::builtin(), &opts).unwrap()
    }

    #[test]
    fn builtin_config_round_trips() {
        let cfg = SynthConfig::builtin();
        assert_eq!(cfg.archetypes.len(), 8);
        assert_eq!(
            SynthConfig::from_json(&cfg.to_json().unwrap()).unwrap(),
            cfg
        );
    }

    #[test]
    fn empty_corpus_is_schema_valid() {
        let c = small(0, 1);
        assert!(c.transfers.is_empty());
        let load = parse_transfers(&c.transfers_csv().unwrap()[..]).unwrap();
        assert_eq!(load.report.accepted + load.report.rejected, 0);
        assert!(parse_method_labels(&c.methods_csv().unwrap()[..])
            .unwrap()
            .labels
            .is_empty());
        assert!(String::from_utf8(c.truth_csv().unwrap())
            .unwrap()
            .starts_with("tx_hash,"));
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (small(300, 7), small(300, 7));
        assert_eq!(a.transfers_csv().unwrap(), b.transfers_csv().unwrap());
        assert_eq!(a.methods_csv().unwrap(), b.methods_csv().unwrap());
        assert_eq!(a.tokens_json().unwrap(), b.tokens_json().unwrap());
        assert_ne!(
            a.transfers_csv().unwrap(),
            small(300, 8).transfers_csv().unwrap()
        );
    }

    #[test]
    fn ingest_accepts_everything() {
        let c = small(500, 3);
        let load = parse_transfers(&c.transfers_csv().unwrap()[..]).unwrap();
        assert_eq!(load.report.rejected, 0);
        assert_eq!(load.transfers.len(), c.transfers.len());
        let reg = TokenRegistry::from_json(&c.tokens_json().unwrap()).unwrap();
        assert!(c
            .transfers
            .iter()
            .all(|t| reg.lookup(&t.token_contract, &t.token_symbol).is_some()));
    }

    #[test]
    fn labels_follow_truth() {
        let c = small(400, 5);
        let mapping = MethodMapping::builtin();
        let truth: BTreeMap<&str, &TruthRow> =
            c.truth.iter().map(|t| (t.tx_hash.as_str(), t)).collect();
        for (h, m) in &c.methods {
            assert_eq!(mapping.group(m), Some(truth[h.as_str()].method_group));
            assert!(!truth[h.as_str()].holdout);
        }
        assert_eq!(
            c.methods.len() + c.truth.iter().filter(|t| t.holdout).count(),
            400
        );
    }

    #[test]
    fn allocation_is_exact() {
        assert_eq!(allocate(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(allocate(0, &[0.5, 0.5]), vec![0, 0]);
        let c = small(800, 2);
        let per: BTreeMap<MethodGroup, usize> = c.truth.iter().fold(BTreeMap::new(), |mut m, t| {
            *m.entry(t.method_group).or_default() += 1;
            m
        });
        assert!(per.values().all(|&v| v == 100));
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut cfg = SynthConfig::builtin();
        cfg.archetypes[0].weight = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = SynthConfig::builtin();
        cfg.archetypes[0].methods.push("Borrow".into());
        assert!(cfg.validate().is_err());
        let mut cfg = SynthConfig::builtin();
        cfg.archetypes[0].shapes[0].edges[0].from = Slot::Contract(1);
        assert!(cfg.validate().is_err());
        assert!("x3".parse::<Slot>().is_err() && "c0".parse::<Slot>().is_err());
        assert_eq!("a12".parse::<Slot>().unwrap(), Slot::Address(12));
    }

    #[test]
    fn activity_accounts_follow_archetypes() {
        let (ms, truth) = generate_activity(&ActivityConfig::default(), 0).unwrap();
        assert_eq!(truth.len(), 60);
        assert!(ms.iter().all(|m| m.leaves.len() == 1 && m.leaves[0] < 12));
    }
}
