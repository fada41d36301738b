//! One function per pipeline stage. Every stage reads its inputs from files
//! and persists its outputs, so stages can be run separately from the CLI.

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{create_file, read_file, Error, Result};
use crate::etn::build_etn;
use crate::ingest::{
    attach_labels, filter_spam, group_methods, group_transactions, parse_method_labels,
    parse_transfers, AccountRegistry, LoadReport, MethodGroup, MethodMapping, TokenRegistry,
};
use crate::learn::{
    cross_validate, fit_model, Classifier, Dataset, DatasetOptions, EvalReport, ModelFile,
    ModelSpec,
};
use crate::motif::{
    enumerate_catalog, read_features, write_features, FeatureMode, FeatureVector, Featurizer,
    MatchSemantics, MotifCatalog,
};
use crate::profile::{
    build_profiles, cluster_profiles, clustermap, read_profiles_csv, write_profiles_csv,
    ClusterOptions, ClusteringResult, ProfileOptions, ProfileTable,
};
use crate::signatures::{
    ccp_path, match_all, mine_signatures, path_cv, read_matches, select_pruned, signature_dot,
    write_matches, write_path_csv, ItemsetMode, PathPoint, PruneTarget, SignatureMatch,
    SignatureSet,
};
use crate::store::{load_labels, write_bytes, Store};

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
        }
        _ => Ok(()),
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    write_bytes(path, text.as_bytes())
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureVector>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_features(BufReader::new(file))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::from_json(&read_file(path)?)
}

pub fn load_signatures(path: &Path) -> Result<SignatureSet> {
    SignatureSet::from_json(&read_file(path)?)
}

pub fn load_matches(path: &Path) -> Result<Vec<SignatureMatch>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matches(BufReader::new(file))
}

fn check_mode(features: &[FeatureVector], mode: FeatureMode, what: &str) -> Result<()> {
    match features.first() {
        Some(v) if v.mode != mode => Err(Error::invalid(
            "features",
            format!(
                "features are in mode {} but the {what} expects {mode}",
                v.mode
            ),
        )),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub struct IngestInputs {
    pub transfers: PathBuf,
    pub tokens: PathBuf,
    pub accounts: PathBuf,
    pub methods: Option<PathBuf>,
    /// Raw method name to group mapping; the bundled table when absent.
    pub method_groups: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub transfers: LoadReport,
    pub transactions: usize,
    /// Transactions dropped for moving a spam token.
    pub spam_transactions: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub label_rows: usize,
    pub malformed_label_rows: usize,
    pub conflicting_label_rows: usize,
    /// Label rows whose raw method maps to no selected group.
    pub unknown_methods: usize,
}

/// Parses and validates the raw files and writes the transaction store.
pub fn ingest(inputs: &IngestInputs, out_dir: &Path) -> Result<IngestReport> {
    let load = parse_transfers(&read_file(&inputs.transfers)?[..])?;
    let tokens = TokenRegistry::from_json(&read_file(&inputs.tokens)?)?;
    let mut accounts = AccountRegistry::from_json(&read_file(&inputs.accounts)?)?;
    let mut report = IngestReport {
        transfers: load.report,
        ..Default::default()
    };
    let grouped = group_transactions(load.transfers);
    accounts.declare_egos(grouped.iter().map(|t| t.ego_account.as_str()));
    let before = grouped.len();
    let mut transactions = filter_spam(grouped, &tokens);
    report.spam_transactions = before - transactions.len();
    if let Some(path) = &inputs.methods {
        let mapping = match &inputs.method_groups {
            Some(p) => MethodMapping::from_json(&read_file(p)?)?,
            None => MethodMapping::builtin(),
        };
        let labels = parse_method_labels(&read_file(path)?[..])?;
        report.label_rows = labels.labels.len();
        report.malformed_label_rows = labels.malformed_rows;
        report.conflicting_label_rows = labels.conflicting_rows;
        let labels = group_methods(labels.labels, &mapping);
        report.unknown_methods = labels.iter().filter(|l| l.method_group.is_none()).count();
        attach_labels(&mut transactions, &labels);
    }
    report.transactions = transactions.len();
    report.labeled = transactions
        .iter()
        .filter(|t| t.method_group.is_some())
        .count();
    report.unlabeled = report.transactions - report.labeled;
    if report.transfers.rejected > 0 {
        log::warn!("{} transfer rows rejected", report.transfers.rejected);
    }
    Store {
        transactions,
        accounts,
        tokens,
    }
    .write(out_dir)?;
    write_json(&out_dir.join("ingest_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccountStats {
    pub account: String,
    pub transactions: usize,
    pub tokens: usize,
    pub fraction_unlabeled: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub transactions: usize,
    pub transfers: usize,
    pub labeled: usize,
    pub fraction_unlabeled: f64,
    pub distinct_tokens: usize,
    /// Transfers per transaction → number of transactions.
    pub transfers_histogram: BTreeMap<usize, usize>,
    pub single_transfer_fraction: f64,
    pub groups: BTreeMap<MethodGroup, usize>,
    pub accounts: Vec<AccountStats>,
}

fn token_key(contract: &str, symbol: &str) -> String {
    if contract.is_empty() {
        format!("symbol:{symbol}")
    } else {
        contract.to_string()
    }
}

/// Corpus statistics: per-account activity and the transfers-per-transaction
/// histogram.
pub fn stats(store: &Store) -> StatsReport {
    let mut report = StatsReport::default();
    let mut tokens = std::collections::BTreeSet::new();
    let mut per_account: BTreeMap<&str, (usize, usize, std::collections::BTreeSet<String>)> =
        BTreeMap::new();
    for tx in &store.transactions {
        report.transactions += 1;
        report.transfers += tx.transfers.len();
        *report
            .transfers_histogram
            .entry(tx.transfers.len())
            .or_default() += 1;
        let acc = per_account.entry(tx.ego_account.as_str()).or_default();
        acc.0 += 1;
        match tx.method_group {
            Some(g) => {
                report.labeled += 1;
                *report.groups.entry(g).or_default() += 1;
            }
            None => acc.1 += 1,
        }
        for t in &tx.transfers {
            let key = token_key(&t.token_contract, &t.token_symbol);
            tokens.insert(key.clone());
            acc.2.insert(key);
        }
    }
    let frac = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    report.distinct_tokens = tokens.len();
    report.fraction_unlabeled = frac(report.transactions - report.labeled, report.transactions);
    report.single_transfer_fraction = frac(
        report.transfers_histogram.get(&1).copied().unwrap_or(0),
        report.transactions,
    );
    report.accounts = per_account
        .into_iter()
        .map(|(account, (n, unlabeled, toks))| AccountStats {
            account: account.to_string(),
            transactions: n,
            tokens: toks.len(),
            fraction_unlabeled: frac(unlabeled, n),
        })
        .collect();
    report
}

/// DOT renderings of every ego view of one transaction.
pub fn etn_dot(store: &Store, tx_hash: &str) -> Result<String> {
    let views: Vec<_> = store.find(tx_hash).collect();
    if views.is_empty() {
        return Err(Error::invalid(
            "transaction",
            format!("{tx_hash} is not in the store"),
        ));
    }
    Ok(views
        .into_iter()
        .map(|tx| build_etn(tx, &store.accounts, &store.tokens).etn.to_dot())
        .collect::<Vec<_>>()
        .join("\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizeReport {
    pub vectors: usize,
    pub rejected_edges: usize,
}

pub fn featurize(
    store_dir: &Path,
    mode: FeatureMode,
    semantics: MatchSemantics,
    catalog: Option<&Path>,
    out: &Path,
) -> Result<FeaturizeReport> {
    let store = Store::read(store_dir)?;
    let catalog = match catalog {
        Some(p) => MotifCatalog::from_json(&read_file(p)?)?,
        None => enumerate_catalog(),
    };
    let output = Featurizer::new(catalog, semantics, mode).featurize_all(
        &store.transactions,
        &store.accounts,
        &store.tokens,
    );
    ensure_parent(out)?;
    write_features(create_file(out)?, &output.vectors)?;
    Ok(FeaturizeReport {
        vectors: output.vectors.len(),
        rejected_edges: output.rejected_edges,
    })
}

pub fn train(
    features: &Path,
    labels: &Path,
    spec: &ModelSpec,
    opts: DatasetOptions,
    out: &Path,
) -> Result<ModelFile> {
    let vectors = load_features(features)?;
    let ds = Dataset::from_features(&vectors, &load_labels(labels)?, opts)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let model = fit_model(spec, &ds.x, &ds.y, ds.n_classes(), &all)?;
    let mode = vectors.first().map_or(FeatureMode::ME, |v| v.mode);
    let file = ModelFile::new(&ds, mode, *spec, model);
    ensure_parent(out)?;
    write_bytes(out, &file.to_json()?)?;
    Ok(file)
}

/// Stratified k-fold CV of the model's spec on its vocabulary and classes.
/// Writes the JSON report and, next to it, the confusion matrix as CSV.
pub fn eval(
    model: &Path,
    features: &Path,
    labels: &Path,
    folds: usize,
    report: &Path,
) -> Result<EvalReport> {
    let m = load_model(model)?;
    let vectors = load_features(features)?;
    check_mode(&vectors, m.mode, "model")?;
    let ds = Dataset::with_vocabulary(
        &vectors,
        &load_labels(labels)?,
        m.vocabulary.clone(),
        m.classes.clone(),
    )?;
    let r = cross_validate(&ds, &m.spec, folds)?;
    write_json(report, &r)?;
    write_text(&report.with_extension("confusion.csv"), &r.confusion_csv())?;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub alpha: f64,
    pub leaves: usize,
    pub full_leaves: usize,
    pub warning: Option<String>,
    pub path: Vec<PathPoint>,
}

pub struct PruneOutputs<'a> {
    pub model: &'a Path,
    pub path_csv: &'a Path,
    pub dot: Option<&'a Path>,
}

/// Cost-complexity pruning of a fitted tree, with CV scores along the path.
pub fn prune(
    model: &Path,
    features: &Path,
    labels: &Path,
    target: PruneTarget,
    folds: usize,
    out: PruneOutputs<'_>,
) -> Result<PruneReport> {
    let mut m = load_model(model)?;
    let Classifier::Tree(tree) = &m.model else {
        return Err(Error::invalid(
            "model",
            "pruning needs a decision tree model",
        ));
    };
    let path = ccp_path(tree);
    let selected = select_pruned(&path, target)?;
    if let Some(w) = &selected.warning {
        log::warn!("{w}");
    }
    let vectors = load_features(features)?;
    check_mode(&vectors, m.mode, "model")?;
    let ds = Dataset::with_vocabulary(
        &vectors,
        &load_labels(labels)?,
        m.vocabulary.clone(),
        m.classes.clone(),
    )?;
    let points = path_cv(&ds, &path, &m.spec.tree, folds, m.spec.seed)?;
    ensure_parent(out.path_csv)?;
    write_path_csv(create_file(out.path_csv)?, &points)?;
    let report = PruneReport {
        alpha: selected.alpha,
        leaves: selected.tree.n_leaves(),
        full_leaves: tree.n_leaves(),
        warning: selected.warning.clone(),
        path: points,
    };
    if let Some(dot) = out.dot {
        write_text(
            dot,
            &signature_dot(&selected.tree, &m.vocabulary, &m.classes, None),
        )?;
    }
    m.model = Classifier::Tree(selected.tree);
    m.pruned_alpha = Some(selected.alpha);
    ensure_parent(out.model)?;
    write_bytes(out.model, &m.to_json()?)?;
    Ok(report)
}

/// Mines one signature per leaf of a (pruned) tree on the labeled rows.
pub fn signatures(
    model: &Path,
    features: &Path,
    labels: &Path,
    threshold: f64,
    mode: ItemsetMode,
    out: &Path,
    dot: Option<&Path>,
) -> Result<SignatureSet> {
    let m = load_model(model)?;
    let Classifier::Tree(tree) = &m.model else {
        return Err(Error::invalid(
            "model",
            "signatures need a decision tree model",
        ));
    };
    let vectors = load_features(features)?;
    check_mode(&vectors, m.mode, "model")?;
    let ds = Dataset::with_vocabulary(
        &vectors,
        &load_labels(labels)?,
        m.vocabulary.clone(),
        m.classes.clone(),
    )?;
    let set = mine_signatures(tree, &ds, threshold, mode)?;
    ensure_parent(out)?;
    write_bytes(out, &set.to_json()?)?;
    if let Some(dot) = dot {
        write_text(
            dot,
            &signature_dot(tree, &m.vocabulary, &m.classes, Some(&set)),
        )?;
    }
    Ok(set)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub transactions: usize,
    pub matched: usize,
    /// Matched leaves of more than one method group.
    pub ambiguous: usize,
    pub unlabeled_signatures: usize,
    /// Unambiguous matches per group.
    pub groups: BTreeMap<MethodGroup, usize>,
}

pub fn match_stage(signatures: &Path, features: &Path, out: &Path) -> Result<MatchReport> {
    let set = load_signatures(signatures)?;
    let vectors = load_features(features)?;
    check_mode(&vectors, set.mode, "signature set")?;
    let matches = match_all(&vectors, &set);
    let mut report = MatchReport {
        transactions: matches.len(),
        unlabeled_signatures: set.signatures.len() - set.usable().count(),
        ..Default::default()
    };
    for m in &matches {
        if !m.leaves.is_empty() {
            report.matched += 1;
        }
        match m.groups.as_slice() {
            [g] => *report.groups.entry(*g).or_default() += 1,
            [] => {}
            _ => report.ambiguous += 1,
        }
    }
    ensure_parent(out)?;
    write_matches(create_file(out)?, &matches)?;
    Ok(report)
}

pub fn profile(matches: &Path, opts: ProfileOptions, out: &Path) -> Result<ProfileTable> {
    let table = build_profiles(&load_matches(matches)?, opts);
    ensure_parent(out)?;
    write_profiles_csv(create_file(out)?, &table)?;
    Ok(table)
}

/// Clusters profiles; `plotdata` receives the heat-map matrix, cluster
/// labels and the silhouette curve.
pub fn cluster(
    profiles: &Path,
    opts: &ClusterOptions,
    out: &Path,
    plotdata: Option<&Path>,
) -> Result<ClusteringResult> {
    let table = read_profiles_csv(&read_file(profiles)?[..])?;
    let result = cluster_profiles(&table, opts)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    write_json(out, &result)?;
    if let Some(dir) = plotdata {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let data = clustermap(&table, &result);
        write_text(&dir.join("matrix.csv"), &data.matrix_csv())?;
        write_text(&dir.join("labels.csv"), &data.labels_csv())?;
        write_json(&dir.join("clustermap.json"), &data)?;
        let mut curve = String::from("k,silhouette\n");
        for c in &result.cuts {
            curve.push_str(&format!("{},{}\n", c.k, c.silhouette));
        }
        write_text(&dir.join("silhouette.csv"), &curve)?;
    }
    Ok(result)
}
