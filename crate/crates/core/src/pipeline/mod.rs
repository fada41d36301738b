//! End-to-end orchestration: ingest → featurize → train/eval → prune →
//! signatures → match → profile → cluster, each stage persisting its output
//! under one artifact directory with a digest manifest.

mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use stages::{
    cluster, etn_dot, eval, featurize, ingest, load_features, load_matches, load_model,
    load_signatures, match_stage, profile, prune, signatures, stats, train, AccountStats,
    FeaturizeReport, IngestInputs, IngestReport, MatchReport, PruneOutputs, PruneReport,
    StatsReport,
};

use crate::error::{read_file, Error, Result};
use crate::learn::{
    DatasetOptions, ForestParams, LogisticParams, ModelKind, ModelSpec, TreeParams,
};
use crate::motif::{FeatureMode, MatchSemantics};
use crate::profile::{ClusterOptions, Linkage, ProfileOptions};
use crate::signatures::{ItemsetMode, PruneTarget, DEFAULT_THRESHOLD};
use crate::store::{Store, LABELS_FILE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub transfers: PathBuf,
    pub tokens: PathBuf,
    pub accounts: PathBuf,
    /// Without it the run stops after featurize and matches against
    /// `signatures`.
    pub methods: Option<PathBuf>,
    pub method_groups: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub signatures: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    /// Mode of the model that yields signatures.
    pub mode: FeatureMode,
    /// Kind of the headline model written to `model.json`.
    pub model: ModelKind,
    pub semantics: MatchSemantics,
    pub folds: usize,
    pub min_leaf: usize,
    pub min_class_support: usize,
    pub n_trees: usize,
    pub l2: f64,
    /// Signature support threshold.
    pub support: f64,
    pub itemset: ItemsetMode,
    pub prune: PruneTarget,
    pub min_matches: u64,
    pub linkage: Linkage,
    pub k_min: usize,
    pub k_max: usize,
    /// Model × mode grid evaluated by cross-validation.
    pub eval_models: Vec<ModelKind>,
    pub eval_modes: Vec<FeatureMode>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            transfers: "transfers.csv".into(),
            tokens: "tokens.json".into(),
            accounts: "accounts.json".into(),
            methods: None,
            method_groups: None,
            catalog: None,
            signatures: None,
            out: "out".into(),
            seed: 0,
            mode: FeatureMode::ME,
            model: ModelKind::Dt,
            semantics: MatchSemantics::Induced,
            folds: 10,
            min_leaf: 10,
            min_class_support: 10,
            n_trees: 100,
            l2: 1.0,
            support: DEFAULT_THRESHOLD,
            itemset: ItemsetMode::Greedy,
            prune: PruneTarget::Leaves(18),
            min_matches: 10,
            linkage: Linkage::Ward,
            k_min: 2,
            k_max: 15,
            eval_models: ModelKind::ALL.to_vec(),
            eval_modes: FeatureMode::ALL.to_vec(),
        }
    }
}

impl PipelineConfig {
    /// Parses and checks parameter ranges; input paths are checked by
    /// [`PipelineConfig::validate`].
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate_params()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_params()?;
        if self.methods.is_none() && self.signatures.is_none() {
            return Err(Error::Config(
                "without methods a signatures file is required".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_params(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.folds < 2 {
            return fail(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.min_leaf < 1 || self.min_class_support < 1 || self.n_trees < 1 {
            return fail("min_leaf, min_class_support and n_trees must be positive".into());
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return fail(format!("l2 must be a non-negative number, got {}", self.l2));
        }
        if !(self.support > 0.0 && self.support < 1.0) {
            return fail(format!("support must lie in (0, 1), got {}", self.support));
        }
        match self.prune {
            PruneTarget::Leaves(0) => {
                return fail("prune target must keep at least one leaf".into())
            }
            PruneTarget::Alpha(a) if !(a.is_finite() && a >= 0.0) => {
                return fail(format!(
                    "prune alpha must be a non-negative number, got {a}"
                ))
            }
            _ => {}
        }
        if self.k_min < 2 || self.k_min > self.k_max {
            return fail(format!(
                "need 2 <= k_min <= k_max, got {}..{}",
                self.k_min, self.k_max
            ));
        }
        Ok(())
    }

    pub fn spec(&self, kind: ModelKind) -> ModelSpec {
        let tree = TreeParams {
            min_leaf: self.min_leaf,
            ..TreeParams::default()
        };
        ModelSpec {
            kind,
            seed: self.seed,
            logistic: LogisticParams {
                l2: self.l2,
                ..LogisticParams::default()
            },
            tree,
            forest: ForestParams {
                n_trees: self.n_trees,
                min_leaf: self.min_leaf,
                ..ForestParams::default()
            },
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: PipelineConfig,
    /// Input name → sha256.
    pub inputs: BTreeMap<String, String>,
    /// Artifact path relative to the output directory → sha256.
    pub artifacts: BTreeMap<String, String>,
    /// Stages run, in order.
    pub stages: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(read_file(path)?)))
}

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, base, out)?;
        } else if p != base.join(MANIFEST_FILE) {
            out.push(p);
        }
    }
    Ok(())
}

/// Digests of every file under `dir` except the manifest itself.
pub fn digest_dir(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(dir).unwrap_or(p);
            let key = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            Ok((key, sha256_file(p)?))
        })
        .collect()
}

fn mode_slug(mode: FeatureMode) -> &'static str {
    match mode {
        FeatureMode::M => "m",
        FeatureMode::E => "e",
        FeatureMode::ME => "me",
        FeatureMode::MxE => "mxe",
    }
}

/// Runs every stage in order under `cfg.out`. Any failure carries the name
/// of the stage that raised it.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    cfg.validate()?;
    let out = cfg.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut ran: Vec<String> = Vec::new();
    let mut stage = |name: &'static str| {
        log::info!("stage {name}");
        ran.push(name.to_string());
        name
    };

    let mut inputs = BTreeMap::new();
    for (name, path) in [
        ("transfers", Some(&cfg.transfers)),
        ("tokens", Some(&cfg.tokens)),
        ("accounts", Some(&cfg.accounts)),
        ("methods", cfg.methods.as_ref()),
        ("method_groups", cfg.method_groups.as_ref()),
        ("catalog", cfg.catalog.as_ref()),
        (
            "signatures",
            cfg.signatures.as_ref().filter(|_| cfg.methods.is_none()),
        ),
    ] {
        if let Some(p) = path {
            inputs.insert(
                name.to_string(),
                sha256_file(p).map_err(|e| Error::in_stage("inputs", e))?,
            );
        }
    }

    let store_dir = out.join("store");
    let s = stage("ingest");
    let ingest_inputs = IngestInputs {
        transfers: cfg.transfers.clone(),
        tokens: cfg.tokens.clone(),
        accounts: cfg.accounts.clone(),
        methods: cfg.methods.clone(),
        method_groups: cfg.method_groups.clone(),
    };
    let report = ingest(&ingest_inputs, &store_dir).map_err(|e| Error::in_stage(s, e))?;

    let s = stage("stats");
    let store = Store::read(&store_dir).map_err(|e| Error::in_stage(s, e))?;
    stages::write_json(&out.join("stats.json"), &stats(&store))
        .map_err(|e| Error::in_stage(s, e))?;
    drop(store);

    let s = stage("featurize");
    let features_for = |mode: FeatureMode| {
        out.join("features")
            .join(format!("{}.jsonl", mode_slug(mode)))
    };
    let mut modes = vec![cfg.mode];
    if cfg.methods.is_some() {
        modes.extend(cfg.eval_modes.iter().copied().filter(|m| *m != cfg.mode));
    }
    for &mode in &modes {
        featurize(
            &store_dir,
            mode,
            cfg.semantics,
            cfg.catalog.as_deref(),
            &features_for(mode),
        )
        .map_err(|e| Error::in_stage(s, e))?;
    }
    let features = features_for(cfg.mode);

    let signatures_path = if cfg.methods.is_some() && report.labeled > 0 {
        let labels = store_dir.join(LABELS_FILE);
        let opts = DatasetOptions {
            min_class_support: cfg.min_class_support,
        };
        let s = stage("train");
        let model_path = out.join("model.json");
        train(&features, &labels, &cfg.spec(cfg.model), opts, &model_path)
            .map_err(|e| Error::in_stage(s, e))?;
        let tree_path = if cfg.model == ModelKind::Dt {
            model_path
        } else {
            let p = out.join("tree.json");
            train(&features, &labels, &cfg.spec(ModelKind::Dt), opts, &p)
                .map_err(|e| Error::in_stage(s, e))?;
            p
        };

        let s = stage("eval");
        let mut summary = String::from("mode,model,precision,recall,f1\n");
        for &mode in &cfg.eval_modes {
            for &kind in &cfg.eval_models {
                let stem = format!("{}_{}", mode_slug(mode), kind);
                let model = out.join("eval").join(format!("{stem}.model.json"));
                let run = || -> Result<_> {
                    train(&features_for(mode), &labels, &cfg.spec(kind), opts, &model)?;
                    eval(
                        &model,
                        &features_for(mode),
                        &labels,
                        cfg.folds,
                        &out.join("eval").join(format!("{stem}.json")),
                    )
                };
                let r = run().map_err(|e| Error::in_stage(s, e))?;
                summary.push_str(&format!(
                    "{},{},{},{},{}\n",
                    mode, kind, r.precision, r.recall, r.f1
                ));
            }
        }
        if !cfg.eval_modes.is_empty() && !cfg.eval_models.is_empty() {
            crate::store::write_bytes(&out.join("eval").join("summary.csv"), summary.as_bytes())
                .map_err(|e| Error::in_stage(s, e))?;
        }

        let s = stage("prune");
        let pruned = out.join("pruned.json");
        let prune_out = PruneOutputs {
            model: &pruned,
            path_csv: &out.join("prune_path.csv"),
            dot: Some(&out.join("pruned_tree.dot")),
        };
        let pr = prune(
            &tree_path, &features, &labels, cfg.prune, cfg.folds, prune_out,
        )
        .map_err(|e| Error::in_stage(s, e))?;
        stages::write_json(&out.join("prune_report.json"), &pr)
            .map_err(|e| Error::in_stage(s, e))?;

        let s = stage("signatures");
        let sig = out.join("signatures.json");
        signatures(
            &pruned,
            &features,
            &labels,
            cfg.support,
            cfg.itemset,
            &sig,
            Some(&out.join("signatures.dot")),
        )
        .map_err(|e| Error::in_stage(s, e))?;
        sig
    } else {
        let s = stage("signatures");
        cfg.signatures.clone().ok_or_else(|| {
            Error::in_stage(s, Error::Config("no labels and no signatures file".into()))
        })?
    };

    let s = stage("match");
    let matches = out.join("matches.jsonl");
    let mr =
        match_stage(&signatures_path, &features, &matches).map_err(|e| Error::in_stage(s, e))?;
    stages::write_json(&out.join("match_report.json"), &mr).map_err(|e| Error::in_stage(s, e))?;

    let s = stage("profile");
    let profiles = out.join("profiles.csv");
    let table = profile(
        &matches,
        ProfileOptions {
            min_matches: cfg.min_matches,
        },
        &profiles,
    )
    .map_err(|e| Error::in_stage(s, e))?;

    if table.profiles.len() >= 2 {
        let s = stage("cluster");
        let opts = ClusterOptions {
            linkage: cfg.linkage,
            k_min: cfg.k_min,
            k_max: cfg.k_max,
        };
        cluster(
            &profiles,
            &opts,
            &out.join("clusters.json"),
            Some(&out.join("plotdata")),
        )
        .map_err(|e| Error::in_stage(s, e))?;
    } else {
        log::warn!("fewer than 2 account profiles; clustering skipped");
    }

    let manifest = Manifest {
        tool: "motifscope".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        config: cfg.clone(),
        inputs,
        artifacts: digest_dir(out)?,
        stages: ran,
    };
    stages::write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}
