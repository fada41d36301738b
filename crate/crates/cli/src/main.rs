//! `motifscope`: command-line front end for every pipeline stage.
//!
//! Exit codes: 0 success, 2 input error, 3 stage failure. Errors are also
//! written to stderr as one JSON object.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use motifscope::learn::{DatasetOptions, ModelKind};
use motifscope::motif::{FeatureMode, MatchSemantics};
use motifscope::pipeline::{self, IngestInputs, PipelineConfig, PruneOutputs};
use motifscope::profile::{ClusterOptions, Linkage, ProfileOptions};
use motifscope::signatures::{ItemsetMode, PruneTarget};
use motifscope::store::Store;
use motifscope::synth::{self, GenerateOptions, Skew, SynthConfig};
use motifscope::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "motifscope",
    version,
    about = "Ego-network motifs for DeFi transaction analysis"
)]
struct Cli {
    /// Random seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Configuration file: pipeline TOML, or archetype JSON for `synth`.
    /// Pipeline settings act as defaults for the single-stage commands.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate raw files and write the transaction store.
    Ingest {
        #[arg(long)]
        transfers: PathBuf,
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long)]
        accounts: PathBuf,
        #[arg(long)]
        methods: Option<PathBuf>,
        /// Raw method name → group mapping (bundled table by default).
        #[arg(long)]
        method_groups: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Corpus statistics of a store.
    Stats {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the ego transfer network(s) of one transaction as DOT.
    Etn {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        tx: String,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Motif and edge features, one JSON line per transaction.
    Featurize {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        mode: Option<FeatureMode>,
        #[arg(long)]
        semantics: Option<MatchSemantics>,
        /// Motif catalog JSON (built-in enumeration by default).
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model on all labeled rows.
    Train {
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        model: Option<ModelKind>,
        /// Expected mode of the features file.
        #[arg(long)]
        mode: Option<FeatureMode>,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified k-fold cross-validation of a model's settings.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Cost-complexity pruning of a decision tree.
    Prune {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Data,
        #[arg(long, conflicts_with = "alpha")]
        target_leaves: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// CSV of alpha, leaves and CV scores along the pruning path.
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Mine one signature itemset per tree leaf.
    Signatures {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Data,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        itemset: Option<ItemsetMode>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Match feature vectors against signatures.
    Match {
        #[arg(long)]
        signatures: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-account signature match counts.
    Profile {
        #[arg(long)]
        matches: PathBuf,
        #[arg(long)]
        min_matches: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hierarchical clustering of account profiles.
    Cluster {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        linkage: Option<Linkage>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plotdata: Option<PathBuf>,
    },
    /// Generate a labeled synthetic corpus from archetype templates.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "observed")]
        skew: Skew,
        /// Fraction of each archetype left unlabeled (listed in truth.csv).
        #[arg(long, default_value_t = 0.0)]
        holdout: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from the config file.
    Pipeline {
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Data {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args, Debug)]
struct Params {
    #[arg(long)]
    min_leaf: Option<usize>,
    #[arg(long)]
    min_class_support: Option<usize>,
    #[arg(long)]
    n_trees: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Stream(e)),
        _ => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    emit(&format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn check_mode(features: &Path, expected: Option<FeatureMode>) -> Result<()> {
    let Some(mode) = expected else { return Ok(()) };
    match pipeline::load_features(features)?.first() {
        Some(v) if v.mode != mode => Err(Error::Config(format!(
            "features are in mode {}, not {mode}",
            v.mode
        ))),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon_threads(n)?;
    }
    // Single-stage commands take their defaults from a pipeline config.
    let mut defaults = match (&cli.command, &cli.config) {
        (Command::Synth { .. }, _) | (_, None) => PipelineConfig::default(),
        (_, Some(path)) => PipelineConfig::load(path)?,
    };
    if let Some(seed) = cli.seed {
        defaults.seed = seed;
    }
    let cfg = defaults;

    match cli.command {
        Command::Ingest {
            transfers,
            tokens,
            accounts,
            methods,
            method_groups,
            out,
        } => {
            let inputs = IngestInputs {
                transfers,
                tokens,
                accounts,
                methods,
                method_groups,
            };
            let mut report = pipeline::ingest(&inputs, &out)?;
            // The full rejection list is in the store's ingest_report.json.
            report.transfers.rejections.clear();
            print_json(&report)
        }
        Command::Stats { store, out } => {
            let report = pipeline::stats(&Store::read(&store)?);
            if let Some(p) = out {
                std::fs::write(&p, serde_json::to_vec_pretty(&report)?).map_err(Error::Stream)?;
            }
            print_json(&report)
        }
        Command::Etn { store, tx, dot } => {
            let text = pipeline::etn_dot(&Store::read(&store)?, &tx)?;
            match dot {
                Some(p) => {
                    std::fs::write(&p, text).map_err(Error::Stream)?;
                    print_json(&serde_json::json!({"tx": tx, "dot": p}))
                }
                None => emit(&text),
            }
        }
        Command::Featurize {
            store,
            mode,
            semantics,
            catalog,
            out,
        } => {
            let catalog = catalog.or(cfg.catalog.clone());
            let r = pipeline::featurize(
                &store,
                mode.unwrap_or(cfg.mode),
                semantics.unwrap_or(cfg.semantics),
                catalog.as_deref(),
                &out,
            )?;
            print_json(&r)
        }
        Command::Train {
            data,
            model,
            mode,
            params,
            out,
        } => {
            check_mode(&data.features, mode)?;
            let mut c = cfg.clone();
            c.min_leaf = params.min_leaf.unwrap_or(c.min_leaf);
            c.min_class_support = params.min_class_support.unwrap_or(c.min_class_support);
            c.n_trees = params.n_trees.unwrap_or(c.n_trees);
            c.l2 = params.l2.unwrap_or(c.l2);
            c.validate_params()?;
            let opts = DatasetOptions {
                min_class_support: c.min_class_support,
            };
            let file = pipeline::train(
                &data.features,
                &data.labels,
                &c.spec(model.unwrap_or(c.model)),
                opts,
                &out,
            )?;
            print_json(&serde_json::json!({
                "model": file.spec.kind,
                "mode": file.mode,
                "classes": file.classes,
                "features": file.vocabulary.n_columns(),
            }))
        }
        Command::Eval {
            model,
            data,
            folds,
            report,
        } => {
            let r = pipeline::eval(
                &model,
                &data.features,
                &data.labels,
                folds.unwrap_or(cfg.folds),
                &report,
            )?;
            print_json(&serde_json::json!({
                "model": r.model, "mode": r.mode, "k": r.k,
                "precision": r.precision, "recall": r.recall, "f1": r.f1,
            }))
        }
        Command::Prune {
            model,
            data,
            target_leaves,
            alpha,
            folds,
            out,
            path,
            dot,
        } => {
            let target = match (target_leaves, alpha) {
                (Some(n), _) => PruneTarget::Leaves(n),
                (None, Some(a)) => PruneTarget::Alpha(a),
                (None, None) => cfg.prune,
            };
            let outputs = PruneOutputs {
                model: &out,
                path_csv: &path,
                dot: dot.as_deref(),
            };
            let r = pipeline::prune(
                &model,
                &data.features,
                &data.labels,
                target,
                folds.unwrap_or(cfg.folds),
                outputs,
            )?;
            print_json(&serde_json::json!({
                "alpha": r.alpha, "leaves": r.leaves, "full_leaves": r.full_leaves, "warning": r.warning,
            }))
        }
        Command::Signatures {
            model,
            data,
            threshold,
            itemset,
            out,
            dot,
        } => {
            let set = pipeline::signatures(
                &model,
                &data.features,
                &data.labels,
                threshold.unwrap_or(cfg.support),
                itemset.unwrap_or(cfg.itemset),
                &out,
                dot.as_deref(),
            )?;
            let rows: Vec<_> = set
                .signatures
                .iter()
                .map(|s| serde_json::json!({"leaf": s.leaf, "group": s.method_group, "samples": s.samples, "items": s.itemset.keys()}))
                .collect();
            print_json(&rows)
        }
        Command::Match {
            signatures,
            features,
            out,
        } => print_json(&pipeline::match_stage(&signatures, &features, &out)?),
        Command::Profile {
            matches,
            min_matches,
            out,
        } => {
            let opts = ProfileOptions {
                min_matches: min_matches.unwrap_or(cfg.min_matches),
            };
            let t = pipeline::profile(&matches, opts, &out)?;
            print_json(&serde_json::json!({
                "accounts": t.profiles.len(), "columns": t.columns, "excluded": t.excluded.len(),
            }))
        }
        Command::Cluster {
            profiles,
            linkage,
            k_min,
            k_max,
            out,
            plotdata,
        } => {
            let opts = ClusterOptions {
                linkage: linkage.unwrap_or(cfg.linkage),
                k_min: k_min.unwrap_or(cfg.k_min),
                k_max: k_max.unwrap_or(cfg.k_max),
            };
            if opts.k_min < 2 || opts.k_min > opts.k_max {
                return Err(Error::Config(format!(
                    "need 2 <= k_min <= k_max, got {}..{}",
                    opts.k_min, opts.k_max
                )));
            }
            let r = pipeline::cluster(&profiles, &opts, &out, plotdata.as_deref())?;
            print_json(&serde_json::json!({
                "accounts": r.accounts.len(), "k": r.chosen_k, "silhouette": r.silhouette, "warnings": r.warnings,
            }))
        }
        Command::Synth {
            n,
            skew,
            holdout,
            out,
        } => {
            let config = match &cli.config {
                Some(p) => SynthConfig::load(p)?,
                None => SynthConfig::builtin(),
            };
            let opts = GenerateOptions {
                n,
                seed: cfg.seed,
                skew,
                holdout,
            };
            let corpus = synth::generate(&config, &opts)?;
            corpus.write(&out)?;
            print_json(&serde_json::json!({
                "transactions": corpus.truth.len(), "transfers": corpus.transfers.len(), "labeled": corpus.methods.len(),
            }))
        }
        Command::Pipeline { out } => {
            if cli.config.is_none() {
                return Err(Error::Config("pipeline needs --config".into()));
            }
            let mut c = cfg;
            if let Some(o) = out {
                c.out = o;
            }
            let manifest = pipeline::run_pipeline(&c)?;
            print_json(
                &serde_json::json!({"out": c.out, "stages": manifest.stages, "artifacts": manifest.artifacts.len()}),
            )
        }
    }
}

fn rayon_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("--threads must be positive".into()));
    }
    motifscope::set_threads(n)
}

fn report_error(e: &Error) -> ExitCode {
    let stage = match e {
        Error::Stage { stage, .. } => Some(*stage),
        _ => None,
    };
    let body = serde_json::json!({
        "error": e.kind(),
        "stage": stage,
        "message": e.to_string(),
    });
    eprintln!("{body}");
    ExitCode::from(if e.is_input_error() { 2 } else { 3 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = serde_json::json!({"error": "usage", "stage": null, "message": e.to_string().trim_end()});
            eprintln!("{body}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e),
    }
}
