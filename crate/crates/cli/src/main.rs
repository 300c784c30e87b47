mod commands;
mod config;
mod error;
mod formats;

use clap::{Args, Parser, Subcommand};
use config::PipelineConfig;
use error::CliError;
use formats::OutDir;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sttpp", version, about = "Linkage detection in news streams with a marked Hawkes process")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// INI configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving all outputs.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize a JSONL corpus and write TF-IDF vectors.
    Preprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Train the sparse RBM on TF-IDF vectors.
    TrainRbm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bow: PathBuf,
    },
    /// Map documents to binary embeddings.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rbm: PathBuf,
        #[arg(long)]
        bow: PathBuf,
    },
    /// Reconstruct documents and report the selected keywords.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rbm: PathBuf,
        #[arg(long)]
        bow: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 1)]
        rounds: usize,
    },
    /// Fit the Hawkes model by EM.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        events: PathBuf,
    },
    /// Rank event pairs by linkage probability.
    Retrieve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Number of pairs; defaults to eval.N.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Simulate a synthetic event stream with known parents.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Score retrieved pairs against ground truth.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        retrieved: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Cross-validate the sparsity weight by silhouette.
    CvDelta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bow: PathBuf,
    },
    /// Cross-validate the kernel rate by held-out F1.
    CvBeta {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Threshold the fitted A into a directed beat graph.
    Graph {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
        threshold: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Preprocess { .. } => "preprocess",
            Command::TrainRbm { .. } => "train-rbm",
            Command::Embed { .. } => "embed",
            Command::Reconstruct { .. } => "reconstruct",
            Command::Fit { .. } => "fit",
            Command::Retrieve { .. } => "retrieve",
            Command::Simulate { .. } => "simulate",
            Command::Evaluate { .. } => "evaluate",
            Command::CvDelta { .. } => "cv-delta",
            Command::CvBeta { .. } => "cv-beta",
            Command::Graph { .. } => "graph",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Preprocess { common, .. }
            | Command::TrainRbm { common, .. }
            | Command::Embed { common, .. }
            | Command::Reconstruct { common, .. }
            | Command::Fit { common, .. }
            | Command::Retrieve { common, .. }
            | Command::Simulate { common }
            | Command::Evaluate { common, .. }
            | Command::CvDelta { common, .. }
            | Command::CvBeta { common, .. }
            | Command::Graph { common, .. } => common,
        }
    }

    fn inputs(&self) -> Vec<&Path> {
        match self {
            Command::Preprocess { corpus, .. } => vec![corpus],
            Command::TrainRbm { bow, .. } | Command::CvDelta { bow, .. } => vec![bow],
            Command::Embed { rbm, bow, .. } => vec![rbm, bow],
            Command::Reconstruct { rbm, bow, vocab, .. } => vec![rbm, bow, vocab],
            Command::Fit { events, .. } => vec![events],
            Command::Retrieve { model, events, .. } => vec![model, events],
            Command::Simulate { .. } => vec![],
            Command::Evaluate { retrieved, truth, .. } => vec![retrieved, truth],
            Command::CvBeta { events, truth, .. } => vec![events, truth],
            Command::Graph { model, .. } => vec![model],
        }
        .into_iter()
        .map(PathBuf::as_path)
        .collect()
    }

    fn seed(&self, cfg: &PipelineConfig) -> Option<u64> {
        match self {
            Command::TrainRbm { .. } | Command::Reconstruct { .. } => Some(cfg.rbm.seed),
            Command::Fit { .. } => Some(cfg.hawkes.seed),
            Command::Simulate { .. } => Some(cfg.sim.seed),
            Command::CvDelta { .. } | Command::CvBeta { .. } => Some(cfg.eval.seed),
            _ => None,
        }
    }
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256(&bytes))
}

fn run(cmd: &Command, argv: &[String]) -> Result<(), CliError> {
    let common = cmd.common();
    let config_text = match &common.config {
        Some(path) => formats::read_text(path)?,
        None => String::new(),
    };
    let cfg = PipelineConfig::parse(&config_text)?;
    let mut out = OutDir::new(&common.out_dir)?;
    let input_digests = cmd
        .inputs()
        .into_iter()
        .map(|p| Ok((p.display().to_string(), file_digest(p)?.into())))
        .collect::<Result<serde_json::Map<String, serde_json::Value>, CliError>>()?;

    match cmd {
        Command::Preprocess { corpus, .. } => commands::preprocess(&cfg, corpus, &mut out)?,
        Command::TrainRbm { bow, .. } => commands::train_rbm(&cfg, bow, &mut out)?,
        Command::Embed { rbm, bow, .. } => commands::embed_corpus(rbm, bow, &mut out)?,
        Command::Reconstruct { rbm, bow, vocab, rounds, .. } => {
            commands::reconstruct(&cfg, rbm, bow, vocab, *rounds, &mut out)?
        }
        Command::Fit { events, .. } => commands::fit(&cfg, events, &mut out)?,
        Command::Retrieve { model, events, top, .. } => {
            commands::retrieve(&cfg, model, events, top.unwrap_or(cfg.eval.n_top), &mut out)?
        }
        Command::Simulate { .. } => commands::simulate_cmd(&cfg, &mut out)?,
        Command::Evaluate { retrieved, truth, .. } => commands::evaluate(retrieved, truth, &mut out)?,
        Command::CvDelta { bow, .. } => commands::cv_delta_cmd(&cfg, bow, &mut out)?,
        Command::CvBeta { events, truth, .. } => commands::cv_beta_cmd(&cfg, events, truth, &mut out)?,
        Command::Graph { model, threshold, .. } => commands::graph(model, *threshold, &mut out)?,
    }

    let outputs: serde_json::Map<String, serde_json::Value> =
        out.written().iter().map(|(name, bytes)| (name.clone(), sha256(bytes).into())).collect();
    let manifest = json!({
        "command": cmd.name(),
        "args": argv,
        "config_sha256": sha256(config_text.as_bytes()),
        "seed": cmd.seed(&cfg),
        "inputs": input_digests,
        "outputs": outputs,
        "versions": {
            "sttpp": env!("CARGO_PKG_VERSION"),
        },
    });
    out.write_json(&format!("manifest-{}.json", cmd.name()), &manifest)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&msg).trim_start_matches("error: ");
            let err = CliError::Usage(first.to_owned());
            eprintln!("{}", err.line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&cli.command, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
