//! `embtree`: build embedding trees from CSV files, diagnose their leaves,
//! place unseen entities and serve the exploration API.
//!
//! Exit status is 0 on success, 1 for invalid input or parameters and 2 for
//! filesystem errors. Diagnostics go to stderr; machine-readable output goes
//! to files or stdout.

use std::fs;
use std::io::{self, IsTerminal, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use embtree_core::analysis::{cold_start_embed, diagnose_leaf, FeatureAssignment};
use embtree_core::dataset::{load_dataset_files, read_schema, DEFAULT_BIN_COUNT};
use embtree_core::tree::{build_tree_from_table, BuildOptions, StoppingCriteria, DEFAULT_MAX_DEPTH, DEFAULT_MIN_NODE_SIZE};
use embtree_core::{EmbeddingMatrix64, EmbeddingTree64, Error, Result};
use embtree_server::{AppState, Session};

#[derive(Parser)]
#[command(name = "embtree", version, about = "Organize embeddings into a decision tree over entity features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tree and write it as JSON.
    Build(BuildArgs),
    /// Report whether each leaf holds one cluster or two, as JSON lines.
    Diagnose(DataArgs),
    /// Place an entity read as a JSON feature object from stdin.
    Infer {
        #[arg(long)]
        tree: PathBuf,
    },
    /// Serve the exploration HTTP API.
    Serve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Address to bind.
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Args)]
struct BuildArgs {
    /// CSV with an id column followed by embedding dimensions.
    #[arg(long)]
    embeddings: PathBuf,
    /// CSV with an id column followed by raw feature columns.
    #[arg(long)]
    features: PathBuf,
    /// JSON object mapping feature names to "numeric" or "categorical".
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Quantile bins per numeric feature.
    #[arg(long, default_value_t = DEFAULT_BIN_COUNT)]
    bins: usize,
    /// Nodes with fewer entities are not split.
    #[arg(long, default_value_t = DEFAULT_MIN_NODE_SIZE)]
    min_leaf: usize,
    /// Nodes at this depth are not split.
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    /// Path of the tree JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    features: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_ansi(io::stderr().is_terminal())
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();

    let outcome = match cli.command {
        Command::Build(args) => build(&args),
        Command::Diagnose(args) => diagnose(&args),
        Command::Infer { tree } => infer(&tree),
        Command::Serve { data, port, host } => serve(&data, SocketAddr::new(host, port)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_io() { 2 } else { 1 })
        }
    }
}

fn build(args: &BuildArgs) -> Result<()> {
    let criteria = StoppingCriteria::new(args.min_leaf, args.max_depth)?;
    let schema = args.schema.as_deref().map(read_schema).transpose()?;
    let (embeddings, table): (EmbeddingMatrix64, _) = load_dataset_files(&args.embeddings, &args.features, schema.as_ref())?;
    let tree = build_tree_from_table(&embeddings, &table, args.bins, criteria, &BuildOptions::default())?;
    write_file(&args.out, &tree.to_json())?;
    eprintln!(
        "built tree: N={} p={} q={} leaves={} depth={}",
        embeddings.len(),
        embeddings.dim(),
        tree.features.len(),
        tree.leaf_count(),
        tree.depth()
    );
    Ok(())
}

fn diagnose(args: &DataArgs) -> Result<()> {
    let tree = read_tree(&args.tree)?;
    let (embeddings, _) = tree.load_dataset(&args.embeddings, &args.features)?;
    let required = 2 * tree.params.split.min_side.max(1);
    let mut out = io::stdout().lock();
    for leaf in tree.leaves() {
        if leaf.count < required {
            eprintln!("skipping leaf {}: {} entities, diagnosis needs {required}", leaf.id, leaf.count);
            continue;
        }
        let report = diagnose_leaf(&tree, &embeddings, leaf.id)?;
        serde_json::to_writer(&mut out, &report).map_err(|e| Error::Io(e.into()))?;
        writeln!(out)?;
    }
    Ok(())
}

fn infer(tree: &Path) -> Result<()> {
    let tree = read_tree(tree)?;
    let mut input = String::new();
    io::stdin().read_to_string(&mut input)?;
    let features: FeatureAssignment =
        serde_json::from_str(&input).map_err(|e| Error::Parse(format!("feature assignment: {e}")))?;
    let result = cold_start_embed(&tree, &features)?;
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, &result).map_err(|e| Error::Io(e.into()))?;
    writeln!(out)?;
    Ok(())
}

fn serve(args: &DataArgs, addr: SocketAddr) -> Result<()> {
    let tree = read_tree(&args.tree)?;
    let (embeddings, features) = tree.load_dataset(&args.embeddings, &args.features)?;
    let state = AppState::with_session(Session::new(tree, embeddings, features)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(embtree_server::serve(state, addr))?;
    Ok(())
}

fn read_tree(path: &Path) -> Result<EmbeddingTree64> {
    let bytes = fs::read(path).map_err(|source| Error::Open { path: path.to_path_buf(), source })?;
    EmbeddingTree64::from_json(&bytes)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Open { path: path.to_path_buf(), source })
}
