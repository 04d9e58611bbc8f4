//! Pipeline CLI: ingest, train, explain, substantiate, reason, report.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data validation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use evigraph::commands;
use evigraph::config::RunConfig;
use evigraph::error::Error;
use evigraph::reasoner::Lexicon;

#[derive(Parser, Debug)]
#[command(
    name = "evigraph",
    version,
    about = "Evaluate GNN link-prediction explanations with independent evidence channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML run config; flags below override file values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Nodes TSV (id<TAB>label<TAB>features)
    #[arg(long, global = true)]
    nodes: Option<PathBuf>,

    /// Edges TSV (src_id<TAB>relation<TAB>dst_id)
    #[arg(long, global = true)]
    edges: Option<PathBuf>,

    /// Corpus JSONL for the text channel
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,

    /// Axiom file for the reasoner channel
    #[arg(long, global = true)]
    kb: Option<PathBuf>,

    /// Output directory for artifacts and reports
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Model checkpoint path (default <output>/model.evgnn)
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,

    /// GNN layer count (default: graph diameter, capped at 4)
    #[arg(long, global = true)]
    layers: Option<usize>,

    /// Hidden embedding dimension
    #[arg(long, global = true)]
    hidden_dim: Option<usize>,

    /// Learning rate for GNN training
    #[arg(long, global = true)]
    learning_rate: Option<f64>,

    /// Training epochs
    #[arg(long, global = true)]
    epochs: Option<usize>,

    /// Seed for every stochastic step
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Mask sparsity coefficient (lambda)
    #[arg(long, global = true)]
    sparsity: Option<f64>,

    /// Edges kept in an explanation
    #[arg(long, global = true)]
    top_k: Option<usize>,

    /// Worker cap for batch evaluation
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.nodes {
            cfg.paths.nodes = v.clone();
        }
        if let Some(v) = &self.edges {
            cfg.paths.edges = v.clone();
        }
        if let Some(v) = &self.corpus {
            cfg.paths.corpus = Some(v.clone());
        }
        if let Some(v) = &self.kb {
            cfg.paths.kb = Some(v.clone());
        }
        if let Some(v) = &self.output {
            cfg.paths.output_dir = v.clone();
        }
        if let Some(v) = &self.checkpoint {
            cfg.paths.checkpoint = Some(v.clone());
        }
        if let Some(v) = self.layers {
            cfg.model.layers = Some(v);
        }
        if let Some(v) = self.hidden_dim {
            cfg.model.hidden_dim = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.model.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            cfg.model.epochs = v;
        }
        if let Some(v) = self.seed {
            cfg.model.seed = v;
        }
        if let Some(v) = self.sparsity {
            cfg.explainer.sparsity = v;
        }
        if let Some(v) = self.top_k {
            cfg.explainer.top_k = v;
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v.max(1);
        }
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the link-prediction GNN and write a checkpoint + loss CSV
    Train {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Evaluate predictions from a targets TSV into per-target reports
    Evaluate {
        #[command(flatten)]
        common: ConfigArgs,
        /// Targets TSV: src_id<TAB>relation<TAB>dst_id
        #[arg(long)]
        targets: PathBuf,
    },
    /// Learn and write a subgraph explanation for one predicted link
    Explain {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        src: String,
        #[arg(long)]
        relation: String,
        #[arg(long)]
        dst: String,
    },
    /// Query a knowledge base for entailment of a ground goal
    Reason {
        #[command(flatten)]
        common: ConfigArgs,
        /// Goal atom, e.g. "Mortal(socrates)"
        #[arg(long)]
        goal: String,
        /// Print the proof as JSON instead of rendered text
        #[arg(long)]
        json: bool,
    },
    /// List ranked alternative paths between two nodes
    Paths {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long)]
        src: String,
        #[arg(long)]
        dst: String,
        /// Maximum path length in edges
        #[arg(long)]
        max_len: Option<usize>,
        /// Maximum number of paths listed
        #[arg(long)]
        limit: Option<usize>,
        /// Include the direct edge as a path
        #[arg(long)]
        include_direct: bool,
    },
    /// Cluster node embeddings and dump the assignment
    Cluster {
        #[command(flatten)]
        common: ConfigArgs,
        /// Cluster count (default: ceil(sqrt(node count)))
        #[arg(long)]
        k: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { common } => {
            let cfg = common.build()?;
            let artifacts = commands::cmd_train(&cfg)?;
            println!("checkpoint: {}", artifacts.checkpoint.display());
            println!(
                "loss csv:   {} ({} epochs)",
                artifacts.loss_csv.display(),
                artifacts.epochs
            );
            if let Some(loss) = artifacts.final_loss {
                println!("final loss: {loss}");
            }
            Ok(())
        }
        Command::Evaluate { common, targets } => {
            let cfg = common.build()?;
            let artifacts = commands::cmd_evaluate(&cfg, &targets)?;
            println!(
                "wrote {} reports + {}",
                artifacts.report_paths.len(),
                artifacts.summary_path.display()
            );
            if artifacts.failure_count > 0 {
                eprintln!(
                    "warning: {} target(s) failed; see summary.json",
                    artifacts.failure_count
                );
            }
            if artifacts.warning_count > 0 {
                eprintln!(
                    "warning: {} warning(s) recorded in reports",
                    artifacts.warning_count
                );
            }
            Ok(())
        }
        Command::Explain {
            common,
            src,
            relation,
            dst,
        } => {
            let cfg = common.build()?;
            let artifacts = commands::cmd_explain(&cfg, &src, &relation, &dst)?;
            println!("explanation: {}", artifacts.explanation_path.display());
            if !artifacts.connected {
                eprintln!("warning: explanation subgraph does not connect the endpoints");
            }
            Ok(())
        }
        Command::Reason { common, goal, json } => {
            let cfg = common.build()?;
            let kb_path = cfg.paths.kb.clone().ok_or_else(|| Error::Config {
                message: "reason requires --kb or paths.kb in the config".to_string(),
            })?;
            let lexicon: Lexicon = cfg.lexicon.clone();
            let outcome = commands::cmd_reason(&kb_path, &goal, &lexicon)?;
            if json {
                match &outcome.proof {
                    Some(doc) => println!("{}", serde_json::to_string_pretty(doc).unwrap()),
                    None => println!("{{\"entailed\": false}}"),
                }
            } else if let Some(doc) = &outcome.proof {
                println!("entailed");
                println!("{}", doc.rendered);
            } else {
                println!("not entailed");
            }
            Ok(())
        }
        Command::Paths {
            common,
            src,
            dst,
            max_len,
            limit,
            include_direct,
        } => {
            let mut cfg = common.build()?;
            if let Some(v) = max_len {
                cfg.path_channel.max_len = v;
            }
            if let Some(v) = limit {
                cfg.path_channel.limit = v;
            }
            if include_direct {
                cfg.path_channel.exclude_direct = false;
            }
            let rendered = commands::cmd_paths(&cfg, &src, &dst)?;
            if rendered.is_empty() {
                println!("no paths found");
            }
            for line in rendered {
                println!("{line}");
            }
            Ok(())
        }
        Command::Cluster { common, k } => {
            let mut cfg = common.build()?;
            if let Some(v) = k {
                cfg.cluster.k = Some(v);
            }
            let artifacts = commands::cmd_cluster(&cfg)?;
            println!(
                "clustering: {} (k={}, inertia={})",
                artifacts.clustering_path.display(),
                artifacts.k,
                artifacts.inertia
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help/--version are successes; anything else is a usage error.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
