//! Library-level command implementations behind the CLI subcommands.
//! Each writes its artifacts under the configured output directory and
//! echoes the effective config for reproducibility.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::cluster::{cluster_embeddings, default_k, ClusteringDoc};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluator::{BatchOutcome, Evaluator, TargetTriple};
use crate::explainer::{extract_explanation, learn_mask, ExplanationDoc, MaskConfig, MaskInit};
use crate::gnn::{train, GnnModel, TrainConfig};
use crate::graph::{read_to_string, write_string, PropertyGraph};
use crate::reasoner::{entails, KnowledgeBase, Lexicon, ProofDoc};
use crate::text::CorpusIndex;

fn to_json(value: &impl serde::Serialize) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("report types serialize");
    out.push('\n');
    out
}

/// Resolve the layer count: configured value, or graph diameter capped at 4.
pub fn resolve_layers(cfg: &RunConfig, g: &PropertyGraph) -> usize {
    cfg.model
        .layers
        .unwrap_or_else(|| g.diameter().min(4))
        .max(1)
}

fn load_graph_from(cfg: &RunConfig) -> Result<PropertyGraph> {
    PropertyGraph::load(&cfg.paths.nodes, &cfg.paths.edges)
}

#[derive(Debug)]
pub struct TrainArtifacts {
    pub checkpoint: PathBuf,
    pub loss_csv: PathBuf,
    pub final_loss: Option<f64>,
    pub epochs: usize,
}

/// Train on the graph's own edges (negatives sampled 1:1) and write the
/// checkpoint plus a per-epoch loss CSV.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainArtifacts> {
    cfg.validate()?;
    let g = load_graph_from(cfg)?;
    let layers = resolve_layers(cfg, &g);
    let positives: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
    let train_cfg = TrainConfig {
        layers,
        hidden_dim: cfg.model.hidden_dim,
        learning_rate: cfg.model.learning_rate,
        epochs: cfg.model.epochs,
        seed: cfg.model.seed,
    };
    let outcome = train(&g, &positives, &[], &train_cfg)?;

    let checkpoint = cfg.checkpoint_path();
    outcome.model.save(&checkpoint)?;

    let mut csv = String::from("epoch,loss\n");
    for (epoch, loss) in outcome.loss_trace.iter().enumerate() {
        let _ = writeln!(csv, "{epoch},{loss}");
    }
    let loss_csv = cfg.paths.output_dir.join("loss.csv");
    write_string(&loss_csv, &csv)?;

    let mut echoed = cfg.clone();
    echoed.model.layers = Some(layers);
    echoed.echo(&cfg.paths.output_dir)?;

    Ok(TrainArtifacts {
        checkpoint,
        loss_csv,
        final_loss: outcome.loss_trace.last().copied(),
        epochs: outcome.loss_trace.len(),
    })
}

/// Parse a targets TSV: `src_id<TAB>relation<TAB>dst_id` per line.
pub fn load_targets(path: &Path) -> Result<Vec<TargetTriple>> {
    let raw = read_to_string(path)?;
    let mut targets = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 3 tab-separated columns, got {}", cols.len()),
            });
        }
        targets.push(TargetTriple {
            src: cols[0].trim().to_string(),
            relation: cols[1].trim().to_string(),
            dst: cols[2].trim().to_string(),
        });
    }
    Ok(targets)
}

#[derive(Debug)]
pub struct EvaluateArtifacts {
    pub report_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub warning_count: usize,
    pub failure_count: usize,
}

/// Evaluate every target and write one JSON + text report per target plus
/// `summary.json`. Per-target failures become summary records, not errors.
pub fn cmd_evaluate(cfg: &RunConfig, targets_path: &Path) -> Result<EvaluateArtifacts> {
    cfg.validate()?;
    let g = load_graph_from(cfg)?;
    let model = GnnModel::load(&cfg.checkpoint_path())?;
    let corpus = match &cfg.paths.corpus {
        Some(path) => Some(CorpusIndex::build(path)?),
        None => None,
    };
    let kb = match &cfg.paths.kb {
        Some(path) => Some(KnowledgeBase::parse_file(path)?),
        None => None,
    };
    let targets = load_targets(targets_path)?;

    let evaluator = Evaluator {
        graph: &g,
        model: &model,
        corpus: corpus.as_ref(),
        kb: kb.as_ref(),
        config: cfg,
    };
    let BatchOutcome { outcomes, summary } = evaluator.evaluate_batch(&targets);

    let out_dir = &cfg.paths.output_dir;
    let mut report_paths = Vec::new();
    let mut warning_count = 0usize;
    for (i, outcome) in outcomes.iter().enumerate() {
        if let Ok(report) = outcome {
            let json_path = out_dir.join(format!("report_{i:03}.json"));
            write_string(&json_path, &to_json(report))?;
            let text_path = out_dir.join(format!("report_{i:03}.txt"));
            write_string(&text_path, &report.render_text())?;
            warning_count += report.warnings.len();
            report_paths.push(json_path);
        }
    }
    let summary_path = out_dir.join("summary.json");
    write_string(&summary_path, &to_json(&summary))?;
    cfg.echo(out_dir)?;

    Ok(EvaluateArtifacts {
        report_paths,
        summary_path,
        warning_count,
        failure_count: summary.failed,
    })
}

#[derive(Debug)]
pub struct ExplainArtifacts {
    pub explanation_path: PathBuf,
    pub connected: bool,
}

/// Learn an edge mask for one target pair and write the explanation JSON.
pub fn cmd_explain(
    cfg: &RunConfig,
    src: &str,
    relation: &str,
    dst: &str,
) -> Result<ExplainArtifacts> {
    cfg.validate()?;
    let g = load_graph_from(cfg)?;
    let model = GnnModel::load(&cfg.checkpoint_path())?;
    let src_idx = g.node_index(src)?;
    let dst_idx = g.node_index(dst)?;
    let mask_cfg = MaskConfig {
        sparsity: cfg.explainer.sparsity,
        epochs: cfg.explainer.epochs,
        learning_rate: cfg.explainer.learning_rate,
        hidden: cfg.explainer.hidden,
        seed: cfg.model.seed,
        init: MaskInit::Seeded,
    };
    let mask = learn_mask(&g, &model, (src_idx, dst_idx), &mask_cfg)?;
    let explanation = extract_explanation(
        &g,
        &model,
        &mask,
        src_idx,
        dst_idx,
        relation,
        cfg.explainer.top_k,
        cfg.explainer.enforce_connectivity,
    )?;
    let doc = ExplanationDoc::from_explanation(&g, &explanation);
    let path = cfg.paths.output_dir.join(format!(
        "explanation_{}_{}_{}.json",
        sanitize_filename(src),
        sanitize_filename(relation),
        sanitize_filename(dst)
    ));
    write_string(&path, &to_json(&doc))?;
    cfg.echo(&cfg.paths.output_dir)?;
    Ok(ExplainArtifacts {
        explanation_path: path,
        connected: explanation.connected,
    })
}

fn sanitize_filename(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

#[derive(Debug)]
pub struct ReasonOutcome {
    pub entailed: bool,
    pub proof: Option<ProofDoc>,
}

/// Entailment query against a KB file; goal syntax `pred(a,b)`.
pub fn cmd_reason(kb_path: &Path, goal: &str, lexicon: &Lexicon) -> Result<ReasonOutcome> {
    let kb = KnowledgeBase::parse_file(kb_path)?;
    let goal = KnowledgeBase::parse_goal(goal)?;
    match entails(&kb, &goal)? {
        crate::reasoner::Entailment::Entailed(proof) => Ok(ReasonOutcome {
            entailed: true,
            proof: Some(ProofDoc::from_proof(&kb, &proof, lexicon)),
        }),
        crate::reasoner::Entailment::NotEntailed => Ok(ReasonOutcome {
            entailed: false,
            proof: None,
        }),
    }
}

/// Render the ranked alternative paths between two node ids.
pub fn cmd_paths(cfg: &RunConfig, src: &str, dst: &str) -> Result<Vec<String>> {
    let g = load_graph_from(cfg)?;
    let u = g.node_index(src)?;
    let v = g.node_index(dst)?;
    let paths = crate::paths::find_paths(
        &g,
        u,
        v,
        cfg.path_channel.max_len,
        cfg.path_channel.exclude_direct,
        cfg.path_channel.limit,
    )?;
    Ok(paths.iter().map(|p| p.render(&g)).collect())
}

#[derive(Debug)]
pub struct ClusterArtifacts {
    pub clustering_path: PathBuf,
    pub k: usize,
    pub inertia: f64,
}

/// Cluster node embeddings from the checkpoint and dump the assignment.
pub fn cmd_cluster(cfg: &RunConfig) -> Result<ClusterArtifacts> {
    let g = load_graph_from(cfg)?;
    let model = GnnModel::load(&cfg.checkpoint_path())?;
    let emb = model.forward(&g)?;
    let k = cfg.cluster.k.unwrap_or_else(|| default_k(g.node_count()));
    let clustering = cluster_embeddings(&emb, k, cfg.model.seed)?;
    let doc = ClusteringDoc::from_clustering(&g, &clustering);
    let path = cfg.paths.output_dir.join("clustering.json");
    write_string(&path, &to_json(&doc))?;
    Ok(ClusterArtifacts {
        clustering_path: path,
        k,
        inertia: clustering.inertia,
    })
}
