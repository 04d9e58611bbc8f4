//! Evidence accumulation: run every available channel for a predicted link
//! and fuse the channel scores into one verdict.
//!
//! Channels are non-negative support; a missing input (no corpus, no KB)
//! removes its channel from the weighted mean instead of scoring zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_embeddings, cluster_feature_importance, default_k, overlap_score};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::explainer::{extract_explanation, learn_mask, ExplanationDoc, MaskConfig, MaskInit};
use crate::gnn::GnnModel;
use crate::graph::PropertyGraph;
use crate::paths::{find_paths, path_channel_score, PathDoc};
use crate::reasoner::{reasoner_channel_score, Atom, KnowledgeBase, ProofDoc, Term};
use crate::text::{retrieve_evidence, text_channel_score, CorpusIndex, TextEvidence};

/// Non-negative per-channel fusion weights.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ChannelWeights {
    pub cluster_overlap: f64,
    pub path: f64,
    pub text: f64,
    pub reasoner: f64,
}

impl Default for ChannelWeights {
    fn default() -> Self {
        // Entailment is the only channel with a soundness guarantee.
        Self {
            cluster_overlap: 1.0,
            path: 1.0,
            text: 1.0,
            reasoner: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Strong,
    Moderate,
    Weak,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Strong => "strong",
            Verdict::Moderate => "moderate",
            Verdict::Weak => "weak",
        }
    }
}

/// Weighted mean over available channels; `None` when no weight is positive.
pub fn aggregate_score(pairs: &[(f64, f64)]) -> Option<f64> {
    let total_weight: f64 = pairs.iter().map(|(w, _)| w).sum();
    if total_weight <= 0.0 {
        return None;
    }
    let weighted: f64 = pairs.iter().map(|(w, s)| w * s).sum();
    Some(weighted / total_weight)
}

/// Verdict from aggregate and thresholds: strong at or above `strong_at`,
/// weak strictly below `weak_below`, moderate otherwise.
pub fn verdict_for(aggregate: f64, weak_below: f64, strong_at: f64) -> Verdict {
    if aggregate >= strong_at {
        Verdict::Strong
    } else if aggregate < weak_below {
        Verdict::Weak
    } else {
        Verdict::Moderate
    }
}

/// Map a graph-side name to a reasoner constant: lowercased, every
/// non-alphanumeric mapped to underscore.
pub fn sanitize_symbol(name: &str) -> String {
    name.chars()
        .flat_map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().collect::<Vec<char>>()
            } else {
                vec!['_']
            }
        })
        .collect()
}

/// ABox goal for a predicted link: `relation(src_id, dst_id)`.
pub fn goal_atom(src_id: &str, relation: &str, dst_id: &str) -> Atom {
    Atom::new(
        sanitize_symbol(relation),
        vec![
            Term::Constant(sanitize_symbol(src_id)),
            Term::Constant(sanitize_symbol(dst_id)),
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetTriple {
    pub src: String,
    pub relation: String,
    pub dst: String,
}

impl std::fmt::Display for TargetTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} -[{}]-> {}", self.src, self.relation, self.dst)
    }
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Per-prediction evidence report: channel scores, payloads, fused verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub schema_version: u32,
    pub target: TargetTriple,
    pub prediction_score: f64,
    pub channel_scores: BTreeMap<String, f64>,
    pub aggregate: f64,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<ExplanationDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<PathDoc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_evidence: Option<Vec<TextEvidence>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proof: Option<ProofDoc>,
}

impl EvidenceReport {
    /// Human-readable rendering written next to the JSON report.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "target: {}", self.target);
        let _ = writeln!(out, "prediction score: {:.6}", self.prediction_score);
        let _ = writeln!(out, "channels:");
        for (name, score) in &self.channel_scores {
            let _ = writeln!(out, "  {name}: {score:.6}");
        }
        let _ = writeln!(
            out,
            "aggregate: {:.6} -> verdict: {}",
            self.aggregate,
            self.verdict.as_str()
        );
        if let Some(expl) = &self.explanation {
            let _ = writeln!(out, "explanation edges:");
            for edge in &expl.edges {
                let _ = writeln!(
                    out,
                    "  {} -[{}]-> {}  (weight {:.6})",
                    edge.src, edge.relation, edge.dst, edge.weight
                );
            }
        }
        if let Some(paths) = &self.paths {
            let _ = writeln!(out, "alternative paths:");
            for p in paths {
                let _ = writeln!(out, "  {}  (score {:.6})", p.rendered, p.score);
            }
        }
        if let Some(text) = &self.text_evidence {
            let _ = writeln!(out, "text evidence:");
            for t in text {
                let _ = writeln!(out, "  [{}] {} (score {})", t.doc_id, t.sentence, t.score);
            }
        }
        if let Some(proof) = &self.proof {
            let _ = writeln!(out, "proof: {}", proof.rendered);
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(out, "warnings:");
            for w in &self.warnings {
                let _ = writeln!(out, "  {w}");
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailedTarget {
    pub target: TargetTriple,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchSummary {
    pub schema_version: u32,
    pub targets: usize,
    pub succeeded: usize,
    pub failed: usize,
    /// Mean score per channel over the reports where it was computed.
    pub channel_means: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, usize>,
    pub failures: Vec<FailedTarget>,
}

#[derive(Debug)]
pub struct BatchOutcome {
    /// One entry per input target, input order.
    pub outcomes: Vec<std::result::Result<EvidenceReport, FailedTarget>>,
    pub summary: BatchSummary,
}

/// Borrowed bundle of everything a channel can consume.
pub struct Evaluator<'a> {
    pub graph: &'a PropertyGraph,
    pub model: &'a GnnModel,
    pub corpus: Option<&'a CorpusIndex>,
    pub kb: Option<&'a KnowledgeBase>,
    pub config: &'a RunConfig,
}

impl Evaluator<'_> {
    pub fn evaluate(&self, target: &TargetTriple) -> Result<EvidenceReport> {
        let cfg = self.config;
        cfg.validate()?;
        let g = self.graph;
        let src = g.node_index(&target.src)?;
        let dst = g.node_index(&target.dst)?;
        let emb = self.model.forward(g)?;
        let prediction_score = self.model.score(&emb, src, dst)?;
        if !prediction_score.is_finite() {
            return Err(Error::NonFiniteScore {
                value: prediction_score,
            });
        }

        let mut warnings = Vec::new();
        let mut channel_scores: BTreeMap<String, f64> = BTreeMap::new();
        let mut pairs: Vec<(f64, f64)> = Vec::new();

        // Explanation (consumed by the cluster-overlap channel).
        if cfg.explainer.top_k > g.edge_count() {
            warnings.push(format!(
                "top_k {} exceeds edge count {}; clamped",
                cfg.explainer.top_k,
                g.edge_count()
            ));
        }
        let mask_cfg = MaskConfig {
            sparsity: cfg.explainer.sparsity,
            epochs: cfg.explainer.epochs,
            learning_rate: cfg.explainer.learning_rate,
            hidden: cfg.explainer.hidden,
            seed: cfg.model.seed,
            init: MaskInit::Seeded,
        };
        let mask = learn_mask(g, self.model, (src, dst), &mask_cfg)?;
        let explanation = extract_explanation(
            g,
            self.model,
            &mask,
            src,
            dst,
            &target.relation,
            cfg.explainer.top_k,
            cfg.explainer.enforce_connectivity,
        )?;

        // Cluster-overlap channel.
        let k = cfg.cluster.k.unwrap_or_else(|| default_k(g.node_count()));
        let clustering = cluster_embeddings(&emb, k, cfg.model.seed)?;
        let mut clusters = vec![clustering.cluster_of(src)];
        if clustering.cluster_of(dst) != clusters[0] {
            clusters.push(clustering.cluster_of(dst));
        }
        let mut overlap_total = 0.0;
        for &cluster in &clusters {
            let fi = cluster_feature_importance(g, self.model, &clustering, cluster)?;
            if clustering.members(cluster).len() == 1 {
                warnings.push(format!(
                    "cluster {cluster} is a singleton; importance is zero"
                ));
            }
            if fi.top_features(cfg.cluster.top_m).is_empty()
                || explanation.top_features(cfg.cluster.top_m).is_empty()
            {
                warnings.push(format!(
                    "cluster {cluster}: empty top-feature set; overlap scored 0"
                ));
            }
            overlap_total += overlap_score(&explanation, &fi, cfg.cluster.top_m);
        }
        let overlap = overlap_total / clusters.len() as f64;
        channel_scores.insert("cluster_overlap".to_string(), overlap);
        pairs.push((cfg.channels.cluster_overlap, overlap));

        // Path channel.
        let paths = find_paths(
            g,
            src,
            dst,
            cfg.path_channel.max_len,
            cfg.path_channel.exclude_direct,
            cfg.path_channel.limit,
        )?;
        let path_score = path_channel_score(&paths);
        channel_scores.insert("path".to_string(), path_score);
        pairs.push((cfg.channels.path, path_score));
        let path_docs: Vec<PathDoc> = paths.iter().map(|p| PathDoc::from_path(g, p)).collect();

        // Text channel, only with a corpus.
        let text_payload = self.corpus.map(|idx| {
            let hits = retrieve_evidence(idx, &target.src, &target.dst, cfg.text_channel.top_n);
            let score = text_channel_score(&hits);
            channel_scores.insert("text".to_string(), score);
            pairs.push((cfg.channels.text, score));
            hits
        });

        // Reasoner channel, only with a knowledge base.
        let mut proof_doc = None;
        if let Some(kb) = self.kb {
            let goal = goal_atom(&target.src, &target.relation, &target.dst);
            let (score, proof) = reasoner_channel_score(kb, &goal)?;
            channel_scores.insert("reasoner".to_string(), score);
            pairs.push((cfg.channels.reasoner, score));
            proof_doc = proof.map(|p| ProofDoc::from_proof(kb, &p, &cfg.lexicon));
        }

        let aggregate = aggregate_score(&pairs).ok_or(Error::AllChannelsDisabled)?;
        let verdict = verdict_for(aggregate, cfg.verdict.weak_below, cfg.verdict.strong_at);

        Ok(EvidenceReport {
            schema_version: REPORT_SCHEMA_VERSION,
            target: target.clone(),
            prediction_score,
            channel_scores,
            aggregate,
            verdict,
            warnings,
            explanation: Some(ExplanationDoc::from_explanation(g, &explanation)),
            paths: Some(path_docs),
            text_evidence: text_payload,
            proof: proof_doc,
        })
    }

    /// Evaluate every target, never aborting the batch on a per-target
    /// failure. Reports come back in input order. `jobs` caps worker
    /// threads; 1 runs inline.
    pub fn evaluate_batch(&self, targets: &[TargetTriple]) -> BatchOutcome {
        let jobs = self.config.jobs.max(1).min(targets.len().max(1));
        let mut outcomes: Vec<Option<std::result::Result<EvidenceReport, FailedTarget>>> =
            vec![None; targets.len()];
        if jobs <= 1 {
            for (i, target) in targets.iter().enumerate() {
                outcomes[i] = Some(self.evaluate(target).map_err(|e| FailedTarget {
                    target: target.clone(),
                    error: e.to_string(),
                }));
            }
        } else {
            let results = std::sync::Mutex::new(Vec::new());
            std::thread::scope(|scope| {
                for worker in 0..jobs {
                    let results = &results;
                    scope.spawn(move || {
                        let mut local = Vec::new();
                        for (i, target) in targets.iter().enumerate() {
                            if i % jobs != worker {
                                continue;
                            }
                            local.push((
                                i,
                                self.evaluate(target).map_err(|e| FailedTarget {
                                    target: target.clone(),
                                    error: e.to_string(),
                                }),
                            ));
                        }
                        results.lock().unwrap().extend(local);
                    });
                }
            });
            for (i, outcome) in results.into_inner().unwrap() {
                outcomes[i] = Some(outcome);
            }
        }
        let outcomes: Vec<_> = outcomes.into_iter().map(|o| o.unwrap()).collect();

        let mut channel_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let mut verdicts: BTreeMap<String, usize> = BTreeMap::new();
        let mut failures = Vec::new();
        let mut succeeded = 0usize;
        for outcome in &outcomes {
            match outcome {
                Ok(report) => {
                    succeeded += 1;
                    for (name, score) in &report.channel_scores {
                        let entry = channel_sums.entry(name.clone()).or_insert((0.0, 0));
                        entry.0 += score;
                        entry.1 += 1;
                    }
                    *verdicts
                        .entry(report.verdict.as_str().to_string())
                        .or_insert(0) += 1;
                }
                Err(failed) => failures.push(failed.clone()),
            }
        }
        let channel_means = channel_sums
            .into_iter()
            .map(|(name, (sum, count))| (name, sum / count as f64))
            .collect();
        let summary = BatchSummary {
            schema_version: REPORT_SCHEMA_VERSION,
            targets: targets.len(),
            succeeded,
            failed: failures.len(),
            channel_means,
            verdicts,
            failures,
        };
        BatchOutcome { outcomes, summary }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_matches_worked_example() {
        // Weights {2,1,1,0} with scores {1.0, 0.5, 0.0} and the reasoner
        // disabled: (2*1 + 1*0.5 + 1*0) / 4 = 0.625.
        let pairs = [(2.0, 1.0), (1.0, 0.5), (1.0, 0.0), (0.0, 0.0)];
        let aggregate = aggregate_score(&pairs).unwrap();
        assert_eq!(aggregate, 0.625);
        assert_eq!(verdict_for(aggregate, 0.33, 0.66), Verdict::Moderate);
    }

    #[test]
    fn zero_scores_give_weak_verdict() {
        let pairs = [(1.0, 0.0), (1.0, 0.0)];
        let aggregate = aggregate_score(&pairs).unwrap();
        assert_eq!(aggregate, 0.0);
        assert_eq!(verdict_for(aggregate, 0.33, 0.66), Verdict::Weak);
    }

    #[test]
    fn unit_scores_give_strong_verdict() {
        let pairs = [(1.0, 1.0), (1.0, 1.0), (1.0, 1.0), (1.0, 1.0)];
        let aggregate = aggregate_score(&pairs).unwrap();
        assert_eq!(aggregate, 1.0);
        assert_eq!(verdict_for(aggregate, 0.33, 0.66), Verdict::Strong);
    }

    #[test]
    fn all_zero_weights_have_no_aggregate() {
        assert!(aggregate_score(&[(0.0, 1.0), (0.0, 0.5)]).is_none());
    }

    #[test]
    fn weight_scaling_leaves_aggregate_unchanged() {
        let base = [(2.0, 0.9), (1.0, 0.4), (0.5, 0.1)];
        let scaled: Vec<(f64, f64)> = base.iter().map(|&(w, s)| (w * 7.5, s)).collect();
        let a = aggregate_score(&base).unwrap();
        let b = aggregate_score(&scaled).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn symbols_sanitize_to_reasoner_constants() {
        assert_eq!(sanitize_symbol("Ellen DeGeneres"), "ellen_degeneres");
        assert_eq!(sanitize_symbol("same_as"), "same_as");
        assert_eq!(sanitize_symbol("born-in"), "born_in");
        let goal = goal_atom("Ellen DeGeneres", "Spouse", "Portia de Rossi");
        assert_eq!(goal.to_string(), "spouse(ellen_degeneres,portia_de_rossi)");
    }
}
