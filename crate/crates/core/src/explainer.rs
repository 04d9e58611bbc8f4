//! Edge-mask learning and subgraph-explanation extraction.
//!
//! A small MLP, shared across edges, maps each edge's frozen endpoint
//! embedding rows to a weight in (0,1). The mask trains against a fidelity
//! term (keep the masked prediction close to the original label) plus a
//! sparsity penalty; the GNN itself stays frozen. Extraction takes the
//! top-k edges and can greedily complete them into a connected subgraph.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{sigmoid, softplus, EmbeddingMatrix, GnnModel, Matrix};
use crate::graph::PropertyGraph;
use crate::rng::Rng;

/// Two-layer MLP: `sigmoid(w2 . relu(W1 x + b1) + b2)`, one scalar per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskMlp {
    w1: Matrix,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl MaskMlp {
    /// Seeded uniform init, bounds 1/sqrt(fan_in) per layer.
    pub fn new(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let bound1 = 1.0 / (input_dim as f64).sqrt();
        let mut w1 = Matrix::zeros(hidden, input_dim);
        for v in w1.data.iter_mut() {
            *v = rng.uniform(-bound1, bound1);
        }
        let b1: Vec<f64> = (0..hidden).map(|_| rng.uniform(-bound1, bound1)).collect();
        let bound2 = 1.0 / (hidden as f64).sqrt();
        let w2: Vec<f64> = (0..hidden).map(|_| rng.uniform(-bound2, bound2)).collect();
        let b2 = rng.uniform(-bound2, bound2);
        Self { w1, b1, w2, b2 }
    }

    /// Zero weights with a large positive output bias: every edge weight
    /// starts at sigmoid(20), i.e. within 3e-9 of 1.
    pub fn all_pass(input_dim: usize, hidden: usize) -> Self {
        Self {
            w1: Matrix::zeros(hidden, input_dim),
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 20.0,
        }
    }

    fn forward(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let mut pre = self.w1.matvec(x);
        for (p, b) in pre.iter_mut().zip(&self.b1) {
            *p += b;
        }
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let logit = self.w2.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + self.b2;
        (pre, logit)
    }

    /// Mask weight for one edge input.
    pub fn weight(&self, x: &[f64]) -> f64 {
        sigmoid(self.forward(x).1)
    }

    // Flat parameter order: w1 row-major, b1, w2, b2.
    pub fn param_count(&self) -> usize {
        self.w1.data.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn get_param(&self, mut index: usize) -> f64 {
        if index < self.w1.data.len() {
            return self.w1.data[index];
        }
        index -= self.w1.data.len();
        if index < self.b1.len() {
            return self.b1[index];
        }
        index -= self.b1.len();
        if index < self.w2.len() {
            return self.w2[index];
        }
        self.b2
    }

    pub fn set_param(&mut self, mut index: usize, value: f64) {
        if index < self.w1.data.len() {
            self.w1.data[index] = value;
            return;
        }
        index -= self.w1.data.len();
        if index < self.b1.len() {
            self.b1[index] = value;
            return;
        }
        index -= self.b1.len();
        if index < self.w2.len() {
            self.w2[index] = value;
            return;
        }
        self.b2 = value;
    }
}

/// Learned per-edge weights plus the MLP that produced them.
#[derive(Debug, Clone)]
pub struct EdgeMask {
    pub weights: Vec<f64>,
    pub mlp: MaskMlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskInit {
    Seeded,
    /// Start with every weight at ~1; used to check the identity behavior.
    AllPass,
}

#[derive(Debug, Clone)]
pub struct MaskConfig {
    /// Sparsity coefficient lambda.
    pub sparsity: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub seed: u64,
    pub init: MaskInit,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            sparsity: 0.1,
            epochs: 300,
            learning_rate: 0.5,
            hidden: 16,
            seed: 1,
            init: MaskInit::Seeded,
        }
    }
}

fn edge_inputs(g: &PropertyGraph, emb: &EmbeddingMatrix) -> Vec<Vec<f64>> {
    g.edges()
        .iter()
        .map(|e| {
            let mut x = Vec::with_capacity(2 * emb.dim());
            x.extend_from_slice(emb.row(e.src));
            x.extend_from_slice(emb.row(e.dst));
            x
        })
        .collect()
}

/// Mask-learning objective: fidelity (BCE of the masked score against the
/// original prediction label) plus `lambda` times the mean mask weight.
pub fn mask_loss(
    g: &PropertyGraph,
    model: &GnnModel,
    target: (usize, usize),
    label: f64,
    mlp: &MaskMlp,
    lambda: f64,
) -> Result<f64> {
    let emb = model.forward(g)?;
    let inputs = edge_inputs(g, &emb);
    let weights: Vec<f64> = inputs.iter().map(|x| mlp.weight(x)).collect();
    let masked = model.forward_masked(g, &weights)?;
    let s = model.score_logit(&masked, target.0, target.1);
    let fidelity = if label > 0.5 {
        softplus(-s)
    } else {
        softplus(s)
    };
    let sparsity = if weights.is_empty() {
        0.0
    } else {
        weights.iter().sum::<f64>() / weights.len() as f64
    };
    Ok(fidelity + lambda * sparsity)
}

struct MlpGrads {
    w1: Matrix,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

fn mask_loss_and_grads(
    g: &PropertyGraph,
    model: &GnnModel,
    inputs: &[Vec<f64>],
    target: (usize, usize),
    label: f64,
    mlp: &MaskMlp,
    lambda: f64,
) -> Result<(f64, MlpGrads)> {
    let m = g.edge_count();
    let mut pres = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for x in inputs {
        let (pre, logit) = mlp.forward(x);
        weights.push(sigmoid(logit));
        pres.push(pre);
    }

    let (masked, cache) = model.forward_cached(g, Some(&weights))?;
    let (u, v) = target;
    let s = model.score_logit(&masked, u, v);
    let fidelity = if label > 0.5 {
        softplus(-s)
    } else {
        softplus(s)
    };
    let sparsity = if m == 0 {
        0.0
    } else {
        weights.iter().sum::<f64>() / m as f64
    };
    let loss = fidelity + lambda * sparsity;

    // Gradient of fidelity on the masked final embeddings of u and v.
    let g_s = sigmoid(s) - label;
    let hidden_dim = model.hidden_dim();
    let (w_sum, w_prod) = model.scorer().split_at(hidden_dim);
    let mut grad_final = vec![vec![0.0; hidden_dim]; g.node_count()];
    let (ru, rv) = (masked.row(u).to_vec(), masked.row(v).to_vec());
    for i in 0..hidden_dim {
        grad_final[u][i] += g_s * (w_sum[i] + w_prod[i] * rv[i]);
        grad_final[v][i] += g_s * (w_sum[i] + w_prod[i] * ru[i]);
    }
    let layer_grads = model.backward_from_embedding_grads(g, &cache, Some(&weights), grad_final);

    // Through the sigmoid into the shared MLP.
    let mut grads = MlpGrads {
        w1: Matrix::zeros(mlp.w1.rows, mlp.w1.cols),
        b1: vec![0.0; mlp.b1.len()],
        w2: vec![0.0; mlp.w2.len()],
        b2: 0.0,
    };
    for e in 0..m {
        let d_weight = layer_grads.edge[e] + lambda / m as f64;
        let d_logit = d_weight * weights[e] * (1.0 - weights[e]);
        if d_logit == 0.0 {
            continue;
        }
        let hidden: Vec<f64> = pres[e].iter().map(|&z| z.max(0.0)).collect();
        for (gw2, h) in grads.w2.iter_mut().zip(&hidden) {
            *gw2 += d_logit * h;
        }
        grads.b2 += d_logit;
        for r in 0..mlp.w1.rows {
            if pres[e][r] <= 0.0 {
                continue;
            }
            let dh = d_logit * mlp.w2[r];
            grads.b1[r] += dh;
            let row = &mut grads.w1.data[r * mlp.w1.cols..(r + 1) * mlp.w1.cols];
            for (gw, xv) in row.iter_mut().zip(&inputs[e]) {
                *gw += dh * xv;
            }
        }
    }
    Ok((loss, grads))
}

/// Analytic gradient of `mask_loss` in `MaskMlp` flat parameter order.
pub fn mask_flat_grads(
    g: &PropertyGraph,
    model: &GnnModel,
    target: (usize, usize),
    label: f64,
    mlp: &MaskMlp,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    let emb = model.forward(g)?;
    let inputs = edge_inputs(g, &emb);
    let (loss, grads) = mask_loss_and_grads(g, model, &inputs, target, label, mlp, lambda)?;
    let mut flat = Vec::with_capacity(mlp.param_count());
    flat.extend_from_slice(&grads.w1.data);
    flat.extend_from_slice(&grads.b1);
    flat.extend_from_slice(&grads.w2);
    flat.push(grads.b2);
    Ok((loss, flat))
}

/// Train an edge mask for one target pair. The GNN stays frozen; only the
/// MLP parameters move.
pub fn learn_mask(
    g: &PropertyGraph,
    model: &GnnModel,
    target: (usize, usize),
    cfg: &MaskConfig,
) -> Result<EdgeMask> {
    let emb = model.forward(g)?;
    let original = model.score(&emb, target.0, target.1)?;
    if !original.is_finite() {
        return Err(Error::NonFiniteScore { value: original });
    }
    let label = if original >= 0.5 { 1.0 } else { 0.0 };
    let inputs = edge_inputs(g, &emb);
    let input_dim = 2 * emb.dim();
    let mut mlp = match cfg.init {
        MaskInit::Seeded => MaskMlp::new(input_dim, cfg.hidden, cfg.seed),
        MaskInit::AllPass => MaskMlp::all_pass(input_dim, cfg.hidden),
    };
    for epoch in 0..cfg.epochs {
        let (loss, grads) =
            mask_loss_and_grads(g, model, &inputs, target, label, &mlp, cfg.sparsity)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        for (w, gw) in mlp.w1.data.iter_mut().zip(&grads.w1.data) {
            *w -= cfg.learning_rate * gw;
        }
        for (b, gb) in mlp.b1.iter_mut().zip(&grads.b1) {
            *b -= cfg.learning_rate * gb;
        }
        for (w, gw) in mlp.w2.iter_mut().zip(&grads.w2) {
            *w -= cfg.learning_rate * gw;
        }
        mlp.b2 -= cfg.learning_rate * grads.b2;
    }
    let weights: Vec<f64> = inputs.iter().map(|x| mlp.weight(x)).collect();
    Ok(EdgeMask { weights, mlp })
}

/// Per-feature occlusion score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub index: usize,
    pub score: f64,
}

/// Weighted edge set plus important features for one predicted link.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphExplanation {
    pub src: usize,
    pub dst: usize,
    pub relation: String,
    /// `(edge_index, weight)` sorted by weight descending, ties by edge
    /// index ascending.
    pub edges: Vec<(usize, f64)>,
    pub important_features: Vec<FeatureScore>,
    pub connected: bool,
}

impl SubgraphExplanation {
    /// Feature indices of the top-m positive-importance features.
    pub fn top_features(&self, m: usize) -> BTreeSet<usize> {
        top_feature_set(&self.important_features, m)
    }
}

pub(crate) fn top_feature_set(scores: &[FeatureScore], m: usize) -> BTreeSet<usize> {
    let mut ranked: Vec<&FeatureScore> = scores.iter().filter(|f| f.score > 0.0).collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    ranked.iter().take(m).map(|f| f.index).collect()
}

/// Rank all edges by mask weight, descending; ties by edge index.
pub fn rank_edges(mask: &EdgeMask) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = mask.weights.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
}

fn component_of(g: &PropertyGraph, kept: &BTreeSet<usize>, start: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(u, e) in g.incident(v) {
            if kept.contains(&e) && seen.insert(u) {
                stack.push(u);
            }
        }
    }
    seen
}

/// Extract a subgraph explanation from a learned mask.
///
/// Takes the `top_k` highest-weight edges; with `enforce_connectivity`, keeps
/// adding next-ranked edges until the endpoints share a component (or edges
/// run out), then prunes components containing neither endpoint. `top_k`
/// beyond the edge count is clamped.
#[allow(clippy::too_many_arguments)]
pub fn extract_explanation(
    g: &PropertyGraph,
    model: &GnnModel,
    mask: &EdgeMask,
    src: usize,
    dst: usize,
    relation: &str,
    top_k: usize,
    enforce_connectivity: bool,
) -> Result<SubgraphExplanation> {
    let ranked = rank_edges(mask);
    let k = top_k.min(ranked.len());
    let mut kept: BTreeSet<usize> = ranked[..k].iter().map(|&(e, _)| e).collect();

    let mut connected = {
        let comp = component_of(g, &kept, src);
        comp.contains(&dst)
    };
    if enforce_connectivity {
        let mut next = k;
        while !connected && next < ranked.len() {
            kept.insert(ranked[next].0);
            next += 1;
            connected = component_of(g, &kept, src).contains(&dst);
        }
        let src_comp = component_of(g, &kept, src);
        let dst_comp = component_of(g, &kept, dst);
        kept.retain(|&e| {
            let edge = &g.edges()[e];
            src_comp.contains(&edge.src) || dst_comp.contains(&edge.src)
        });
    }

    let edges: Vec<(usize, f64)> = ranked
        .iter()
        .filter(|(e, _)| kept.contains(e))
        .copied()
        .collect();
    let important_features = occlusion_importance(g, model, &kept, src, dst)?;
    Ok(SubgraphExplanation {
        src,
        dst,
        relation: relation.to_string(),
        edges,
        important_features,
        connected,
    })
}

/// Occlusion importance of each feature for the target score, computed on
/// the subgraph induced by the kept edges: zero the feature everywhere and
/// measure the absolute score change.
fn occlusion_importance(
    g: &PropertyGraph,
    model: &GnnModel,
    kept: &BTreeSet<usize>,
    src: usize,
    dst: usize,
) -> Result<Vec<FeatureScore>> {
    let sub = g.edge_subgraph(kept);
    let emb = model.forward(&sub)?;
    let base = model.score(&emb, src, dst)?;
    let mut scores = Vec::with_capacity(g.feature_dim());
    for f in 0..g.feature_dim() {
        let occluded = sub.with_feature_zeroed_everywhere(f);
        let emb_f = model.forward(&occluded)?;
        let s = model.score(&emb_f, src, dst)?;
        scores.push(FeatureScore {
            index: f,
            score: (base - s).abs(),
        });
    }
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    Ok(scores)
}

// ---- explanation file schema -----------------------------------------------

pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationTarget {
    pub src: String,
    pub relation: String,
    pub dst: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationEdge {
    pub src: String,
    pub relation: String,
    pub dst: String,
    pub weight: f64,
}

/// JSON document written for one explained target. Schema is versioned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationDoc {
    pub schema_version: u32,
    pub target: ExplanationTarget,
    pub edges: Vec<ExplanationEdge>,
    pub important_features: Vec<FeatureScore>,
    pub connected: bool,
}

pub const EXPLANATION_SCHEMA_VERSION: u32 = 1;

impl ExplanationDoc {
    pub fn from_explanation(g: &PropertyGraph, expl: &SubgraphExplanation) -> Self {
        let edges = expl
            .edges
            .iter()
            .map(|&(e, w)| {
                let edge = &g.edges()[e];
                ExplanationEdge {
                    src: g.nodes()[edge.src].id.clone(),
                    relation: edge.relation.clone(),
                    dst: g.nodes()[edge.dst].id.clone(),
                    weight: round6(w),
                }
            })
            .collect();
        ExplanationDoc {
            schema_version: EXPLANATION_SCHEMA_VERSION,
            target: ExplanationTarget {
                src: g.nodes()[expl.src].id.clone(),
                relation: expl.relation.clone(),
                dst: g.nodes()[expl.dst].id.clone(),
            },
            edges,
            important_features: expl.important_features.clone(),
            connected: expl.connected,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::Layer;

    /// 5-node fixture where exactly one edge (m-v, index 0) carries all the
    /// signal for the target pair (u, v). The other two edges attach
    /// anti-signal decoys, so fidelity pushes their weights down while the
    /// bridge is pulled up. Identity single layer, scorer reads the product
    /// block only.
    fn bridge_fixture() -> (PropertyGraph, GnnModel) {
        let g = PropertyGraph::from_tsv(
            "id\tlabel\tfeatures\nu\t\t1.0,0.0\nm\t\t3.0,0.0\nv\t\t0.0,0.0\nd1\t\t-1.0,0.0\nd2\t\t-0.5,0.0\n",
            "src_id\trelation\tdst_id\nm\tr\tv\nv\tr\td1\nu\tr\td2\n",
        )
        .unwrap();
        let model = GnnModel::from_parts(
            vec![Layer {
                weight: Matrix::identity(2),
                bias: vec![0.0; 2],
            }],
            vec![0.0, 0.0, 1.0, 1.0],
            0,
        )
        .unwrap();
        (g, model)
    }

    #[test]
    fn all_ones_mask_reproduces_forward_bitwise() {
        let (g, _) = bridge_fixture();
        let model = GnnModel::new(2, 8, 3, 17).unwrap();
        let plain = model.forward(&g).unwrap();
        let masked = model
            .forward_masked(&g, &vec![1.0; g.edge_count()])
            .unwrap();
        for v in 0..g.node_count() {
            for (a, b) in plain.row(v).iter().zip(masked.row(v)) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn all_pass_init_with_zero_epochs_approximates_original() {
        let (g, model) = bridge_fixture();
        let emb = model.forward(&g).unwrap();
        let original = model.score(&emb, 0, 2).unwrap();
        let mask = learn_mask(
            &g,
            &model,
            (0, 2),
            &MaskConfig {
                sparsity: 0.0,
                epochs: 0,
                init: MaskInit::AllPass,
                ..MaskConfig::default()
            },
        )
        .unwrap();
        let masked = model.forward_masked(&g, &mask.weights).unwrap();
        let masked_score = model.score(&masked, 0, 2).unwrap();
        assert!(
            (masked_score - original).abs() < 1e-6,
            "masked {masked_score} vs original {original}"
        );
    }

    #[test]
    fn learned_weights_stay_in_open_unit_interval() {
        let (g, model) = bridge_fixture();
        let mask = learn_mask(&g, &model, (0, 2), &MaskConfig::default()).unwrap();
        assert_eq!(mask.weights.len(), g.edge_count());
        for &w in &mask.weights {
            assert!(w > 0.0 && w < 1.0, "weight {w} outside (0,1)");
        }
    }

    // Oracle: exhaustive single-edge-kept masks. For every edge, evaluate
    // the masked score with only that edge kept; the learned mask must put
    // its top weight on the oracle's best edge.
    #[test]
    fn bridge_edge_gets_maximal_weight() {
        let (g, model) = bridge_fixture();
        let emb = model.forward(&g).unwrap();
        let original = model.score(&emb, 0, 2).unwrap();
        assert!(original > 0.5, "fixture must predict the link ({original})");

        let mut best_edge = 0;
        let mut best_score = f64::NEG_INFINITY;
        for e in 0..g.edge_count() {
            let mut weights = vec![0.0; g.edge_count()];
            weights[e] = 1.0;
            let masked = model.forward_masked(&g, &weights).unwrap();
            let s = model.score(&masked, 0, 2).unwrap();
            if s > best_score {
                best_score = s;
                best_edge = e;
            }
        }

        assert_eq!(best_edge, 0, "oracle should single out the m-v edge");

        let mask = learn_mask(&g, &model, (0, 2), &MaskConfig::default()).unwrap();
        let ranked = rank_edges(&mask);
        assert_eq!(
            ranked[0].0, best_edge,
            "learned top edge {:?} differs from oracle best {best_edge}",
            ranked[0]
        );
    }

    #[test]
    fn sparsity_pressure_is_monotone_in_lambda() {
        let (g, model) = bridge_fixture();
        let mut means = Vec::new();
        for lambda in [0.0, 0.1, 1.0] {
            let mask = learn_mask(
                &g,
                &model,
                (0, 2),
                &MaskConfig {
                    sparsity: lambda,
                    ..MaskConfig::default()
                },
            )
            .unwrap();
            means.push(mask.weights.iter().sum::<f64>() / mask.weights.len() as f64);
        }
        assert!(
            means[0] >= means[1] && means[1] >= means[2],
            "mean weights not monotone: {means:?}"
        );
    }

    // Oracle: central finite differences on the full mask objective.
    #[test]
    fn mask_gradients_match_finite_differences() {
        let (g, model) = bridge_fixture();
        let mlp = MaskMlp::new(4, 5, 23);
        let label = 1.0;
        let lambda = 0.3;
        let (_, flat) = mask_flat_grads(&g, &model, (0, 2), label, &mlp, lambda).unwrap();
        let h = 1e-5;
        for i in 0..mlp.param_count() {
            let orig = mlp.get_param(i);
            let mut plus = mlp.clone();
            plus.set_param(i, orig + h);
            let mut minus = mlp.clone();
            minus.set_param(i, orig - h);
            let numeric = (mask_loss(&g, &model, (0, 2), label, &plus, lambda).unwrap()
                - mask_loss(&g, &model, (0, 2), label, &minus, lambda).unwrap())
                / (2.0 * h);
            let denom = flat[i].abs().max(numeric.abs()).max(1e-4);
            let rel = (flat[i] - numeric).abs() / denom;
            assert!(
                rel <= 1e-4,
                "param {i}: analytic {} vs fd {numeric}",
                flat[i]
            );
        }
    }

    fn mask_with_weights(weights: Vec<f64>) -> EdgeMask {
        EdgeMask {
            weights,
            mlp: MaskMlp::all_pass(2 * 2, 4),
        }
    }

    /// Connected 4-node fixture for extraction tests: path n0-n1-n2-n3 plus
    /// a chord n0-n2, four edges total.
    fn line_fixture() -> (PropertyGraph, GnnModel) {
        let g = PropertyGraph::from_tsv(
            "id\tlabel\tfeatures\nn0\t\t1.0\nn1\t\t1.0\nn2\t\t1.0\nn3\t\t1.0\n",
            "src_id\trelation\tdst_id\nn0\tr\tn1\nn1\tr\tn2\nn2\tr\tn3\nn0\tr\tn2\n",
        )
        .unwrap();
        let model = GnnModel::from_parts(
            vec![Layer {
                weight: Matrix::identity(1),
                bias: vec![0.0],
            }],
            vec![0.0, 0.0],
            0,
        )
        .unwrap();
        (g, model)
    }

    #[test]
    fn top_k_equal_to_edge_count_keeps_everything() {
        let (g, model) = line_fixture();
        let mask = mask_with_weights(vec![0.9, 0.8, 0.7, 0.6]);
        let expl =
            extract_explanation(&g, &model, &mask, 0, 3, "r", g.edge_count(), false).unwrap();
        assert_eq!(expl.edges.len(), g.edge_count());
        assert!(expl.connected);
    }

    #[test]
    fn oversized_top_k_is_clamped() {
        let (g, model) = line_fixture();
        let mask = mask_with_weights(vec![0.9, 0.8, 0.7, 0.6]);
        let expl = extract_explanation(&g, &model, &mask, 0, 3, "r", 999, false).unwrap();
        assert_eq!(expl.edges.len(), g.edge_count());
    }

    #[test]
    fn duplicate_weights_follow_edge_index_tie_break() {
        let (g, model) = line_fixture();
        let mask = mask_with_weights(vec![0.5, 0.5, 0.5, 0.5]);
        let expl =
            extract_explanation(&g, &model, &mask, 0, 3, "r", g.edge_count(), false).unwrap();
        let order: Vec<usize> = expl.edges.iter().map(|&(e, _)| e).collect();
        assert_eq!(order, vec![0, 1, 2, 3]);
    }

    // Hand-traced greedy completion on a triangle u-w-v with a direct u-v
    // edge: top-1 picks (u,w); adding the next-ranked edge (w,v) connects
    // the endpoints; nothing needs pruning.
    #[test]
    fn connectivity_completes_with_next_ranked_edges() {
        let g = PropertyGraph::from_tsv(
            "id\tlabel\tfeatures\nu\t\t1.0\nw\t\t1.0\nv\t\t1.0\n",
            "src_id\trelation\tdst_id\nu\tr\tw\nw\tr\tv\nu\tr\tv\n",
        )
        .unwrap();
        let model = GnnModel::from_parts(
            vec![Layer {
                weight: Matrix::identity(1),
                bias: vec![0.0],
            }],
            vec![0.0, 0.0],
            0,
        )
        .unwrap();
        let mask = EdgeMask {
            weights: vec![0.9, 0.5, 0.4],
            mlp: MaskMlp::all_pass(2, 4),
        };
        let expl = extract_explanation(&g, &model, &mask, 0, 2, "r", 1, true).unwrap();
        let kept: Vec<usize> = expl.edges.iter().map(|&(e, _)| e).collect();
        assert_eq!(kept, vec![0, 1]);
        assert!(expl.connected);

        let loose = extract_explanation(&g, &model, &mask, 0, 2, "r", 1, false).unwrap();
        assert!(!loose.connected);
        assert_eq!(loose.edges.len(), 1);
    }

    #[test]
    fn extraction_is_pure() {
        let (g, model) = line_fixture();
        let mask = mask_with_weights(vec![0.9, 0.8, 0.7, 0.6]);
        let a = extract_explanation(&g, &model, &mask, 0, 3, "r", 2, true).unwrap();
        let b = extract_explanation(&g, &model, &mask, 0, 3, "r", 2, true).unwrap();
        assert_eq!(a, b);
    }
}
