//! Embedding clustering and cluster-level feature importance.
//!
//! Lloyd iterations from a seeded farthest-first start. Importance is
//! occlusion-based: zero one feature of one member, re-run the forward pass,
//! and measure how the member's mean link score to its co-members moves.
//! The overlap score against an explanation's important features is plain
//! Jaccard on the top-m sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainer::{top_feature_set, FeatureScore, SubgraphExplanation};
use crate::gnn::{EmbeddingMatrix, GnnModel};
use crate::graph::PropertyGraph;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    /// Node index -> cluster id in [0, k).
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == cluster)
            .map(|(v, _)| v)
            .collect()
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.assignment[v]
    }
}

/// Default cluster count: ceil(sqrt(n)).
pub fn default_k(node_count: usize) -> usize {
    (node_count as f64).sqrt().ceil() as usize
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with a seeded farthest-first start.
pub fn cluster_embeddings(emb: &EmbeddingMatrix, k: usize, seed: u64) -> Result<Clustering> {
    let n = emb.len();
    if k < 1 || k > n {
        return Err(Error::ClusterCountOutOfRange { k, max: n });
    }
    let start = Rng::new(seed).index(n);
    cluster_embeddings_from(emb, k, start)
}

/// Lloyd's algorithm with an explicit farthest-first starting row. After the
/// start, each next center is the row farthest from its nearest chosen
/// center, ties broken by lowest row index.
pub fn cluster_embeddings_from(
    emb: &EmbeddingMatrix,
    k: usize,
    start: usize,
) -> Result<Clustering> {
    Ok(lloyd(emb, k, start)?.0)
}

/// Like `cluster_embeddings_from`, also returning the inertia after every
/// Lloyd iteration.
pub fn cluster_embeddings_traced(
    emb: &EmbeddingMatrix,
    k: usize,
    start: usize,
) -> Result<(Clustering, Vec<f64>)> {
    lloyd(emb, k, start)
}

fn lloyd(emb: &EmbeddingMatrix, k: usize, start: usize) -> Result<(Clustering, Vec<f64>)> {
    let n = emb.len();
    if k < 1 || k > n {
        return Err(Error::ClusterCountOutOfRange { k, max: n });
    }
    if start >= n {
        return Err(Error::InvalidNodeIndex {
            index: start,
            count: n,
        });
    }

    let mut centroids: Vec<Vec<f64>> = vec![emb.row(start).to_vec()];
    let mut min_dist: Vec<f64> = (0..n)
        .map(|v| squared_distance(emb.row(v), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let mut best = 0;
        let mut best_dist = f64::NEG_INFINITY;
        for (v, &d) in min_dist.iter().enumerate() {
            if d > best_dist {
                best_dist = d;
                best = v;
            }
        }
        centroids.push(emb.row(best).to_vec());
        for v in 0..n {
            let d = squared_distance(emb.row(v), centroids.last().unwrap());
            if d < min_dist[v] {
                min_dist[v] = d;
            }
        }
    }

    let assign = |centroids: &[Vec<f64>]| -> Vec<usize> {
        (0..n)
            .map(|v| {
                let mut best = 0;
                let mut best_dist = squared_distance(emb.row(v), &centroids[0]);
                for (c, centroid) in centroids.iter().enumerate().skip(1) {
                    let d = squared_distance(emb.row(v), centroid);
                    if d < best_dist {
                        best_dist = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };

    let inertia_of = |centroids: &[Vec<f64>], assignment: &[usize]| -> f64 {
        (0..n)
            .map(|v| squared_distance(emb.row(v), &centroids[assignment[v]]))
            .sum()
    };

    let mut assignment = assign(&centroids);
    let mut trace = vec![inertia_of(&centroids, &assignment)];
    for _ in 0..100 {
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = assignment
                .iter()
                .enumerate()
                .filter(|&(_, &a)| a == c)
                .map(|(v, _)| v)
                .collect();
            if members.is_empty() {
                continue;
            }
            let dim = centroid.len();
            let mut mean = vec![0.0; dim];
            for &v in &members {
                for (m, x) in mean.iter_mut().zip(emb.row(v)) {
                    *m += x;
                }
            }
            for m in mean.iter_mut() {
                *m /= members.len() as f64;
            }
            *centroid = mean;
        }
        let next = assign(&centroids);
        trace.push(inertia_of(&centroids, &next));
        if next == assignment {
            break;
        }
        assignment = next;
    }

    let inertia = inertia_of(&centroids, &assignment);
    Ok((
        Clustering {
            k,
            assignment,
            centroids,
            inertia,
        },
        trace,
    ))
}

/// Occlusion-based per-feature importance for one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    /// Index f holds the importance of feature f; all values >= 0.
    pub scores: Vec<f64>,
    pub method: String,
}

impl FeatureImportance {
    /// Feature indices of the top-m positive-importance features.
    pub fn top_features(&self, m: usize) -> std::collections::BTreeSet<usize> {
        let ranked: Vec<FeatureScore> = self
            .scores
            .iter()
            .enumerate()
            .map(|(index, &score)| FeatureScore { index, score })
            .collect();
        top_feature_set(&ranked, m)
    }
}

fn context_score(
    model: &GnnModel,
    emb: &EmbeddingMatrix,
    v: usize,
    members: &[usize],
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for &u in members {
        if u == v {
            continue;
        }
        total += model.score(emb, v, u)?;
        count += 1;
    }
    Ok(total / count as f64)
}

/// Mean absolute change in each member's cluster-context score when one
/// feature is zeroed for that member. Singleton clusters get a zero vector.
pub fn cluster_feature_importance(
    g: &PropertyGraph,
    model: &GnnModel,
    clustering: &Clustering,
    cluster: usize,
) -> Result<FeatureImportance> {
    let members = clustering.members(cluster);
    if members.is_empty() {
        return Err(Error::Config {
            message: format!("cluster {cluster} is empty"),
        });
    }
    let d = g.feature_dim();
    if members.len() == 1 {
        return Ok(FeatureImportance {
            scores: vec![0.0; d],
            method: "occlusion".to_string(),
        });
    }
    let emb = model.forward(g)?;
    let base: Vec<f64> = members
        .iter()
        .map(|&v| context_score(model, &emb, v, &members))
        .collect::<Result<_>>()?;

    let mut scores = vec![0.0; d];
    for f in 0..d {
        let mut total = 0.0;
        for (i, &v) in members.iter().enumerate() {
            let occluded = g.with_feature_zeroed(v, f)?;
            let emb_f = model.forward(&occluded)?;
            let ctx = context_score(model, &emb_f, v, &members)?;
            total += (base[i] - ctx).abs();
        }
        scores[f] = total / members.len() as f64;
    }
    Ok(FeatureImportance {
        scores,
        method: "occlusion".to_string(),
    })
}

/// Jaccard similarity between the top-m feature sets of an explanation and a
/// cluster importance. Either side empty scores 0.
pub fn overlap_score(expl: &SubgraphExplanation, fi: &FeatureImportance, top_m: usize) -> f64 {
    let a = expl.top_features(top_m);
    let b = fi.top_features(top_m);
    jaccard(&a, &b)
}

pub(crate) fn jaccard(
    a: &std::collections::BTreeSet<usize>,
    b: &std::collections::BTreeSet<usize>,
) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let intersection = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    intersection / union
}

// ---- clustering dump schema -------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusteringDoc {
    pub schema_version: u32,
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

pub const CLUSTERING_SCHEMA_VERSION: u32 = 1;

impl ClusteringDoc {
    pub fn from_clustering(g: &PropertyGraph, clustering: &Clustering) -> Self {
        let assignments = clustering
            .assignment
            .iter()
            .enumerate()
            .map(|(v, &c)| (g.nodes()[v].id.clone(), c))
            .collect();
        ClusteringDoc {
            schema_version: CLUSTERING_SCHEMA_VERSION,
            k: clustering.k,
            assignments,
            centroids: clustering.centroids.clone(),
            inertia: clustering.inertia,
        }
    }
}
