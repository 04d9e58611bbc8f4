//! Alternative-path evidence between the endpoints of a predicted link.
//!
//! Paths are simple node sequences found by undirected depth-first search,
//! ranked by 1/length with lexicographic node-sequence tie-breaks. Parallel
//! edges between the same pair are represented by the lowest-index edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PropertyGraph;

/// One simple path between the query endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidencePath {
    pub nodes: Vec<usize>,
    /// Relation per step, length `nodes.len() - 1`.
    pub relations: Vec<String>,
    /// Whether each step follows the stored edge direction.
    pub forward: Vec<bool>,
    /// 1 / path length.
    pub score: f64,
}

impl EvidencePath {
    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// Render as `id1 -[rel→]- id2 -[←rel]- id3`; the arrow marks the stored
    /// edge direction relative to the walk.
    pub fn render(&self, g: &PropertyGraph) -> String {
        let mut out = String::new();
        out.push_str(&g.nodes()[self.nodes[0]].id);
        for (i, rel) in self.relations.iter().enumerate() {
            if self.forward[i] {
                out.push_str(&format!(" -[{rel}\u{2192}]- "));
            } else {
                out.push_str(&format!(" -[\u{2190}{rel}]- "));
            }
            out.push_str(&g.nodes()[self.nodes[i + 1]].id);
        }
        out
    }
}

/// Enumerate simple paths from `u` to `v` of length at most `max_len`
/// undirected steps, ranked by 1/length then lexicographic node sequence,
/// truncated to `limit`. With `exclude_direct`, single-edge paths are
/// dropped.
pub fn find_paths(
    g: &PropertyGraph,
    u: usize,
    v: usize,
    max_len: usize,
    exclude_direct: bool,
    limit: usize,
) -> Result<Vec<EvidencePath>> {
    for index in [u, v] {
        if index >= g.node_count() {
            return Err(Error::InvalidNodeIndex {
                index,
                count: g.node_count(),
            });
        }
    }
    if u == v {
        return Err(Error::IdenticalEndpoints { index: u });
    }

    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut current = vec![u];
    let mut on_path = vec![false; g.node_count()];
    on_path[u] = true;
    dfs(g, v, max_len, &mut current, &mut on_path, &mut found);

    if exclude_direct {
        found.retain(|nodes| nodes.len() > 2);
    }
    // 1/length ranking equals (length asc, sequence lex asc).
    found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    found.truncate(limit);

    Ok(found.into_iter().map(|nodes| annotate(g, nodes)).collect())
}

fn dfs(
    g: &PropertyGraph,
    goal: usize,
    budget: usize,
    current: &mut Vec<usize>,
    on_path: &mut Vec<bool>,
    found: &mut Vec<Vec<usize>>,
) {
    if budget == 0 {
        return;
    }
    let here = *current.last().unwrap();
    for next in g.neighbor_set(here) {
        if next == goal {
            let mut nodes = current.clone();
            nodes.push(goal);
            found.push(nodes);
            continue;
        }
        if on_path[next] {
            continue;
        }
        current.push(next);
        on_path[next] = true;
        dfs(g, goal, budget - 1, current, on_path, found);
        on_path[next] = false;
        current.pop();
    }
}

/// Attach relations and directions; parallel edges resolve to the lowest
/// edge index.
fn annotate(g: &PropertyGraph, nodes: Vec<usize>) -> EvidencePath {
    let mut relations = Vec::with_capacity(nodes.len() - 1);
    let mut forward = Vec::with_capacity(nodes.len() - 1);
    for pair in nodes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let edge_idx = g
            .incident(a)
            .iter()
            .filter(|&&(n, _)| n == b)
            .map(|&(_, e)| e)
            .min()
            .expect("consecutive path nodes must share an edge");
        let edge = &g.edges()[edge_idx];
        relations.push(edge.relation.clone());
        forward.push(edge.src == a);
    }
    let score = 1.0 / relations.len() as f64;
    EvidencePath {
        nodes,
        relations,
        forward,
        score,
    }
}

/// Channel score for the evaluator: 0 with no alternative path, otherwise
/// 2/length of the best path, clamped to [0, 1]. A 2-step detour scores 1.
pub fn path_channel_score(paths: &[EvidencePath]) -> f64 {
    paths
        .first()
        .map(|p| (2.0 / p.len() as f64).min(1.0))
        .unwrap_or(0.0)
}

// ---- path payload schema ----------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathDoc {
    pub nodes: Vec<String>,
    pub rendered: String,
    pub score: f64,
}

impl PathDoc {
    pub fn from_path(g: &PropertyGraph, path: &EvidencePath) -> Self {
        PathDoc {
            nodes: path
                .nodes
                .iter()
                .map(|&v| g.nodes()[v].id.clone())
                .collect(),
            rendered: path.render(g),
            score: path.score,
        }
    }
}
