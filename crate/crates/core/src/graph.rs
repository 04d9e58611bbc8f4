//! Property-graph storage, triple ingestion, and neighborhood queries.
//!
//! Edges are stored directed; neighborhood queries treat the graph as
//! undirected. Node indices are dense integers assigned in file order, with
//! external string ids kept in a bidirectional map. The graph is immutable
//! after load and safe to share across threads read-only.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One node: stable external id, optional type label, fixed-length feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: String,
    pub label: Option<String>,
    pub features: Vec<f64>,
}

/// One directed typed edge between node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub src: usize,
    pub relation: String,
    pub dst: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub allow_self_loops: bool,
}

/// Directed property graph with an undirected incidence index.
///
/// `adjacency[v]` lists `(neighbor, edge_index)` for every edge incident to
/// `v`, in edge-file order. A self-loop contributes a single entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyGraph {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    adjacency: Vec<Vec<(usize, usize)>>,
    id_to_index: HashMap<String, usize>,
    feature_dim: usize,
}

impl PropertyGraph {
    /// Load a graph from a nodes TSV and an edges TSV (formats below).
    ///
    /// nodes: `id<TAB>label<TAB>f1,f2,...,fd`, header line required.
    /// edges: `src_id<TAB>relation<TAB>dst_id`, header line required.
    pub fn load(nodes_path: &Path, edges_path: &Path) -> Result<PropertyGraph> {
        Self::load_with(nodes_path, edges_path, LoadOptions::default())
    }

    pub fn load_with(
        nodes_path: &Path,
        edges_path: &Path,
        options: LoadOptions,
    ) -> Result<PropertyGraph> {
        let nodes_text = read_to_string(nodes_path)?;
        let edges_text = read_to_string(edges_path)?;
        Self::from_tsv_with(&nodes_text, &edges_text, nodes_path, edges_path, options)
    }

    /// Build from in-memory TSV text. `nodes_path`/`edges_path` are used only
    /// for error messages.
    pub fn from_tsv(nodes_text: &str, edges_text: &str) -> Result<PropertyGraph> {
        Self::from_tsv_with(
            nodes_text,
            edges_text,
            Path::new("<nodes>"),
            Path::new("<edges>"),
            LoadOptions::default(),
        )
    }

    fn from_tsv_with(
        nodes_text: &str,
        edges_text: &str,
        nodes_path: &Path,
        edges_path: &Path,
        options: LoadOptions,
    ) -> Result<PropertyGraph> {
        let mut nodes: Vec<NodeRecord> = Vec::new();
        let mut id_to_index: HashMap<String, usize> = HashMap::new();
        let mut feature_dim: Option<usize> = None;

        let mut node_lines = nodes_text.lines().enumerate();
        match node_lines.next() {
            Some((_, header)) if header.split('\t').count() == 3 => {}
            _ => {
                return Err(malformed(
                    nodes_path,
                    1,
                    "missing header line `id\\tlabel\\tfeatures`",
                ));
            }
        }
        for (i, raw) in node_lines {
            let line_no = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 3 {
                return Err(malformed(
                    nodes_path,
                    line_no,
                    &format!("expected 3 tab-separated columns, got {}", cols.len()),
                ));
            }
            let id = cols[0].trim();
            if id.is_empty() {
                return Err(malformed(nodes_path, line_no, "empty node id"));
            }
            let label = cols[1].trim();
            let label = if label.is_empty() {
                None
            } else {
                Some(label.to_string())
            };
            let mut features = Vec::new();
            for piece in cols[2].split(',') {
                let piece = piece.trim();
                if piece.is_empty() {
                    return Err(malformed(nodes_path, line_no, "empty feature value"));
                }
                let value: f64 = piece.parse().map_err(|_| {
                    malformed(
                        nodes_path,
                        line_no,
                        &format!("unparsable feature `{piece}`"),
                    )
                })?;
                if !value.is_finite() {
                    return Err(Error::NonFiniteFeature {
                        id: id.to_string(),
                        path: nodes_path.to_path_buf(),
                        line: line_no,
                    });
                }
                features.push(value);
            }
            match feature_dim {
                None => feature_dim = Some(features.len()),
                Some(d) if d != features.len() => {
                    return Err(Error::FeatureDimension {
                        id: id.to_string(),
                        got: features.len(),
                        expected: d,
                        path: nodes_path.to_path_buf(),
                        line: line_no,
                    });
                }
                Some(_) => {}
            }
            if id_to_index.contains_key(id) {
                return Err(Error::DuplicateNodeId {
                    id: id.to_string(),
                    path: nodes_path.to_path_buf(),
                    line: line_no,
                });
            }
            id_to_index.insert(id.to_string(), nodes.len());
            nodes.push(NodeRecord {
                id: id.to_string(),
                label,
                features,
            });
        }

        let mut edges: Vec<EdgeRecord> = Vec::new();
        let mut seen_triples: HashSet<(usize, String, usize)> = HashSet::new();

        let mut edge_lines = edges_text.lines().enumerate();
        match edge_lines.next() {
            Some((_, header)) if header.split('\t').count() == 3 => {}
            _ => {
                return Err(malformed(
                    edges_path,
                    1,
                    "missing header line `src_id\\trelation\\tdst_id`",
                ));
            }
        }
        for (i, raw) in edge_lines {
            let line_no = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 3 {
                return Err(malformed(
                    edges_path,
                    line_no,
                    &format!("expected 3 tab-separated columns, got {}", cols.len()),
                ));
            }
            let (src_id, relation, dst_id) = (cols[0].trim(), cols[1].trim(), cols[2].trim());
            if relation.is_empty() {
                return Err(malformed(edges_path, line_no, "empty relation"));
            }
            let src = *id_to_index
                .get(src_id)
                .ok_or_else(|| Error::DanglingEndpoint {
                    id: src_id.to_string(),
                    path: edges_path.to_path_buf(),
                    line: line_no,
                })?;
            let dst = *id_to_index
                .get(dst_id)
                .ok_or_else(|| Error::DanglingEndpoint {
                    id: dst_id.to_string(),
                    path: edges_path.to_path_buf(),
                    line: line_no,
                })?;
            if src == dst && !options.allow_self_loops {
                return Err(Error::SelfLoop {
                    id: src_id.to_string(),
                    path: edges_path.to_path_buf(),
                    line: line_no,
                });
            }
            let key = (src, relation.to_string(), dst);
            if !seen_triples.insert(key) {
                return Err(Error::DuplicateTriple {
                    src: src_id.to_string(),
                    relation: relation.to_string(),
                    dst: dst_id.to_string(),
                    path: edges_path.to_path_buf(),
                    line: line_no,
                });
            }
            edges.push(EdgeRecord {
                src,
                relation: relation.to_string(),
                dst,
            });
        }

        let adjacency = build_adjacency(nodes.len(), &edges);
        Ok(PropertyGraph {
            nodes,
            edges,
            adjacency,
            id_to_index,
            feature_dim: feature_dim.unwrap_or(0),
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn node(&self, index: usize) -> Result<&NodeRecord> {
        self.nodes.get(index).ok_or(Error::InvalidNodeIndex {
            index,
            count: self.nodes.len(),
        })
    }

    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.id_to_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNodeId { id: id.to_string() })
    }

    /// Incident `(neighbor, edge_index)` pairs of `v`, both directions, in
    /// edge-file order.
    pub fn incident(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// Distinct undirected neighbors of `v`, ascending.
    pub fn neighbor_set(&self, v: usize) -> BTreeSet<usize> {
        self.adjacency[v].iter().map(|&(u, _)| u).collect()
    }

    /// Nodes reachable from `v` within `hops` undirected steps, `v` included.
    pub fn neighbors(&self, v: usize, hops: usize) -> Result<BTreeSet<usize>> {
        if v >= self.nodes.len() {
            return Err(Error::InvalidNodeIndex {
                index: v,
                count: self.nodes.len(),
            });
        }
        let mut reached: BTreeSet<usize> = BTreeSet::new();
        let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
        reached.insert(v);
        queue.push_back((v, 0));
        while let Some((node, depth)) = queue.pop_front() {
            if depth == hops {
                continue;
            }
            for &(u, _) in &self.adjacency[node] {
                if reached.insert(u) {
                    queue.push_back((u, depth + 1));
                }
            }
        }
        Ok(reached)
    }

    /// Longest shortest path over undirected components; 1 for edgeless graphs.
    pub fn diameter(&self) -> usize {
        let mut best = 0usize;
        for start in 0..self.nodes.len() {
            let mut dist: Vec<Option<usize>> = vec![None; self.nodes.len()];
            dist[start] = Some(0);
            let mut queue = VecDeque::from([start]);
            while let Some(node) = queue.pop_front() {
                let d = dist[node].unwrap();
                for &(u, _) in &self.adjacency[node] {
                    if dist[u].is_none() {
                        dist[u] = Some(d + 1);
                        queue.push_back(u);
                    }
                }
            }
            let ecc = dist.iter().flatten().copied().max().unwrap_or(0);
            best = best.max(ecc);
        }
        best.max(1)
    }

    /// Copy of the graph with node `v`'s feature `f` set to zero.
    pub fn with_feature_zeroed(&self, v: usize, f: usize) -> Result<PropertyGraph> {
        if v >= self.nodes.len() {
            return Err(Error::InvalidNodeIndex {
                index: v,
                count: self.nodes.len(),
            });
        }
        let mut copy = self.clone();
        if f < copy.feature_dim {
            copy.nodes[v].features[f] = 0.0;
        }
        Ok(copy)
    }

    /// Copy of the graph with feature `f` zeroed on every node.
    pub fn with_feature_zeroed_everywhere(&self, f: usize) -> PropertyGraph {
        let mut copy = self.clone();
        if f < copy.feature_dim {
            for node in &mut copy.nodes {
                node.features[f] = 0.0;
            }
        }
        copy
    }

    /// Copy containing only the given edges (by edge index). Node set and
    /// indexing are preserved so embeddings stay row-aligned.
    pub fn edge_subgraph(&self, keep: &BTreeSet<usize>) -> PropertyGraph {
        let edges: Vec<EdgeRecord> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| keep.contains(i))
            .map(|(_, e)| e.clone())
            .collect();
        let adjacency = build_adjacency(self.nodes.len(), &edges);
        PropertyGraph {
            nodes: self.nodes.clone(),
            edges,
            adjacency,
            id_to_index: self.id_to_index.clone(),
            feature_dim: self.feature_dim,
        }
    }

    /// Serialize back to the TSV formats accepted by `load`.
    pub fn to_tsv(&self) -> (String, String) {
        let mut nodes_out = String::from("id\tlabel\tfeatures\n");
        for node in &self.nodes {
            let feats: Vec<String> = node.features.iter().map(|f| f.to_string()).collect();
            let _ = writeln!(
                nodes_out,
                "{}\t{}\t{}",
                node.id,
                node.label.as_deref().unwrap_or(""),
                feats.join(",")
            );
        }
        let mut edges_out = String::from("src_id\trelation\tdst_id\n");
        for edge in &self.edges {
            let _ = writeln!(
                edges_out,
                "{}\t{}\t{}",
                self.nodes[edge.src].id, edge.relation, self.nodes[edge.dst].id
            );
        }
        (nodes_out, edges_out)
    }

    pub fn save(&self, nodes_path: &Path, edges_path: &Path) -> Result<()> {
        let (nodes_out, edges_out) = self.to_tsv();
        write_string(nodes_path, &nodes_out)?;
        write_string(edges_path, &edges_out)
    }

    /// Check the structural invariants; used by tests and after deserialize.
    pub fn validate(&self) -> Result<()> {
        for edge in &self.edges {
            for endpoint in [edge.src, edge.dst] {
                if endpoint >= self.nodes.len() {
                    return Err(Error::InvalidNodeIndex {
                        index: endpoint,
                        count: self.nodes.len(),
                    });
                }
            }
        }
        let rebuilt = build_adjacency(self.nodes.len(), &self.edges);
        if rebuilt != self.adjacency {
            return Err(Error::Config {
                message: "adjacency index inconsistent with edge list".to_string(),
            });
        }
        Ok(())
    }
}

fn build_adjacency(node_count: usize, edges: &[EdgeRecord]) -> Vec<Vec<(usize, usize)>> {
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); node_count];
    for (idx, edge) in edges.iter().enumerate() {
        adjacency[edge.src].push((edge.dst, idx));
        if edge.src != edge.dst {
            adjacency[edge.dst].push((edge.src, idx));
        }
    }
    adjacency
}

fn malformed(path: &Path, line: usize, message: &str) -> Error {
    Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })
}

pub(crate) fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: PathBuf::from(parent),
                source,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })
}
