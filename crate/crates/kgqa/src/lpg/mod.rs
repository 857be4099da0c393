//! In-memory labeled property graph store.
//!
//! Nodes and edges carry label/type strings and free-form key/value
//! properties. The store keeps a label index, an exact-name index, an
//! undirected adjacency view, and (optionally) one embedding vector per node
//! for cosine-similarity entity grounding. The graph is immutable once built,
//! so it is safe to share across reader threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::mix;

mod load;
pub use load::{read_embedding_matrix, write_embedding_matrix};

/// Identifier of a node. Node and edge ids live in separate spaces.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u64);

/// Identifier of an edge.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A node: one or more labels, a required non-empty `name`, arbitrary
/// properties, and an optional embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub labels: BTreeSet<String>,
    pub name: String,
    pub properties: BTreeMap<String, Value>,
    pub embedding: Option<Vec<f32>>,
}

impl NodeRecord {
    pub fn new(id: u64, labels: &[&str], name: &str) -> Self {
        NodeRecord {
            id: NodeId(id),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            name: name.to_string(),
            properties: BTreeMap::new(),
            embedding: None,
        }
    }

    pub fn with_embedding(mut self, embedding: Vec<f32>) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn with_property(mut self, key: &str, value: Value) -> Self {
        self.properties.insert(key.to_string(), value);
        self
    }
}

/// An edge between two nodes with a non-empty relationship type.
///
/// Storage keeps the `(src, dst)` orientation from the input, but traversal,
/// pattern matching, and schema extraction all treat edges as undirected.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub rel_type: String,
    pub properties: BTreeMap<String, Value>,
}

impl EdgeRecord {
    pub fn new(id: u64, src: u64, dst: u64, rel_type: &str) -> Self {
        EdgeRecord {
            id: EdgeId(id),
            src: NodeId(src),
            dst: NodeId(dst),
            rel_type: rel_type.to_string(),
            properties: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("duplicate node id {0}")]
    DuplicateNodeId(NodeId),
    #[error("duplicate edge id {0}")]
    DuplicateEdgeId(EdgeId),
    #[error("edge {edge} references missing node id {node}")]
    DanglingEndpoint { edge: EdgeId, node: NodeId },
    #[error("node {0} has no labels")]
    MissingLabels(NodeId),
    #[error("node {0} has an empty name")]
    EmptyName(NodeId),
    #[error("edge {0} has an empty relationship type")]
    EmptyRelType(EdgeId),
    #[error("node {node}: embedding dimension {got} does not match graph dimension {expected}")]
    EmbeddingDimMismatch {
        node: NodeId,
        expected: usize,
        got: usize,
    },
    #[error("query vector has dimension {got}, graph embeddings have dimension {expected}")]
    QueryDimMismatch { expected: usize, got: usize },
    #[error("entity name is empty")]
    EmptyEntityName,
    #[error("{file} line {line}: {message}")]
    Malformed {
        file: &'static str,
        line: usize,
        message: String,
    },
    #[error("embedding matrix: {0}")]
    Matrix(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Schema extracted from a graph: observed labels, relationship types, and
/// the label/type/label connection triples witnessed by at least one edge.
/// The label pair in a triple is unordered; triples are stored with the
/// lexicographically smaller label first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SchemaSummary {
    pub node_labels: BTreeSet<String>,
    pub rel_types: BTreeSet<String>,
    pub connection_triples: BTreeSet<(String, String, String)>,
    pub property_keys: BTreeMap<String, BTreeSet<String>>,
}

impl SchemaSummary {
    /// All `(rel-type, neighbor-label)` pairs reachable from `label` through
    /// some connection triple.
    pub fn partners(&self, label: &str) -> BTreeSet<(String, String)> {
        let mut out = BTreeSet::new();
        for (a, rel, b) in &self.connection_triples {
            if a == label {
                out.insert((rel.clone(), b.clone()));
            }
            if b == label {
                out.insert((rel.clone(), a.clone()));
            }
        }
        out
    }
}

/// Text-embedding contract used for entity grounding when an exact name
/// lookup fails.
pub trait TextEmbedder {
    fn embed(&self, text: &str) -> Vec<f32>;
}

/// Deterministic reference embedder: hashed character trigrams of the
/// lowercased text, signed counts folded into `dim` buckets. Similar strings
/// (e.g. misspellings) share most trigrams and land close in cosine space.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashEmbedder { dim, seed }
    }
}

impl TextEmbedder for HashEmbedder {
    fn embed(&self, text: &str) -> Vec<f32> {
        let mut v = vec![0.0f32; self.dim];
        let padded = format!(" {} ", text.to_lowercase());
        let bytes = padded.as_bytes();
        for w in bytes.windows(3) {
            let h = mix::hash_bytes(self.seed, w);
            let idx = (h % self.dim as u64) as usize;
            if h >> 63 == 1 {
                v[idx] += 1.0;
            } else {
                v[idx] -= 1.0;
            }
        }
        v
    }
}

/// The graph store. Built once via [`PropertyGraph::from_records`] or the
/// JSONL loaders, then read-only.
#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    nodes: BTreeMap<NodeId, NodeRecord>,
    edges: BTreeMap<EdgeId, EdgeRecord>,
    label_index: BTreeMap<String, BTreeSet<NodeId>>,
    name_index: BTreeMap<String, BTreeSet<NodeId>>,
    adjacency: BTreeMap<NodeId, Vec<(EdgeId, NodeId)>>,
    embedding_dim: Option<usize>,
}

impl PropertyGraph {
    /// Build a graph from in-memory records, validating all invariants:
    /// unique ids, non-empty names/labels/types, endpoints present, and a
    /// single embedding dimension across the graph.
    pub fn from_records(
        nodes: impl IntoIterator<Item = NodeRecord>,
        edges: impl IntoIterator<Item = EdgeRecord>,
    ) -> Result<Self, GraphError> {
        let mut g = PropertyGraph::default();
        for node in nodes {
            g.insert_node(node)?;
        }
        for edge in edges {
            g.insert_edge(edge)?;
        }
        for adj in g.adjacency.values_mut() {
            adj.sort();
        }
        Ok(g)
    }

    fn insert_node(&mut self, node: NodeRecord) -> Result<(), GraphError> {
        if node.labels.is_empty() {
            return Err(GraphError::MissingLabels(node.id));
        }
        if node.name.is_empty() {
            return Err(GraphError::EmptyName(node.id));
        }
        if let Some(e) = &node.embedding {
            match self.embedding_dim {
                None => self.embedding_dim = Some(e.len()),
                Some(d) if d != e.len() => {
                    return Err(GraphError::EmbeddingDimMismatch {
                        node: node.id,
                        expected: d,
                        got: e.len(),
                    })
                }
                Some(_) => {}
            }
        }
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateNodeId(node.id));
        }
        for label in &node.labels {
            self.label_index
                .entry(label.clone())
                .or_default()
                .insert(node.id);
        }
        self.name_index
            .entry(node.name.clone())
            .or_default()
            .insert(node.id);
        self.adjacency.entry(node.id).or_default();
        self.nodes.insert(node.id, node);
        Ok(())
    }

    fn insert_edge(&mut self, edge: EdgeRecord) -> Result<(), GraphError> {
        if edge.rel_type.is_empty() {
            return Err(GraphError::EmptyRelType(edge.id));
        }
        for endpoint in [edge.src, edge.dst] {
            if !self.nodes.contains_key(&endpoint) {
                return Err(GraphError::DanglingEndpoint {
                    edge: edge.id,
                    node: endpoint,
                });
            }
        }
        if self.edges.contains_key(&edge.id) {
            return Err(GraphError::DuplicateEdgeId(edge.id));
        }
        self.adjacency
            .entry(edge.src)
            .or_default()
            .push((edge.id, edge.dst));
        if edge.src != edge.dst {
            self.adjacency
                .entry(edge.dst)
                .or_default()
                .push((edge.id, edge.src));
        }
        self.edges.insert(edge.id, edge);
        Ok(())
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&EdgeRecord> {
        self.edges.get(&id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> impl Iterator<Item = &EdgeRecord> {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected adjacency of a node: `(edge id, neighbor id)` pairs, sorted.
    /// A self-loop appears once.
    pub fn adjacency(&self, id: NodeId) -> &[(EdgeId, NodeId)] {
        self.adjacency.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nodes_with_label(&self, label: &str) -> Option<&BTreeSet<NodeId>> {
        self.label_index.get(label)
    }

    pub fn nodes_named(&self, name: &str) -> Option<&BTreeSet<NodeId>> {
        self.name_index.get(name)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.label_index.keys().map(String::as_str)
    }

    /// Total number of (node, label) assignments across the label index.
    pub fn label_assignment_count(&self) -> usize {
        self.label_index.values().map(BTreeSet::len).sum()
    }

    /// Embedding dimension shared by all embedded nodes, if any node carries
    /// an embedding.
    pub fn embedding_dim(&self) -> Option<usize> {
        self.embedding_dim
    }

    pub fn embedded_node_count(&self) -> usize {
        self.nodes
            .values()
            .filter(|n| n.embedding.is_some())
            .count()
    }

    /// Exact k-nearest-neighbor search by cosine similarity over all embedded
    /// nodes (exhaustive scan). Results are sorted by descending score, ties
    /// broken by ascending node id; at most `min(k, #embedded)` entries.
    ///
    /// Cosine against a zero-norm vector is defined as −1 so such pairs sort
    /// last instead of propagating NaN.
    pub fn knn_nodes(&self, query: &[f32], k: usize) -> Result<Vec<(NodeId, f64)>, GraphError> {
        let dim = self.embedding_dim.ok_or(GraphError::QueryDimMismatch {
            expected: 0,
            got: query.len(),
        })?;
        if query.len() != dim {
            return Err(GraphError::QueryDimMismatch {
                expected: dim,
                got: query.len(),
            });
        }
        let mut scored: Vec<(NodeId, f64)> = self
            .nodes
            .values()
            .filter_map(|n| {
                n.embedding
                    .as_ref()
                    .map(|e| (n.id, cosine_similarity(query, e)))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }

    /// Ground an entity mention to node ids. An exact name-index hit wins and
    /// the embedder is never invoked; otherwise the mention is embedded and
    /// the top-k nodes by cosine similarity are returned. With neither an
    /// exact match nor any stored embeddings the result is empty.
    pub fn resolve_entity(
        &self,
        name: &str,
        k: usize,
        embedder: &dyn TextEmbedder,
    ) -> Result<Vec<NodeId>, GraphError> {
        if name.is_empty() {
            return Err(GraphError::EmptyEntityName);
        }
        if let Some(ids) = self.name_index.get(name) {
            return Ok(ids.iter().copied().collect());
        }
        if self.embedding_dim.is_none() {
            return Ok(Vec::new());
        }
        let query = embedder.embed(name);
        let hits = self.knn_nodes(&query, k)?;
        Ok(hits.into_iter().map(|(id, _)| id).collect())
    }

    /// Extract the schema witnessed by this graph. Every connection triple is
    /// backed by at least one edge; iteration order is sorted.
    pub fn extract_schema(&self) -> SchemaSummary {
        let mut schema = SchemaSummary::default();
        for node in self.nodes.values() {
            for label in &node.labels {
                schema.node_labels.insert(label.clone());
                let keys = schema.property_keys.entry(label.clone()).or_default();
                keys.insert("name".to_string());
                keys.extend(node.properties.keys().cloned());
            }
        }
        for edge in self.edges.values() {
            schema.rel_types.insert(edge.rel_type.clone());
            let src = &self.nodes[&edge.src];
            let dst = &self.nodes[&edge.dst];
            for a in &src.labels {
                for b in &dst.labels {
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    schema.connection_triples.insert((
                        lo.clone(),
                        edge.rel_type.clone(),
                        hi.clone(),
                    ));
                }
            }
        }
        schema
    }
}

fn cosine_similarity(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.iter().zip(b.iter()) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return -1.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}
