//! Graph IO: JSONL node/edge files and the binary embedding matrix format.
//!
//! Node lines: `{"id": int, "labels": [str], "name": str, "properties": {..},
//! "embedding": [float]?}`. Edge lines: `{"id": int, "src": int, "dst": int,
//! "type": str, "properties": {..}}`. The embedding matrix is an alternative
//! to inline vectors: a header of two little-endian u64s (row count,
//! dimension) followed by row-major little-endian f32s, one row per node in
//! ascending node-id order.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EdgeId, EdgeRecord, GraphError, NodeId, NodeRecord, PropertyGraph};

#[derive(Serialize, Deserialize)]
struct NodeLine {
    id: u64,
    labels: Vec<String>,
    name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    properties: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f32>>,
}

#[derive(Serialize, Deserialize)]
struct EdgeLine {
    id: u64,
    src: u64,
    dst: u64,
    #[serde(rename = "type")]
    rel_type: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    properties: BTreeMap<String, Value>,
}

fn parse_lines<T, R>(reader: R, file: &'static str) -> Result<Vec<T>, GraphError>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| GraphError::Malformed {
            file,
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

impl PropertyGraph {
    /// Load a graph from node and edge JSONL streams. Blank lines are
    /// ignored; any malformed line is reported with its 1-based line number.
    pub fn load_jsonl(
        nodes: impl BufRead,
        edges: impl BufRead,
    ) -> Result<PropertyGraph, GraphError> {
        let node_lines: Vec<NodeLine> = parse_lines(nodes, "nodes")?;
        let edge_lines: Vec<EdgeLine> = parse_lines(edges, "edges")?;
        let nodes = node_lines.into_iter().map(|n| NodeRecord {
            id: NodeId(n.id),
            labels: n.labels.into_iter().collect(),
            name: n.name,
            properties: n.properties,
            embedding: n.embedding,
        });
        let edges = edge_lines.into_iter().map(|e| EdgeRecord {
            id: EdgeId(e.id),
            src: NodeId(e.src),
            dst: NodeId(e.dst),
            rel_type: e.rel_type,
            properties: e.properties,
        });
        PropertyGraph::from_records(nodes, edges)
    }

    pub fn load_paths(nodes: &Path, edges: &Path) -> Result<PropertyGraph, GraphError> {
        let nodes = BufReader::new(std::fs::File::open(nodes)?);
        let edges = BufReader::new(std::fs::File::open(edges)?);
        PropertyGraph::load_jsonl(nodes, edges)
    }

    /// Attach embeddings from a binary matrix, replacing any inline vectors.
    /// The matrix must have exactly one row per node.
    pub fn attach_embedding_matrix(&mut self, reader: impl Read) -> Result<(), GraphError> {
        let rows = read_embedding_matrix(reader)?;
        if rows.len() != self.nodes.len() {
            return Err(GraphError::Matrix(format!(
                "row count {} does not match node count {}",
                rows.len(),
                self.nodes.len()
            )));
        }
        let dim = rows.first().map(Vec::len);
        for (node, row) in self.nodes.values_mut().zip(rows) {
            node.embedding = Some(row);
        }
        self.embedding_dim = dim;
        Ok(())
    }

    /// Write nodes back out in the JSONL format accepted by the loaders.
    pub fn write_nodes_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for node in self.nodes.values() {
            let line = NodeLine {
                id: node.id.0,
                labels: node.labels.iter().cloned().collect(),
                name: node.name.clone(),
                properties: node.properties.clone(),
                embedding: node.embedding.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_edges_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for edge in self.edges.values() {
            let line = EdgeLine {
                id: edge.id.0,
                src: edge.src.0,
                dst: edge.dst.0,
                rel_type: edge.rel_type.clone(),
                properties: edge.properties.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Read a binary embedding matrix: `u64 rows, u64 dim` header then
/// `rows * dim` little-endian f32s, with no trailing bytes.
pub fn read_embedding_matrix(mut reader: impl Read) -> Result<Vec<Vec<f32>>, GraphError> {
    let mut header = [0u8; 16];
    reader
        .read_exact(&mut header)
        .map_err(|_| GraphError::Matrix("truncated header".to_string()))?;
    let rows = u64::from_le_bytes(header[..8].try_into().unwrap());
    let dim = u64::from_le_bytes(header[8..].try_into().unwrap());
    if rows > 0 && dim == 0 {
        return Err(GraphError::Matrix("zero embedding dimension".to_string()));
    }
    let count = rows
        .checked_mul(dim)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| GraphError::Matrix("matrix size overflows".to_string()))?;
    // Guard against absurd headers before allocating.
    const MAX_BYTES: usize = 1 << 32;
    if count > MAX_BYTES {
        return Err(GraphError::Matrix(format!(
            "matrix of {count} bytes exceeds the supported size"
        )));
    }
    let mut data = vec![0u8; count];
    reader
        .read_exact(&mut data)
        .map_err(|_| GraphError::Matrix("truncated matrix data".to_string()))?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(GraphError::Matrix("trailing bytes after matrix".to_string()));
    }
    let dim = dim as usize;
    let mut out = Vec::with_capacity(rows as usize);
    for row in data.chunks_exact(4 * dim.max(1)).take(rows as usize) {
        let mut v = Vec::with_capacity(dim);
        for c in row.chunks_exact(4) {
            v.push(f32::from_le_bytes(c.try_into().unwrap()));
        }
        out.push(v);
    }
    if dim == 0 {
        out = vec![Vec::new(); rows as usize];
    }
    Ok(out)
}

/// Write an embedding matrix in the binary format read back by
/// [`read_embedding_matrix`]. All rows must share one dimension.
pub fn write_embedding_matrix(mut w: impl Write, rows: &[Vec<f32>]) -> std::io::Result<()> {
    let dim = rows.first().map(Vec::len).unwrap_or(0);
    assert!(
        rows.iter().all(|r| r.len() == dim),
        "all rows must share one dimension"
    );
    w.write_all(&(rows.len() as u64).to_le_bytes())?;
    w.write_all(&(dim as u64).to_le_bytes())?;
    for row in rows {
        for x in row {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODES: &str = r#"{"id": 1, "labels": ["Drug"], "name": "Ivermectin"}
{"id": 2, "labels": ["Disease"], "name": "strongyloidiasis", "properties": {"description": "parasitic"}}
"#;
    const EDGES: &str = r#"{"id": 10, "src": 1, "dst": 2, "type": "INDICATION"}
"#;

    #[test]
    fn load_minimal_jsonl() {
        let g = PropertyGraph::load_jsonl(NODES.as_bytes(), EDGES.as_bytes()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(
            g.node(NodeId(2)).unwrap().properties["description"],
            Value::String("parasitic".to_string())
        );
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let nodes = "{\"id\": 1, \"labels\": [\"A\"], \"name\": \"a\"}\nnot json\n";
        let err = PropertyGraph::load_jsonl(nodes.as_bytes(), "".as_bytes()).unwrap_err();
        match err {
            GraphError::Malformed { file, line, .. } => {
                assert_eq!(file, "nodes");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn jsonl_round_trip_preserves_graph() {
        let g = PropertyGraph::load_jsonl(NODES.as_bytes(), EDGES.as_bytes()).unwrap();
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        g.write_nodes_jsonl(&mut nodes).unwrap();
        g.write_edges_jsonl(&mut edges).unwrap();
        let g2 = PropertyGraph::load_jsonl(nodes.as_slice(), edges.as_slice()).unwrap();
        assert_eq!(g.node_count(), g2.node_count());
        for n in g.nodes() {
            assert_eq!(Some(n), g2.node(n.id));
        }
        for e in g.edges() {
            assert_eq!(Some(e), g2.edge(e.id));
        }
    }

    #[test]
    fn matrix_round_trip() {
        let rows = vec![vec![1.0f32, -2.5], vec![0.0, 3.25]];
        let mut buf = Vec::new();
        write_embedding_matrix(&mut buf, &rows).unwrap();
        assert_eq!(read_embedding_matrix(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn matrix_rejects_truncation_and_trailing() {
        let rows = vec![vec![1.0f32, 2.0]];
        let mut buf = Vec::new();
        write_embedding_matrix(&mut buf, &rows).unwrap();
        assert!(read_embedding_matrix(&buf[..buf.len() - 1]).is_err());
        buf.push(0);
        assert!(read_embedding_matrix(buf.as_slice()).is_err());
    }

    #[test]
    fn attach_matrix_requires_row_per_node() {
        let mut g = PropertyGraph::load_jsonl(NODES.as_bytes(), EDGES.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_embedding_matrix(&mut buf, &[vec![1.0f32]]).unwrap();
        assert!(g.attach_embedding_matrix(buf.as_slice()).is_err());

        let mut buf = Vec::new();
        write_embedding_matrix(&mut buf, &[vec![1.0f32, 0.0], vec![0.0, 1.0]]).unwrap();
        g.attach_embedding_matrix(buf.as_slice()).unwrap();
        assert_eq!(g.embedding_dim(), Some(2));
        assert_eq!(g.node(NodeId(1)).unwrap().embedding, Some(vec![1.0, 0.0]));
    }
}
