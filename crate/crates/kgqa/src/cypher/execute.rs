//! Pattern-matching executor over a property graph.
//!
//! The plan is fixed: anchor on the leftmost node pattern carrying a name
//! predicate (falling back to a label scan or full scan), then extend hop by
//! hop to the right of the anchor and finally to the left. Each undirected
//! edge may match an edge pattern in either orientation; edge variables in
//! one row are pairwise distinct (relationship uniqueness), node variables
//! may repeat unless a `<>` constraint forbids it.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lpg::{EdgeId, NodeId, PropertyGraph};

use super::ast::{NodePattern, PathQuery, VarKind};

/// A value bound to a variable in one result row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoundValue {
    Node(NodeId),
    Edge(EdgeId),
}

/// One satisfying assignment: variable name to bound node or edge.
pub type BindingRow = BTreeMap<String, BoundValue>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("unknown target variable `{0}`")]
    UnknownTargetVar(String),
    #[error("target variable `{0}` is bound to edges, not nodes")]
    NotANodeVariable(String),
}

/// All rows satisfying the query, deduplicated on the full assignment and in
/// a deterministic order (rows compare by their bound values in variable-name
/// order). An empty result is not an error.
pub fn execute(graph: &PropertyGraph, query: &PathQuery) -> Vec<BindingRow> {
    let mut rows: BTreeSet<BindingRow> = BTreeSet::new();
    let node_vars: Vec<&str> = query.node_patterns().map(|n| n.var.as_str()).collect();
    let edge_vars: Vec<&str> = query.edge_patterns().map(|e| e.var.as_str()).collect();
    for_each_match(graph, query, |nodes, edges| {
        let mut row = BindingRow::new();
        for (var, id) in node_vars.iter().zip(nodes) {
            row.insert(var.to_string(), BoundValue::Node(*id));
        }
        for (var, id) in edge_vars.iter().zip(edges) {
            row.insert(var.to_string(), BoundValue::Edge(*id));
        }
        rows.insert(row);
    });
    rows.into_iter().collect()
}

/// Count distinct nodes bound to `target_var` across all matches (`totalCnt`)
/// and how many of them fall in `target_ids` (`correctCnt`). The counts are
/// accumulated during matching without materializing rows.
pub fn aggregate_counts(
    graph: &PropertyGraph,
    query: &PathQuery,
    target_ids: &BTreeSet<NodeId>,
    target_var: &str,
) -> Result<(u64, u64), AggregateError> {
    match query.var_kind(target_var) {
        None => return Err(AggregateError::UnknownTargetVar(target_var.to_string())),
        Some(VarKind::Edge) => {
            return Err(AggregateError::NotANodeVariable(target_var.to_string()))
        }
        Some(VarKind::Node) => {}
    }
    let idx = query
        .node_patterns()
        .position(|n| n.var == target_var)
        .expect("checked above");
    let mut distinct: BTreeSet<NodeId> = BTreeSet::new();
    for_each_match(graph, query, |nodes, _| {
        distinct.insert(nodes[idx]);
    });
    let total = distinct.len() as u64;
    let correct = distinct.intersection(target_ids).count() as u64;
    Ok((correct, total))
}

/// Invoke `sink` once per satisfying assignment, passing node bindings and
/// edge bindings in pattern order. Assignments are visited exactly once but
/// in no particular order.
fn for_each_match(
    graph: &PropertyGraph,
    query: &PathQuery,
    mut sink: impl FnMut(&[NodeId], &[EdgeId]),
) {
    let nodes: Vec<&NodePattern> = query.node_patterns().collect();
    let edges: Vec<_> = query.edge_patterns().collect();
    let anchor = nodes
        .iter()
        .position(|n| n.name.is_some())
        .unwrap_or(0);

    // Precompute where-clause variable slots.
    let slot_of = |var: &str| -> Slot {
        if let Some(i) = nodes.iter().position(|n| n.var == var) {
            Slot::Node(i)
        } else {
            let i = edges
                .iter()
                .position(|e| e.var == var)
                .expect("validated query references declared variables");
            Slot::Edge(i)
        }
    };
    let wheres: Vec<(Slot, Slot)> = query
        .where_clauses()
        .iter()
        .map(|(a, b)| (slot_of(a), slot_of(b)))
        .collect();

    let mut state = MatchState {
        graph,
        nodes: &nodes,
        edges: &edges,
        wheres: &wheres,
        anchor,
        node_bind: vec![NodeId(0); nodes.len()],
        edge_bind: vec![None; edges.len()],
        sink: &mut sink,
    };

    for candidate in anchor_candidates(graph, nodes[anchor]) {
        state.node_bind[anchor] = candidate;
        state.extend_right(anchor);
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Node(usize),
    Edge(usize),
}

fn anchor_candidates(graph: &PropertyGraph, pattern: &NodePattern) -> Vec<NodeId> {
    let ids: Vec<NodeId> = match (&pattern.name, &pattern.label) {
        (Some(name), _) => graph
            .nodes_named(name)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default(),
        (None, Some(label)) => graph
            .nodes_with_label(label)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default(),
        (None, None) => graph.nodes().map(|n| n.id).collect(),
    };
    ids.into_iter()
        .filter(|id| node_matches(graph, pattern, *id))
        .collect()
}

fn node_matches(graph: &PropertyGraph, pattern: &NodePattern, id: NodeId) -> bool {
    let node = match graph.node(id) {
        Some(n) => n,
        None => return false,
    };
    if let Some(label) = &pattern.label {
        if !node.labels.contains(label) {
            return false;
        }
    }
    if let Some(name) = &pattern.name {
        if &node.name != name {
            return false;
        }
    }
    true
}

struct MatchState<'a, F: FnMut(&[NodeId], &[EdgeId])> {
    graph: &'a PropertyGraph,
    nodes: &'a [&'a NodePattern],
    edges: &'a [&'a super::ast::EdgePattern],
    wheres: &'a [(Slot, Slot)],
    anchor: usize,
    node_bind: Vec<NodeId>,
    edge_bind: Vec<Option<EdgeId>>,
    sink: &'a mut F,
}

impl<F: FnMut(&[NodeId], &[EdgeId])> MatchState<'_, F> {
    /// Fill node positions `pos+1 ..` using edge `pos`, then hand off to the
    /// leftward phase.
    fn extend_right(&mut self, pos: usize) {
        if pos + 1 == self.nodes.len() {
            self.extend_left(self.anchor);
            return;
        }
        let here = self.node_bind[pos];
        for &(eid, neighbor) in self.graph.adjacency(here) {
            if self.edge_used(eid) || !self.edge_matches(pos, eid) {
                continue;
            }
            if !node_matches(self.graph, self.nodes[pos + 1], neighbor) {
                continue;
            }
            self.edge_bind[pos] = Some(eid);
            self.node_bind[pos + 1] = neighbor;
            self.extend_right(pos + 1);
            self.edge_bind[pos] = None;
        }
    }

    /// Fill node positions `.. pos-1` using edge `pos-1`, emitting once both
    /// phases are complete.
    fn extend_left(&mut self, pos: usize) {
        if pos == 0 {
            self.emit();
            return;
        }
        let here = self.node_bind[pos];
        for &(eid, neighbor) in self.graph.adjacency(here) {
            if self.edge_used(eid) || !self.edge_matches(pos - 1, eid) {
                continue;
            }
            if !node_matches(self.graph, self.nodes[pos - 1], neighbor) {
                continue;
            }
            self.edge_bind[pos - 1] = Some(eid);
            self.node_bind[pos - 1] = neighbor;
            self.extend_left(pos - 1);
            self.edge_bind[pos - 1] = None;
        }
    }

    fn edge_used(&self, eid: EdgeId) -> bool {
        self.edge_bind.iter().any(|e| *e == Some(eid))
    }

    fn edge_matches(&self, idx: usize, eid: EdgeId) -> bool {
        match &self.edges[idx].rel_type {
            None => true,
            Some(t) => {
                self.graph
                    .edge(eid)
                    .map(|e| &e.rel_type == t)
                    .unwrap_or(false)
            }
        }
    }

    fn emit(&mut self) {
        for (a, b) in self.wheres {
            let va = self.slot_value(*a);
            let vb = self.slot_value(*b);
            if va == vb {
                return;
            }
        }
        let edges: Vec<EdgeId> = self
            .edge_bind
            .iter()
            .map(|e| e.expect("all edges bound at emit"))
            .collect();
        (self.sink)(&self.node_bind, &edges);
    }

    fn slot_value(&self, slot: Slot) -> BoundValue {
        match slot {
            Slot::Node(i) => BoundValue::Node(self.node_bind[i]),
            Slot::Edge(i) => BoundValue::Edge(self.edge_bind[i].expect("bound at emit")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cypher::parse;
    use crate::lpg::{EdgeRecord, NodeRecord};

    fn path_graph() -> PropertyGraph {
        PropertyGraph::from_records(
            vec![
                NodeRecord::new(1, &["A"], "a"),
                NodeRecord::new(2, &["B"], "b"),
            ],
            vec![EdgeRecord::new(10, 1, 2, "R")],
        )
        .unwrap()
    }

    /// Triangle a-b-c with all edges typed R, plus a parallel a-b edge so a
    /// two-hop walk can return to its source.
    fn triangle() -> PropertyGraph {
        PropertyGraph::from_records(
            vec![
                NodeRecord::new(1, &["A"], "a"),
                NodeRecord::new(2, &["A"], "b"),
                NodeRecord::new(3, &["A"], "c"),
            ],
            vec![
                EdgeRecord::new(10, 1, 2, "R"),
                EdgeRecord::new(11, 2, 3, "R"),
                EdgeRecord::new(12, 3, 1, "R"),
                EdgeRecord::new(13, 1, 2, "R"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn one_hop_from_named_anchor() {
        let g = path_graph();
        let q = parse("MATCH (src {name: \"a\"})-[r]-(tgt) RETURN nodes(tgt)").unwrap();
        let rows = execute(&g, &q);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["src"], BoundValue::Node(NodeId(1)));
        assert_eq!(rows[0]["r"], BoundValue::Edge(EdgeId(10)));
        assert_eq!(rows[0]["tgt"], BoundValue::Node(NodeId(2)));
    }

    #[test]
    fn two_hop_distinctness_excludes_returning_to_source() {
        let g = triangle();
        let with = parse(
            "MATCH (src {name: \"a\"})-[r1]-(var)-[r2]-(tgt) WHERE src <> tgt RETURN nodes(tgt)",
        )
        .unwrap();
        let without =
            parse("MATCH (src {name: \"a\"})-[r1]-(var)-[r2]-(tgt) RETURN nodes(tgt)").unwrap();
        let rows_with = execute(&g, &with);
        let rows_without = execute(&g, &without);
        assert!(rows_with
            .iter()
            .all(|r| r["tgt"] != BoundValue::Node(NodeId(1))));
        assert!(rows_without
            .iter()
            .any(|r| r["tgt"] == BoundValue::Node(NodeId(1))));
        assert!(rows_with.len() < rows_without.len());
    }

    #[test]
    fn edge_variables_are_pairwise_distinct() {
        let g = path_graph();
        // Going out and back over the same edge would need r1 == r2.
        let q = parse("MATCH (x)-[r1]-(y)-[r2]-(z) RETURN *").unwrap();
        let rows = execute(&g, &q);
        assert!(rows.is_empty());
    }

    #[test]
    fn node_variables_may_repeat_without_where() {
        let g = PropertyGraph::from_records(
            vec![
                NodeRecord::new(1, &["A"], "a"),
                NodeRecord::new(2, &["A"], "b"),
            ],
            vec![
                EdgeRecord::new(10, 1, 2, "R"),
                EdgeRecord::new(11, 1, 2, "S"),
            ],
        )
        .unwrap();
        let q = parse("MATCH (x)-[r1]-(y)-[r2]-(z) RETURN *").unwrap();
        let rows = execute(&g, &q);
        // Out over one edge and back over the other: x == z.
        assert!(rows
            .iter()
            .any(|r| r["x"] == r["z"]));
    }

    #[test]
    fn self_loop_matches_once() {
        let g = PropertyGraph::from_records(
            vec![NodeRecord::new(1, &["A"], "a")],
            vec![EdgeRecord::new(10, 1, 1, "R")],
        )
        .unwrap();
        let q = parse("MATCH (x)-[r]-(y) RETURN *").unwrap();
        let rows = execute(&g, &q);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["x"], rows[0]["y"]);
    }

    #[test]
    fn typed_filters_apply() {
        let g = PropertyGraph::from_records(
            vec![
                NodeRecord::new(1, &["A"], "a"),
                NodeRecord::new(2, &["B"], "b"),
                NodeRecord::new(3, &["C"], "c"),
            ],
            vec![
                EdgeRecord::new(10, 1, 2, "R"),
                EdgeRecord::new(11, 1, 3, "S"),
            ],
        )
        .unwrap();
        let q = parse("MATCH (src {name: \"a\"})-[r:S]-(tgt) RETURN nodes(tgt)").unwrap();
        let rows = execute(&g, &q);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["tgt"], BoundValue::Node(NodeId(3)));

        let q = parse("MATCH (src {name: \"a\"})-[r]-(tgt:B) RETURN nodes(tgt)").unwrap();
        let rows = execute(&g, &q);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0]["tgt"], BoundValue::Node(NodeId(2)));
    }

    #[test]
    fn aggregate_counts_on_empty_targets() {
        let g = triangle();
        let q = parse("MATCH (src {name: \"a\"})-[r]-(tgt) RETURN nodes(tgt)").unwrap();
        let (correct, total) = aggregate_counts(&g, &q, &BTreeSet::new(), "tgt").unwrap();
        assert_eq!(correct, 0);
        assert_eq!(total, 2);
    }

    #[test]
    fn aggregate_counts_full_containment() {
        let g = triangle();
        let q = parse("MATCH (src {name: \"a\"})-[r]-(tgt) RETURN nodes(tgt)").unwrap();
        let answers: BTreeSet<NodeId> = [NodeId(2), NodeId(3)].into_iter().collect();
        let (correct, total) = aggregate_counts(&g, &q, &answers, "tgt").unwrap();
        assert_eq!((correct, total), (2, 2));
    }

    #[test]
    fn aggregate_counts_rejects_unknown_and_edge_vars() {
        let g = triangle();
        let q = parse("MATCH (src {name: \"a\"})-[r]-(tgt) RETURN nodes(tgt)").unwrap();
        assert_eq!(
            aggregate_counts(&g, &q, &BTreeSet::new(), "ghost").unwrap_err(),
            AggregateError::UnknownTargetVar("ghost".to_string())
        );
        assert_eq!(
            aggregate_counts(&g, &q, &BTreeSet::new(), "r").unwrap_err(),
            AggregateError::NotANodeVariable("r".to_string())
        );
    }

    #[test]
    fn rows_are_deduplicated_and_sorted() {
        let g = triangle();
        let q = parse("MATCH (x)-[r]-(y) RETURN *").unwrap();
        let rows = execute(&g, &q);
        // 4 edges, each in two orientations.
        assert_eq!(rows.len(), 8);
        let mut sorted = rows.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(rows, sorted);
    }
}
