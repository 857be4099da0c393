//! Budgeted subgraph retrieval from ranked queries, prompt textualization,
//! answer ranking, and evaluation metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cypher::{execute, BindingRow, BoundValue, PathQuery};
use crate::lpg::{NodeId, PropertyGraph};

/// One retrieved candidate node with the grounded pattern strings that
/// matched it and the rank of the first query that reached it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateNode {
    pub node_id: NodeId,
    pub patterns: Vec<String>,
    pub source_query_rank: usize,
}

/// Candidates accumulated while executing ranked queries, capped at
/// `node_budget` distinct nodes. A node reached by several queries (or by
/// several rows of one query) accumulates all of its distinct patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievedSubgraph {
    pub candidates: Vec<CandidateNode>,
    pub node_budget: usize,
}

impl RetrievedSubgraph {
    pub fn contains(&self, id: NodeId) -> bool {
        self.candidates.iter().any(|c| c.node_id == id)
    }
}

/// Ranked answer node ids for one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedAnswers {
    pub id: String,
    pub ranked: Vec<NodeId>,
}

/// Aggregate evaluation metrics over a question set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hit1: f64,
    pub hit5: f64,
    pub recall20: f64,
    pub mrr: f64,
    pub n: usize,
    /// Questions dropped because their gold set was empty.
    #[serde(skip)]
    pub skipped_empty_gold: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RetrieveError {
    #[error("selector returned node {0} which is not among the candidates")]
    SelectorUnknownId(NodeId),
    #[error("selector returned node {0} more than once")]
    SelectorDuplicateId(NodeId),
    #[error("no gold answers for question `{0}`")]
    MissingGold(String),
    #[error("question `{question}` ranks node {node} more than once")]
    DuplicateRankedId { question: String, node: NodeId },
}

/// Execute queries in rank order, appending distinct target-variable nodes
/// until the budget is reached. Later queries no longer add nodes once the
/// budget is full, but they still contribute pattern strings to nodes that
/// are already in.
pub fn retrieve_subgraph(
    graph: &PropertyGraph,
    ranked_queries: &[(PathQuery, f64)],
    budget: usize,
) -> RetrievedSubgraph {
    let mut candidates: Vec<CandidateNode> = Vec::new();
    let mut index: BTreeMap<NodeId, usize> = BTreeMap::new();
    for (rank, (query, _)) in ranked_queries.iter().enumerate() {
        let target = query.target_var();
        for row in execute(graph, query) {
            let node_id = match row.get(target) {
                Some(BoundValue::Node(id)) => *id,
                _ => continue,
            };
            let pattern = grounded_pattern(graph, query, &row);
            match index.get(&node_id) {
                Some(&i) => {
                    if !candidates[i].patterns.contains(&pattern) {
                        candidates[i].patterns.push(pattern);
                    }
                }
                None if candidates.len() < budget => {
                    index.insert(node_id, candidates.len());
                    candidates.push(CandidateNode {
                        node_id,
                        patterns: vec![pattern],
                        source_query_rank: rank,
                    });
                }
                None => {}
            }
        }
    }
    RetrievedSubgraph {
        candidates,
        node_budget: budget,
    }
}

/// Render the path a row matched as a fully grounded pattern: variables
/// renamed to `x1, r1, x2, ...`, every node pinned by label and name, every
/// edge by its concrete relationship type. The result parses back under the
/// pattern grammar and re-binds the same nodes.
fn grounded_pattern(graph: &PropertyGraph, query: &PathQuery, row: &BindingRow) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    for (i, np) in query.node_patterns().enumerate() {
        if i > 0 {
            let ep = query
                .edge_patterns()
                .nth(i - 1)
                .expect("edge before every non-initial node");
            let rel = match row.get(&ep.var) {
                Some(BoundValue::Edge(eid)) => graph
                    .edge(*eid)
                    .map(|e| e.rel_type.clone())
                    .unwrap_or_default(),
                _ => ep.rel_type.clone().unwrap_or_default(),
            };
            write!(out, "-[r{i}:{rel}]-").unwrap();
        }
        let node = match row.get(&np.var) {
            Some(BoundValue::Node(id)) => graph.node(*id),
            _ => None,
        };
        let label = np
            .label
            .clone()
            .or_else(|| node.and_then(|n| n.labels.iter().next().cloned()))
            .unwrap_or_default();
        let name = node.map(|n| n.name.as_str()).unwrap_or_default();
        write!(
            out,
            "(x{}:{} {{name: \"{}\"}})",
            i + 1,
            label,
            crate::cypher::escape_name(name)
        )
        .unwrap();
    }
    out
}

/// Answer-selector contract: order the retrieved candidates, best first. The
/// returned ids must be drawn from the candidates, without duplicates.
pub trait AnswerSelector {
    fn rank(&self, subgraph: &RetrievedSubgraph) -> Vec<NodeId>;
}

/// Deterministic reference selector: most distinct patterns first, then the
/// earliest source query rank, then ascending node id.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceSelector;

impl AnswerSelector for ReferenceSelector {
    fn rank(&self, subgraph: &RetrievedSubgraph) -> Vec<NodeId> {
        let mut order: Vec<&CandidateNode> = subgraph.candidates.iter().collect();
        order.sort_by(|a, b| {
            b.patterns
                .len()
                .cmp(&a.patterns.len())
                .then(a.source_query_rank.cmp(&b.source_query_rank))
                .then(a.node_id.cmp(&b.node_id))
        });
        order.into_iter().map(|c| c.node_id).collect()
    }
}

/// Run a selector over the subgraph and validate its output against the
/// candidate set.
pub fn rank_answers(
    question_id: &str,
    subgraph: &RetrievedSubgraph,
    selector: &dyn AnswerSelector,
) -> Result<RankedAnswers, RetrieveError> {
    let ranked = selector.rank(subgraph);
    let mut seen = BTreeSet::new();
    for id in &ranked {
        if !subgraph.contains(*id) {
            return Err(RetrieveError::SelectorUnknownId(*id));
        }
        if !seen.insert(*id) {
            return Err(RetrieveError::SelectorDuplicateId(*id));
        }
    }
    Ok(RankedAnswers {
        id: question_id.to_string(),
        ranked,
    })
}

/// Serialize the subgraph into the retrieval prompt: a header naming the
/// question, then one block per candidate listing its patterns, name, and
/// selected property details. Output is truncated at `max_chars` only on
/// candidate-block boundaries.
pub fn textualize(
    subgraph: &RetrievedSubgraph,
    graph: &PropertyGraph,
    question: &str,
    detail_keys: Option<&[String]>,
    max_chars: usize,
) -> String {
    let mut out = format!(
        "Given the information below, return the correct nodes for the following question: {question}\nRetrieved information:\n"
    );
    for (i, cand) in subgraph.candidates.iter().enumerate() {
        let block = candidate_block(cand, graph, detail_keys);
        let sep = if i == 0 { "" } else { "\n" };
        if out.len() + sep.len() + block.len() > max_chars {
            break;
        }
        out.push_str(sep);
        out.push_str(&block);
    }
    out
}

fn candidate_block(
    cand: &CandidateNode,
    graph: &PropertyGraph,
    detail_keys: Option<&[String]>,
) -> String {
    let patterns = cand
        .patterns
        .iter()
        .map(|p| format!("'{}'", escape_single_quoted(p)))
        .collect::<Vec<_>>()
        .join(", ");
    let node = graph.node(cand.node_id);
    let name = node.map(|n| n.name.as_str()).unwrap_or_default();
    let mut details: Vec<String> = Vec::new();
    if let Some(node) = node {
        let keys: Vec<&String> = match detail_keys {
            Some(keys) => keys
                .iter()
                .filter(|k| node.properties.contains_key(*k))
                .collect(),
            None => node.properties.keys().collect(),
        };
        for key in keys {
            let value = &node.properties[key];
            let rendered = match value {
                serde_json::Value::String(s) => {
                    format!("'{}'", escape_single_quoted(&truncate_chars(s, 500)))
                }
                other => serde_json::to_string(other).unwrap_or_default(),
            };
            details.push(format!("'{}': {}", escape_single_quoted(key), rendered));
        }
    }
    format!(
        "pattern: [{patterns}]\nname: {name}\ndetails: {{{}}}\n",
        details.join(", ")
    )
}

fn escape_single_quoted(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\'', "\\'")
}

fn truncate_chars(s: &str, limit: usize) -> String {
    if s.chars().count() <= limit {
        s.to_string()
    } else {
        let mut out: String = s.chars().take(limit).collect();
        out.push_str("...");
        out
    }
}

/// Compute Hit@1, Hit@5, Recall@20, and MRR over predictions. Every
/// prediction must have a gold entry; questions whose gold set is empty are
/// skipped (counted in `skipped_empty_gold`) rather than scored.
pub fn compute_metrics(
    predictions: &[RankedAnswers],
    gold: &BTreeMap<String, BTreeSet<NodeId>>,
) -> Result<MetricsReport, RetrieveError> {
    let mut n = 0usize;
    let mut skipped = 0usize;
    let mut hit1 = 0.0;
    let mut hit5 = 0.0;
    let mut recall20 = 0.0;
    let mut mrr = 0.0;
    for pred in predictions {
        let answers = gold
            .get(&pred.id)
            .ok_or_else(|| RetrieveError::MissingGold(pred.id.clone()))?;
        let mut seen = BTreeSet::new();
        for id in &pred.ranked {
            if !seen.insert(*id) {
                return Err(RetrieveError::DuplicateRankedId {
                    question: pred.id.clone(),
                    node: *id,
                });
            }
        }
        if answers.is_empty() {
            skipped += 1;
            continue;
        }
        n += 1;
        let first_gold_rank = pred
            .ranked
            .iter()
            .position(|id| answers.contains(id))
            .map(|p| p + 1);
        if let Some(rank) = first_gold_rank {
            if rank <= 1 {
                hit1 += 1.0;
            }
            if rank <= 5 {
                hit5 += 1.0;
            }
            mrr += 1.0 / rank as f64;
        }
        let top20_hits = pred
            .ranked
            .iter()
            .take(20)
            .filter(|id| answers.contains(id))
            .count();
        recall20 += top20_hits as f64 / answers.len() as f64;
    }
    let denom = n.max(1) as f64;
    Ok(MetricsReport {
        hit1: hit1 / denom,
        hit5: hit5 / denom,
        recall20: recall20 / denom,
        mrr: mrr / denom,
        n,
        skipped_empty_gold: skipped,
    })
}
