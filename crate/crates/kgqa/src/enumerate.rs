//! Schema-driven enumeration of candidate queries around resolved entities,
//! execution-based scoring against gold answers, and training-pair synthesis.
//!
//! Three path templates are generated per question: all 1-hop and 2-hop
//! neighborhoods of each entity and all length-two paths connecting each
//! entity pair. Typed variants are derived from the schema's connection
//! triples, so a typed candidate can fail only by returning nothing, never by
//! referencing a label or relationship type the graph does not have. The
//! untyped variant of each template is always included.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cypher::{
    aggregate_counts, EdgePattern, NodePattern, PathPattern, PathQuery, ReturnSpec,
};
use crate::lpg::{NodeId, PropertyGraph, SchemaSummary};

/// Which path template a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateKind {
    OneHop,
    TwoHop,
    Connecting,
}

/// The templates to enumerate. Defaults to all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub one_hop: bool,
    pub two_hop: bool,
    pub connecting: bool,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            one_hop: true,
            two_hop: true,
            connecting: true,
        }
    }
}

impl TemplateSet {
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, EnumerateError> {
        let mut set = TemplateSet {
            one_hop: false,
            two_hop: false,
            connecting: false,
        };
        for name in names {
            match name.as_ref() {
                "one-hop" => set.one_hop = true,
                "two-hop" => set.two_hop = true,
                "connecting" => set.connecting = true,
                other => return Err(EnumerateError::UnknownTemplate(other.to_string())),
            }
        }
        Ok(set)
    }

    fn enabled(&self, kind: TemplateKind) -> bool {
        match kind {
            TemplateKind::OneHop => self.one_hop,
            TemplateKind::TwoHop => self.two_hop,
            TemplateKind::Connecting => self.connecting,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("entity id {0} is not in the graph")]
    UnknownEntity(NodeId),
    #[error("unknown template `{0}` (expected one-hop, two-hop, or connecting)")]
    UnknownTemplate(String),
    #[error("no candidates to select from")]
    EmptyCandidates,
}

/// One candidate query and the template it was instantiated from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub query: PathQuery,
    pub template: TemplateKind,
}

/// All candidates enumerated for one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub question_id: String,
    pub entities: Vec<NodeId>,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn query_texts(&self) -> Vec<String> {
        self.candidates.iter().map(|c| c.query.to_string()).collect()
    }
}

/// A candidate with its execution aggregates against a gold answer set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub query: PathQuery,
    pub template: TemplateKind,
    pub correct_cnt: u64,
    pub total_cnt: u64,
    /// `correct / |answers|`, 0 when the answer set is empty.
    pub recall: f64,
    /// `correct / total`, 0 when the query matched nothing.
    pub precision: f64,
}

/// One emitted question/query training pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub id: String,
    pub question: String,
    pub cypher: String,
    pub recall: f64,
    pub precision: f64,
    pub total: u64,
}

/// A question record: `{"id", "question", "entities"?, "answer_ids"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRecord {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<Vec<String>>,
    pub answer_ids: Vec<NodeId>,
}

/// Enumerate every template instantiation around the given entities:
/// per entity all 1-hop and 2-hop queries (typed per schema plus the untyped
/// variant), and per unordered entity pair all length-two connecting queries.
/// Duplicates are removed; order is deterministic.
pub fn enumerate_candidates(
    schema: &SchemaSummary,
    graph: &PropertyGraph,
    entity_ids: &[NodeId],
    templates: TemplateSet,
    question_id: &str,
) -> Result<CandidateSet, EnumerateError> {
    let mut entities: Vec<NodeId> = Vec::new();
    for &id in entity_ids {
        if graph.node(id).is_none() {
            return Err(EnumerateError::UnknownEntity(id));
        }
        if !entities.contains(&id) {
            entities.push(id);
        }
    }

    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut add = |query: PathQuery, template: TemplateKind| {
        if seen.insert(query.to_string()) {
            candidates.push(Candidate { query, template });
        }
    };

    for &entity in &entities {
        let node = graph.node(entity).expect("checked above");
        let name = node.name.as_str();
        if templates.enabled(TemplateKind::OneHop) {
            add(one_hop(name, None, None), TemplateKind::OneHop);
            let mut typed: Vec<PathQuery> = Vec::new();
            for label in &node.labels {
                for (rel, neighbor) in schema.partners(label) {
                    typed.push(one_hop(name, Some(&rel), Some(&neighbor)));
                }
            }
            for q in sorted_unique(typed) {
                add(q, TemplateKind::OneHop);
            }
        }
        if templates.enabled(TemplateKind::TwoHop) {
            add(two_hop(name, None, None, None, None), TemplateKind::TwoHop);
            let mut typed: Vec<PathQuery> = Vec::new();
            for label in &node.labels {
                for (r1, mid) in schema.partners(label) {
                    for (r2, end) in schema.partners(&mid) {
                        typed.push(two_hop(name, Some(&r1), Some(&mid), Some(&r2), Some(&end)));
                    }
                }
            }
            for q in sorted_unique(typed) {
                add(q, TemplateKind::TwoHop);
            }
        }
    }

    if templates.enabled(TemplateKind::Connecting) {
        for i in 0..entities.len() {
            for j in i + 1..entities.len() {
                let a = graph.node(entities[i]).expect("checked above");
                let b = graph.node(entities[j]).expect("checked above");
                add(
                    connecting(&a.name, &b.name, None, None, None),
                    TemplateKind::Connecting,
                );
                let mut typed: Vec<PathQuery> = Vec::new();
                for la in &a.labels {
                    for lb in &b.labels {
                        for (r1, mid) in schema.partners(la) {
                            for (r2, other) in schema.partners(&mid) {
                                if &other == lb {
                                    typed.push(connecting(
                                        &a.name,
                                        &b.name,
                                        Some(&r1),
                                        Some(&mid),
                                        Some(&r2),
                                    ));
                                }
                            }
                        }
                    }
                }
                for q in sorted_unique(typed) {
                    add(q, TemplateKind::Connecting);
                }
            }
        }
    }

    Ok(CandidateSet {
        question_id: question_id.to_string(),
        entities,
        candidates,
    })
}

fn sorted_unique(mut queries: Vec<PathQuery>) -> Vec<PathQuery> {
    queries.sort_by_key(|q| q.to_string());
    queries.dedup();
    queries
}

fn one_hop(name: &str, rel: Option<&str>, neighbor: Option<&str>) -> PathQuery {
    let mut edge = EdgePattern::new("r");
    edge.rel_type = rel.map(str::to_string);
    let mut tgt = NodePattern::new("tgt");
    tgt.label = neighbor.map(str::to_string);
    PathQuery::new(
        PathPattern {
            start: NodePattern::new("src").with_name(name),
            hops: vec![(edge, tgt)],
        },
        vec![],
        ReturnSpec::TargetNodes("tgt".to_string()),
    )
    .expect("template is structurally valid")
}

fn two_hop(
    name: &str,
    r1: Option<&str>,
    mid: Option<&str>,
    r2: Option<&str>,
    end: Option<&str>,
) -> PathQuery {
    let mut e1 = EdgePattern::new("r1");
    e1.rel_type = r1.map(str::to_string);
    let mut var = NodePattern::new("var");
    var.label = mid.map(str::to_string);
    let mut e2 = EdgePattern::new("r2");
    e2.rel_type = r2.map(str::to_string);
    let mut tgt = NodePattern::new("tgt");
    tgt.label = end.map(str::to_string);
    PathQuery::new(
        PathPattern {
            start: NodePattern::new("src").with_name(name),
            hops: vec![(e1, var), (e2, tgt)],
        },
        vec![("src".to_string(), "tgt".to_string())],
        ReturnSpec::TargetNodes("tgt".to_string()),
    )
    .expect("template is structurally valid")
}

fn connecting(
    name1: &str,
    name2: &str,
    r1: Option<&str>,
    mid: Option<&str>,
    r2: Option<&str>,
) -> PathQuery {
    let mut e1 = EdgePattern::new("r1");
    e1.rel_type = r1.map(str::to_string);
    let mut tgt = NodePattern::new("tgt");
    tgt.label = mid.map(str::to_string);
    let mut e2 = EdgePattern::new("r2");
    e2.rel_type = r2.map(str::to_string);
    PathQuery::new(
        PathPattern {
            start: NodePattern::new("src1").with_name(name1),
            hops: vec![
                (e1, tgt),
                (e2, NodePattern::new("src2").with_name(name2)),
            ],
        },
        vec![("src1".to_string(), "src2".to_string())],
        ReturnSpec::TargetNodes("tgt".to_string()),
    )
    .expect("template is structurally valid")
}

/// Score every candidate with the in-query aggregates: distinct target nodes
/// matched, and how many of them are gold answers.
pub fn score_candidates(
    graph: &PropertyGraph,
    set: &CandidateSet,
    answers: &BTreeSet<NodeId>,
) -> Vec<ScoredCandidate> {
    set.candidates
        .iter()
        .map(|c| {
            let target = c.query.target_var().to_string();
            let (correct, total) = aggregate_counts(graph, &c.query, answers, &target)
                .expect("target variable is declared by construction");
            let recall = if answers.is_empty() {
                0.0
            } else {
                correct as f64 / answers.len() as f64
            };
            let precision = if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            };
            ScoredCandidate {
                query: c.query.clone(),
                template: c.template,
                correct_cnt: correct,
                total_cnt: total,
                recall,
                precision,
            }
        })
        .collect()
}

/// Pick the best candidate under the total order
/// `(recall desc, totalCnt asc, typed before untyped, canonical text asc)`.
/// Returns `None` on an empty list.
pub fn select_best(scored: &[ScoredCandidate]) -> Option<&ScoredCandidate> {
    scored.iter().min_by(|a, b| {
        b.recall
            .total_cmp(&a.recall)
            .then(a.total_cnt.cmp(&b.total_cnt))
            .then(b.query.is_typed().cmp(&a.query.is_typed()))
            .then_with(|| a.query.to_string().cmp(&b.query.to_string()))
    })
}

/// Why a question did or did not produce a training pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum SynthesisStatus {
    /// Best candidate met the recall threshold.
    Emitted,
    /// Best candidate fell below the recall threshold.
    Filtered,
    /// No pair was attempted (no entities, unresolvable entity, ...).
    Skipped { reason: String },
}

/// Per-question synthesis report entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReportEntry {
    pub id: String,
    #[serde(flatten)]
    pub status: SynthesisStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_precision: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SynthesisOutput {
    /// Pairs in input question order.
    pub pairs: Vec<TrainingPair>,
    /// One entry per input question, in input order.
    pub report: Vec<SynthesisReportEntry>,
}

/// For each question: resolve its entity mentions, enumerate and score
/// candidates, select the best, and emit a training pair when its recall
/// reaches `min_recall`. Questions with unresolvable entities are skipped
/// with a reason, never fatal.
pub fn synthesize_training_pairs(
    graph: &PropertyGraph,
    schema: &SchemaSummary,
    qas: &[QaRecord],
    resolver: &mut dyn FnMut(&str) -> Vec<NodeId>,
    templates: TemplateSet,
    min_recall: f64,
) -> SynthesisOutput {
    let mut out = SynthesisOutput::default();
    for qa in qas {
        let skip = |reason: String| SynthesisReportEntry {
            id: qa.id.clone(),
            status: SynthesisStatus::Skipped { reason },
            best_recall: None,
            best_precision: None,
        };
        let names = qa.entities.clone().unwrap_or_default();
        if names.is_empty() {
            out.report.push(skip("no entities".to_string()));
            continue;
        }
        let mut entity_ids: Vec<NodeId> = Vec::new();
        let mut unresolved: Option<String> = None;
        for name in &names {
            let ids = resolver(name);
            if ids.is_empty() {
                unresolved = Some(name.clone());
                break;
            }
            entity_ids.extend(ids);
        }
        if let Some(name) = unresolved {
            out.report
                .push(skip(format!("entity `{name}` did not resolve")));
            continue;
        }
        let set = match enumerate_candidates(schema, graph, &entity_ids, templates, &qa.id) {
            Ok(set) => set,
            Err(e) => {
                out.report.push(skip(e.to_string()));
                continue;
            }
        };
        let answers: BTreeSet<NodeId> = qa.answer_ids.iter().copied().collect();
        let scored = score_candidates(graph, &set, &answers);
        let best = match select_best(&scored) {
            Some(best) => best,
            None => {
                out.report.push(skip("no candidates".to_string()));
                continue;
            }
        };
        let entry = SynthesisReportEntry {
            id: qa.id.clone(),
            status: if best.recall >= min_recall {
                SynthesisStatus::Emitted
            } else {
                SynthesisStatus::Filtered
            },
            best_recall: Some(best.recall),
            best_precision: Some(best.precision),
        };
        if matches!(entry.status, SynthesisStatus::Emitted) {
            out.pairs.push(TrainingPair {
                id: qa.id.clone(),
                question: qa.question.clone(),
                cypher: best.query.to_string(),
                recall: best.recall,
                precision: best.precision,
                total: best.total_cnt,
            });
        }
        out.report.push(entry);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cypher::execute;
    use crate::lpg::{EdgeRecord, NodeRecord};

    /// (A)-[R]-(B) with a single entity of label A.
    fn tiny() -> (PropertyGraph, SchemaSummary) {
        let g = PropertyGraph::from_records(
            vec![
                NodeRecord::new(1, &["A"], "anchor"),
                NodeRecord::new(2, &["B"], "other"),
            ],
            vec![EdgeRecord::new(10, 1, 2, "R")],
        )
        .unwrap();
        let schema = g.extract_schema();
        (g, schema)
    }

    #[test]
    fn one_hop_candidates_include_typed_and_untyped() {
        let (g, schema) = tiny();
        let set = enumerate_candidates(
            &schema,
            &g,
            &[NodeId(1)],
            TemplateSet {
                one_hop: true,
                two_hop: false,
                connecting: false,
            },
            "q",
        )
        .unwrap();
        let texts = set.query_texts();
        assert!(texts.contains(
            &"MATCH (src {name: \"anchor\"})-[r]-(tgt) RETURN nodes(tgt)".to_string()
        ));
        assert!(texts.contains(
            &"MATCH (src {name: \"anchor\"})-[r:R]-(tgt:B) RETURN nodes(tgt)".to_string()
        ));
        assert_eq!(texts.len(), 2);
    }

    #[test]
    fn no_schema_triples_means_untyped_only() {
        let g = PropertyGraph::from_records(
            vec![NodeRecord::new(1, &["A"], "lonely")],
            vec![],
        )
        .unwrap();
        let schema = g.extract_schema();
        let set =
            enumerate_candidates(&schema, &g, &[NodeId(1)], TemplateSet::default(), "q").unwrap();
        assert_eq!(
            set.query_texts(),
            vec![
                "MATCH (src {name: \"lonely\"})-[r]-(tgt) RETURN nodes(tgt)".to_string(),
                "MATCH (src {name: \"lonely\"})-[r1]-(var)-[r2]-(tgt) WHERE src <> tgt RETURN nodes(tgt)"
                    .to_string(),
            ]
        );
    }

    /// Hand-enumerated closure over a three-triple schema:
    /// (A,R,B), (B,S,C), (A,T,A).
    #[test]
    fn candidate_count_matches_hand_enumeration() {
        let g = PropertyGraph::from_records(
            vec![
                NodeRecord::new(1, &["A"], "e"),
                NodeRecord::new(2, &["B"], "b"),
                NodeRecord::new(3, &["C"], "c"),
                NodeRecord::new(4, &["A"], "a2"),
            ],
            vec![
                EdgeRecord::new(10, 1, 2, "R"),
                EdgeRecord::new(11, 2, 3, "S"),
                EdgeRecord::new(12, 1, 4, "T"),
            ],
        )
        .unwrap();
        let schema = g.extract_schema();
        let set =
            enumerate_candidates(&schema, &g, &[NodeId(1)], TemplateSet::default(), "q").unwrap();
        // Partners of A: (R,B), (T,A)  → 2 typed 1-hop + 1 untyped = 3.
        // Chains from A: via (R,B): partners of B = (R,A), (S,C) → 2
        //               via (T,A): partners of A = (R,B), (T,A) → 2
        // → 4 typed 2-hop + 1 untyped = 5.
        let one = set
            .candidates
            .iter()
            .filter(|c| c.template == TemplateKind::OneHop)
            .count();
        let two = set
            .candidates
            .iter()
            .filter(|c| c.template == TemplateKind::TwoHop)
            .count();
        assert_eq!(one, 3);
        assert_eq!(two, 5);
    }

    #[test]
    fn typed_candidates_execute_against_schema_labels() {
        let (g, schema) = tiny();
        let set =
            enumerate_candidates(&schema, &g, &[NodeId(1)], TemplateSet::default(), "q").unwrap();
        for c in &set.candidates {
            // Semantic validity: typed annotations exist in the schema.
            for n in c.query.node_patterns() {
                if let Some(l) = &n.label {
                    assert!(schema.node_labels.contains(l));
                }
            }
            for e in c.query.edge_patterns() {
                if let Some(t) = &e.rel_type {
                    assert!(schema.rel_types.contains(t));
                }
            }
            // Executing never panics; emptiness is the only failure mode.
            let _ = execute(&g, &c.query);
        }
    }

    #[test]
    fn connecting_generated_per_unordered_pair() {
        let g = PropertyGraph::from_records(
            vec![
                NodeRecord::new(1, &["A"], "x"),
                NodeRecord::new(2, &["B"], "y"),
                NodeRecord::new(3, &["C"], "mid"),
            ],
            vec![
                EdgeRecord::new(10, 1, 3, "R"),
                EdgeRecord::new(11, 3, 2, "S"),
            ],
        )
        .unwrap();
        let schema = g.extract_schema();
        let set = enumerate_candidates(
            &schema,
            &g,
            &[NodeId(1), NodeId(2)],
            TemplateSet {
                one_hop: false,
                two_hop: false,
                connecting: true,
            },
            "q",
        )
        .unwrap();
        let texts = set.query_texts();
        assert!(texts.contains(
            &"MATCH (src1 {name: \"x\"})-[r1]-(tgt)-[r2]-(src2 {name: \"y\"}) WHERE src1 <> src2 RETURN nodes(tgt)"
                .to_string()
        ));
        assert!(texts.contains(
            &"MATCH (src1 {name: \"x\"})-[r1:R]-(tgt:C)-[r2:S]-(src2 {name: \"y\"}) WHERE src1 <> src2 RETURN nodes(tgt)"
                .to_string()
        ));
    }

    #[test]
    fn unknown_entity_is_an_error() {
        let (g, schema) = tiny();
        assert_eq!(
            enumerate_candidates(&schema, &g, &[NodeId(99)], TemplateSet::default(), "q")
                .unwrap_err(),
            EnumerateError::UnknownEntity(NodeId(99))
        );
    }

    fn scored(recall: f64, total: u64, typed: bool, text_salt: &str) -> ScoredCandidate {
        let q = if typed {
            one_hop(text_salt, Some("R"), Some("B"))
        } else {
            one_hop(text_salt, None, None)
        };
        ScoredCandidate {
            query: q,
            template: TemplateKind::OneHop,
            correct_cnt: 0,
            total_cnt: total,
            recall,
            precision: 0.0,
        }
    }

    #[test]
    fn select_best_prefers_fewer_results_at_equal_recall() {
        let list = [scored(1.0, 17432, false, "a"), scored(1.0, 4, false, "b")];
        let best = select_best(&list).unwrap();
        assert_eq!(best.total_cnt, 4);
    }

    #[test]
    fn select_best_all_zero_recall_picks_smallest_total() {
        let a = scored(0.0, 9, false, "a");
        let b = scored(0.0, 2, false, "b");
        let c = scored(0.0, 5, false, "c");
        assert_eq!(select_best(&[a, b, c]).unwrap().total_cnt, 2);
    }

    #[test]
    fn select_best_breaks_ties_typed_first() {
        let untyped = scored(0.5, 7, false, "same");
        let typed = scored(0.5, 7, true, "same");
        let forward = [untyped.clone(), typed.clone()];
        let best = select_best(&forward).unwrap();
        assert!(best.query.is_typed());
        // Permutation invariance.
        let backward = [typed, untyped];
        let best2 = select_best(&backward).unwrap();
        assert_eq!(best.query, best2.query);
    }

    #[test]
    fn select_best_empty_is_none() {
        assert!(select_best(&[]).is_none());
    }

    #[test]
    fn score_candidates_empty_answers_zeroes() {
        let (g, schema) = tiny();
        let set =
            enumerate_candidates(&schema, &g, &[NodeId(1)], TemplateSet::default(), "q").unwrap();
        for s in score_candidates(&g, &set, &BTreeSet::new()) {
            assert_eq!(s.recall, 0.0);
            assert_eq!(s.precision, 0.0);
        }
    }

    #[test]
    fn score_candidates_exact_match_is_one_one() {
        let (g, schema) = tiny();
        let set =
            enumerate_candidates(&schema, &g, &[NodeId(1)], TemplateSet::default(), "q").unwrap();
        let answers: BTreeSet<NodeId> = [NodeId(2)].into_iter().collect();
        let scored = score_candidates(&g, &set, &answers);
        let hit = scored
            .iter()
            .find(|s| s.query.to_string().contains(":R"))
            .unwrap();
        assert_eq!(hit.recall, 1.0);
        assert_eq!(hit.precision, 1.0);
    }

    #[test]
    fn synthesize_filters_and_skips() {
        let (g, schema) = tiny();
        let qas = vec![
            QaRecord {
                id: "good".to_string(),
                question: "what connects to anchor?".to_string(),
                entities: Some(vec!["anchor".to_string()]),
                answer_ids: vec![NodeId(2)],
            },
            QaRecord {
                id: "half".to_string(),
                question: "unreachable answers".to_string(),
                entities: Some(vec!["anchor".to_string()]),
                answer_ids: vec![NodeId(2), NodeId(1)],
            },
            QaRecord {
                id: "lost".to_string(),
                question: "no such entity".to_string(),
                entities: Some(vec!["ghost".to_string()]),
                answer_ids: vec![NodeId(2)],
            },
            QaRecord {
                id: "bare".to_string(),
                question: "no entities at all".to_string(),
                entities: None,
                answer_ids: vec![NodeId(2)],
            },
        ];
        let mut resolver = |name: &str| {
            g.nodes_named(name)
                .map(|s| s.iter().copied().collect())
                .unwrap_or_default()
        };
        let out = synthesize_training_pairs(
            &g,
            &schema,
            &qas,
            &mut resolver,
            TemplateSet::default(),
            0.999,
        );
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].id, "good");
        assert_eq!(out.pairs[0].recall, 1.0);
        assert_eq!(out.report.len(), 4);
        assert!(matches!(out.report[1].status, SynthesisStatus::Filtered));
        assert!(matches!(out.report[2].status, SynthesisStatus::Skipped { .. }));
        assert!(matches!(out.report[3].status, SynthesisStatus::Skipped { .. }));
    }

    #[test]
    fn raising_min_recall_never_emits_more() {
        let (g, schema) = tiny();
        let qa = QaRecord {
            id: "q".to_string(),
            question: "?".to_string(),
            entities: Some(vec!["anchor".to_string()]),
            answer_ids: vec![NodeId(2), NodeId(1)],
        };
        let mut resolver = |name: &str| {
            g.nodes_named(name)
                .map(|s| s.iter().copied().collect())
                .unwrap_or_default()
        };
        let mut counts = Vec::new();
        for min_recall in [0.0, 0.5, 0.999] {
            let out = synthesize_training_pairs(
                &g,
                &schema,
                std::slice::from_ref(&qa),
                &mut resolver,
                TemplateSet::default(),
                min_recall,
            );
            counts.push(out.pairs.len());
        }
        assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }
}
