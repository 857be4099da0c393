//! Test support: seeded random generators and independent brute-force
//! oracles. Everything here is deliberately written against the raw data
//! model (edge lists, full scans, second implementations) instead of the
//! indexed paths it is used to check.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cypher::{
    BindingRow, BoundValue, EdgePattern, NodePattern, PathPattern, PathQuery, ReturnSpec,
};
use crate::decode::{TokenId, Tokenizer};
use crate::enumerate::QaRecord;
use crate::lpg::{EdgeRecord, NodeId, NodeRecord, PropertyGraph};
use crate::retrieve::RankedAnswers;

/// Knobs for [`random_graph`].
#[derive(Debug, Clone)]
pub struct GraphConfig {
    pub node_count: usize,
    pub edge_count: usize,
    pub labels: Vec<String>,
    pub rel_types: Vec<String>,
    /// Probability that a node gets a second label.
    pub multi_label_prob: f64,
    /// Probability that a node shares a name with an earlier node.
    pub duplicate_name_prob: f64,
    /// When set, every node gets an embedding of this dimension with small
    /// integer components (ties in cosine space are common on purpose).
    pub embedding_dim: Option<usize>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            node_count: 20,
            edge_count: 30,
            labels: vec!["A".into(), "B".into(), "C".into(), "D".into()],
            rel_types: vec!["R".into(), "S".into(), "T".into(), "U".into()],
            multi_label_prob: 0.2,
            duplicate_name_prob: 0.1,
            embedding_dim: None,
        }
    }
}

pub fn random_graph(rng: &mut impl Rng, cfg: &GraphConfig) -> PropertyGraph {
    let mut nodes = Vec::with_capacity(cfg.node_count);
    for i in 0..cfg.node_count {
        let name = if i > 0 && rng.gen_bool(cfg.duplicate_name_prob) {
            format!("n{}", rng.gen_range(0..i))
        } else {
            format!("n{i}")
        };
        let mut labels: Vec<&str> = vec![cfg.labels.choose(rng).unwrap()];
        if rng.gen_bool(cfg.multi_label_prob) {
            let extra = cfg.labels.choose(rng).unwrap();
            if !labels.contains(&extra.as_str()) {
                labels.push(extra);
            }
        }
        let mut node = NodeRecord::new(i as u64, &labels, &name);
        if let Some(dim) = cfg.embedding_dim {
            let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-2i32..=2) as f32).collect();
            node = node.with_embedding(v);
        }
        nodes.push(node);
    }
    let mut edges = Vec::with_capacity(cfg.edge_count);
    for e in 0..cfg.edge_count {
        if cfg.node_count == 0 {
            break;
        }
        let src = rng.gen_range(0..cfg.node_count) as u64;
        let dst = rng.gen_range(0..cfg.node_count) as u64;
        edges.push(EdgeRecord::new(
            e as u64,
            src,
            dst,
            cfg.rel_types.choose(rng).unwrap(),
        ));
    }
    PropertyGraph::from_records(nodes, edges).expect("generated records are valid")
}

/// A random template-shaped query over the graph: single node, 1-hop, 2-hop,
/// or a length-two connecting path, with each anchor/label/type independently
/// concrete (drawn from the graph, occasionally bogus) or absent.
pub fn random_template_query(rng: &mut impl Rng, graph: &PropertyGraph) -> PathQuery {
    let names: Vec<String> = graph.nodes().map(|n| n.name.clone()).collect();
    let labels: Vec<String> = graph.labels().map(str::to_string).collect();
    let rel_types: Vec<String> = {
        let set: BTreeSet<String> = graph.edges().map(|e| e.rel_type.clone()).collect();
        set.into_iter().collect()
    };

    let pick_name = |rng: &mut dyn rand::RngCore| -> Option<String> {
        if names.is_empty() || rng.gen_bool(0.15) {
            if rng.gen_bool(0.5) {
                Some("absent".to_string())
            } else {
                None
            }
        } else {
            Some(names.choose(rng).unwrap().clone())
        }
    };
    let pick_label = |rng: &mut dyn rand::RngCore| -> Option<String> {
        if labels.is_empty() || rng.gen_bool(0.5) {
            None
        } else if rng.gen_bool(0.1) {
            Some("Bogus".to_string())
        } else {
            Some(labels.choose(rng).unwrap().clone())
        }
    };
    let pick_type = |rng: &mut dyn rand::RngCore| -> Option<String> {
        if rel_types.is_empty() || rng.gen_bool(0.5) {
            None
        } else if rng.gen_bool(0.1) {
            Some("BOGUS".to_string())
        } else {
            Some(rel_types.choose(rng).unwrap().clone())
        }
    };

    let node = |var: &str, label: Option<String>, name: Option<String>| {
        let mut n = NodePattern::new(var);
        n.label = label;
        n.name = name;
        n
    };
    let edge = |var: &str, t: Option<String>| {
        let mut e = EdgePattern::new(var);
        e.rel_type = t;
        e
    };

    let shape = rng.gen_range(0..4);
    let (pattern, wheres, target) = match shape {
        0 => (
            PathPattern {
                start: node("tgt", pick_label(rng), pick_name(rng)),
                hops: vec![],
            },
            vec![],
            "tgt",
        ),
        1 => (
            PathPattern {
                start: node("src", pick_label(rng), pick_name(rng)),
                hops: vec![(edge("r", pick_type(rng)), node("tgt", pick_label(rng), None))],
            },
            vec![],
            "tgt",
        ),
        2 => (
            PathPattern {
                start: node("src", pick_label(rng), pick_name(rng)),
                hops: vec![
                    (edge("r1", pick_type(rng)), node("var", pick_label(rng), None)),
                    (edge("r2", pick_type(rng)), node("tgt", pick_label(rng), None)),
                ],
            },
            vec![("src".to_string(), "tgt".to_string())],
            "tgt",
        ),
        _ => (
            PathPattern {
                start: node("src1", None, pick_name(rng)),
                hops: vec![
                    (edge("r1", pick_type(rng)), node("tgt", pick_label(rng), None)),
                    (edge("r2", pick_type(rng)), node("src2", None, pick_name(rng))),
                ],
            },
            vec![("src1".to_string(), "src2".to_string())],
            "tgt",
        ),
    };
    let ret = if rng.gen_bool(0.3) {
        ReturnSpec::Bindings
    } else {
        ReturnSpec::TargetNodes(target.to_string())
    };
    PathQuery::new(pattern, wheres, ret).expect("generated query is structurally valid")
}

/// Brute-force executor oracle: enumerate every oriented edge tuple (nodes
/// are forced by the chosen endpoints), filter by all constraints, dedup and
/// sort. Uses only the raw node and edge lists — no indexes, no adjacency.
pub fn execute_bruteforce(graph: &PropertyGraph, query: &PathQuery) -> Vec<BindingRow> {
    let node_patterns: Vec<&NodePattern> = query.node_patterns().collect();
    let edge_patterns: Vec<&EdgePattern> = query.edge_patterns().collect();
    let hops = edge_patterns.len();

    let node_ok = |pattern: &NodePattern, id: NodeId| -> bool {
        let n = graph.node(id).unwrap();
        pattern.label.as_ref().map_or(true, |l| n.labels.contains(l))
            && pattern.name.as_ref().map_or(true, |m| &n.name == m)
    };

    let mut rows: BTreeSet<BindingRow> = BTreeSet::new();
    let mut push_row = |node_ids: &[NodeId], edge_ids: &[crate::lpg::EdgeId]| {
        for (a, b) in query.where_clauses() {
            let value = |var: &str| -> BoundValue {
                if let Some(i) = node_patterns.iter().position(|n| &n.var == var) {
                    BoundValue::Node(node_ids[i])
                } else {
                    let i = edge_patterns.iter().position(|e| &e.var == var).unwrap();
                    BoundValue::Edge(edge_ids[i])
                }
            };
            if value(a) == value(b) {
                return;
            }
        }
        let mut row = BindingRow::new();
        for (p, id) in node_patterns.iter().zip(node_ids) {
            row.insert(p.var.clone(), BoundValue::Node(*id));
        }
        for (p, id) in edge_patterns.iter().zip(edge_ids) {
            row.insert(p.var.clone(), BoundValue::Edge(*id));
        }
        rows.insert(row);
    };

    if hops == 0 {
        for n in graph.nodes() {
            if node_ok(node_patterns[0], n.id) {
                push_row(&[n.id], &[]);
            }
        }
        return rows.into_iter().collect();
    }

    // Every edge in both orientations (a self-loop only once).
    let oriented: Vec<(crate::lpg::EdgeId, NodeId, NodeId, &str)> = graph
        .edges()
        .flat_map(|e| {
            let fwd = (e.id, e.src, e.dst, e.rel_type.as_str());
            let rev = (e.id, e.dst, e.src, e.rel_type.as_str());
            if e.src == e.dst {
                vec![fwd]
            } else {
                vec![fwd, rev]
            }
        })
        .collect();
    if oriented.is_empty() {
        return Vec::new();
    }

    // Odometer over one oriented edge per hop.
    let mut choice = vec![0usize; hops];
    'outer: loop {
        'check: {
            let mut node_ids = Vec::with_capacity(hops + 1);
            let mut edge_ids = Vec::with_capacity(hops);
            let mut ok = true;
            for (h, &c) in choice.iter().enumerate() {
                let (eid, from, to, rel) = oriented[c];
                if edge_ids.contains(&eid) {
                    ok = false;
                    break;
                }
                if let Some(t) = &edge_patterns[h].rel_type {
                    if t != rel {
                        ok = false;
                        break;
                    }
                }
                if h == 0 {
                    node_ids.push(from);
                } else if *node_ids.last().unwrap() != from {
                    ok = false;
                    break;
                }
                node_ids.push(to);
                edge_ids.push(eid);
            }
            if !ok {
                break 'check;
            }
            if node_ids
                .iter()
                .zip(&node_patterns)
                .all(|(id, p)| node_ok(p, *id))
            {
                push_row(&node_ids, &edge_ids);
            }
        }
        // Advance the odometer.
        for h in 0..hops {
            choice[h] += 1;
            if choice[h] < oriented.len() {
                continue 'outer;
            }
            choice[h] = 0;
        }
        break;
    }
    rows.into_iter().collect()
}

/// Exhaustive-scan kNN oracle with its own selection logic: compute every
/// cosine, then repeatedly extract the best (score desc, id asc) entry.
pub fn knn_bruteforce(graph: &PropertyGraph, query: &[f32], k: usize) -> Vec<(NodeId, f64)> {
    let mut scored: Vec<(NodeId, f64)> = Vec::new();
    for n in graph.nodes() {
        if let Some(e) = &n.embedding {
            let mut dot = 0.0f64;
            let mut na = 0.0f64;
            let mut nb = 0.0f64;
            for (x, y) in query.iter().zip(e.iter()) {
                let (x, y) = (f64::from(*x), f64::from(*y));
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            let score = if na == 0.0 || nb == 0.0 {
                -1.0
            } else {
                dot / (na.sqrt() * nb.sqrt())
            };
            scored.push((n.id, score));
        }
    }
    let mut out = Vec::new();
    while out.len() < k && !scored.is_empty() {
        let mut best = 0;
        for i in 1..scored.len() {
            let (bid, bscore) = scored[best];
            let (iid, iscore) = scored[i];
            if iscore > bscore || (iscore == bscore && iid < bid) {
                best = i;
            }
        }
        out.push(scored.remove(best));
    }
    out
}

/// Straightforward second implementation of the evaluation metrics. Returns
/// `(hit1, hit5, recall20, mrr, n)`.
pub fn metrics_bruteforce(
    predictions: &[RankedAnswers],
    gold: &BTreeMap<String, BTreeSet<NodeId>>,
) -> (f64, f64, f64, f64, usize) {
    let mut hit1 = 0usize;
    let mut hit5 = 0usize;
    let mut recall_sum = 0.0f64;
    let mut rr_sum = 0.0f64;
    let mut n = 0usize;
    for p in predictions {
        let answers = &gold[&p.id];
        if answers.is_empty() {
            continue;
        }
        n += 1;
        if p.ranked.first().map_or(false, |id| answers.contains(id)) {
            hit1 += 1;
        }
        if p.ranked.iter().take(5).any(|id| answers.contains(id)) {
            hit5 += 1;
        }
        let mut hits20 = 0usize;
        for id in p.ranked.iter().take(20) {
            if answers.contains(id) {
                hits20 += 1;
            }
        }
        recall_sum += hits20 as f64 / answers.len() as f64;
        let mut rr = 0.0;
        for (i, id) in p.ranked.iter().enumerate() {
            if answers.contains(id) {
                rr = 1.0 / (i + 1) as f64;
                break;
            }
        }
        rr_sum += rr;
    }
    let d = n.max(1) as f64;
    (
        hit1 as f64 / d,
        hit5 as f64 / d,
        recall_sum / d,
        rr_sum / d,
        n,
    )
}

/// Total byte-level tokenizer: 256 single-byte tokens plus eos. Useful when a
/// test wants every character split apart.
#[derive(Debug, Clone, Copy, Default)]
pub struct ByteTokenizer;

static BYTE_TABLE: [u8; 256] = {
    let mut b = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        b[i] = i as u8;
        i += 1;
    }
    b
};

impl Tokenizer for ByteTokenizer {
    fn vocab_size(&self) -> usize {
        257
    }
    fn eos_id(&self) -> TokenId {
        256
    }
    fn token_bytes(&self, id: TokenId) -> &[u8] {
        if id == 256 {
            &[]
        } else {
            std::slice::from_ref(&BYTE_TABLE[id as usize])
        }
    }
    fn encode(&self, text: &str) -> Vec<TokenId> {
        text.bytes().map(TokenId::from).collect()
    }
}

const NAME_POOL: &[&str] = &[
    "alpha",
    "beta",
    "Gamma_3",
    "x",
    "with space",
    "qu\"ote",
    "back\\slash",
    "ünïcode",
];
const LABEL_POOL: &[&str] = &["Drug", "Disease", "GeneOrProtein", "A", "B_2"];
const TYPE_POOL: &[&str] = &["INDICATION", "ENZYME", "R", "S_1"];

/// A random structurally-valid AST exercising the whole grammar surface:
/// 0–3 hops, optional labels/types, names with quotes and backslashes,
/// `<>` constraints, both return forms.
pub fn random_ast(rng: &mut impl Rng) -> PathQuery {
    let hops = rng.gen_range(0..=3);
    let node = |i: usize, rng: &mut dyn rand::RngCore| {
        let mut n = NodePattern::new(&format!("v{i}"));
        if rng.gen_bool(0.5) {
            n.label = Some(LABEL_POOL.choose(rng).unwrap().to_string());
        }
        if rng.gen_bool(0.5) {
            n.name = Some(NAME_POOL.choose(rng).unwrap().to_string());
        }
        n
    };
    let start = node(0, rng);
    let mut hops_vec = Vec::new();
    for i in 0..hops {
        let mut e = EdgePattern::new(&format!("e{i}"));
        if rng.gen_bool(0.5) {
            e.rel_type = Some(TYPE_POOL.choose(rng).unwrap().to_string());
        }
        hops_vec.push((e, node(i + 1, rng)));
    }
    let node_vars: Vec<String> = (0..=hops).map(|i| format!("v{i}")).collect();
    let mut wheres = Vec::new();
    if node_vars.len() >= 2 {
        for _ in 0..rng.gen_range(0..=2) {
            let a = node_vars.choose(rng).unwrap().clone();
            let b = node_vars.choose(rng).unwrap().clone();
            wheres.push((a, b));
        }
    }
    let ret = if rng.gen_bool(0.5) {
        ReturnSpec::Bindings
    } else {
        ReturnSpec::TargetNodes(node_vars.choose(rng).unwrap().clone())
    };
    PathQuery::new(
        PathPattern {
            start,
            hops: hops_vec,
        },
        wheres,
        ret,
    )
    .expect("generated AST is structurally valid")
}

/// A deduplicated corpus of canonical query texts.
pub fn random_query_corpus(rng: &mut impl Rng, count: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < count * 100 {
        attempts += 1;
        let text = random_ast(rng).to_string();
        if seen.insert(text.clone()) {
            out.push(text);
        }
    }
    assert_eq!(out.len(), count, "corpus generator exhausted its attempts");
    out
}

/// Mutate a query string into a near miss: one character changed, inserted,
/// deleted, or a suffix appended. May accidentally produce a valid string;
/// callers filter against their valid set.
pub fn mutate_query(rng: &mut impl Rng, query: &str) -> String {
    let chars: Vec<char> = query.chars().collect();
    match rng.gen_range(0..4) {
        0 if !chars.is_empty() => {
            let i = rng.gen_range(0..chars.len());
            let mut out = chars.clone();
            out[i] = (b'a' + rng.gen_range(0..26)) as char;
            out.into_iter().collect()
        }
        1 => {
            let i = rng.gen_range(0..=chars.len());
            let mut out = chars.clone();
            out.insert(i, (b'a' + rng.gen_range(0..26)) as char);
            out.into_iter().collect()
        }
        2 if chars.len() > 1 => {
            let i = rng.gen_range(0..chars.len());
            let mut out = chars.clone();
            out.remove(i);
            out.into_iter().collect()
        }
        _ => {
            format!("{query}{}", if rng.gen_bool(0.5) { " " } else { "x" })
        }
    }
}

/// Synthetic knowledge graph plus template-answerable questions.
///
/// Every node gets a unique name so entity resolution is exact. Each QA is
/// generated by instantiating one of the three templates at random entities
/// and executing it; its distinct target bindings (1..=20 of them) become the
/// gold answers, so a full enumerate/score/select pass is guaranteed to find
/// a query with recall 1 and at most that many results.
pub fn synthetic_kg_and_qas(
    rng: &mut impl Rng,
    node_count: usize,
    qa_count: usize,
) -> (PropertyGraph, Vec<QaRecord>) {
    let cfg = GraphConfig {
        node_count,
        edge_count: node_count * 3 / 2,
        labels: vec!["Drug".into(), "Disease".into(), "GeneOrProtein".into()],
        rel_types: vec![
            "INDICATION".into(),
            "ENZYME".into(),
            "TARGET".into(),
            "ASSOCIATION".into(),
        ],
        multi_label_prob: 0.0,
        duplicate_name_prob: 0.0,
        embedding_dim: None,
    };
    let graph = random_graph(rng, &cfg);
    let schema = graph.extract_schema();

    let mut qas = Vec::new();
    let mut attempts = 0;
    while qas.len() < qa_count && attempts < qa_count * 500 {
        attempts += 1;
        let ids: Vec<NodeId> = match rng.gen_range(0..3) {
            0 | 1 => vec![NodeId(rng.gen_range(0..node_count) as u64)],
            _ => {
                let a = rng.gen_range(0..node_count) as u64;
                let b = rng.gen_range(0..node_count) as u64;
                if a == b {
                    continue;
                }
                vec![NodeId(a), NodeId(b)]
            }
        };
        let set = match crate::enumerate::enumerate_candidates(
            &schema,
            &graph,
            &ids,
            crate::enumerate::TemplateSet::default(),
            "gen",
        ) {
            Ok(set) => set,
            Err(_) => continue,
        };
        if set.candidates.is_empty() {
            continue;
        }
        let idx = rng.gen_range(0..set.candidates.len());
        let query = &set.candidates[idx].query;
        let target = query.target_var().to_string();
        let mut answers: BTreeSet<NodeId> = BTreeSet::new();
        for row in crate::cypher::execute(&graph, query) {
            if let Some(BoundValue::Node(id)) = row.get(&target) {
                answers.insert(*id);
            }
        }
        if answers.is_empty() || answers.len() > 20 {
            continue;
        }
        let entities: Vec<String> = set
            .entities
            .iter()
            .map(|id| graph.node(*id).unwrap().name.clone())
            .collect();
        let id = format!("q{:03}", qas.len());
        qas.push(QaRecord {
            id,
            question: format!("Which nodes satisfy `{query}`?"),
            entities: Some(entities),
            answer_ids: answers.into_iter().collect(),
        });
    }
    assert_eq!(qas.len(), qa_count, "QA generator exhausted its attempts");
    (graph, qas)
}

/// Write a graph to `dir` as `nodes.jsonl` / `edges.jsonl`.
pub fn write_graph_files(graph: &PropertyGraph, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    let nodes_path = dir.join("nodes.jsonl");
    let edges_path = dir.join("edges.jsonl");
    let mut nodes = Vec::new();
    graph.write_nodes_jsonl(&mut nodes)?;
    std::fs::write(&nodes_path, nodes)?;
    let mut edges = Vec::new();
    graph.write_edges_jsonl(&mut edges)?;
    std::fs::write(&edges_path, edges)?;
    Ok((nodes_path, edges_path))
}

/// Write QA records to `dir/qa.jsonl`.
pub fn write_qa_file(qas: &[QaRecord], dir: &Path) -> std::io::Result<PathBuf> {
    let path = dir.join("qa.jsonl");
    let mut out = String::new();
    for qa in qas {
        out.push_str(&serde_json::to_string(qa).unwrap());
        out.push('\n');
    }
    std::fs::write(&path, out)?;
    Ok(path)
}
