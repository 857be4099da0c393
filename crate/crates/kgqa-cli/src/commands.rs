//! The four pipeline stages.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use kgqa::cypher::{parse, PathQuery};
use kgqa::decode::{
    beam_decode, HashScorer, OracleScorer, ReferenceTokenizer, Scorer, TokenTrie, Tokenizer,
};
use kgqa::enumerate::{
    enumerate_candidates, score_candidates, select_best, synthesize_training_pairs, Candidate,
    CandidateSet, QaRecord, SynthesisStatus, TemplateKind, TemplateSet,
};
use kgqa::lpg::{HashEmbedder, NodeId, PropertyGraph};
use kgqa::retrieve::{
    compute_metrics, rank_answers, retrieve_subgraph, textualize, RankedAnswers,
    ReferenceSelector, RetrieveError,
};

use crate::config::{check_exists, merge, require, PipelineConfig, ScorerKind, WidthSpec};
use crate::{CliError, DecodeArgs, EvaluateArgs, GraphArgs, IngestArgs, SynthesizeArgs};

struct GraphInput {
    nodes: PathBuf,
    edges: PathBuf,
    embeddings: Option<PathBuf>,
}

fn graph_input(args: &GraphArgs, config: &PipelineConfig) -> Result<GraphInput, CliError> {
    let nodes = require(merge(args.nodes.clone(), config.nodes.as_ref()), "--nodes")?;
    let edges = require(merge(args.edges.clone(), config.edges.as_ref()), "--edges")?;
    let embeddings = merge(args.embeddings.clone(), config.embeddings.as_ref());
    check_exists(&nodes, "nodes")?;
    check_exists(&edges, "edges")?;
    if let Some(e) = &embeddings {
        check_exists(e, "embeddings")?;
    }
    Ok(GraphInput {
        nodes,
        edges,
        embeddings,
    })
}

fn load_graph(input: &GraphInput) -> Result<PropertyGraph, CliError> {
    let mut graph = PropertyGraph::load_paths(&input.nodes, &input.edges)?;
    if let Some(path) = &input.embeddings {
        let file = File::open(path)?;
        graph.attach_embedding_matrix(BufReader::new(file))?;
    }
    Ok(graph)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| {
            CliError::input(format!("{} line {}: {e}", path.display(), idx + 1))
        })?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CliError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)
            .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
        out.push(b'\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn make_resolver<'g>(
    graph: &'g PropertyGraph,
    k: usize,
    embed_seed: u64,
) -> impl FnMut(&str) -> Vec<NodeId> + 'g {
    let embedder = HashEmbedder::new(graph.embedding_dim().unwrap_or(1), embed_seed);
    move |name: &str| graph.resolve_entity(name, k, &embedder).unwrap_or_default()
}

fn template_set(names: Option<&Vec<String>>) -> Result<TemplateSet, CliError> {
    match names {
        None => Ok(TemplateSet::default()),
        Some(names) => {
            TemplateSet::from_names(names).map_err(|e| CliError::input(e.to_string()))
        }
    }
}

pub fn ingest(args: IngestArgs) -> Result<(), CliError> {
    let config = PipelineConfig::load(args.graph.config.as_deref())?;
    let input = graph_input(&args.graph, &config)?;
    let graph = load_graph(&input)?;
    let schema = graph.extract_schema();
    println!("nodes: {}", graph.node_count());
    println!("edges: {}", graph.edge_count());
    println!("labels: {}", schema.node_labels.len());
    println!("rel-types: {}", schema.rel_types.len());
    match graph.embedding_dim() {
        Some(d) => println!("embedding-dim: {d}"),
        None => println!("embedding-dim: none"),
    }
    println!("schema-triples: {}", schema.connection_triples.len());
    for (a, r, b) in &schema.connection_triples {
        println!("  ({a})-[{r}]-({b})");
    }
    Ok(())
}

pub fn synthesize(args: SynthesizeArgs) -> Result<(), CliError> {
    let config = PipelineConfig::load(args.graph.config.as_deref())?;
    let input = graph_input(&args.graph, &config)?;
    let qa_path = require(merge(args.qa, config.qa.as_ref()), "--qa")?;
    check_exists(&qa_path, "qa")?;
    let min_recall = merge(args.min_recall, config.min_recall.as_ref()).unwrap_or(0.999);
    let templates = template_set(merge(args.templates, config.templates.as_ref()).as_ref())?;
    let resolve_k = merge(args.resolve_k, config.resolve_k.as_ref()).unwrap_or(1);
    let embed_seed = merge(args.embed_seed, config.embed_seed.as_ref()).unwrap_or(0);
    let out_path = config.out_path(args.out, "pairs.jsonl");

    let graph = load_graph(&input)?;
    let schema = graph.extract_schema();
    let qas: Vec<QaRecord> = read_jsonl(&qa_path)?;

    let mut resolver = make_resolver(&graph, resolve_k, embed_seed);
    let output =
        synthesize_training_pairs(&graph, &schema, &qas, &mut resolver, templates, min_recall);
    drop(resolver);

    write_jsonl(&out_path, &output.pairs)?;

    let (mut emitted, mut filtered, mut skipped) = (0usize, 0usize, 0usize);
    for entry in &output.report {
        match &entry.status {
            SynthesisStatus::Emitted => {
                emitted += 1;
                println!(
                    "{}: emitted recall={:.4} precision={:.4}",
                    entry.id,
                    entry.best_recall.unwrap_or(0.0),
                    entry.best_precision.unwrap_or(0.0)
                );
            }
            SynthesisStatus::Filtered => {
                filtered += 1;
                println!(
                    "{}: filtered recall={:.4} precision={:.4}",
                    entry.id,
                    entry.best_recall.unwrap_or(0.0),
                    entry.best_precision.unwrap_or(0.0)
                );
            }
            SynthesisStatus::Skipped { reason } => {
                skipped += 1;
                println!("{}: skipped ({reason})", entry.id);
            }
        }
    }
    println!(
        "emitted {emitted}/{} pairs ({filtered} filtered, {skipped} skipped) -> {}",
        output.report.len(),
        out_path.display()
    );

    if let Some(report_path) = args.report {
        let json = serde_json::to_string_pretty(&output.report)
            .map_err(|e| CliError::internal(e.to_string()))?;
        std::fs::write(&report_path, json.as_bytes())?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct CandidateFileLine {
    id: String,
    queries: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RankedQuery {
    cypher: String,
    logprob: f64,
}

#[derive(Serialize, Deserialize)]
struct DecodedLine {
    id: String,
    ranked: Vec<RankedQuery>,
}

/// Candidate queries for one question, with parsed ASTs for scoring.
struct QuestionCandidates {
    id: String,
    texts: Vec<String>,
    queries: Vec<PathQuery>,
}

fn infer_template(query: &PathQuery) -> TemplateKind {
    let hops = query.pattern().hop_count();
    if hops <= 1 {
        TemplateKind::OneHop
    } else if query
        .pattern()
        .hops
        .last()
        .map(|(_, n)| n.name.is_some())
        .unwrap_or(false)
    {
        TemplateKind::Connecting
    } else {
        TemplateKind::TwoHop
    }
}

pub fn decode(args: DecodeArgs) -> Result<(), CliError> {
    let config = PipelineConfig::load(args.graph.config.as_deref())?;
    let input = graph_input(&args.graph, &config)?;
    let width = merge(args.width, config.width.as_ref()).unwrap_or(WidthSpec::Fixed(1));
    let scorer_kind = merge(args.scorer, config.scorer.as_ref()).unwrap_or(ScorerKind::Hash);
    let seed = merge(args.seed, config.seed.as_ref()).unwrap_or(0);
    let templates = template_set(merge(args.templates, config.templates.as_ref()).as_ref())?;
    let resolve_k = merge(args.resolve_k, config.resolve_k.as_ref()).unwrap_or(1);
    let embed_seed = merge(args.embed_seed, config.embed_seed.as_ref()).unwrap_or(0);
    let out_path = config.out_path(args.out, "decoded.jsonl");
    let qa_path = merge(args.qa, config.qa.as_ref());

    let graph = load_graph(&input)?;
    let qas: Vec<QaRecord> = match &qa_path {
        Some(path) => {
            check_exists(path, "qa")?;
            read_jsonl(path)?
        }
        None => Vec::new(),
    };
    let answers_by_id: BTreeMap<&str, BTreeSet<NodeId>> = qas
        .iter()
        .map(|qa| (qa.id.as_str(), qa.answer_ids.iter().copied().collect()))
        .collect();

    // Candidate sets, either from a file or enumerated from the QA entities.
    let mut question_candidates: Vec<QuestionCandidates> = Vec::new();
    if let Some(cand_path) = &args.candidates {
        check_exists(cand_path, "candidates")?;
        let lines: Vec<CandidateFileLine> = read_jsonl(cand_path)?;
        for line in lines {
            let mut texts: Vec<String> = Vec::new();
            let mut queries = Vec::new();
            for q in line.queries {
                let parsed = parse(&q).map_err(|e| {
                    CliError::input(format!("candidate query for `{}`: {e}", line.id))
                })?;
                // Canonicalize and dedupe, preserving order.
                let canonical = parsed.to_string();
                if !texts.contains(&canonical) {
                    texts.push(canonical);
                    queries.push(parsed);
                }
            }
            question_candidates.push(QuestionCandidates {
                id: line.id,
                texts,
                queries,
            });
        }
    } else {
        if qas.is_empty() {
            return Err(CliError::input(
                "decode needs --qa (to enumerate candidates) or --candidates",
            ));
        }
        let schema = graph.extract_schema();
        let mut resolver = make_resolver(&graph, resolve_k, embed_seed);
        for qa in &qas {
            let names = qa.entities.clone().unwrap_or_default();
            let mut entity_ids: Vec<NodeId> = Vec::new();
            let mut unresolved = None;
            for name in &names {
                let ids = resolver(name);
                if ids.is_empty() {
                    unresolved = Some(name.clone());
                    break;
                }
                entity_ids.extend(ids);
            }
            if names.is_empty() || unresolved.is_some() {
                eprintln!(
                    "skipping {}: {}",
                    qa.id,
                    unresolved
                        .map(|n| format!("entity `{n}` did not resolve"))
                        .unwrap_or_else(|| "no entities".to_string())
                );
                continue;
            }
            let set = enumerate_candidates(&schema, &graph, &entity_ids, templates, &qa.id)
                .map_err(|e| CliError::input(e.to_string()))?;
            question_candidates.push(QuestionCandidates {
                id: qa.id.clone(),
                texts: set.query_texts(),
                queries: set.candidates.into_iter().map(|c| c.query).collect(),
            });
        }
    }

    let mut out_lines: Vec<DecodedLine> = Vec::new();
    for qc in &question_candidates {
        if qc.texts.is_empty() {
            eprintln!("skipping {}: empty candidate set", qc.id);
            continue;
        }
        let tokenizer = ReferenceTokenizer::from_corpus(&qc.texts);
        let trie = TokenTrie::build(&qc.texts, &tokenizer)
            .map_err(|e| CliError::internal(format!("trie for `{}`: {e}", qc.id)))?;
        let scorer: Box<dyn Scorer> = match scorer_kind {
            ScorerKind::Hash => Box::new(HashScorer::new(seed, tokenizer.vocab_size())),
            ScorerKind::Oracle => {
                let answers = answers_by_id.get(qc.id.as_str()).ok_or_else(|| {
                    CliError::input(format!(
                        "oracle scorer needs answers for `{}` in --qa",
                        qc.id
                    ))
                })?;
                let set = CandidateSet {
                    question_id: qc.id.clone(),
                    entities: Vec::new(),
                    candidates: qc
                        .queries
                        .iter()
                        .map(|q| Candidate {
                            query: q.clone(),
                            template: infer_template(q),
                        })
                        .collect(),
                };
                let scored = score_candidates(&graph, &set, answers);
                let best = select_best(&scored)
                    .ok_or_else(|| CliError::internal("no candidates after scoring"))?;
                Box::new(OracleScorer::for_query(&best.query.to_string(), &tokenizer))
            }
        };
        let beam_width = match width {
            WidthSpec::Full => trie.query_count(),
            WidthSpec::Fixed(w) => w,
        };
        let ranked = beam_decode(scorer.as_ref(), &trie, &tokenizer, beam_width)
            .map_err(|e| CliError::internal(format!("decode for `{}`: {e}", qc.id)))?;
        for (q, _) in &ranked {
            if !qc.texts.contains(q) {
                return Err(CliError::internal(format!(
                    "decoded query for `{}` escaped the candidate set: {q}",
                    qc.id
                )));
            }
        }
        out_lines.push(DecodedLine {
            id: qc.id.clone(),
            ranked: ranked
                .into_iter()
                .map(|(cypher, logprob)| RankedQuery { cypher, logprob })
                .collect(),
        });
    }

    write_jsonl(&out_path, &out_lines)?;
    println!(
        "decoded {} questions (width {width}, scorer {scorer_kind:?}) -> {}",
        out_lines.len(),
        out_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PromptLine<'a> {
    id: &'a str,
    prompt: String,
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let config = PipelineConfig::load(args.graph.config.as_deref())?;
    let qa_path = require(merge(args.qa, config.qa.as_ref()), "--qa")?;
    check_exists(&qa_path, "qa")?;
    let budget = merge(args.budget, config.budget.as_ref()).unwrap_or(20);
    if budget == 0 {
        return Err(CliError::input("budget must be at least 1"));
    }
    let out_path = config.out_path(args.out, "metrics.json");

    let qas: Vec<QaRecord> = read_jsonl(&qa_path)?;
    let gold: BTreeMap<String, BTreeSet<NodeId>> = qas
        .iter()
        .map(|qa| (qa.id.clone(), qa.answer_ids.iter().copied().collect()))
        .collect();
    let questions: BTreeMap<&str, &str> = qas
        .iter()
        .map(|qa| (qa.id.as_str(), qa.question.as_str()))
        .collect();

    let predictions: Vec<RankedAnswers> = if let Some(pred_path) = &args.predictions {
        check_exists(pred_path, "predictions")?;
        read_jsonl(pred_path)?
    } else {
        let decoded_path = require(args.decoded, "--decoded (or --predictions)")?;
        check_exists(&decoded_path, "decoded")?;
        let input = graph_input(&args.graph, &config)?;
        let graph = load_graph(&input)?;
        let decoded: Vec<DecodedLine> = read_jsonl(&decoded_path)?;
        let mut prompts: Vec<(String, String)> = Vec::new();
        let mut predictions = Vec::new();
        for line in decoded {
            let mut ranked: Vec<(PathQuery, f64)> = Vec::new();
            for rq in &line.ranked {
                let query = parse(&rq.cypher).map_err(|e| {
                    CliError::input(format!("decoded query for `{}`: {e}", line.id))
                })?;
                ranked.push((query, rq.logprob));
            }
            let subgraph = retrieve_subgraph(&graph, &ranked, budget);
            if args.prompts_out.is_some() {
                let question = questions.get(line.id.as_str()).copied().unwrap_or("");
                let prompt = textualize(
                    &subgraph,
                    &graph,
                    question,
                    args.detail_keys.as_deref(),
                    args.max_chars.unwrap_or(8000),
                );
                prompts.push((line.id.clone(), prompt));
            }
            let answers = rank_answers(&line.id, &subgraph, &ReferenceSelector)
                .map_err(|e| CliError::internal(e.to_string()))?;
            predictions.push(answers);
        }
        if let Some(prompts_path) = &args.prompts_out {
            let lines: Vec<PromptLine> = prompts
                .iter()
                .map(|(id, prompt)| PromptLine {
                    id,
                    prompt: prompt.clone(),
                })
                .collect();
            write_jsonl(prompts_path, &lines)?;
        }
        predictions
    };

    if let Some(pred_out) = &args.predictions_out {
        write_jsonl(pred_out, &predictions)?;
    }

    let report = compute_metrics(&predictions, &gold).map_err(|e| match e {
        RetrieveError::MissingGold(id) => CliError::input(format!(
            "id mismatch between predictions and gold: no gold entry for `{id}`"
        )),
        other => CliError::input(other.to_string()),
    })?;
    if report.skipped_empty_gold > 0 {
        eprintln!(
            "warning: {} question(s) with empty gold sets were skipped",
            report.skipped_empty_gold
        );
    }
    let json =
        serde_json::to_string(&report).map_err(|e| CliError::internal(e.to_string()))?;
    let mut file = File::create(&out_path)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", out_path.display())))?;
    file.write_all(json.as_bytes())?;
    file.write_all(b"\n")?;
    println!("{json}");
    Ok(())
}
