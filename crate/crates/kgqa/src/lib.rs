//! Grounded query generation and retrieval over labeled property graphs.
//!
//! The crate is organized as a pipeline:
//!
//! - [`lpg`] — in-memory labeled property graph with label/name indexes and an
//!   exact cosine-similarity search over node embeddings.
//! - [`cypher`] — AST, parser, canonical serializer, and executor for the
//!   restricted path-pattern query subset, plus hit/count aggregation.
//! - [`enumerate`] — schema-driven enumeration of candidate queries around
//!   resolved entities, execution-based scoring, and training-pair synthesis.
//! - [`decode`] — token-trie constrained decoding: logits masking, greedy and
//!   beam search, with a byte-fallback reference tokenizer and deterministic
//!   reference scorers standing in for a language model.
//! - [`retrieve`] — budgeted subgraph retrieval from ranked queries, prompt
//!   textualization, answer ranking, and Hit@k / Recall / MRR metrics.
//!
//! The `testkit` module (behind the `testkit` feature) holds random graph and
//! query generators plus independent brute-force oracles used by the test
//! suites; it is not part of the pipeline API.

pub mod cypher;
pub mod decode;
pub mod enumerate;
pub mod lpg;
pub mod retrieve;

#[cfg(feature = "testkit")]
pub mod testkit;

pub(crate) mod mix;
