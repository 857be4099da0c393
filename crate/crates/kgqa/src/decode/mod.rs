//! Grounded constrained decoding.
//!
//! All valid queries for a question are tokenized into a prefix trie; at each
//! generation step the trie yields the set of valid next tokens and every
//! other logit is masked to `-inf` before softmax. Masked tokens therefore
//! carry exactly zero probability: no decoding mode can ever emit a string
//! outside the valid set, masking never reorders valid tokens, and beam
//! search with width equal to the query count enumerates the entire set.

mod decoder;
mod tokenizer;
mod trie;

use thiserror::Error;

pub use decoder::{
    beam_decode, greedy_decode, mask_logits, Beam, HashScorer, OracleScorer, Scorer,
    UniformScorer,
};
pub use tokenizer::{ReferenceTokenizer, TokenId, Tokenizer};
pub use trie::TokenTrie;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("cannot build a trie from an empty query set")]
    EmptyQuerySet,
    #[error("duplicate query in trie input: {0}")]
    DuplicateQuery(String),
    #[error("prefix is not a path in the trie (diverges at step {0})")]
    PrefixNotInTrie(usize),
    #[error("no valid next tokens for this prefix")]
    EmptyValidSet,
    #[error("scorer returned {got} logits for a vocabulary of {expected}")]
    LogitsLength { expected: usize, got: usize },
    #[error("token id {0} is out of range")]
    TokenOutOfRange(TokenId),
    #[error("beam width must be at least 1")]
    ZeroWidth,
}
