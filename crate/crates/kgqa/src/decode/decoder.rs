//! Logits masking and the greedy / beam decoding loops.

use std::collections::BTreeSet;

use crate::mix;

use super::tokenizer::{TokenId, Tokenizer};
use super::trie::TokenTrie;
use super::DecodeError;

/// Scorer contract: raw (pre-softmax) logits over the whole vocabulary for
/// the token following `prefix`. Constrained decoding is applied on these
/// logits; scorers never return probabilities.
pub trait Scorer {
    fn score(&self, prefix: &[TokenId]) -> Vec<f64>;
}

/// All-zero logits; decoding falls through to the tie rule (smallest token
/// id), so the output is fully determined by the trie.
#[derive(Debug, Clone)]
pub struct UniformScorer {
    vocab_size: usize,
}

impl UniformScorer {
    pub fn new(vocab_size: usize) -> Self {
        UniformScorer { vocab_size }
    }
}

impl Scorer for UniformScorer {
    fn score(&self, _prefix: &[TokenId]) -> Vec<f64> {
        vec![0.0; self.vocab_size]
    }
}

/// Puts logit +10 on the next token of one target tokenization (and on eos
/// once the target is complete), 0 everywhere else. Greedy decoding follows
/// the target exactly when it is in the valid set.
#[derive(Debug, Clone)]
pub struct OracleScorer {
    target: Vec<TokenId>,
    eos: TokenId,
    vocab_size: usize,
}

impl OracleScorer {
    pub fn new(target: Vec<TokenId>, eos: TokenId, vocab_size: usize) -> Self {
        OracleScorer {
            target,
            eos,
            vocab_size,
        }
    }

    pub fn for_query(query: &str, tokenizer: &dyn Tokenizer) -> Self {
        OracleScorer::new(
            tokenizer.encode(query),
            tokenizer.eos_id(),
            tokenizer.vocab_size(),
        )
    }
}

impl Scorer for OracleScorer {
    fn score(&self, prefix: &[TokenId]) -> Vec<f64> {
        let mut logits = vec![0.0; self.vocab_size];
        if prefix.len() < self.target.len() && self.target[..prefix.len()] == *prefix {
            logits[self.target[prefix.len()] as usize] = 10.0;
        } else if prefix == self.target {
            logits[self.eos as usize] = 10.0;
        }
        logits
    }
}

/// Deterministic pseudo-random logits in [-2, 2), keyed by (seed, prefix,
/// token). Identical seeds give identical decodes across runs and platforms.
#[derive(Debug, Clone)]
pub struct HashScorer {
    seed: u64,
    vocab_size: usize,
}

impl HashScorer {
    pub fn new(seed: u64, vocab_size: usize) -> Self {
        HashScorer { seed, vocab_size }
    }
}

impl Scorer for HashScorer {
    fn score(&self, prefix: &[TokenId]) -> Vec<f64> {
        let mut bytes = Vec::with_capacity(prefix.len() * 4);
        for t in prefix {
            bytes.extend_from_slice(&t.to_le_bytes());
        }
        let h = mix::hash_bytes(self.seed, &bytes);
        (0..self.vocab_size)
            .map(|x| 4.0 * mix::unit_f64(mix::splitmix64(h ^ (x as u64))) - 2.0)
            .collect()
    }
}

/// Eq. of the mask: keep logits of valid tokens unchanged, set everything
/// else to `-inf`. After softmax the masked tokens carry exactly zero
/// probability, and the relative order of valid tokens is untouched.
pub fn mask_logits(logits: &[f64], valid: &BTreeSet<TokenId>) -> Result<Vec<f64>, DecodeError> {
    if valid.is_empty() {
        return Err(DecodeError::EmptyValidSet);
    }
    if let Some(&out) = valid.iter().find(|&&t| t as usize >= logits.len()) {
        return Err(DecodeError::TokenOutOfRange(out));
    }
    let mut out = vec![f64::NEG_INFINITY; logits.len()];
    for &t in valid {
        out[t as usize] = logits[t as usize];
    }
    Ok(out)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + sum.ln()
}

/// One partial or finished hypothesis.
#[derive(Debug, Clone)]
pub struct Beam {
    pub tokens: Vec<TokenId>,
    pub log_prob_sum: f64,
    pub finished: bool,
}

fn checked_score(
    scorer: &dyn Scorer,
    prefix: &[TokenId],
    vocab_size: usize,
) -> Result<Vec<f64>, DecodeError> {
    let logits = scorer.score(prefix);
    if logits.len() != vocab_size {
        return Err(DecodeError::LogitsLength {
            expected: vocab_size,
            got: logits.len(),
        });
    }
    Ok(logits)
}

/// Greedy constrained decoding: at each step take the valid token with the
/// highest masked logit (ties to the smallest token id) until eos. The output
/// is always a member of the trie's query set, and among valid tokens the
/// chosen one also maximizes the unmasked logit.
pub fn greedy_decode(
    scorer: &dyn Scorer,
    trie: &TokenTrie,
    tokenizer: &dyn Tokenizer,
) -> Result<(String, f64), DecodeError> {
    let vocab = tokenizer.vocab_size();
    let eos = tokenizer.eos_id();
    let mut node = trie.root();
    let mut prefix: Vec<TokenId> = Vec::new();
    let mut log_prob_sum = 0.0;
    loop {
        let valid = trie.children(node);
        let logits = checked_score(scorer, &prefix, vocab)?;
        let masked = mask_logits(&logits, &valid)?;
        // Ascending iteration with a strict > keeps the smallest token id
        // among equal logits.
        let mut chosen: Option<TokenId> = None;
        for &t in &valid {
            let better = match chosen {
                None => true,
                Some(c) => masked[t as usize] > masked[c as usize],
            };
            if better {
                chosen = Some(t);
            }
        }
        let chosen = chosen.ok_or(DecodeError::EmptyValidSet)?;
        log_prob_sum += masked[chosen as usize] - log_sum_exp(&masked);
        if chosen == eos {
            return Ok((tokenizer.decode(&prefix), log_prob_sum));
        }
        node = trie
            .step(node, chosen)
            .expect("chosen token is a trie child");
        prefix.push(chosen);
    }
}

/// Beam search over masked log-probabilities. Finished beams are retained
/// unextended and compete with live ones by total log-probability (no length
/// normalization). Results are sorted by log-probability descending, text
/// ascending; a width of 1 reproduces greedy decoding and a width equal to
/// the trie's query count returns exactly the full valid set.
pub fn beam_decode(
    scorer: &dyn Scorer,
    trie: &TokenTrie,
    tokenizer: &dyn Tokenizer,
    width: usize,
) -> Result<Vec<(String, f64)>, DecodeError> {
    if width == 0 {
        return Err(DecodeError::ZeroWidth);
    }
    let vocab = tokenizer.vocab_size();
    let eos = tokenizer.eos_id();

    struct State {
        beam: Beam,
        node: u32,
    }
    let mut beams = vec![State {
        beam: Beam {
            tokens: Vec::new(),
            log_prob_sum: 0.0,
            finished: false,
        },
        node: trie.root(),
    }];

    while beams.iter().any(|s| !s.beam.finished) {
        let mut candidates: Vec<State> = Vec::new();
        for state in beams {
            if state.beam.finished {
                candidates.push(state);
                continue;
            }
            let valid = trie.children(state.node);
            let logits = checked_score(scorer, &state.beam.tokens, vocab)?;
            let masked = mask_logits(&logits, &valid)?;
            let lse = log_sum_exp(&masked);
            for t in valid {
                let log_prob_sum = state.beam.log_prob_sum + masked[t as usize] - lse;
                if t == eos {
                    candidates.push(State {
                        beam: Beam {
                            tokens: state.beam.tokens.clone(),
                            log_prob_sum,
                            finished: true,
                        },
                        node: state.node,
                    });
                } else {
                    let mut tokens = state.beam.tokens.clone();
                    tokens.push(t);
                    candidates.push(State {
                        beam: Beam {
                            tokens,
                            log_prob_sum,
                            finished: false,
                        },
                        node: trie.step(state.node, t).expect("valid child"),
                    });
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.beam
                .log_prob_sum
                .total_cmp(&a.beam.log_prob_sum)
                .then_with(|| a.beam.tokens.cmp(&b.beam.tokens))
        });
        candidates.truncate(width);
        beams = candidates;
    }

    let mut results: Vec<(String, f64)> = beams
        .into_iter()
        .map(|s| (tokenizer.decode(&s.beam.tokens), s.beam.log_prob_sum))
        .collect();
    results.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(results)
}
