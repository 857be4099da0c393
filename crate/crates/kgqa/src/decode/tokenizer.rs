//! Tokenizer contract and the byte-fallback reference tokenizer.

use std::collections::BTreeSet;

pub type TokenId = u32;

/// Tokenizer contract: a fixed vocabulary of token strings with integer ids,
/// deterministic encoding, and a reserved end-of-sequence id. `decode` must
/// invert `encode` on every canonical query string.
pub trait Tokenizer {
    fn vocab_size(&self) -> usize;
    fn eos_id(&self) -> TokenId;
    fn token_bytes(&self, id: TokenId) -> &[u8];
    fn encode(&self, text: &str) -> Vec<TokenId>;

    fn decode(&self, tokens: &[TokenId]) -> String {
        let mut bytes = Vec::new();
        for &t in tokens {
            if t != self.eos_id() {
                bytes.extend_from_slice(self.token_bytes(t));
            }
        }
        String::from_utf8_lossy(&bytes).into_owned()
    }
}

/// Reference tokenizer: all 256 single bytes, plus multi-byte fragments
/// harvested from a corpus (identifier words, quoted names, and the
/// structural punctuation of the query grammar), plus a reserved eos token.
/// Encoding is greedy longest-match left to right; the byte fallback makes
/// it total, so round-tripping holds for arbitrary strings.
#[derive(Debug, Clone)]
pub struct ReferenceTokenizer {
    vocab: Vec<Vec<u8>>,
    /// Multi-byte token ids bucketed by first byte, longest first.
    by_first_byte: Vec<Vec<TokenId>>,
    eos: TokenId,
}

/// Grammar punctuation worth a single token when it occurs in the corpus.
const STRUCTURAL: &[&str] = &[
    "MATCH (",
    " {name: \"",
    "\"})",
    ")-[",
    "]-(",
    ") WHERE ",
    " <> ",
    " AND ",
    ") RETURN nodes(",
    ") RETURN *",
    "RETURN ",
    "nodes(",
];

impl ReferenceTokenizer {
    pub fn from_corpus<S: AsRef<str>>(corpus: &[S]) -> Self {
        let mut fragments: BTreeSet<Vec<u8>> = BTreeSet::new();
        for s in corpus {
            let s = s.as_ref();
            harvest_words(s, &mut fragments);
            harvest_quoted(s, &mut fragments);
        }
        for frag in STRUCTURAL {
            if corpus.iter().any(|s| s.as_ref().contains(frag)) {
                fragments.insert(frag.as_bytes().to_vec());
            }
        }
        fragments.retain(|f| f.len() >= 2);

        let mut vocab: Vec<Vec<u8>> = (0u16..256).map(|b| vec![b as u8]).collect();
        vocab.extend(fragments);
        let eos = vocab.len() as TokenId;
        vocab.push(Vec::new());

        let mut by_first_byte: Vec<Vec<TokenId>> = vec![Vec::new(); 256];
        for (id, bytes) in vocab.iter().enumerate() {
            if bytes.len() >= 2 {
                by_first_byte[bytes[0] as usize].push(id as TokenId);
            }
        }
        for bucket in &mut by_first_byte {
            bucket.sort_by(|a, b| {
                let (a, b) = (&vocab[*a as usize], &vocab[*b as usize]);
                b.len().cmp(&a.len()).then(a.cmp(b))
            });
        }
        ReferenceTokenizer {
            vocab,
            by_first_byte,
            eos,
        }
    }
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

fn harvest_words(s: &str, out: &mut BTreeSet<Vec<u8>>) {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if is_word_byte(bytes[i]) {
            let start = i;
            while i < bytes.len() && is_word_byte(bytes[i]) {
                i += 1;
            }
            out.insert(bytes[start..i].to_vec());
        } else {
            i += 1;
        }
    }
}

/// Collect the surface form (escapes intact) of every quoted literal.
fn harvest_quoted(s: &str, out: &mut BTreeSet<Vec<u8>>) {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'"' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() {
                match bytes[j] {
                    b'\\' => j += 2,
                    b'"' => break,
                    _ => j += 1,
                }
            }
            if j <= bytes.len() {
                out.insert(bytes[start..j.min(bytes.len())].to_vec());
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
}

impl Tokenizer for ReferenceTokenizer {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn eos_id(&self) -> TokenId {
        self.eos
    }

    fn token_bytes(&self, id: TokenId) -> &[u8] {
        &self.vocab[id as usize]
    }

    fn encode(&self, text: &str) -> Vec<TokenId> {
        let bytes = text.as_bytes();
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < bytes.len() {
            let rest = &bytes[pos..];
            let mut matched = None;
            for &id in &self.by_first_byte[bytes[pos] as usize] {
                let tok = &self.vocab[id as usize];
                if rest.starts_with(tok) {
                    matched = Some((id, tok.len()));
                    break;
                }
            }
            match matched {
                Some((id, len)) => {
                    out.push(id);
                    pos += len;
                }
                None => {
                    out.push(TokenId::from(bytes[pos]));
                    pos += 1;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_a_simple_query() {
        let tok = ReferenceTokenizer::from_corpus(&["MATCH (a) RETURN *"]);
        let ids = tok.encode("MATCH (a)");
        assert_eq!(tok.decode(&ids), "MATCH (a)");
    }

    #[test]
    fn unknown_words_fall_back_to_bytes() {
        let tok = ReferenceTokenizer::from_corpus(&["MATCH (a) RETURN *"]);
        let ids = tok.encode("zebra");
        // No fragment covers "zebra", so it is five single-byte tokens.
        assert_eq!(ids.len(), 5);
        assert!(ids.iter().all(|&id| id < 256));
        assert_eq!(tok.decode(&ids), "zebra");
    }

    #[test]
    fn corpus_words_become_single_tokens() {
        let tok =
            ReferenceTokenizer::from_corpus(&["MATCH (src:GeneOrProtein) RETURN nodes(src)"]);
        let ids = tok.encode("GeneOrProtein");
        assert_eq!(ids.len(), 1);
        assert!(ids[0] >= 256);
    }

    #[test]
    fn round_trips_the_whole_corpus() {
        let corpus = vec![
            "MATCH (src {name: \"CYP3A4\"})-[r:ENZYME]-(tgt:Drug) RETURN nodes(tgt)".to_string(),
            "MATCH (src {name: \"odd \\\"name\\\"\"})-[r]-(tgt) RETURN nodes(tgt)".to_string(),
            "MATCH (a)-[r1]-(b)-[r2]-(c) WHERE a <> c RETURN *".to_string(),
        ];
        let tok = ReferenceTokenizer::from_corpus(&corpus);
        for q in &corpus {
            assert_eq!(&tok.decode(&tok.encode(q)), q);
        }
    }

    #[test]
    fn encoding_is_deterministic() {
        let tok = ReferenceTokenizer::from_corpus(&["MATCH (a) RETURN *"]);
        assert_eq!(tok.encode("MATCH (a) RETURN *"), tok.encode("MATCH (a) RETURN *"));
    }

    #[test]
    fn eos_is_reserved_and_empty() {
        let tok = ReferenceTokenizer::from_corpus(&["x"]);
        assert_eq!(tok.eos_id() as usize, tok.vocab_size() - 1);
        assert!(tok.token_bytes(tok.eos_id()).is_empty());
    }
}
