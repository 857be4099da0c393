//! Prefix trie over the tokenizations of all valid queries.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use super::tokenizer::{TokenId, Tokenizer};
use super::DecodeError;

#[derive(Debug, Default, Clone)]
struct TrieNode {
    children: BTreeMap<TokenId, u32>,
    /// Reached by consuming eos: a complete query ends here.
    terminal: bool,
}

/// Token trie: root-to-terminal paths are exactly the tokenizations of the
/// valid queries, each terminated by the eos token. The branching set at any
/// prefix is the valid-next-token mask for that step.
#[derive(Debug, Clone)]
pub struct TokenTrie {
    nodes: Vec<TrieNode>,
    query_count: usize,
}

impl TokenTrie {
    /// Build from a non-empty, deduplicated query list.
    pub fn build<S: AsRef<str>>(
        queries: &[S],
        tokenizer: &dyn Tokenizer,
    ) -> Result<Self, DecodeError> {
        if queries.is_empty() {
            return Err(DecodeError::EmptyQuerySet);
        }
        let mut trie = TokenTrie {
            nodes: vec![TrieNode::default()],
            query_count: 0,
        };
        for q in queries {
            let mut tokens = tokenizer.encode(q.as_ref());
            tokens.push(tokenizer.eos_id());
            let mut at = 0usize;
            for t in tokens {
                at = match trie.nodes[at].children.get(&t) {
                    Some(&next) => next as usize,
                    None => {
                        let next = trie.nodes.len();
                        trie.nodes.push(TrieNode::default());
                        trie.nodes[at].children.insert(t, next as u32);
                        next
                    }
                };
            }
            if trie.nodes[at].terminal {
                return Err(DecodeError::DuplicateQuery(q.as_ref().to_string()));
            }
            trie.nodes[at].terminal = true;
            trie.query_count += 1;
        }
        Ok(trie)
    }

    /// Number of queries the trie accepts.
    pub fn query_count(&self) -> usize {
        self.query_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn root(&self) -> u32 {
        0
    }

    pub(crate) fn step(&self, node: u32, token: TokenId) -> Option<u32> {
        self.nodes[node as usize].children.get(&token).copied()
    }

    pub(crate) fn children(&self, node: u32) -> BTreeSet<TokenId> {
        self.nodes[node as usize].children.keys().copied().collect()
    }

    /// The set of valid tokens after the given prefix: the children at the
    /// prefix's trie node, including eos where a query terminates. Errors if
    /// the prefix is not a path in the trie (a constrained decoder never
    /// produces such a prefix).
    pub fn valid_next_tokens(&self, prefix: &[TokenId]) -> Result<BTreeSet<TokenId>, DecodeError> {
        let mut at = self.root();
        for (i, &t) in prefix.iter().enumerate() {
            at = self.step(at, t).ok_or(DecodeError::PrefixNotInTrie(i))?;
        }
        Ok(self.children(at))
    }

    /// Whether `tokens` (without eos) is exactly the tokenization of some
    /// accepted query.
    pub fn accepts(&self, tokens: &[TokenId], eos: TokenId) -> bool {
        let mut at = self.root();
        for &t in tokens {
            match self.step(at, t) {
                Some(next) => at = next,
                None => return false,
            }
        }
        match self.step(at, eos) {
            Some(end) => self.nodes[end as usize].terminal,
            None => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::ReferenceTokenizer;

    /// Minimal fixed-vocabulary tokenizer: bytes plus eos.
    struct ByteTok;
    impl Tokenizer for ByteTok {
        fn vocab_size(&self) -> usize {
            257
        }
        fn eos_id(&self) -> TokenId {
            256
        }
        fn token_bytes(&self, id: TokenId) -> &[u8] {
            static BYTES: [u8; 256] = {
                let mut b = [0u8; 256];
                let mut i = 0;
                while i < 256 {
                    b[i] = i as u8;
                    i += 1;
                }
                b
            };
            if id == 256 {
                &[]
            } else {
                std::slice::from_ref(&BYTES[id as usize])
            }
        }
        fn encode(&self, text: &str) -> Vec<TokenId> {
            text.bytes().map(TokenId::from).collect()
        }
    }

    #[test]
    fn single_query_is_a_chain() {
        let tok = ByteTok;
        let trie = TokenTrie::build(&["abc"], &tok).unwrap();
        assert_eq!(trie.query_count(), 1);
        // root + a + b + c + eos-terminal
        assert_eq!(trie.node_count(), 5);
        let mut prefix = Vec::new();
        for b in "abc".bytes() {
            let valid = trie.valid_next_tokens(&prefix).unwrap();
            assert_eq!(valid.len(), 1);
            assert!(valid.contains(&TokenId::from(b)));
            prefix.push(TokenId::from(b));
        }
        assert_eq!(
            trie.valid_next_tokens(&prefix).unwrap(),
            [tok.eos_id()].into_iter().collect()
        );
    }

    #[test]
    fn shared_prefix_shares_nodes() {
        let tok = ByteTok;
        let trie = TokenTrie::build(&["ab", "ac"], &tok).unwrap();
        // root, a, b, c, and two eos terminals.
        assert_eq!(trie.node_count(), 6);
        let after_a = trie.valid_next_tokens(&[TokenId::from(b'a')]).unwrap();
        assert_eq!(after_a.len(), 2);
        assert!(after_a.contains(&TokenId::from(b'b')));
        assert!(after_a.contains(&TokenId::from(b'c')));
    }

    #[test]
    fn empty_prefix_yields_first_tokens() {
        let tok = ByteTok;
        let trie = TokenTrie::build(&["ab", "xy"], &tok).unwrap();
        let first = trie.valid_next_tokens(&[]).unwrap();
        assert_eq!(
            first,
            [TokenId::from(b'a'), TokenId::from(b'x')].into_iter().collect()
        );
    }

    #[test]
    fn eos_offered_where_one_query_prefixes_another() {
        let tok = ByteTok;
        let trie = TokenTrie::build(&["ab", "abc"], &tok).unwrap();
        let valid = trie
            .valid_next_tokens(&[TokenId::from(b'a'), TokenId::from(b'b')])
            .unwrap();
        assert!(valid.contains(&tok.eos_id()));
        assert!(valid.contains(&TokenId::from(b'c')));
    }

    #[test]
    fn rejects_empty_and_duplicate_input() {
        let tok = ByteTok;
        assert_eq!(
            TokenTrie::build::<&str>(&[], &tok).unwrap_err(),
            DecodeError::EmptyQuerySet
        );
        assert_eq!(
            TokenTrie::build(&["ab", "ab"], &tok).unwrap_err(),
            DecodeError::DuplicateQuery("ab".to_string())
        );
    }

    #[test]
    fn invalid_prefix_is_an_error() {
        let tok = ByteTok;
        let trie = TokenTrie::build(&["ab"], &tok).unwrap();
        assert_eq!(
            trie.valid_next_tokens(&[TokenId::from(b'z')]).unwrap_err(),
            DecodeError::PrefixNotInTrie(0)
        );
    }

    #[test]
    fn membership_matches_set_membership_under_reference_tokenizer() {
        let queries: Vec<String> = (0..50)
            .map(|i| format!("MATCH (src {{name: \"n{i}\"}})-[r]-(tgt) RETURN nodes(tgt)"))
            .collect();
        let tok = ReferenceTokenizer::from_corpus(&queries);
        let trie = TokenTrie::build(&queries, &tok).unwrap();
        for (i, q) in queries.iter().enumerate() {
            assert!(trie.accepts(&tok.encode(q), tok.eos_id()));
            let mutated = format!("{q} ");
            assert!(!trie.accepts(&tok.encode(&mutated), tok.eos_id()));
            let mutated = q.replace(&format!("n{i}"), "absent");
            assert!(!trie.accepts(&tok.encode(&mutated), tok.eos_id()));
        }
    }
}
