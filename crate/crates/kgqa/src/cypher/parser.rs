//! Hand-rolled lexer and recursive-descent parser for the query subset.
//!
//! The parser is whitespace-tolerant; re-serializing the AST yields the
//! canonical form. Every failure carries the byte offset it occurred at.

use std::fmt;

use thiserror::Error;

use super::ast::{
    AstError, EdgePattern, NodePattern, PathPattern, PathQuery, ReturnSpec, RESERVED,
};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("syntax error at offset {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

impl ParseError {
    fn new(pos: usize, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Colon,
    Dash,
    Neq,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(_) => write!(f, "string literal"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Dash => write!(f, "`-`"),
            Tok::Neq => write!(f, "`<>`"),
            Tok::Star => write!(f, "`*`"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'(' => push(&mut toks, &mut i, Tok::LParen),
            b')' => push(&mut toks, &mut i, Tok::RParen),
            b'[' => push(&mut toks, &mut i, Tok::LBracket),
            b']' => push(&mut toks, &mut i, Tok::RBracket),
            b'{' => push(&mut toks, &mut i, Tok::LBrace),
            b'}' => push(&mut toks, &mut i, Tok::RBrace),
            b':' => push(&mut toks, &mut i, Tok::Colon),
            b'-' => push(&mut toks, &mut i, Tok::Dash),
            b'*' => push(&mut toks, &mut i, Tok::Star),
            b'<' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    toks.push((i, Tok::Neq));
                    i += 2;
                } else {
                    return Err(ParseError::new(i, "expected `<>`"));
                }
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut value = String::new();
                loop {
                    match bytes.get(i) {
                        None => return Err(ParseError::new(start, "unterminated string literal")),
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') => match bytes.get(i + 1) {
                            Some(b'"') => {
                                value.push('"');
                                i += 2;
                            }
                            Some(b'\\') => {
                                value.push('\\');
                                i += 2;
                            }
                            _ => return Err(ParseError::new(i, "invalid escape sequence")),
                        },
                        Some(_) => {
                            // Consume one full UTF-8 character.
                            let rest = &text[i..];
                            let c = rest.chars().next().unwrap();
                            value.push(c);
                            i += c.len_utf8();
                        }
                    }
                }
                toks.push((start, Tok::Str(value)));
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                let c = text[i..].chars().next().unwrap();
                return Err(ParseError::new(i, format!("unexpected character `{c}`")));
            }
        }
    }
    Ok(toks)
}

fn push(toks: &mut Vec<(usize, Tok)>, i: &mut usize, tok: Tok) {
    toks.push((*i, tok));
    *i += 1;
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
    /// Variable occurrence positions, for mapping AST validation errors back
    /// to source offsets.
    var_positions: Vec<(String, usize)>,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [(usize, Tok)], end: usize) -> Self {
        Parser {
            toks,
            pos: 0,
            end,
            var_positions: Vec::new(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self, expected: &str) -> Result<(usize, Tok), ParseError> {
        match self.toks.get(self.pos) {
            Some((p, t)) => {
                self.pos += 1;
                Ok((*p, t.clone()))
            }
            None => Err(ParseError::new(
                self.end,
                format!("unexpected end of input, expected {expected}"),
            )),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<usize, ParseError> {
        let (p, got) = self.next(&tok.to_string())?;
        if got == tok {
            Ok(p)
        } else {
            Err(ParseError::new(p, format!("expected {tok}, found {got}")))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let (p, got) = self.next(&format!("`{kw}`"))?;
        match got {
            Tok::Ident(s) if s == kw => Ok(()),
            other => Err(ParseError::new(p, format!("expected `{kw}`, found {other}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(usize, String), ParseError> {
        let (p, got) = self.next(what)?;
        match got {
            Tok::Ident(s) => Ok((p, s)),
            other => Err(ParseError::new(p, format!("expected {what}, found {other}"))),
        }
    }

    fn variable(&mut self, what: &str) -> Result<String, ParseError> {
        let (p, name) = self.ident(what)?;
        if RESERVED.contains(&name.as_str()) {
            return Err(ParseError::new(
                p,
                format!("`{name}` is a reserved word and cannot name a variable"),
            ));
        }
        self.var_positions.push((name.clone(), p));
        Ok(name)
    }

    fn node_pattern(&mut self) -> Result<NodePattern, ParseError> {
        self.expect(Tok::LParen)?;
        let var = self.variable("a variable name")?;
        let mut node = NodePattern::new(&var);
        if self.peek() == Some(&Tok::Colon) {
            self.expect(Tok::Colon)?;
            let (_, label) = self.ident("a label")?;
            node.label = Some(label);
        }
        if self.peek() == Some(&Tok::LBrace) {
            self.expect(Tok::LBrace)?;
            let (p, key) = self.ident("`name`")?;
            if key != "name" {
                return Err(ParseError::new(
                    p,
                    format!("only `name` predicates are supported, found `{key}`"),
                ));
            }
            self.expect(Tok::Colon)?;
            let (p, tok) = self.next("a quoted string")?;
            match tok {
                Tok::Str(s) => node.name = Some(s),
                other => {
                    return Err(ParseError::new(
                        p,
                        format!("expected a quoted string, found {other}"),
                    ))
                }
            }
            self.expect(Tok::RBrace)?;
        }
        self.expect(Tok::RParen)?;
        Ok(node)
    }

    fn edge_pattern(&mut self) -> Result<EdgePattern, ParseError> {
        self.expect(Tok::Dash)?;
        self.expect(Tok::LBracket)?;
        let var = self.variable("a variable name")?;
        let mut edge = EdgePattern::new(&var);
        if self.peek() == Some(&Tok::Colon) {
            self.expect(Tok::Colon)?;
            let (_, t) = self.ident("a relationship type")?;
            edge.rel_type = Some(t);
        }
        self.expect(Tok::RBracket)?;
        self.expect(Tok::Dash)?;
        Ok(edge)
    }

    fn path_pattern(&mut self) -> Result<PathPattern, ParseError> {
        let start = self.node_pattern()?;
        let mut hops = Vec::new();
        while self.peek() == Some(&Tok::Dash) {
            let edge = self.edge_pattern()?;
            let node = self.node_pattern()?;
            hops.push((edge, node));
        }
        Ok(PathPattern { start, hops })
    }

    fn where_clauses(&mut self) -> Result<Vec<(String, String)>, ParseError> {
        let mut out = Vec::new();
        loop {
            let a = self.variable("a variable name")?;
            self.expect(Tok::Neq)?;
            let b = self.variable("a variable name")?;
            out.push((a, b));
            match self.peek() {
                Some(Tok::Ident(s)) if s == "AND" => {
                    self.expect_keyword("AND")?;
                }
                _ => break,
            }
        }
        Ok(out)
    }

    fn return_spec(&mut self) -> Result<ReturnSpec, ParseError> {
        let (p, tok) = self.next("`*` or `nodes(var)`")?;
        match tok {
            Tok::Star => Ok(ReturnSpec::Bindings),
            Tok::Ident(s) if s == "nodes" => {
                self.expect(Tok::LParen)?;
                let var = self.variable("a variable name")?;
                self.expect(Tok::RParen)?;
                Ok(ReturnSpec::TargetNodes(var))
            }
            other => Err(ParseError::new(
                p,
                format!("unknown return spec: expected `*` or `nodes(var)`, found {other}"),
            )),
        }
    }

    fn eof(&mut self) -> Result<(), ParseError> {
        if let Some((p, t)) = self.toks.get(self.pos) {
            return Err(ParseError::new(*p, format!("unexpected {t} after query")));
        }
        Ok(())
    }

    fn position_of(&self, var: &str) -> usize {
        // Report the last occurrence: for duplicates that is the offending one.
        self.var_positions
            .iter()
            .rev()
            .find(|(v, _)| v == var)
            .map(|(_, p)| *p)
            .unwrap_or(self.end)
    }
}

/// Parse a full `MATCH .. [WHERE ..] RETURN ..` query.
pub fn parse(text: &str) -> Result<PathQuery, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.len());
    p.expect_keyword("MATCH")?;
    let pattern = p.path_pattern()?;
    let mut wheres = Vec::new();
    if let Some(Tok::Ident(s)) = p.peek() {
        if s == "WHERE" {
            p.expect_keyword("WHERE")?;
            wheres = p.where_clauses()?;
        }
    }
    p.expect_keyword("RETURN")?;
    let ret = p.return_spec()?;
    p.eof()?;
    PathQuery::new(pattern, wheres, ret).map_err(|e| ast_error_to_parse(&p, e))
}

/// Parse a bare path pattern (no `MATCH`/`WHERE`/`RETURN`), as embedded in
/// textualized retrieval output.
pub fn parse_pattern(text: &str) -> Result<PathPattern, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser::new(&toks, text.len());
    let pattern = p.path_pattern()?;
    p.eof()?;
    // Run the same structural validation a full query gets.
    PathQuery::new(pattern.clone(), Vec::new(), ReturnSpec::Bindings)
        .map_err(|e| ast_error_to_parse(&p, e))?;
    Ok(pattern)
}

fn ast_error_to_parse(p: &Parser<'_>, e: AstError) -> ParseError {
    let pos = match &e {
        AstError::DuplicateVariable(v)
        | AstError::UndeclaredVariable(v)
        | AstError::ReservedVariable(v)
        | AstError::NotANodeVariable(v) => p.position_of(v),
        AstError::EmptyVariable => p.end,
    };
    ParseError::new(pos, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_typed_two_node_pattern() {
        let q = parse(
            "MATCH (x1:Disease {name: \"strongyloidiasis\"})-[r1:INDICATION]-(x2:Drug) RETURN nodes(x2)",
        )
        .unwrap();
        let nodes: Vec<_> = q.node_patterns().collect();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[0].label.as_deref(), Some("Disease"));
        assert_eq!(nodes[0].name.as_deref(), Some("strongyloidiasis"));
        assert_eq!(nodes[1].label.as_deref(), Some("Drug"));
        let edges: Vec<_> = q.edge_patterns().collect();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].rel_type.as_deref(), Some("INDICATION"));
    }

    #[test]
    fn parses_single_node_query() {
        let q = parse("MATCH (a) RETURN nodes(a)").unwrap();
        assert_eq!(q.node_patterns().count(), 1);
        assert_eq!(q.edge_patterns().count(), 0);
        assert!(q.where_clauses().is_empty());
        assert_eq!(q.to_string(), "MATCH (a) RETURN nodes(a)");
    }

    #[test]
    fn parses_where_conjunction() {
        let q = parse(
            "MATCH (src1 {name: \"a\"})-[r1]-(tgt)-[r2]-(src2 {name: \"b\"}) WHERE src1 <> src2 AND src1 <> tgt RETURN nodes(tgt)",
        )
        .unwrap();
        assert_eq!(q.where_clauses().len(), 2);
    }

    #[test]
    fn whitespace_is_canonicalized() {
        let q = parse("MATCH ( a )-[ r ]-( b )   RETURN   *").unwrap();
        assert_eq!(q.to_string(), "MATCH (a)-[r]-(b) RETURN *");
    }

    #[test]
    fn string_escapes_round_trip() {
        let q = parse("MATCH (a {name: \"q\\\"uo\\\\te\"}) RETURN *").unwrap();
        assert_eq!(q.node_patterns().next().unwrap().name.as_deref(), Some("q\"uo\\te"));
        let again = parse(&q.to_string()).unwrap();
        assert_eq!(q, again);
    }

    #[test]
    fn error_positions_point_at_the_problem() {
        let err = parse("MATCH (a)-[r]->(b) RETURN *").unwrap_err();
        assert_eq!(err.pos, 14);
        let err = parse("MATCH (a) RETURN gold(a)").unwrap_err();
        assert_eq!(err.pos, 17);
        assert!(err.message.contains("return spec"));
    }

    #[test]
    fn unterminated_string_is_an_error() {
        let err = parse("MATCH (a {name: \"oops) RETURN *").unwrap_err();
        assert!(err.message.contains("unterminated"));
    }

    #[test]
    fn duplicate_variable_reported_with_position() {
        let err = parse("MATCH (a)-[a]-(b) RETURN *").unwrap_err();
        assert!(err.message.contains("duplicate variable"));
        assert_eq!(err.pos, 11);
    }

    #[test]
    fn undeclared_where_variable_rejected() {
        let err = parse("MATCH (a) WHERE a <> ghost RETURN *").unwrap_err();
        assert!(err.message.contains("undeclared"));
    }

    #[test]
    fn directed_arrows_are_not_in_the_language() {
        assert!(parse("MATCH (a)-[r]->(b) RETURN *").is_err());
        assert!(parse("MATCH (a)<-[r]-(b) RETURN *").is_err());
    }

    #[test]
    fn parse_pattern_accepts_bare_paths() {
        let p = parse_pattern("(x1:GeneOrProtein {name: \"CYP3A4\"})-[r1:ENZYME]-(x2:Drug {name: \"Ivermectin\"})")
            .unwrap();
        assert_eq!(p.hop_count(), 1);
        assert_eq!(
            p.to_string(),
            "(x1:GeneOrProtein {name: \"CYP3A4\"})-[r1:ENZYME]-(x2:Drug {name: \"Ivermectin\"})"
        );
    }

    #[test]
    fn parse_pattern_rejects_full_queries() {
        assert!(parse_pattern("MATCH (a) RETURN *").is_err());
    }
}
