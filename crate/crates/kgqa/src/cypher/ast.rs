//! Query AST and its canonical text form.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Words that cannot be used as variable names.
pub(crate) const RESERVED: [&str; 5] = ["MATCH", "WHERE", "RETURN", "AND", "nodes"];

/// `(var[:Label][ {name: "..."}])`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodePattern {
    pub var: String,
    pub label: Option<String>,
    /// Exact name-equality predicate.
    pub name: Option<String>,
}

impl NodePattern {
    pub fn new(var: &str) -> Self {
        NodePattern {
            var: var.to_string(),
            label: None,
            name: None,
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }
}

/// `-[var[:TYPE]]-` — always undirected.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgePattern {
    pub var: String,
    pub rel_type: Option<String>,
}

impl EdgePattern {
    pub fn new(var: &str) -> Self {
        EdgePattern {
            var: var.to_string(),
            rel_type: None,
        }
    }

    pub fn with_type(mut self, rel_type: &str) -> Self {
        self.rel_type = Some(rel_type.to_string());
        self
    }
}

/// A linear path: nodes and edges alternating, starting and ending with a
/// node pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathPattern {
    pub start: NodePattern,
    pub hops: Vec<(EdgePattern, NodePattern)>,
}

impl PathPattern {
    pub fn node_patterns(&self) -> impl Iterator<Item = &NodePattern> {
        std::iter::once(&self.start).chain(self.hops.iter().map(|(_, n)| n))
    }

    pub fn edge_patterns(&self) -> impl Iterator<Item = &EdgePattern> {
        self.hops.iter().map(|(e, _)| e)
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }
}

impl fmt::Display for PathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.start)?;
        for (edge, node) in &self.hops {
            write!(f, "-[{}", edge.var)?;
            if let Some(t) = &edge.rel_type {
                write!(f, ":{t}")?;
            }
            write!(f, "]-")?;
            write_node(f, node)?;
        }
        Ok(())
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &NodePattern) -> fmt::Result {
    write!(f, "({}", node.var)?;
    if let Some(l) = &node.label {
        write!(f, ":{l}")?;
    }
    if let Some(n) = &node.name {
        write!(f, " {{name: \"{}\"}}", escape_name(n))?;
    }
    write!(f, ")")
}

/// Escape a name for embedding in a double-quoted literal: `\` and `"` are
/// backslash-escaped, everything else passes through.
pub fn escape_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReturnSpec {
    /// `RETURN *` — full binding rows.
    Bindings,
    /// `RETURN nodes(var)` — the nodes bound to one target variable.
    TargetNodes(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Node,
    Edge,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AstError {
    #[error("variable name is empty")]
    EmptyVariable,
    #[error("`{0}` is a reserved word and cannot name a variable")]
    ReservedVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("`{0}` is not a node variable")]
    NotANodeVariable(String),
}

/// A complete validated query: path pattern, `<>` constraints, return form.
///
/// Construction enforces the structural invariants (unique non-empty
/// variables, constraints and return spec referencing declared variables), so
/// a `PathQuery` in hand is always executable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathQuery {
    pattern: PathPattern,
    where_clauses: Vec<(String, String)>,
    return_spec: ReturnSpec,
}

impl PathQuery {
    pub fn new(
        pattern: PathPattern,
        where_clauses: Vec<(String, String)>,
        return_spec: ReturnSpec,
    ) -> Result<Self, AstError> {
        let mut vars: BTreeMap<&str, VarKind> = BTreeMap::new();
        let mut ordered: Vec<(&str, VarKind)> = Vec::new();
        ordered.push((pattern.start.var.as_str(), VarKind::Node));
        for (edge, node) in &pattern.hops {
            ordered.push((edge.var.as_str(), VarKind::Edge));
            ordered.push((node.var.as_str(), VarKind::Node));
        }
        for (var, kind) in ordered {
            if var.is_empty() {
                return Err(AstError::EmptyVariable);
            }
            if RESERVED.contains(&var) {
                return Err(AstError::ReservedVariable(var.to_string()));
            }
            if vars.insert(var, kind).is_some() {
                return Err(AstError::DuplicateVariable(var.to_string()));
            }
        }
        for (a, b) in &where_clauses {
            for v in [a, b] {
                if !vars.contains_key(v.as_str()) {
                    return Err(AstError::UndeclaredVariable(v.clone()));
                }
            }
        }
        if let ReturnSpec::TargetNodes(v) = &return_spec {
            match vars.get(v.as_str()) {
                None => return Err(AstError::UndeclaredVariable(v.clone())),
                Some(VarKind::Edge) => return Err(AstError::NotANodeVariable(v.clone())),
                Some(VarKind::Node) => {}
            }
        }
        Ok(PathQuery {
            pattern,
            where_clauses,
            return_spec,
        })
    }

    pub fn pattern(&self) -> &PathPattern {
        &self.pattern
    }

    pub fn where_clauses(&self) -> &[(String, String)] {
        &self.where_clauses
    }

    pub fn return_spec(&self) -> &ReturnSpec {
        &self.return_spec
    }

    pub fn node_patterns(&self) -> impl Iterator<Item = &NodePattern> {
        self.pattern.node_patterns()
    }

    pub fn edge_patterns(&self) -> impl Iterator<Item = &EdgePattern> {
        self.pattern.edge_patterns()
    }

    pub fn var_kind(&self, var: &str) -> Option<VarKind> {
        if self.node_patterns().any(|n| n.var == var) {
            Some(VarKind::Node)
        } else if self.edge_patterns().any(|e| e.var == var) {
            Some(VarKind::Edge)
        } else {
            None
        }
    }

    /// The variable whose bindings the query is about: the `nodes(..)` target
    /// if one was given, otherwise the last node in the path.
    pub fn target_var(&self) -> &str {
        match &self.return_spec {
            ReturnSpec::TargetNodes(v) => v,
            ReturnSpec::Bindings => self
                .pattern
                .hops
                .last()
                .map(|(_, n)| n.var.as_str())
                .unwrap_or(self.pattern.start.var.as_str()),
        }
    }

    /// True when any node label or relationship type annotation is present.
    pub fn is_typed(&self) -> bool {
        self.node_patterns().any(|n| n.label.is_some())
            || self.edge_patterns().any(|e| e.rel_type.is_some())
    }
}

impl fmt::Display for PathQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MATCH {}", self.pattern)?;
        if !self.where_clauses.is_empty() {
            write!(f, " WHERE ")?;
            for (i, (a, b)) in self.where_clauses.iter().enumerate() {
                if i > 0 {
                    write!(f, " AND ")?;
                }
                write!(f, "{a} <> {b}")?;
            }
        }
        match &self.return_spec {
            ReturnSpec::Bindings => write!(f, " RETURN *"),
            ReturnSpec::TargetNodes(v) => write!(f, " RETURN nodes({v})"),
        }
    }
}
