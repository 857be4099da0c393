//! The restricted path-pattern query subset: AST, parser, canonical
//! serializer, executor, and hit/count aggregation.
//!
//! The language covers undirected linear path patterns with optional node
//! labels, exact `{name: "..."}` predicates, optional relationship types,
//! `<>` distinctness constraints, and two return forms (`*` for full binding
//! rows, `nodes(var)` for a target variable). Nothing else — no directed
//! edges, no variable-length paths, no other predicates.

mod ast;
mod execute;
mod parser;

pub use ast::{
    escape_name, AstError, NodePattern, PathPattern, PathQuery, ReturnSpec, VarKind,
};
pub use execute::{aggregate_counts, execute, AggregateError, BindingRow, BoundValue};
pub use parser::{parse, parse_pattern, ParseError};

pub use ast::EdgePattern;
