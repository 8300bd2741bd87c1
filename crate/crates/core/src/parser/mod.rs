//! Earley parsing over token graphs with constraint enforcement.
//!
//! [`Parser::parse`] builds a [`ParseForest`] holding every derivation that
//! survives the inline checks (associativity, list counts and, by default,
//! operator priority between nested operands). The remaining
//! disambiguation runs as forest passes: [`disambiguate_composition`] and
//! [`filter_priority`].

mod earley;
mod filters;
mod forest;
mod tables;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::grammar::Grammar;
use crate::lexer::TokenGraph;

pub use filters::{disambiguate_composition, filter_priority};
pub use forest::{
    Enumeration, Family, ForestNode, NodeId, NodeKind, ParseForest, ParseTree, EXPLICIT_MARK, INNER_ATTACHMENT,
    NESTING, OUTER_ATTACHMENT,
};
pub use tables::{ElemIdx, Sig};

/// Which constraints are enforced while parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Inhibit reductions violating associativity.
    pub associativity: bool,
    /// Inhibit lists outside their multiplicity bounds.
    pub counts: bool,
    /// Inhibit operands of lower priority nested under an operator of
    /// higher priority. When off, such derivations are only flagged and
    /// [`filter_priority`] removes them.
    pub priority_nesting: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { associativity: true, counts: true, priority_nesting: true }
    }
}

impl ParseOptions {
    /// No inline constraint: the forest holds every derivation.
    pub const UNCONSTRAINED: ParseOptions =
        ParseOptions { associativity: false, counts: false, priority_nesting: false };
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no parse: unexpected input at offset {offset}, expected {}", expected_list(.expected))]
pub struct NoParseError {
    /// Rightmost token-graph position the parser reached.
    pub offset: usize,
    /// Terminals acceptable there.
    pub expected: Vec<String>,
    /// The input has derivations, all of which violate some constraint.
    pub constraints_inhibited: bool,
}

fn expected_list(expected: &[String]) -> String {
    if expected.is_empty() {
        "nothing".to_string()
    } else {
        expected.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AmbiguousSpan {
    pub symbol: String,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for AmbiguousSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}, {})", self.symbol, self.start, self.end)
    }
}

fn span_list(spans: &[AmbiguousSpan]) -> String {
    spans.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ambiguous input: {total} parses, differing at {}", span_list(.spans))]
pub struct AmbiguityError {
    pub total: u64,
    pub spans: Vec<AmbiguousSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("explicit composition constraint violated at {}", span_list(.spans))]
pub struct ExplicitViolationError {
    pub spans: Vec<AmbiguousSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error(transparent)]
    NoParse(#[from] NoParseError),
    #[error(transparent)]
    Ambiguity(#[from] AmbiguityError),
    #[error(transparent)]
    ExplicitViolation(#[from] ExplicitViolationError),
}

/// A grammar prepared for parsing.
pub struct Parser {
    grammar: Arc<Grammar>,
    tables: tables::Tables,
}

impl Parser {
    pub fn new(grammar: Arc<Grammar>) -> Parser {
        let tables = tables::Tables::new(&grammar);
        Parser { grammar, tables }
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn parse(&self, tokens: &TokenGraph) -> Result<ParseForest, NoParseError> {
        self.parse_with(tokens, ParseOptions::default())
    }

    pub fn parse_with(&self, tokens: &TokenGraph, options: ParseOptions) -> Result<ParseForest, NoParseError> {
        let outcome = earley::Earley::new(&self.grammar, &self.tables, tokens, options).run();
        if !outcome.roots.is_empty() {
            let forest = ParseForest::new(self.grammar.clone(), tokens.clone(), outcome.nodes, outcome.roots);
            if !forest.is_empty() {
                return Ok(forest);
            }
        }
        let constraints_inhibited = options != ParseOptions::UNCONSTRAINED
            && !earley::Earley::new(&self.grammar, &self.tables, tokens, ParseOptions::UNCONSTRAINED)
                .run()
                .roots
                .is_empty();
        Err(NoParseError {
            offset: tokens.positions[outcome.rightmost],
            expected: outcome.expected.iter().map(|&s| self.grammar.symbol_name(s).to_string()).collect(),
            constraints_inhibited,
        })
    }
}

/// Parses with every inline constraint enabled.
pub fn parse(grammar: &Arc<Grammar>, tokens: &TokenGraph) -> Result<ParseForest, NoParseError> {
    Parser::new(grammar.clone()).parse(tokens)
}

/// Parses with the given inline constraints.
pub fn parse_with(
    grammar: &Arc<Grammar>,
    tokens: &TokenGraph,
    options: ParseOptions,
) -> Result<ParseForest, NoParseError> {
    Parser::new(grammar.clone()).parse_with(tokens, options)
}
