//! Token types and the ambiguity-preserving scanner.
//!
//! Every token type contributes its longest match at every reachable
//! offset, so overlapping interpretations of the same text survive into a
//! [`TokenGraph`] for the parser to choose from.

mod matcher;
pub mod regex;
mod scan;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grammar::{Grammar, TermId, TerminalKind};
use crate::model::{ElementId, LanguageModel, PatternSpec, Precedence, SemanticType};

pub use self::regex::{Regex, RegexError};
pub use matcher::{CustomMatcher, LiteralMatcher, MatcherRegistry, RegexMatcher};
pub use scan::{apply_lexical_precedence, longest_match, scan, ScanError, TokenCandidate, TokenGraph};

/// Token types are identified by the grammar terminal they feed.
pub type TokenTypeId = TermId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenSource {
    Element(ElementId),
    Delimiter(String),
    /// Basic element without a pattern, matched by its value type.
    ImplicitValue {
        element: ElementId,
        ty: SemanticType,
    },
}

#[derive(Clone)]
pub enum TokenMatcher {
    Regex(Regex),
    Custom { matcher: Arc<dyn CustomMatcher>, args: String },
}

impl fmt::Debug for TokenMatcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenMatcher::Regex(re) => write!(f, "Regex({:?})", re.as_str()),
            TokenMatcher::Custom { matcher, args } => write!(f, "Custom({}, {args:?})", matcher.name()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TokenType {
    pub id: TokenTypeId,
    pub name: String,
    pub source: TokenSource,
    pub matcher: TokenMatcher,
    pub priority_value: Option<i64>,
    /// Types this one takes precedence over through `precedes` edges.
    pub precedes: Vec<TokenTypeId>,
}

impl TokenType {
    pub fn element(&self) -> Option<&ElementId> {
        match &self.source {
            TokenSource::Element(id) | TokenSource::ImplicitValue { element: id, .. } => Some(id),
            TokenSource::Delimiter(_) => None,
        }
    }

    /// Whether a candidate of this type wins over one of `other` covering
    /// the same text.
    pub fn dominates(&self, other: &TokenType) -> bool {
        if self.precedes.contains(&other.id) {
            return true;
        }
        if other.precedes.contains(&self.id) {
            return false;
        }
        matches!((self.priority_value, other.priority_value), (Some(a), Some(b)) if a < b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexerError {
    #[error("element `{element}` uses unknown matcher `{name}`")]
    UnknownMatcher { element: ElementId, name: String },
    #[error(transparent)]
    RegexCompile(#[from] RegexError),
}

/// One token type per grammar terminal, in terminal order: basic elements
/// with their explicit or implicit patterns, and delimiters.
pub fn compile_token_types(
    model: &LanguageModel,
    grammar: &Grammar,
    registry: &MatcherRegistry,
) -> Result<Vec<TokenType>, LexerError> {
    let precedence = Precedence::new(model);
    let mut types = Vec::with_capacity(grammar.terminals.len());
    for (i, terminal) in grammar.terminals.iter().enumerate() {
        let id = TermId(i as u32);
        let (source, matcher) = match &terminal.kind {
            TerminalKind::Delimiter(pattern) => {
                (TokenSource::Delimiter(pattern.clone()), TokenMatcher::Regex(Regex::new(pattern)?))
            }
            TerminalKind::Element(element) => {
                let decl = model.get(element.as_str()).expect("grammar terminals come from model elements");
                match (&decl.pattern, &decl.value) {
                    (Some(PatternSpec::Regex(pattern)), _) => {
                        (TokenSource::Element(element.clone()), TokenMatcher::Regex(Regex::new(pattern)?))
                    }
                    (Some(PatternSpec::Matcher { name, args }), _) => {
                        let matcher = registry.get(name).ok_or_else(|| LexerError::UnknownMatcher {
                            element: element.clone(),
                            name: name.clone(),
                        })?;
                        (TokenSource::Element(element.clone()), TokenMatcher::Custom { matcher, args: args.clone() })
                    }
                    (None, Some(value)) => {
                        let pattern = value.ty.implicit_pattern().ok_or_else(|| RegexError {
                            pattern: String::new(),
                            position: 0,
                            reason: format!("element `{element}` has a {} value field but no pattern", value.ty.name()),
                        })?;
                        (
                            TokenSource::ImplicitValue { element: element.clone(), ty: value.ty },
                            TokenMatcher::Regex(Regex::new(pattern)?),
                        )
                    }
                    (None, None) => {
                        return Err(LexerError::RegexCompile(RegexError {
                            pattern: String::new(),
                            position: 0,
                            reason: format!("element `{element}` has no pattern"),
                        }))
                    }
                }
            }
        };
        types.push(TokenType {
            id,
            name: terminal.name.clone(),
            source,
            matcher,
            priority_value: None,
            precedes: Vec::new(),
        });
    }
    let elements: Vec<Option<ElementId>> = types.iter().map(|t| t.element().cloned()).collect();
    for (i, a) in elements.iter().enumerate() {
        let Some(a) = a else { continue };
        types[i].priority_value = precedence.effective_value(a.as_str());
        types[i].precedes = elements
            .iter()
            .enumerate()
            .filter(|(j, b)| *j != i && b.as_ref().is_some_and(|b| precedence.edge(a.as_str(), b.as_str())))
            .map(|(j, _)| TermId(j as u32))
            .collect();
    }
    Ok(types)
}
