use std::sync::Arc;

use thiserror::Error;

use crate::grammar::{synthesize_grammar, Grammar, SynthesisError};
use crate::instance::{instantiate, InstanceError, InstanceNode};
use crate::lexer::{
    apply_lexical_precedence, compile_token_types, scan, LexerError, MatcherRegistry, Regex, ScanError, TokenGraph,
    TokenType,
};
use crate::model::{load_model, resolve_hierarchy, validate_model, DocumentError, LanguageModel, ValidationReport};
use crate::parser::{
    disambiguate_composition, filter_priority, NoParseError, ParseError, ParseForest, ParseOptions, ParseTree, Parser,
};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("invalid model\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Lexer(#[from] LexerError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

impl From<NoParseError> for Error {
    fn from(e: NoParseError) -> Error {
        Error::Parse(ParseError::NoParse(e))
    }
}

/// A validated model with its grammar, token types and parser.
pub struct Language {
    model: Arc<LanguageModel>,
    report: ValidationReport,
    grammar: Arc<Grammar>,
    token_types: Vec<TokenType>,
    skip: Regex,
    parser: Parser,
}

/// Instances of the first trees of an ambiguous input.
#[derive(Debug, Clone, PartialEq)]
pub struct AllParses {
    pub instances: Vec<InstanceNode>,
    pub total: u64,
}

impl Language {
    pub fn new(model: LanguageModel) -> Result<Language, Error> {
        Language::with_matchers(model, &MatcherRegistry::with_builtins())
    }

    pub fn from_document(document: &str) -> Result<Language, Error> {
        Language::new(load_model(document)?)
    }

    pub fn with_matchers(model: LanguageModel, registry: &MatcherRegistry) -> Result<Language, Error> {
        let report = validate_model(&model);
        if !report.is_valid() {
            return Err(Error::Invalid(report));
        }
        let hierarchy = resolve_hierarchy(&model).map_err(|_| Error::Invalid(report.clone()))?;
        let grammar = Arc::new(synthesize_grammar(&model, &hierarchy)?);
        let token_types = compile_token_types(&model, &grammar, registry)?;
        let skip = Regex::new(model.skip_pattern()).map_err(LexerError::from)?;
        let parser = Parser::new(grammar.clone());
        Ok(Language { model: grammar.model.clone(), report, grammar, token_types, skip, parser })
    }

    pub fn model(&self) -> &LanguageModel {
        &self.model
    }

    /// Warnings found while validating the model.
    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn token_types(&self) -> &[TokenType] {
        &self.token_types
    }

    /// Scans `input` and applies lexical precedence.
    pub fn tokenize(&self, input: &str) -> Result<TokenGraph, ScanError> {
        let graph = scan(input, &self.token_types, &self.skip)?;
        Ok(apply_lexical_precedence(&graph, &self.token_types))
    }

    /// Parses `tokens` and runs the composition and priority passes.
    pub fn forest_of(&self, tokens: &TokenGraph, options: ParseOptions) -> Result<ParseForest, NoParseError> {
        let forest = self.parser.parse_with(tokens, options)?;
        let forest = filter_priority(&disambiguate_composition(&forest));
        if forest.is_empty() {
            return Err(NoParseError { offset: tokens.input_len, expected: Vec::new(), constraints_inhibited: true });
        }
        Ok(forest)
    }

    pub fn forest(&self, input: &str, options: ParseOptions) -> Result<ParseForest, Error> {
        Ok(self.forest_of(&self.tokenize(input)?, options)?)
    }

    /// The unique constrained parse tree of `input`.
    pub fn parse_tree(&self, input: &str) -> Result<ParseTree, Error> {
        Ok(self.forest(input, ParseOptions::default())?.require_unique()?)
    }

    /// The instance denoted by `input`, which must have exactly one
    /// constrained parse.
    pub fn parse(&self, input: &str) -> Result<InstanceNode, Error> {
        Ok(instantiate(&self.parse_tree(input)?, &self.grammar)?)
    }

    /// Instances of up to `limit` constrained parses of `input`.
    pub fn parse_all(&self, input: &str, limit: usize) -> Result<AllParses, Error> {
        let forest = self.forest(input, ParseOptions::default())?;
        let e = forest.enumerate_parses(limit);
        let instances = e.trees.iter().map(|t| instantiate(t, &self.grammar)).collect::<Result<_, _>>()?;
        Ok(AllParses { instances, total: e.total })
    }
}
