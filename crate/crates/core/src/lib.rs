//! Model-based parser generation.
//!
//! A [`LanguageModel`](model::LanguageModel) declares the abstract syntax of
//! a language together with the constraints mapping it onto text. From it
//! this crate synthesizes a context-free grammar, scans input into a graph
//! of possibly overlapping tokens, parses that graph with an Earley parser
//! that keeps every derivation in a shared forest, enforces the declared
//! constraints, and instantiates typed model instances.

pub mod cli;
pub mod grammar;
pub mod instance;
mod language;
pub mod lexer;
pub mod model;
pub mod parser;

pub use language::{AllParses, Error, Language};
