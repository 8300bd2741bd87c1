//! Abstract syntax models: language elements, their members, and the
//! constraints that map them onto a concrete textual syntax.
//!
//! A [`LanguageModel`] can be built programmatically with the builder-style
//! methods on [`ElementDecl`] and [`MemberDecl`], or loaded from a JSON
//! model document with [`load_model`].

mod document;
mod hierarchy;
mod precedence;
mod validate;

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use document::{load_model, to_document, DocumentError};
#[cfg(test)]
pub(crate) use hierarchy::build_unchecked as hierarchy_unchecked;
pub use hierarchy::{resolve_hierarchy, HierarchyError, TypeHierarchy};
pub use precedence::Precedence;
pub use validate::{validate_model, Issue, IssueCode, ValidationReport};

/// Whitespace skipped between tokens unless the model overrides it.
pub const DEFAULT_SKIP: &str = "[ \\t\\r\\n]+";

/// Case-sensitive element identifier, `[A-Za-z_][A-Za-z0-9_]*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(String);

impl ElementId {
    pub fn new(id: impl Into<String>) -> ElementId {
        ElementId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ElementId {
    fn from(s: &str) -> ElementId {
        ElementId(s.to_string())
    }
}

impl From<String> for ElementId {
    fn from(s: String) -> ElementId {
        ElementId(s)
    }
}

impl std::borrow::Borrow<str> for ElementId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// Token-backed element, recognized by a pattern.
    Basic,
    /// Concatenation of named members.
    Composite,
    /// Selection point whose alternatives are its subtypes.
    Abstract,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternSpec {
    Regex(String),
    Matcher { name: String, args: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemanticType {
    Integer,
    Real,
    Boolean,
    String,
    Character,
}

impl SemanticType {
    /// Pattern used when a value field has no explicit pattern. Only numeric
    /// and boolean fields have one.
    pub fn implicit_pattern(self) -> Option<&'static str> {
        match self {
            SemanticType::Integer => Some("[0-9]+"),
            SemanticType::Real => Some("[0-9]+\\.[0-9]*"),
            SemanticType::Boolean => Some("true|false"),
            SemanticType::String | SemanticType::Character => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticType::Integer => "integer",
            SemanticType::Real => "real",
            SemanticType::Boolean => "boolean",
            SemanticType::String => "string",
            SemanticType::Character => "character",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValueField {
    pub field: String,
    pub ty: SemanticType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Associativity {
    #[default]
    Undefined,
    LeftToRight,
    RightToLeft,
    NonAssociative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Composition {
    #[default]
    Undefined,
    Eager,
    Lazy,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ConstraintSet {
    pub associativity: Associativity,
    pub composition: Composition,
    /// Absolute priority; lower values mean higher priority.
    pub priority_value: Option<i64>,
    /// Elements this one takes precedence over.
    pub precedes: Vec<ElementId>,
}

impl ConstraintSet {
    pub fn has_priority(&self) -> bool {
        self.priority_value.is_some() || !self.precedes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cardinality {
    pub min: u32,
    /// `None` is unbounded.
    pub max: Option<u32>,
    pub optional: bool,
}

impl Cardinality {
    pub const SCALAR: Cardinality = Cardinality { min: 1, max: Some(1), optional: false };
    pub const OPTIONAL: Cardinality = Cardinality { min: 1, max: Some(1), optional: true };

    pub fn list(min: u32, max: Option<u32>) -> Cardinality {
        Cardinality { min, max, optional: false }
    }

    /// A member is repeated unless it is exactly one occurrence.
    pub fn is_repeated(&self) -> bool {
        !(self.min == 1 && self.max == Some(1))
    }
}

impl Default for Cardinality {
    fn default() -> Self {
        Cardinality::SCALAR
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MemberDecl {
    pub name: String,
    pub element: ElementId,
    pub cardinality: Cardinality,
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
    /// Ad hoc separators. `None` inherits the element's default separators;
    /// an empty list disables them.
    pub separators: Option<Vec<String>>,
}

impl MemberDecl {
    pub fn new(name: impl Into<String>, element: impl Into<ElementId>) -> MemberDecl {
        MemberDecl {
            name: name.into(),
            element: element.into(),
            cardinality: Cardinality::SCALAR,
            prefixes: Vec::new(),
            suffixes: Vec::new(),
            separators: None,
        }
    }

    pub fn optional(mut self) -> Self {
        self.cardinality.optional = true;
        self
    }

    pub fn list(mut self, min: u32, max: Option<u32>) -> Self {
        self.cardinality.min = min;
        self.cardinality.max = max;
        self
    }

    pub fn prefix(mut self, pattern: impl Into<String>) -> Self {
        self.prefixes.push(pattern.into());
        self
    }

    pub fn suffix(mut self, pattern: impl Into<String>) -> Self {
        self.suffixes.push(pattern.into());
        self
    }

    pub fn separator(mut self, pattern: impl Into<String>) -> Self {
        self.separators.get_or_insert_with(Vec::new).push(pattern.into());
        self
    }

    pub fn no_separator(mut self) -> Self {
        self.separators = Some(Vec::new());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ElementDecl {
    pub id: ElementId,
    /// Declared supertypes. A valid model has at most one; the list form
    /// exists so that multiple inheritance can be reported rather than lost.
    pub extends: Vec<ElementId>,
    pub kind: ElementKind,
    pub pattern: Option<PatternSpec>,
    pub value: Option<ValueField>,
    pub members: Vec<MemberDecl>,
    pub constraints: ConstraintSet,
    pub prefixes: Vec<String>,
    pub suffixes: Vec<String>,
    pub default_separators: Vec<String>,
}

impl ElementDecl {
    fn new(id: impl Into<ElementId>, kind: ElementKind) -> ElementDecl {
        ElementDecl {
            id: id.into(),
            extends: Vec::new(),
            kind,
            pattern: None,
            value: None,
            members: Vec::new(),
            constraints: ConstraintSet::default(),
            prefixes: Vec::new(),
            suffixes: Vec::new(),
            default_separators: Vec::new(),
        }
    }

    pub fn basic(id: impl Into<ElementId>) -> ElementDecl {
        ElementDecl::new(id, ElementKind::Basic)
    }

    pub fn composite(id: impl Into<ElementId>) -> ElementDecl {
        ElementDecl::new(id, ElementKind::Composite)
    }

    pub fn abstract_(id: impl Into<ElementId>) -> ElementDecl {
        ElementDecl::new(id, ElementKind::Abstract)
    }

    pub fn supertype(&self) -> Option<&ElementId> {
        match self.extends.as_slice() {
            [single] => Some(single),
            _ => None,
        }
    }

    pub fn extends(mut self, supertype: impl Into<ElementId>) -> Self {
        self.extends.push(supertype.into());
        self
    }

    pub fn regex(mut self, pattern: impl Into<String>) -> Self {
        self.pattern = Some(PatternSpec::Regex(pattern.into()));
        self
    }

    pub fn matcher(mut self, name: impl Into<String>, args: impl Into<String>) -> Self {
        self.pattern = Some(PatternSpec::Matcher { name: name.into(), args: args.into() });
        self
    }

    pub fn value(mut self, field: impl Into<String>, ty: SemanticType) -> Self {
        self.value = Some(ValueField { field: field.into(), ty });
        self
    }

    pub fn member(mut self, member: MemberDecl) -> Self {
        self.members.push(member);
        self
    }

    pub fn prefix(mut self, pattern: impl Into<String>) -> Self {
        self.prefixes.push(pattern.into());
        self
    }

    pub fn suffix(mut self, pattern: impl Into<String>) -> Self {
        self.suffixes.push(pattern.into());
        self
    }

    pub fn separator(mut self, pattern: impl Into<String>) -> Self {
        self.default_separators.push(pattern.into());
        self
    }

    pub fn associativity(mut self, associativity: Associativity) -> Self {
        self.constraints.associativity = associativity;
        self
    }

    pub fn composition(mut self, composition: Composition) -> Self {
        self.constraints.composition = composition;
        self
    }

    pub fn priority(mut self, value: i64) -> Self {
        self.constraints.priority_value = Some(value);
        self
    }

    pub fn precedes(mut self, other: impl Into<ElementId>) -> Self {
        self.constraints.precedes.push(other.into());
        self
    }
}

/// An abstract syntax model. Elements keep their declaration order, which
/// fixes the order of selection alternatives in the synthesized grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageModel {
    pub root: ElementId,
    pub elements: IndexMap<ElementId, ElementDecl>,
    /// Pattern for ignored text between tokens; `None` means [`DEFAULT_SKIP`].
    pub skip: Option<String>,
}

impl LanguageModel {
    pub fn new(root: impl Into<ElementId>) -> LanguageModel {
        LanguageModel { root: root.into(), elements: IndexMap::new(), skip: None }
    }

    pub fn with(mut self, element: ElementDecl) -> Self {
        self.insert(element);
        self
    }

    pub fn with_skip(mut self, skip: impl Into<String>) -> Self {
        self.skip = Some(skip.into());
        self
    }

    pub fn insert(&mut self, element: ElementDecl) {
        self.elements.insert(element.id.clone(), element);
    }

    pub fn get(&self, id: &str) -> Option<&ElementDecl> {
        self.elements.get(id)
    }

    pub fn skip_pattern(&self) -> &str {
        self.skip.as_deref().unwrap_or(DEFAULT_SKIP)
    }

    /// Associativity declared on the element or, failing that, on its
    /// nearest supertype that declares one.
    pub fn effective_associativity(&self, hierarchy: &TypeHierarchy, id: &str) -> Associativity {
        self.inherited(hierarchy, id, |c| c.associativity != Associativity::Undefined)
            .map_or(Associativity::Undefined, |c| c.associativity)
    }

    /// Composition mode declared on the element or inherited from a supertype.
    pub fn effective_composition(&self, hierarchy: &TypeHierarchy, id: &str) -> Composition {
        self.inherited(hierarchy, id, |c| c.composition != Composition::Undefined)
            .map_or(Composition::Undefined, |c| c.composition)
    }

    fn inherited(
        &self,
        hierarchy: &TypeHierarchy,
        id: &str,
        declares: impl Fn(&ConstraintSet) -> bool,
    ) -> Option<&ConstraintSet> {
        std::iter::once(id)
            .chain(hierarchy.supertype_chain(id).iter().map(ElementId::as_str))
            .filter_map(|e| self.get(e))
            .map(|e| &e.constraints)
            .find(|c| declares(c))
    }
}
