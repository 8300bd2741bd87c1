//! JSON model documents.
//!
//! ```json
//! { "root": "Program",
//!   "skip": "[ \\t\\r\\n]+",
//!   "elements": {
//!     "Program": { "kind": "composite", "prefix": ["main"],
//!                  "members": [ { "name": "body", "element": "Statement" } ] },
//!     ...
//!   } }
//! ```
//!
//! A member is a list when it carries `min` or `max`; missing bounds then
//! default to `min: 1` and `max: "unbounded"`. Unknown keys are rejected.

use indexmap::IndexMap;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::{
    Associativity, Cardinality, Composition, ConstraintSet, ElementDecl, ElementId, ElementKind, LanguageModel,
    MemberDecl, PatternSpec, SemanticType, ValueField,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("syntax error at line {line}, column {column}: {reason}")]
    Syntax { line: usize, column: usize, reason: String },
    #[error("schema error{}: {reason}", location_suffix(*.line, *.column))]
    Schema { line: usize, column: usize, reason: String },
}

fn location_suffix(line: usize, column: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}, column {column}")
    }
}

fn schema(reason: impl Into<String>) -> DocumentError {
    DocumentError::Schema { line: 0, column: 0, reason: reason.into() }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    root: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skip: Option<String>,
    elements: IndexMap<String, ElementDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtendsDoc {
    One(String),
    Many(Vec<String>),
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Basic,
    Composite,
    Abstract,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regex: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matcher: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    args: Option<String>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum TypeDoc {
    Integer,
    Real,
    Boolean,
    String,
    Character,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueDoc {
    field: String,
    #[serde(rename = "type")]
    ty: TypeDoc,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PriorityDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    precedes: Vec<String>,
}

#[derive(Clone, Copy)]
enum MaxDoc {
    Bounded(u32),
    Unbounded,
}

impl Serialize for MaxDoc {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            MaxDoc::Bounded(n) => serializer.serialize_u32(*n),
            MaxDoc::Unbounded => serializer.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for MaxDoc {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MaxVisitor;
        impl Visitor<'_> for MaxVisitor {
            type Value = MaxDoc;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a positive integer or \"unbounded\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<MaxDoc, E> {
                u32::try_from(v).map(MaxDoc::Bounded).map_err(|_| E::custom("max out of range"))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<MaxDoc, E> {
                u32::try_from(v).map(MaxDoc::Bounded).map_err(|_| E::custom("max must be non-negative"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<MaxDoc, E> {
                if v == "unbounded" {
                    Ok(MaxDoc::Unbounded)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        deserializer.deserialize_any(MaxVisitor)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberDoc {
    name: String,
    element: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<MaxDoc>,
    #[serde(default, skip_serializing_if = "is_false")]
    optional: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    prefix: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    suffix: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    separator: Option<Vec<String>>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extends: Option<ExtendsDoc>,
    kind: KindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pattern: Option<PatternDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<ValueDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    members: Vec<MemberDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    prefix: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    suffix: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    separator: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    associativity: Option<Associativity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    composition: Option<Composition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priority: Option<PriorityDoc>,
}

/// Parses a model document. Only syntactic well-formedness and the schema
/// are checked here; semantic problems are left to
/// [`validate_model`](super::validate_model).
pub fn load_model(document: &str) -> Result<LanguageModel, DocumentError> {
    let located = |err: serde_json::Error| (err.line(), err.column(), err.to_string());
    if let Err(err) = serde_json::from_str::<serde::de::IgnoredAny>(document) {
        let (line, column, reason) = located(err);
        return Err(DocumentError::Syntax { line, column, reason });
    }
    let doc: Doc = serde_json::from_str(document).map_err(|err| {
        let (line, column, reason) = located(err);
        DocumentError::Schema { line, column, reason }
    })?;

    let mut model = LanguageModel::new(doc.root);
    model.skip = doc.skip;
    for (id, element) in doc.elements {
        model.insert(convert_element(id, element)?);
    }
    Ok(model)
}

fn convert_element(id: String, doc: ElementDoc) -> Result<ElementDecl, DocumentError> {
    let kind = match doc.kind {
        KindDoc::Basic => ElementKind::Basic,
        KindDoc::Composite => ElementKind::Composite,
        KindDoc::Abstract => ElementKind::Abstract,
    };
    let pattern = match doc.pattern {
        None => None,
        Some(PatternDoc { regex: Some(regex), matcher: None, args: None }) => Some(PatternSpec::Regex(regex)),
        Some(PatternDoc { regex: None, matcher: Some(name), args }) => {
            Some(PatternSpec::Matcher { name, args: args.unwrap_or_default() })
        }
        Some(_) => {
            return Err(schema(format!(
                "element `{id}`: pattern needs exactly one of `regex` or `matcher` (`args` only with `matcher`)"
            )))
        }
    };
    let value = doc.value.map(|v| ValueField {
        field: v.field,
        ty: match v.ty {
            TypeDoc::Integer => SemanticType::Integer,
            TypeDoc::Real => SemanticType::Real,
            TypeDoc::Boolean => SemanticType::Boolean,
            TypeDoc::String => SemanticType::String,
            TypeDoc::Character => SemanticType::Character,
        },
    });
    let members = doc
        .members
        .into_iter()
        .map(|m| {
            let cardinality = if m.min.is_some() || m.max.is_some() {
                Cardinality {
                    min: m.min.unwrap_or(1),
                    max: match m.max {
                        None | Some(MaxDoc::Unbounded) => None,
                        Some(MaxDoc::Bounded(n)) => Some(n),
                    },
                    optional: m.optional,
                }
            } else {
                Cardinality { optional: m.optional, ..Cardinality::SCALAR }
            };
            MemberDecl {
                name: m.name,
                element: ElementId::new(m.element),
                cardinality,
                prefixes: m.prefix,
                suffixes: m.suffix,
                separators: m.separator,
            }
        })
        .collect();
    let priority = doc.priority.unwrap_or_default();
    Ok(ElementDecl {
        id: ElementId::new(id),
        extends: match doc.extends {
            None => Vec::new(),
            Some(ExtendsDoc::One(s)) => vec![ElementId::new(s)],
            Some(ExtendsDoc::Many(v)) => v.into_iter().map(ElementId::new).collect(),
        },
        kind,
        pattern,
        value,
        members,
        constraints: ConstraintSet {
            associativity: doc.associativity.unwrap_or_default(),
            composition: doc.composition.unwrap_or_default(),
            priority_value: priority.value,
            precedes: priority.precedes.into_iter().map(ElementId::new).collect(),
        },
        prefixes: doc.prefix,
        suffixes: doc.suffix,
        default_separators: doc.separator,
    })
}

/// Serializes a model back into the document format.
pub fn to_document(model: &LanguageModel) -> String {
    let elements = model.elements.values().map(|e| (e.id.to_string(), element_doc(e))).collect();
    let doc = Doc { root: model.root.to_string(), skip: model.skip.clone(), elements };
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}

fn element_doc(e: &ElementDecl) -> ElementDoc {
    let c = &e.constraints;
    let priority = (c.priority_value.is_some() || !c.precedes.is_empty()).then(|| PriorityDoc {
        value: c.priority_value,
        precedes: c.precedes.iter().map(ToString::to_string).collect(),
    });
    ElementDoc {
        extends: match e.extends.as_slice() {
            [] => None,
            [one] => Some(ExtendsDoc::One(one.to_string())),
            many => Some(ExtendsDoc::Many(many.iter().map(ToString::to_string).collect())),
        },
        kind: match e.kind {
            ElementKind::Basic => KindDoc::Basic,
            ElementKind::Composite => KindDoc::Composite,
            ElementKind::Abstract => KindDoc::Abstract,
        },
        pattern: e.pattern.as_ref().map(|p| match p {
            PatternSpec::Regex(r) => PatternDoc { regex: Some(r.clone()), matcher: None, args: None },
            PatternSpec::Matcher { name, args } => {
                PatternDoc { regex: None, matcher: Some(name.clone()), args: Some(args.clone()) }
            }
        }),
        value: e.value.as_ref().map(|v| ValueDoc {
            field: v.field.clone(),
            ty: match v.ty {
                SemanticType::Integer => TypeDoc::Integer,
                SemanticType::Real => TypeDoc::Real,
                SemanticType::Boolean => TypeDoc::Boolean,
                SemanticType::String => TypeDoc::String,
                SemanticType::Character => TypeDoc::Character,
            },
        }),
        members: e
            .members
            .iter()
            .map(|m| {
                let repeated = m.cardinality.is_repeated();
                MemberDoc {
                    name: m.name.clone(),
                    element: m.element.to_string(),
                    min: repeated.then_some(m.cardinality.min),
                    max: repeated.then_some(match m.cardinality.max {
                        None => MaxDoc::Unbounded,
                        Some(n) => MaxDoc::Bounded(n),
                    }),
                    optional: m.cardinality.optional,
                    prefix: m.prefixes.clone(),
                    suffix: m.suffixes.clone(),
                    separator: m.separators.clone(),
                }
            })
            .collect(),
        prefix: e.prefixes.clone(),
        suffix: e.suffixes.clone(),
        separator: e.default_separators.clone(),
        associativity: (c.associativity != Associativity::Undefined).then_some(c.associativity),
        composition: (c.composition != Composition::Undefined).then_some(c.composition),
        priority,
    }
}
