//! Typed model instances built from parse trees.

mod value;
mod visit;

use indexmap::IndexMap;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::grammar::{Grammar, NonterminalKind, Origin, Slot, Symbol};
use crate::model::{ElementId, PatternSpec};
use crate::parser::ParseTree;

pub use value::{convert_value, TypedValue, ValueRangeError};
pub use visit::{MissingCallbackError, Results, Visited, Visitor};

/// An instance of a concrete model element.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceNode {
    pub element: ElementId,
    /// Byte offsets `[start, end)` in the input.
    pub span: (usize, usize),
    pub values: IndexMap<String, TypedValue>,
    /// Members in declaration order; absent optional members are missing.
    pub children: IndexMap<String, Child>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Child {
    Node(Box<InstanceNode>),
    List(Vec<InstanceNode>),
}

impl InstanceNode {
    pub fn child(&self, member: &str) -> Option<&InstanceNode> {
        match self.children.get(member)? {
            Child::Node(n) => Some(n),
            Child::List(_) => None,
        }
    }

    pub fn list(&self, member: &str) -> Option<&[InstanceNode]> {
        match self.children.get(member)? {
            Child::List(items) => Some(items),
            Child::Node(_) => None,
        }
    }

    pub fn value(&self, field: &str) -> Option<&TypedValue> {
        self.values.get(field)
    }

    /// Nodes of the instance in pre-order.
    pub fn descendants(&self) -> Vec<&InstanceNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            for child in n.children.values().rev() {
                match child {
                    Child::Node(c) => stack.push(c),
                    Child::List(items) => stack.extend(items.iter().rev()),
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("instances serialize")
    }
}

impl Serialize for InstanceNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(4))?;
        map.serialize_entry("element", &self.element)?;
        map.serialize_entry("span", &[self.span.0, self.span.1])?;
        map.serialize_entry("values", &self.values)?;
        map.serialize_entry("children", &self.children)?;
        map.end()
    }
}

impl Serialize for Child {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Child::Node(n) => n.serialize(serializer),
            Child::List(items) => items.serialize(serializer),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    /// The tree does not fit the grammar or model it is interpreted with.
    #[error("internal consistency error: {0}")]
    InternalConsistency(String),
    #[error(transparent)]
    Value(#[from] ValueRangeError),
}

fn inconsistent(what: impl Into<String>) -> InstanceError {
    InstanceError::InternalConsistency(what.into())
}

/// Builds the instance a parse tree denotes. Selection chains collapse to
/// the concrete element, delimiters are dropped, lists are flattened and
/// token text is converted into value fields.
pub fn instantiate(tree: &ParseTree, grammar: &Grammar) -> Result<InstanceNode, InstanceError> {
    Builder { grammar }.element(tree)
}

struct Builder<'g> {
    grammar: &'g Grammar,
}

impl Builder<'_> {
    fn element(&self, tree: &ParseTree) -> Result<InstanceNode, InstanceError> {
        let g = self.grammar;
        let mut tree = tree;
        loop {
            match tree {
                ParseTree::Leaf { terminal, span, text, .. } => {
                    let id = g
                        .terminal(*terminal)
                        .element()
                        .ok_or_else(|| inconsistent(format!("delimiter `{text}` where an element was expected")))?;
                    let decl =
                        g.model.get(id.as_str()).ok_or_else(|| inconsistent(format!("unknown element `{id}`")))?;
                    let mut values = IndexMap::new();
                    if let Some(field) = &decl.value {
                        let pattern = match &decl.pattern {
                            Some(PatternSpec::Regex(p)) => Some(p.as_str()),
                            _ => None,
                        };
                        values.insert(field.field.clone(), convert_value(text, field.ty, pattern)?);
                    }
                    return Ok(InstanceNode { element: id.clone(), span: *span, values, children: IndexMap::new() });
                }
                ParseTree::Node { production, span, children, .. } => {
                    let p = g.production(*production);
                    match &p.origin {
                        Origin::Selection { .. } => {
                            tree = slot_child(children, &p.slots, Slot::Element)
                                .ok_or_else(|| inconsistent("selection without a chosen element"))?;
                        }
                        Origin::Composite { element } => {
                            let decl = g
                                .model
                                .get(element.as_str())
                                .ok_or_else(|| inconsistent(format!("unknown element `{element}`")))?;
                            let mut members = IndexMap::new();
                            for (child, slot) in children.iter().zip(&p.slots) {
                                let Slot::Member(i) = *slot else { continue };
                                let member = decl
                                    .members
                                    .get(i)
                                    .ok_or_else(|| inconsistent(format!("`{element}` has no member {i}")))?;
                                if let Some(value) = self.member(child)? {
                                    members.insert(member.name.clone(), value);
                                }
                            }
                            return Ok(InstanceNode {
                                element: element.clone(),
                                span: *span,
                                values: IndexMap::new(),
                                children: members,
                            });
                        }
                        _ => {
                            return Err(inconsistent(format!(
                                "`{}` does not derive an element",
                                g.symbol_name(Symbol::N(p.lhs))
                            )))
                        }
                    }
                }
            }
        }
    }

    fn member(&self, tree: &ParseTree) -> Result<Option<Child>, InstanceError> {
        let ParseTree::Node { nt, production, children, .. } = tree else {
            return Ok(Some(Child::Node(Box::new(self.element(tree)?))));
        };
        let slots = &self.grammar.production(*production).slots;
        Ok(match self.grammar.nonterminal(*nt).kind {
            NonterminalKind::Element(_) => Some(Child::Node(Box::new(self.element(tree)?))),
            NonterminalKind::List { .. } => Some(Child::List(self.list(tree)?)),
            NonterminalKind::OptionalList { .. } => Some(Child::List(match slot_child(children, slots, Slot::Inner) {
                Some(inner) => self.list(inner)?,
                None => Vec::new(),
            })),
            NonterminalKind::OptionalMember { .. } => match slot_child(children, slots, Slot::Inner) {
                Some(inner) => Some(Child::Node(Box::new(self.element(inner)?))),
                None => None,
            },
        })
    }

    fn list(&self, tree: &ParseTree) -> Result<Vec<InstanceNode>, InstanceError> {
        let mut out = Vec::new();
        let mut current = Some(tree);
        while let Some(ParseTree::Node { production, children, .. }) = current {
            let slots = &self.grammar.production(*production).slots;
            let item = slot_child(children, slots, Slot::Item)
                .ok_or_else(|| inconsistent("list production without an item"))?;
            out.push(self.element(item)?);
            current = slot_child(children, slots, Slot::Rest);
        }
        if let Some(leaf) = current {
            return Err(inconsistent(format!("token at {:?} where a list was expected", leaf.span())));
        }
        Ok(out)
    }
}

fn slot_child<'t>(children: &'t [ParseTree], slots: &[Slot], wanted: Slot) -> Option<&'t ParseTree> {
    children.iter().zip(slots).find(|(_, s)| **s == wanted).map(|(c, _)| c)
}
