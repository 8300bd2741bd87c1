use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;
use thiserror::Error;

use super::{Child, InstanceNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no callback for element `{element}`")]
pub struct MissingCallbackError {
    pub element: String,
}

/// Result of visiting one member.
#[derive(Debug, Clone, PartialEq)]
pub enum Visited<R> {
    One(R),
    Many(Vec<R>),
}

/// Results of a node's members, in member order.
#[derive(Debug, Clone, PartialEq)]
pub struct Results<R> {
    entries: IndexMap<String, Visited<R>>,
}

impl<R> Results<R> {
    pub fn get(&self, member: &str) -> Option<&Visited<R>> {
        self.entries.get(member)
    }

    /// The result of a scalar member, if present.
    pub fn one(&self, member: &str) -> Option<&R> {
        match self.entries.get(member)? {
            Visited::One(r) => Some(r),
            Visited::Many(_) => None,
        }
    }

    /// The results of a list member; empty when absent.
    pub fn many(&self, member: &str) -> &[R] {
        match self.entries.get(member) {
            Some(Visited::Many(rs)) => rs,
            _ => &[],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Visited<R>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

type Callback<'a, R> = Box<dyn Fn(&InstanceNode, &Results<R>) -> R + Send + Sync + 'a>;

/// Post-order evaluation of instances with one callback per element.
pub struct Visitor<'a, R> {
    callbacks: HashMap<String, Callback<'a, R>>,
}

impl<R> Default for Visitor<'_, R> {
    fn default() -> Self {
        Visitor { callbacks: HashMap::new() }
    }
}

impl<'a, R> Visitor<'a, R> {
    pub fn new() -> Self {
        Visitor::default()
    }

    pub fn on(mut self, element: &str, f: impl Fn(&InstanceNode, &Results<R>) -> R + Send + Sync + 'a) -> Self {
        self.callbacks.insert(element.to_string(), Box::new(f));
        self
    }

    /// Visits `node`. Coverage is checked first, so no callback runs when
    /// some element lacks one.
    pub fn visit(&self, node: &InstanceNode) -> Result<R, MissingCallbackError> {
        let missing: BTreeSet<&str> = node
            .descendants()
            .into_iter()
            .map(|n| n.element.as_str())
            .filter(|e| !self.callbacks.contains_key(*e))
            .collect();
        if let Some(element) = missing.into_iter().next() {
            return Err(MissingCallbackError { element: element.to_string() });
        }
        Ok(self.run(node))
    }

    fn run(&self, node: &InstanceNode) -> R {
        let entries = node
            .children
            .iter()
            .map(|(name, child)| {
                let visited = match child {
                    Child::Node(n) => Visited::One(self.run(n)),
                    Child::List(items) => Visited::Many(items.iter().map(|n| self.run(n)).collect()),
                };
                (name.clone(), visited)
            })
            .collect();
        (self.callbacks[node.element.as_str()])(node, &Results { entries })
    }
}
