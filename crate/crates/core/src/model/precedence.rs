use std::collections::{HashMap, HashSet};

use super::hierarchy::build_unchecked;
use super::{ElementId, LanguageModel};

/// The precedence relation between elements, combining `precedes` edges
/// with absolute priority values. Both are inherited by subtypes: an
/// element without its own value uses its nearest ancestor's.
///
/// `a` dominates `b` when an edge leads from `a` (or an ancestor of `a`)
/// to `b` (or an ancestor of `b`), or, failing an edge in the opposite
/// direction, when both have values and `a`'s is strictly lower.
#[derive(Debug, Clone, Default)]
pub struct Precedence {
    values: HashMap<ElementId, i64>,
    ancestors: HashMap<ElementId, Vec<ElementId>>,
    reach: HashMap<ElementId, HashSet<ElementId>>,
}

impl Precedence {
    pub fn new(model: &LanguageModel) -> Precedence {
        let hierarchy = build_unchecked(model);
        let mut ancestors = HashMap::new();
        let mut values = HashMap::new();
        for id in model.elements.keys() {
            let mut chain = vec![id.clone()];
            chain.extend(hierarchy.supertype_chain(id.as_str()).iter().cloned());
            if let Some(v) = chain.iter().find_map(|e| model.elements[e].constraints.priority_value) {
                values.insert(id.clone(), v);
            }
            ancestors.insert(id.clone(), chain);
        }
        let direct: HashMap<&ElementId, Vec<&ElementId>> = model
            .elements
            .values()
            .map(|e| (&e.id, e.constraints.precedes.iter().filter(|p| model.elements.contains_key(*p)).collect()))
            .collect();
        let mut reach = HashMap::new();
        for id in model.elements.keys() {
            let mut seen: HashSet<ElementId> = HashSet::new();
            let mut stack: Vec<&ElementId> = direct[id].clone();
            while let Some(next) = stack.pop() {
                if seen.insert(next.clone()) {
                    stack.extend(direct[next].iter().copied());
                }
            }
            reach.insert(id.clone(), seen);
        }
        Precedence { values, ancestors, reach }
    }

    /// Own or inherited priority value.
    pub fn effective_value(&self, id: &str) -> Option<i64> {
        self.values.get(id).copied()
    }

    /// Whether a chain of `precedes` edges leads from `a` to `b`, taking
    /// ancestors of both ends into account.
    pub fn edge(&self, a: &str, b: &str) -> bool {
        let (Some(aa), Some(bb)) = (self.ancestors.get(a), self.ancestors.get(b)) else {
            return false;
        };
        aa.iter().any(|x| {
            let r = &self.reach[x];
            bb.iter().any(|y| r.contains(y))
        })
    }

    pub fn precedes(&self, a: &str, b: &str) -> bool {
        if a == b {
            return false;
        }
        if self.edge(a, b) {
            return true;
        }
        if self.edge(b, a) {
            return false;
        }
        match (self.effective_value(a), self.effective_value(b)) {
            (Some(x), Some(y)) => x < y,
            _ => false,
        }
    }

    pub fn related(&self, a: &str, b: &str) -> bool {
        self.precedes(a, b) || self.precedes(b, a)
    }

    /// Whether `id` takes part in the relation at all.
    pub fn is_ranked(&self, id: &str) -> bool {
        self.values.contains_key(id)
            || self.ancestors.get(id).is_some_and(|chain| {
                chain.iter().any(|x| !self.reach[x].is_empty() || self.reach.values().any(|r| r.contains(x)))
            })
    }
}
