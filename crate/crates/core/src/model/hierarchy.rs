use indexmap::IndexMap;
use thiserror::Error;

use super::{validate_model, ElementId, Issue, LanguageModel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot resolve the type hierarchy of an invalid model ({} errors)", .errors.len())]
pub struct HierarchyError {
    pub errors: Vec<Issue>,
}

#[derive(Debug, Clone, Default)]
struct Entry {
    direct: Vec<ElementId>,
    transitive: Vec<ElementId>,
    chain: Vec<ElementId>,
}

/// Subtype relation of a valid model. Subtype lists follow element
/// declaration order; transitive sets are listed depth-first.
#[derive(Debug, Clone, Default)]
pub struct TypeHierarchy {
    entries: IndexMap<ElementId, Entry>,
}

impl TypeHierarchy {
    pub fn direct_subtypes(&self, id: &str) -> &[ElementId] {
        self.entries.get(id).map_or(&[], |e| &e.direct)
    }

    pub fn transitive_subtypes(&self, id: &str) -> &[ElementId] {
        self.entries.get(id).map_or(&[], |e| &e.transitive)
    }

    /// Supertypes from the nearest outwards.
    pub fn supertype_chain(&self, id: &str) -> &[ElementId] {
        self.entries.get(id).map_or(&[], |e| &e.chain)
    }

    /// `sub` equals `sup` or lies below it.
    pub fn is_subtype_or_self(&self, sub: &str, sup: &str) -> bool {
        sub == sup || self.supertype_chain(sub).iter().any(|s| s.as_str() == sup)
    }
}

/// Computes the subtype relation. Fails if the model has validation errors.
pub fn resolve_hierarchy(model: &LanguageModel) -> Result<TypeHierarchy, HierarchyError> {
    let report = validate_model(model);
    if !report.errors.is_empty() {
        return Err(HierarchyError { errors: report.errors });
    }
    Ok(build_unchecked(model))
}

/// Builds the relation without validation; dangling links and extra
/// supertypes are ignored and cycles are cut.
pub(crate) fn build_unchecked(model: &LanguageModel) -> TypeHierarchy {
    let mut entries: IndexMap<ElementId, Entry> =
        model.elements.keys().map(|id| (id.clone(), Entry::default())).collect();
    for decl in model.elements.values() {
        if let Some(sup) = decl.supertype() {
            if let Some(entry) = entries.get_mut(sup) {
                entry.direct.push(decl.id.clone());
            }
        }
    }
    for id in model.elements.keys() {
        let mut chain = Vec::new();
        let mut current = model.elements[id].supertype();
        while let Some(sup) = current {
            if sup == id || chain.contains(sup) || !model.elements.contains_key(sup) {
                break;
            }
            chain.push(sup.clone());
            current = model.elements[sup].supertype();
        }
        entries[id].chain = chain;
    }
    for id in model.elements.keys() {
        let mut transitive = Vec::new();
        let mut stack: Vec<ElementId> = entries[id].direct.iter().rev().cloned().collect();
        while let Some(next) = stack.pop() {
            if &next == id || transitive.contains(&next) {
                continue;
            }
            stack.extend(entries[&next].direct.iter().rev().cloned());
            transitive.push(next);
        }
        entries[id].transitive = transitive;
    }
    TypeHierarchy { entries }
}
