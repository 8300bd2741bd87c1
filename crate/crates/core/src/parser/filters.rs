//! Disambiguation passes over a built forest. Both only remove families.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::forest::{
    Family, NodeId, NodeKind, ParseForest, EXPLICIT_MARK, INNER_ATTACHMENT, NESTING, OUTER_ATTACHMENT,
};
use crate::grammar::{NtId, Origin, Slot};
use crate::model::{Composition, Precedence};

/// Applies the composition constraints: EAGER keeps the attachment of a
/// trailing optional constituent to the innermost of two nested instances,
/// LAZY to the outermost, EXPLICIT keeps both and marks them.
pub fn disambiguate_composition(forest: &ParseForest) -> ParseForest {
    let grammar = forest.grammar.clone();
    let mut out = forest.clone();
    let mut changed = false;
    for node in &mut out.nodes {
        node.families.retain_mut(|f| {
            let Family::Packed { production, flags, .. } = f else { return true };
            if *flags & (OUTER_ATTACHMENT | INNER_ATTACHMENT) == 0 {
                return true;
            }
            let Origin::Composite { element } = &grammar.production(*production).origin else { return true };
            match grammar.model.effective_composition(&grammar.hierarchy, element.as_str()) {
                Composition::Eager if *flags & OUTER_ATTACHMENT != 0 => {
                    changed = true;
                    false
                }
                Composition::Lazy if *flags & INNER_ATTACHMENT != 0 => {
                    changed = true;
                    false
                }
                Composition::Explicit => {
                    *flags |= EXPLICIT_MARK;
                    true
                }
                _ => true,
            }
        });
    }
    if changed {
        out.prune();
    }
    out
}

/// Applies element priorities: drops families nested under an operand of
/// higher priority, and among alternatives for the same symbol over the
/// same span, those deriving an element of lower priority.
pub fn filter_priority(forest: &ParseForest) -> ParseForest {
    let grammar = forest.grammar.clone();
    let model = &grammar.model;
    let precedence = Precedence::new(model);
    let mut out = forest.clone();
    let mut changed = false;
    for node in &mut out.nodes {
        let before = node.families.len();
        node.families.retain(|f| !matches!(f, Family::Packed { flags, .. } if flags & NESTING != 0));
        changed |= node.families.len() != before;
    }

    let n = out.nodes.len();
    let mut chains: Vec<Option<Vec<usize>>> = vec![None; n];
    let mut groups: BTreeMap<(NtId, usize, usize), Vec<NodeId>> = BTreeMap::new();
    for (i, node) in out.nodes.iter().enumerate() {
        if let NodeKind::Symbol { nt, .. } = node.kind {
            groups.entry((nt, node.start, node.end)).or_default().push(i);
        }
    }
    let mut doomed: HashMap<NodeId, Vec<usize>> = HashMap::new();
    for members in groups.values() {
        let alternatives: Vec<(NodeId, usize)> =
            members.iter().flat_map(|&m| (0..out.nodes[m].families.len()).map(move |f| (m, f))).collect();
        if alternatives.len() < 2 {
            continue;
        }
        let sets: Vec<Vec<usize>> = alternatives.iter().map(|&(m, f)| family_chain(&out, &mut chains, m, f)).collect();
        let beats = |a: &[usize], b: &[usize]| {
            a.iter().any(|&x| b.iter().any(|&y| precedence.precedes(key(model, x), key(model, y))))
        };
        for (bi, &(m, f)) in alternatives.iter().enumerate() {
            let loses = (0..alternatives.len())
                .any(|ai| ai != bi && beats(&sets[ai], &sets[bi]) && !beats(&sets[bi], &sets[ai]));
            if loses {
                doomed.entry(m).or_default().push(f);
            }
        }
    }
    for (m, mut fs) in doomed {
        changed = true;
        fs.sort_unstable();
        for f in fs.into_iter().rev() {
            out.nodes[m].families.remove(f);
        }
    }
    if changed {
        out.prune();
    }
    out
}

fn key(model: &crate::model::LanguageModel, i: usize) -> &str {
    model.elements.get_index(i).map(|(k, _)| k.as_str()).unwrap_or_default()
}

/// Elements a family derives through its unit chain: the element of a
/// composite production, or the chosen subtype of a selection together
/// with whatever the subtype derives.
fn family_chain(forest: &ParseForest, memo: &mut Vec<Option<Vec<usize>>>, node: NodeId, family: usize) -> Vec<usize> {
    let grammar = &forest.grammar;
    let index = |id: &str| grammar.model.elements.get_index_of(id).expect("model element");
    let Family::Packed { production, item, .. } = forest.nodes[node].families[family] else { return Vec::new() };
    let p = grammar.production(production);
    match &p.origin {
        Origin::Composite { element } => vec![index(element.as_str())],
        Origin::Selection { subtype, .. } => {
            let mut out = vec![index(subtype.as_str())];
            if let (Some(pos), Some(item)) = (p.slots.iter().position(|s| *s == Slot::Element), item) {
                for child in constituents(forest, item, pos) {
                    out.extend(node_chain(forest, memo, child));
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        }
        _ => Vec::new(),
    }
}

fn node_chain(forest: &ParseForest, memo: &mut Vec<Option<Vec<usize>>>, node: NodeId) -> Vec<usize> {
    match forest.nodes[node].kind {
        NodeKind::Token { candidate } => {
            let ty = forest.tokens.candidates[candidate].ty;
            forest
                .grammar
                .terminal(ty)
                .element()
                .and_then(|e| forest.grammar.model.elements.get_index_of(e.as_str()))
                .into_iter()
                .collect()
        }
        NodeKind::Symbol { .. } => {
            if let Some(chain) = &memo[node] {
                return chain.clone();
            }
            memo[node] = Some(Vec::new());
            let mut out: Vec<usize> =
                (0..forest.nodes[node].families.len()).flat_map(|f| family_chain(forest, memo, node, f)).collect();
            out.sort_unstable();
            out.dedup();
            memo[node] = Some(out.clone());
            out
        }
        NodeKind::Item { .. } => Vec::new(),
    }
}

/// Every node standing at position `pos` in derivations of `item`.
fn constituents(forest: &ParseForest, item: NodeId, pos: usize) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut stack = vec![item];
    while let Some(current) = stack.pop() {
        if !seen.insert(current) {
            continue;
        }
        let NodeKind::Item { dot, .. } = forest.nodes[current].kind else { continue };
        for f in &forest.nodes[current].families {
            let Family::Link { pred, child } = *f else { continue };
            if dot == pos + 1 {
                out.push(child);
            } else if let Some(p) = pred {
                stack.push(p);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}
