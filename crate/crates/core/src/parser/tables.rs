//! Per-production constraint tables derived from grammar hooks.

use crate::grammar::{Grammar, HookKind, NonterminalKind, NtId, Origin, ProdId, Slot, Symbol};
use crate::model::{Associativity, Composition, Precedence};

/// Index of an element in the model's declaration order.
pub type ElemIdx = u32;

/// Constraint-relevant summary of a forest node. Nodes of the same symbol
/// over the same span are kept apart when their signatures differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Sig {
    /// Production of the node, for productions under associativity guard.
    pub core: Option<ProdId>,
    /// Element whose priority the node carries.
    pub prio: Option<ElemIdx>,
    /// Operator element with an associativity, for operator tokens.
    pub op: Option<ElemIdx>,
    /// Element count of constrained lists, capped.
    pub count: u32,
    /// Composition elements on the right spine with an empty trailing
    /// optional constituent.
    pub open: u64,
    /// Composition elements on the right spine whose trailing optional
    /// constituent is present.
    pub closed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PrioSource {
    Unranked,
    Own(ElemIdx),
    Position(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ProdKind {
    Composite(ElemIdx),
    Selection,
    List { recursive: bool },
    Wrapper,
}

#[derive(Debug, Clone)]
pub(crate) struct ProdTable {
    pub kind: ProdKind,
    pub recursive: u64,
    pub own_guard: u64,
    pub operators: u64,
    /// For each recursive position, the dot after which every operator that
    /// may guard it has been read.
    pub decide_after: Vec<usize>,
    pub prio: PrioSource,
    pub guarded: bool,
    /// Trailing optional constituent and the composition bit of the element.
    pub tail: Option<(usize, u8)>,
    /// Position of the element constituent of a selection.
    pub carry: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ListTable {
    pub min: u32,
    pub max: Option<u32>,
    pub tracked: bool,
}

impl ListTable {
    pub fn cap(&self, count: u32) -> u32 {
        match self.max {
            Some(m) => count.min(m.saturating_add(1)),
            None => count.min(self.min),
        }
    }
}

pub(crate) struct Tables {
    pub prods: Vec<ProdTable>,
    pub lists: Vec<ListTable>,
    pub terminal_sigs: Vec<Sig>,
    pub precedes: Vec<Vec<bool>>,
    pub assoc: Vec<Associativity>,
}

impl Tables {
    pub fn new(grammar: &Grammar) -> Tables {
        let model = &grammar.model;
        let hierarchy = &grammar.hierarchy;
        let precedence = Precedence::new(model);
        let index = |id: &str| model.elements.get_index_of(id).expect("grammar elements exist") as ElemIdx;
        let ids: Vec<&str> = model.elements.keys().map(|k| k.as_str()).collect();
        let precedes = ids.iter().map(|a| ids.iter().map(|b| precedence.precedes(a, b)).collect()).collect();
        let assoc: Vec<Associativity> = ids.iter().map(|id| model.effective_associativity(hierarchy, id)).collect();

        let terminal_sigs = grammar
            .terminals
            .iter()
            .map(|t| match t.element() {
                Some(e) => {
                    let i = index(e.as_str());
                    Sig {
                        prio: precedence.is_ranked(e.as_str()).then_some(i),
                        op: (assoc[i as usize] != Associativity::Undefined).then_some(i),
                        ..Sig::default()
                    }
                }
                None => Sig::default(),
            })
            .collect();

        let lists = grammar
            .nonterminals
            .iter()
            .map(|n| match n.kind {
                NonterminalKind::List { min, max, .. } => {
                    let min = if min >= 2 { min } else { 0 };
                    ListTable { min, max, tracked: min >= 2 || max.is_some() }
                }
                _ => ListTable::default(),
            })
            .collect();

        let mut composition_elements: Vec<ElemIdx> = Vec::new();
        let prods = grammar
            .productions
            .iter()
            .map(|p| {
                let len = p.rhs.len();
                let mut table = ProdTable {
                    kind: match &p.origin {
                        Origin::Composite { element } => ProdKind::Composite(index(element.as_str())),
                        Origin::Selection { .. } => ProdKind::Selection,
                        Origin::List { recursive, .. } => ProdKind::List { recursive: *recursive },
                        Origin::OptionalList { .. } | Origin::OptionalMember { .. } => ProdKind::Wrapper,
                    },
                    recursive: 0,
                    own_guard: 0,
                    operators: 0,
                    decide_after: vec![0; len],
                    prio: PrioSource::Unranked,
                    guarded: false,
                    tail: None,
                    carry: p.slots.iter().position(|s| *s == Slot::Element),
                };
                if let ProdKind::Composite(x) = table.kind {
                    let x_id = ids[x as usize];
                    for (i, symbol) in p.rhs.iter().enumerate() {
                        if let Symbol::N(_) = symbol {
                            if grammar
                                .symbol_element(*symbol)
                                .is_some_and(|e| hierarchy.is_subtype_or_self(x_id, e.as_str()))
                            {
                                table.recursive |= bit(i);
                            }
                        }
                    }
                    for hook in &p.hooks {
                        match (&hook.kind, hook.position) {
                            (HookKind::Associativity(_), Some(i)) => table.own_guard |= bit(i),
                            (HookKind::OperatorAssociativity(_), Some(i)) => table.operators |= bit(i),
                            (HookKind::Priority { element: Some(e) }, None) => {
                                table.prio = PrioSource::Own(index(e.as_str()))
                            }
                            (HookKind::Priority { element: None }, Some(i)) => table.prio = PrioSource::Position(i),
                            (HookKind::Composition(mode), Some(i)) if *mode != Composition::Undefined => {
                                let bit = match composition_elements.iter().position(|&e| e == x) {
                                    Some(b) => Some(b),
                                    None if composition_elements.len() < 64 => {
                                        composition_elements.push(x);
                                        Some(composition_elements.len() - 1)
                                    }
                                    None => None,
                                };
                                table.tail = bit.map(|b| (i, b as u8));
                            }
                            _ => {}
                        }
                    }
                    table.guarded = table.own_guard != 0 || table.operators != 0;
                    for i in 0..len {
                        if table.recursive & bit(i) == 0 {
                            continue;
                        }
                        let prev = (0..i).rev().find(|&k| table.recursive & bit(k) != 0).map_or(0, |k| k + 1);
                        let next = (i + 1..len).find(|&k| table.recursive & bit(k) != 0).unwrap_or(len);
                        let last_op = (prev..next).filter(|&k| table.operators & bit(k) != 0).max();
                        table.decide_after[i] = last_op.map_or(i, |k| k.max(i));
                    }
                }
                table
            })
            .collect();

        Tables { prods, lists, terminal_sigs, precedes, assoc }
    }

    pub fn precedes(&self, a: Option<ElemIdx>, b: Option<ElemIdx>) -> bool {
        match (a, b) {
            (Some(a), Some(b)) => self.precedes[a as usize][b as usize],
            _ => false,
        }
    }

    pub fn related(&self, a: Option<ElemIdx>, b: Option<ElemIdx>) -> bool {
        self.precedes(a, b) || self.precedes(b, a)
    }

    pub fn list(&self, nt: NtId) -> &ListTable {
        &self.lists[nt.index()]
    }
}

/// Position bit; positions beyond 63 carry no constraints.
pub(crate) fn bit(i: usize) -> u64 {
    1u64.checked_shl(i as u32).unwrap_or(0)
}
