//! Context-free grammars synthesized from language models.

mod bnf;
mod synth;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::model::{Associativity, Composition, ElementId, LanguageModel, TypeHierarchy};

pub use bnf::emit_bnf;
pub use synth::{synthesize_grammar, SynthesisError, Synthesizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct TermId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NtId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProdId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NtId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ProdId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    T(TermId),
    N(NtId),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TerminalKind {
    /// Token of a basic element.
    Element(ElementId),
    /// Delimiter keyed by its pattern source.
    Delimiter(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Terminal {
    /// Element id, or the literal text of a delimiter (its pattern source
    /// when the pattern is not a plain literal).
    pub name: String,
    pub kind: TerminalKind,
}

impl Terminal {
    pub fn element(&self) -> Option<&ElementId> {
        match &self.kind {
            TerminalKind::Element(id) => Some(id),
            TerminalKind::Delimiter(_) => None,
        }
    }

    pub fn is_delimiter(&self) -> bool {
        matches!(self.kind, TerminalKind::Delimiter(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NonterminalKind {
    /// A composite or abstract element.
    Element(ElementId),
    /// Right-recursive repetition of `element`.
    List { element: ElementId, separators: Vec<String>, min: u32, max: Option<u32> },
    /// `list | ε` wrapper for repetitions that may be empty.
    OptionalList { list: NtId },
    /// `delimiters element delimiters | ε` for an optional scalar member.
    OptionalMember { owner: ElementId, member: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nonterminal {
    pub name: String,
    pub kind: NonterminalKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Composite { element: ElementId },
    Selection { element: ElementId, subtype: ElementId },
    List { owner: ElementId, member: String, recursive: bool },
    OptionalList { owner: ElementId, member: String, present: bool },
    OptionalMember { owner: ElementId, member: String, present: bool },
}

/// Role of one right-hand-side symbol when the derivation is turned into
/// an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Delimiter,
    /// Value of the owner's i-th member.
    Member(usize),
    /// The chosen subtype of a selection.
    Element,
    /// Head of a list production.
    Item,
    /// Recursive tail of a list production.
    Rest,
    /// Content of an optional wrapper.
    Inner,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HookKind {
    /// The production's own element is associative; `position` is a
    /// recursive constituent that must not be an instance of the same
    /// production.
    Associativity(Associativity),
    /// The constituent at `position` is an operator element. The
    /// associativity of the operator actually matched guards the
    /// neighbouring recursive constituents; the direction recorded here is
    /// the one declared on the constituent's own element.
    OperatorAssociativity(Associativity),
    /// Completed lists with fewer elements are rejected where referenced.
    MinCount { n: u32, member: String },
    /// Lists growing beyond `n` elements are rejected.
    MaxCount { n: u32, member: String },
    /// `position` is the trailing optional constituent subject to the mode.
    Composition(Composition),
    /// Priority of the production: the element's own when `position` is
    /// `None`, otherwise taken from the constituent at `position`.
    Priority { element: Option<ElementId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintHook {
    pub kind: HookKind,
    pub position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: NtId,
    /// Empty for an ε-production.
    pub rhs: Vec<Symbol>,
    pub origin: Origin,
    pub hooks: Vec<ConstraintHook>,
    pub slots: Vec<Slot>,
}

impl Production {
    pub fn is_epsilon(&self) -> bool {
        self.rhs.is_empty()
    }
}

/// A synthesized grammar `(N, Σ, P, S)`, together with the model it was
/// derived from.
#[derive(Debug, Clone)]
pub struct Grammar {
    pub model: Arc<LanguageModel>,
    pub hierarchy: Arc<TypeHierarchy>,
    pub terminals: Vec<Terminal>,
    pub nonterminals: Vec<Nonterminal>,
    pub productions: Vec<Production>,
    pub start: NtId,
    by_lhs: Vec<Vec<ProdId>>,
    element_symbols: HashMap<ElementId, Symbol>,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.terminals == other.terminals
            && self.nonterminals == other.nonterminals
            && self.productions == other.productions
            && self.start == other.start
    }
}

impl Grammar {
    pub(crate) fn assemble(
        model: Arc<LanguageModel>,
        hierarchy: Arc<TypeHierarchy>,
        terminals: Vec<Terminal>,
        nonterminals: Vec<Nonterminal>,
        productions: Vec<Production>,
        start: NtId,
    ) -> Grammar {
        let mut by_lhs = vec![Vec::new(); nonterminals.len()];
        for (i, p) in productions.iter().enumerate() {
            by_lhs[p.lhs.index()].push(ProdId(i as u32));
        }
        let mut element_symbols = HashMap::new();
        for (i, t) in terminals.iter().enumerate() {
            if let TerminalKind::Element(id) = &t.kind {
                element_symbols.insert(id.clone(), Symbol::T(TermId(i as u32)));
            }
        }
        for (i, n) in nonterminals.iter().enumerate() {
            if let NonterminalKind::Element(id) = &n.kind {
                element_symbols.insert(id.clone(), Symbol::N(NtId(i as u32)));
            }
        }
        Grammar { model, hierarchy, terminals, nonterminals, productions, start, by_lhs, element_symbols }
    }

    pub fn production(&self, id: ProdId) -> &Production {
        &self.productions[id.index()]
    }

    pub fn productions_of(&self, nt: NtId) -> &[ProdId] {
        &self.by_lhs[nt.index()]
    }

    pub fn terminal(&self, id: TermId) -> &Terminal {
        &self.terminals[id.index()]
    }

    pub fn nonterminal(&self, id: NtId) -> &Nonterminal {
        &self.nonterminals[id.index()]
    }

    /// The symbol standing for an element, if the element is reachable.
    pub fn element_symbol(&self, id: &str) -> Option<Symbol> {
        self.element_symbols.get(id).copied()
    }

    /// The element a symbol stands for, if any.
    pub fn symbol_element(&self, symbol: Symbol) -> Option<&ElementId> {
        match symbol {
            Symbol::T(t) => self.terminal(t).element(),
            Symbol::N(n) => match &self.nonterminal(n).kind {
                NonterminalKind::Element(id) => Some(id),
                _ => None,
            },
        }
    }

    pub fn symbol_name(&self, symbol: Symbol) -> &str {
        match symbol {
            Symbol::T(t) => &self.terminal(t).name,
            Symbol::N(n) => &self.nonterminal(n).name,
        }
    }

    pub fn delimiter_terminal(&self, pattern: &str) -> Option<TermId> {
        self.terminals
            .iter()
            .position(|t| matches!(&t.kind, TerminalKind::Delimiter(p) if p == pattern))
            .map(|i| TermId(i as u32))
    }

    pub fn nonterminal_named(&self, name: &str) -> Option<NtId> {
        self.nonterminals.iter().position(|n| n.name == name).map(|i| NtId(i as u32))
    }

    /// Nonterminals deriving the empty string.
    pub fn nullable(&self) -> Vec<bool> {
        let mut nullable = vec![false; self.nonterminals.len()];
        loop {
            let mut changed = false;
            for p in &self.productions {
                if !nullable[p.lhs.index()] && p.rhs.iter().all(|s| matches!(s, Symbol::N(n) if nullable[n.index()])) {
                    nullable[p.lhs.index()] = true;
                    changed = true;
                }
            }
            if !changed {
                return nullable;
            }
        }
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_bnf(self))
    }
}
