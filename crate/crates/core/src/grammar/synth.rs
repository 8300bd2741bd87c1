use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use super::{
    ConstraintHook, Grammar, HookKind, Nonterminal, NonterminalKind, NtId, Origin, ProdId, Production, Slot, Symbol,
    TermId, Terminal, TerminalKind,
};
use crate::lexer::regex::Regex;
use crate::model::{
    Associativity, Composition, ElementDecl, ElementId, ElementKind, LanguageModel, MemberDecl, Precedence,
    TypeHierarchy,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("element `{0}` is referenced but not declared")]
    UnknownElement(ElementId),
    #[error("abstract element `{0}` has no subtypes")]
    AbstractWithoutSubtypes(ElementId),
    #[error("root element `{0}` is basic; the root must be composite or abstract")]
    RootIsBasic(ElementId),
}

/// Right-hand side symbols with their slots.
type Symbols = Vec<(Symbol, Slot)>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ListKey {
    element: ElementId,
    separators: Vec<String>,
    min_hook: u32,
    max: Option<u32>,
    scope: Option<ElementId>,
}

/// Incremental grammar construction. [`synthesize_grammar`] drives it over
/// every element reachable from the root; the `lower_*` methods are the
/// individual lowering rules.
pub struct Synthesizer<'m> {
    model: &'m LanguageModel,
    hierarchy: &'m TypeHierarchy,
    precedence: Precedence,
    terminals: Vec<Terminal>,
    nonterminals: Vec<Nonterminal>,
    productions: Vec<Production>,
    taken: HashSet<String>,
    element_terms: HashMap<ElementId, TermId>,
    element_nts: HashMap<ElementId, NtId>,
    delimiters: HashMap<String, TermId>,
    lists: HashMap<ListKey, NtId>,
    optional_lists: HashMap<NtId, NtId>,
    queue: VecDeque<ElementId>,
}

/// Builds the grammar for every element reachable from the model's root.
pub fn synthesize_grammar(model: &LanguageModel, hierarchy: &TypeHierarchy) -> Result<Grammar, SynthesisError> {
    let mut synth = Synthesizer::new(model, hierarchy);
    let root = model.get(model.root.as_str()).ok_or_else(|| SynthesisError::UnknownElement(model.root.clone()))?;
    if root.kind == ElementKind::Basic {
        return Err(SynthesisError::RootIsBasic(root.id.clone()));
    }
    let start = match synth.element_symbol(&root.id)? {
        Symbol::N(n) => n,
        Symbol::T(_) => unreachable!("non-basic elements map to nonterminals"),
    };
    while let Some(id) = synth.queue.pop_front() {
        let decl = model.get(id.as_str()).ok_or_else(|| SynthesisError::UnknownElement(id.clone()))?;
        match decl.kind {
            ElementKind::Basic => {}
            ElementKind::Composite => {
                synth.lower_composite(decl)?;
                if !hierarchy.direct_subtypes(id.as_str()).is_empty() {
                    synth.lower_selection(decl)?;
                }
            }
            ElementKind::Abstract => {
                synth.lower_selection(decl)?;
            }
        }
    }
    Ok(synth.finish(start))
}

impl<'m> Synthesizer<'m> {
    pub fn new(model: &'m LanguageModel, hierarchy: &'m TypeHierarchy) -> Synthesizer<'m> {
        Synthesizer {
            model,
            hierarchy,
            precedence: Precedence::new(model),
            terminals: Vec::new(),
            nonterminals: Vec::new(),
            productions: Vec::new(),
            taken: model.elements.keys().map(|id| id.to_string()).collect(),
            element_terms: HashMap::new(),
            element_nts: HashMap::new(),
            delimiters: HashMap::new(),
            lists: HashMap::new(),
            optional_lists: HashMap::new(),
            queue: VecDeque::new(),
        }
    }

    pub fn finish(self, start: NtId) -> Grammar {
        Grammar::assemble(
            Arc::new(self.model.clone()),
            Arc::new(self.hierarchy.clone()),
            self.terminals,
            self.nonterminals,
            self.productions,
            start,
        )
    }

    fn decl(&self, id: &ElementId) -> Result<&'m ElementDecl, SynthesisError> {
        self.model.get(id.as_str()).ok_or_else(|| SynthesisError::UnknownElement(id.clone()))
    }

    fn fresh_name(&mut self, base: String) -> String {
        let name = if self.taken.contains(&base) {
            (1..).map(|n| format!("{base}_g{n}")).find(|n| !self.taken.contains(n)).unwrap()
        } else {
            base
        };
        self.taken.insert(name.clone());
        name
    }

    fn add_nonterminal(&mut self, name: String, kind: NonterminalKind) -> NtId {
        self.nonterminals.push(Nonterminal { name, kind });
        NtId(self.nonterminals.len() as u32 - 1)
    }

    fn add_production(
        &mut self,
        lhs: NtId,
        rhs: Vec<(Symbol, Slot)>,
        origin: Origin,
        hooks: Vec<ConstraintHook>,
    ) -> ProdId {
        let (rhs, slots) = rhs.into_iter().unzip();
        self.productions.push(Production { lhs, rhs, origin, hooks, slots });
        ProdId(self.productions.len() as u32 - 1)
    }

    /// The symbol standing for an element; nonterminals are queued for
    /// lowering on first use.
    pub fn element_symbol(&mut self, id: &ElementId) -> Result<Symbol, SynthesisError> {
        let decl = self.decl(id)?;
        if decl.kind == ElementKind::Basic {
            if let Some(&t) = self.element_terms.get(id) {
                return Ok(Symbol::T(t));
            }
            self.terminals.push(Terminal { name: id.to_string(), kind: TerminalKind::Element(id.clone()) });
            let t = TermId(self.terminals.len() as u32 - 1);
            self.element_terms.insert(id.clone(), t);
            return Ok(Symbol::T(t));
        }
        if let Some(&n) = self.element_nts.get(id) {
            return Ok(Symbol::N(n));
        }
        let n = self.add_nonterminal(id.to_string(), NonterminalKind::Element(id.clone()));
        self.element_nts.insert(id.clone(), n);
        self.queue.push_back(id.clone());
        Ok(Symbol::N(n))
    }

    /// The shared terminal for a delimiter pattern.
    pub fn delimiter(&mut self, pattern: &str) -> TermId {
        if let Some(&t) = self.delimiters.get(pattern) {
            return t;
        }
        let name = Regex::new(pattern).ok().and_then(|re| re.literal_text()).unwrap_or_else(|| pattern.to_string());
        self.terminals.push(Terminal { name, kind: TerminalKind::Delimiter(pattern.to_string()) });
        let t = TermId(self.terminals.len() as u32 - 1);
        self.delimiters.insert(pattern.to_string(), t);
        t
    }

    fn delimiters_of(&mut self, patterns: &[String]) -> Vec<(Symbol, Slot)> {
        patterns.iter().map(|p| (Symbol::T(self.delimiter(p)), Slot::Delimiter)).collect()
    }

    /// Element-level delimiters of basic and abstract elements surround
    /// each reference; composites carry theirs inside their own production.
    fn site_delimiters(&mut self, id: &ElementId) -> Result<(Symbols, Symbols), SynthesisError> {
        let decl = self.decl(id)?;
        if decl.kind == ElementKind::Composite {
            return Ok((Vec::new(), Vec::new()));
        }
        Ok((self.delimiters_of(&decl.prefixes), self.delimiters_of(&decl.suffixes)))
    }

    fn reference(&mut self, id: &ElementId, slot: Slot) -> Result<Vec<(Symbol, Slot)>, SynthesisError> {
        let (mut rhs, suffixes) = self.site_delimiters(id)?;
        rhs.push((self.element_symbol(id)?, slot));
        rhs.extend(suffixes);
        Ok(rhs)
    }

    /// `<X> ::= prefixes (member-prefixes member member-suffixes)* suffixes`.
    pub fn lower_composite(&mut self, decl: &ElementDecl) -> Result<ProdId, SynthesisError> {
        let lhs = match self.element_symbol(&decl.id)? {
            Symbol::N(n) => n,
            Symbol::T(_) => unreachable!("composites map to nonterminals"),
        };
        let mut rhs = self.delimiters_of(&decl.prefixes);
        for (i, member) in decl.members.iter().enumerate() {
            let c = member.cardinality;
            if c.is_repeated() {
                rhs.extend(self.delimiters_of(&member.prefixes));
                let (list, _) = self.list_site(member, decl)?;
                if c.min == 0 {
                    let wrapper = self.optional_list(list, member, decl)?;
                    rhs.push((Symbol::N(wrapper), Slot::Member(i)));
                } else {
                    let (pre, suf) = self.site_delimiters(&member.element)?;
                    rhs.extend(pre);
                    rhs.push((Symbol::N(list), Slot::Member(i)));
                    rhs.extend(suf);
                }
                rhs.extend(self.delimiters_of(&member.suffixes));
            } else if c.optional {
                let (wrapper, _) = self.optional_member(member, decl)?;
                rhs.push((Symbol::N(wrapper), Slot::Member(i)));
            } else {
                rhs.extend(self.delimiters_of(&member.prefixes));
                rhs.extend(self.reference(&member.element, Slot::Member(i))?);
                rhs.extend(self.delimiters_of(&member.suffixes));
            }
        }
        rhs.extend(self.delimiters_of(&decl.suffixes));
        let hooks = self.composite_hooks(decl, &rhs);
        Ok(self.add_production(lhs, rhs, Origin::Composite { element: decl.id.clone() }, hooks))
    }

    fn composite_hooks(&self, decl: &ElementDecl, rhs: &[(Symbol, Slot)]) -> Vec<ConstraintHook> {
        let element_at = |i: usize| -> Option<&ElementId> {
            match rhs[i].0 {
                Symbol::T(t) => self.terminals[t.index()].element(),
                Symbol::N(n) => match &self.nonterminals[n.index()].kind {
                    NonterminalKind::Element(id) => Some(id),
                    _ => None,
                },
            }
        };
        let recursive: Vec<usize> = (0..rhs.len())
            .filter(|&i| {
                matches!(rhs[i].0, Symbol::N(_))
                    && element_at(i).is_some_and(|e| self.hierarchy.is_subtype_or_self(decl.id.as_str(), e.as_str()))
            })
            .collect();
        let mut hooks = Vec::new();

        let own = self.model.effective_associativity(self.hierarchy, decl.id.as_str());
        let guarded: Vec<usize> = match (own, recursive.first(), recursive.last()) {
            (Associativity::Undefined, _, _) | (_, None, _) | (_, _, None) => Vec::new(),
            (Associativity::LeftToRight, _, Some(&last)) => vec![last],
            (Associativity::RightToLeft, Some(&first), _) => vec![first],
            (Associativity::NonAssociative, _, _) => recursive.clone(),
        };
        hooks.extend(
            guarded.into_iter().map(|i| ConstraintHook { kind: HookKind::Associativity(own), position: Some(i) }),
        );

        for i in 0..rhs.len() {
            if recursive.contains(&i) {
                continue;
            }
            let Some(e) = element_at(i) else { continue };
            let declared = self.model.effective_associativity(self.hierarchy, e.as_str());
            let any = declared != Associativity::Undefined
                || self.hierarchy.transitive_subtypes(e.as_str()).iter().any(|s| {
                    self.model.effective_associativity(self.hierarchy, s.as_str()) != Associativity::Undefined
                });
            if any && !recursive.is_empty() {
                hooks.push(ConstraintHook { kind: HookKind::OperatorAssociativity(declared), position: Some(i) });
            }
        }

        if self.precedence.is_ranked(decl.id.as_str()) {
            hooks.push(ConstraintHook { kind: HookKind::Priority { element: Some(decl.id.clone()) }, position: None });
        } else if let Some(i) = (0..rhs.len()).find(|&i| !recursive.contains(&i) && element_at(i).is_some()) {
            hooks.push(ConstraintHook { kind: HookKind::Priority { element: None }, position: Some(i) });
        }

        let composition = self.model.effective_composition(self.hierarchy, decl.id.as_str());
        if composition != Composition::Undefined {
            if let Some((Symbol::N(n), _)) = rhs.last() {
                if matches!(
                    self.nonterminals[n.index()].kind,
                    NonterminalKind::OptionalList { .. } | NonterminalKind::OptionalMember { .. }
                ) {
                    hooks.push(ConstraintHook {
                        kind: HookKind::Composition(composition),
                        position: Some(rhs.len() - 1),
                    });
                }
            }
        }
        hooks
    }

    /// One unit production per direct subtype, in declaration order.
    pub fn lower_selection(&mut self, decl: &ElementDecl) -> Result<Vec<ProdId>, SynthesisError> {
        let subtypes = self.hierarchy.direct_subtypes(decl.id.as_str());
        if subtypes.is_empty() {
            return Err(SynthesisError::AbstractWithoutSubtypes(decl.id.clone()));
        }
        let lhs = match self.element_symbol(&decl.id)? {
            Symbol::N(n) => n,
            Symbol::T(_) => unreachable!("selection points map to nonterminals"),
        };
        let mut out = Vec::new();
        for sub in subtypes {
            let rhs = self.reference(sub, Slot::Element)?;
            let origin = Origin::Selection { element: decl.id.clone(), subtype: sub.clone() };
            out.push(self.add_production(lhs, rhs, origin, Vec::new()));
        }
        Ok(out)
    }

    fn effective_separators(&self, member: &MemberDecl) -> Result<Vec<String>, SynthesisError> {
        Ok(match &member.separators {
            Some(seps) => seps.clone(),
            None => self.decl(&member.element)?.default_separators.clone(),
        })
    }

    /// The list nonterminal for a repeated member, shared between members
    /// with the same element, separators and bounds. Returns the newly
    /// created productions as well.
    fn list_site(&mut self, member: &MemberDecl, owner: &ElementDecl) -> Result<(NtId, Vec<ProdId>), SynthesisError> {
        let c = member.cardinality;
        let separators = self.effective_separators(member)?;
        let adhoc = member.separators.is_some();
        let key = ListKey {
            element: member.element.clone(),
            separators: separators.clone(),
            min_hook: if c.min >= 2 { c.min } else { 0 },
            max: c.max,
            scope: adhoc.then(|| owner.id.clone()),
        };
        if let Some(&n) = self.lists.get(&key) {
            return Ok((n, Vec::new()));
        }
        let base =
            if adhoc { format!("{}{}List", owner.id, member.element) } else { format!("{}List", member.element) };
        let name = self.fresh_name(base);
        let list = self.add_nonterminal(
            name,
            NonterminalKind::List {
                element: member.element.clone(),
                separators: separators.clone(),
                min: c.min,
                max: c.max,
            },
        );
        self.lists.insert(key, list);

        let mut hooks = Vec::new();
        if c.min >= 2 {
            hooks.push(ConstraintHook {
                kind: HookKind::MinCount { n: c.min, member: member.name.clone() },
                position: None,
            });
        }
        if let Some(max) = c.max {
            hooks.push(ConstraintHook {
                kind: HookKind::MaxCount { n: max, member: member.name.clone() },
                position: None,
            });
        }
        let item = (self.element_symbol(&member.element)?, Slot::Item);
        let mut cons = vec![item];
        cons.extend(self.delimiters_of(&separators));
        cons.push((Symbol::N(list), Slot::Rest));
        let origin = |recursive| Origin::List { owner: owner.id.clone(), member: member.name.clone(), recursive };
        let a = self.add_production(list, cons, origin(true), hooks.clone());
        let b = self.add_production(list, vec![item], origin(false), hooks);
        Ok((list, vec![a, b]))
    }

    fn optional_list(&mut self, list: NtId, member: &MemberDecl, owner: &ElementDecl) -> Result<NtId, SynthesisError> {
        if let Some(&n) = self.optional_lists.get(&list) {
            return Ok(n);
        }
        let name = self.fresh_name(format!("Optional{}", self.nonterminals[list.index()].name));
        let wrapper = self.add_nonterminal(name, NonterminalKind::OptionalList { list });
        self.optional_lists.insert(list, wrapper);
        let (mut rhs, suffixes) = self.site_delimiters(&member.element)?;
        rhs.push((Symbol::N(list), Slot::Inner));
        rhs.extend(suffixes);
        let origin = |present| Origin::OptionalList { owner: owner.id.clone(), member: member.name.clone(), present };
        self.add_production(wrapper, rhs, origin(true), Vec::new());
        self.add_production(wrapper, Vec::new(), origin(false), Vec::new());
        Ok(wrapper)
    }

    /// Lowers a repeated member: the list productions (when not already
    /// shared) and, for `min = 0`, the `list | ε` wrapper.
    pub fn lower_repetition(
        &mut self,
        member: &MemberDecl,
        owner: &ElementDecl,
    ) -> Result<Vec<ProdId>, SynthesisError> {
        let (list, mut created) = self.list_site(member, owner)?;
        if member.cardinality.min == 0 {
            let before = self.productions.len();
            self.optional_list(list, member, owner)?;
            created.extend((before..self.productions.len()).map(|i| ProdId(i as u32)));
        }
        Ok(created)
    }

    fn optional_member(
        &mut self,
        member: &MemberDecl,
        owner: &ElementDecl,
    ) -> Result<(NtId, Vec<ProdId>), SynthesisError> {
        let name = self.fresh_name(format!("Optional{}Of{}", capitalize(&member.name), owner.id));
        let wrapper = self.add_nonterminal(
            name,
            NonterminalKind::OptionalMember { owner: owner.id.clone(), member: member.name.clone() },
        );
        let mut rhs = self.delimiters_of(&member.prefixes);
        rhs.extend(self.reference(&member.element, Slot::Inner)?);
        rhs.extend(self.delimiters_of(&member.suffixes));
        let origin = |present| Origin::OptionalMember { owner: owner.id.clone(), member: member.name.clone(), present };
        let a = self.add_production(wrapper, rhs, origin(true), Vec::new());
        let b = self.add_production(wrapper, Vec::new(), origin(false), Vec::new());
        Ok((wrapper, vec![a, b]))
    }

    /// `Opt ::= member-prefixes element member-suffixes | ε`.
    pub fn lower_optional(&mut self, member: &MemberDecl, owner: &ElementDecl) -> Result<Vec<ProdId>, SynthesisError> {
        Ok(self.optional_member(member, owner)?.1)
    }
}

fn capitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
