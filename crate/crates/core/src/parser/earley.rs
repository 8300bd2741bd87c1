//! Earley recognition over a token graph, building the packed forest as it
//! goes. Symbol nodes are split by [`Sig`] so that constraint checks can be
//! applied to each way a constituent was derived.

use std::collections::{HashMap, HashSet};

use smallvec::SmallVec;

use super::forest::{Family, ForestNode, NodeId, NodeKind, INNER_ATTACHMENT, NESTING, OUTER_ATTACHMENT};
use super::tables::{bit, ElemIdx, PrioSource, ProdKind, Sig, Tables};
use super::ParseOptions;
use crate::grammar::{Grammar, NtId, ProdId, Slot, Symbol};
use crate::lexer::TokenGraph;
use crate::model::Associativity;

/// Symbol, origin, end and signature of a completed node.
type SymbolKey = (NtId, u32, u32, Sig);

/// Position, core and priority of a recursive constituent.
type Pending = (u16, Option<ProdId>, Option<ElemIdx>);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
struct ItemState {
    /// `None` until the priority source has been read.
    prio: Option<Option<ElemIdx>>,
    /// Recursive constituents awaiting their checks: position, core, priority.
    pending: SmallVec<[Pending; 2]>,
    /// Operators read so far with their elements.
    ops: SmallVec<[(u16, ElemIdx); 2]>,
    /// Composition masks of the rightmost non-empty constituent.
    open: u64,
    closed: u64,
    own_open: u64,
    own_closed: u64,
    count: u32,
    flags: u8,
    carry: Option<Sig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ItemKey {
    prod: ProdId,
    dot: u32,
    origin: u32,
    state: ItemState,
}

#[derive(Debug, Clone)]
struct Item {
    key: ItemKey,
    node: Option<NodeId>,
}

#[derive(Default)]
struct Set {
    items: Vec<Item>,
    index: HashMap<ItemKey, usize>,
    waiting: HashMap<NtId, Vec<usize>>,
    predicted: HashSet<NtId>,
    completed_empty: HashMap<NtId, Vec<(NodeId, Sig)>>,
}

pub(crate) struct Outcome {
    pub nodes: Vec<ForestNode>,
    pub roots: Vec<NodeId>,
    /// Index of the rightmost set holding any item.
    pub rightmost: usize,
    /// Terminals expected there.
    pub expected: Vec<Symbol>,
}

pub(crate) struct Earley<'a> {
    grammar: &'a Grammar,
    tables: &'a Tables,
    graph: &'a TokenGraph,
    options: ParseOptions,
    sets: Vec<Set>,
    set_of: HashMap<usize, usize>,
    nodes: Vec<ForestNode>,
    symbols: HashMap<SymbolKey, NodeId>,
    tokens: HashMap<usize, NodeId>,
    families: HashSet<(NodeId, Family)>,
}

impl<'a> Earley<'a> {
    pub fn new(grammar: &'a Grammar, tables: &'a Tables, graph: &'a TokenGraph, options: ParseOptions) -> Self {
        let set_of = graph.positions.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        Earley {
            grammar,
            tables,
            graph,
            options,
            sets: (0..graph.positions.len()).map(|_| Set::default()).collect(),
            set_of,
            nodes: Vec::new(),
            symbols: HashMap::new(),
            tokens: HashMap::new(),
            families: HashSet::new(),
        }
    }

    pub fn run(mut self) -> Outcome {
        let start = self.grammar.start;
        self.predict(0, start);
        for j in 0..self.sets.len() {
            let mut k = 0;
            while k < self.sets[j].items.len() {
                let item = self.sets[j].items[k].clone();
                self.process(j, item);
                k += 1;
            }
        }
        let last = self.sets.len() - 1;
        let mut roots = Vec::new();
        if self.graph.positions[last] == self.graph.input_len {
            let mut keys: Vec<(&SymbolKey, &NodeId)> = self
                .symbols
                .iter()
                .filter(|((nt, o, e, _), _)| *nt == start && *o == 0 && *e as usize == last)
                .collect();
            keys.sort();
            roots = keys.into_iter().map(|(_, &n)| n).collect();
        }
        let rightmost = (0..self.sets.len()).rev().find(|&j| !self.sets[j].items.is_empty()).unwrap_or(0);
        let mut expected: Vec<Symbol> = self.sets[rightmost]
            .items
            .iter()
            .filter_map(|it| self.grammar.production(it.key.prod).rhs.get(it.key.dot as usize).copied())
            .filter(|s| matches!(s, Symbol::T(_)))
            .collect();
        expected.sort();
        expected.dedup();
        Outcome { nodes: self.nodes, roots, rightmost, expected }
    }

    fn predict(&mut self, j: usize, nt: NtId) {
        if !self.sets[j].predicted.insert(nt) {
            return;
        }
        for &prod in self.grammar.productions_of(nt) {
            let table = &self.tables.prods[prod.index()];
            let prio = match table.prio {
                PrioSource::Unranked => Some(None),
                PrioSource::Own(e) => Some(Some(e)),
                PrioSource::Position(_) => None,
            };
            let state = ItemState { prio, ..ItemState::default() };
            self.add_item(j, ItemKey { prod, dot: 0, origin: j as u32, state }, None);
        }
    }

    /// Adds an item to set `j`, creating its forest node; returns the node.
    fn add_item(&mut self, j: usize, key: ItemKey, link: Option<Family>) -> Option<NodeId> {
        if let Some(&i) = self.sets[j].index.get(&key) {
            let node = self.sets[j].items[i].node;
            if let (Some(n), Some(f)) = (node, link) {
                self.add_family(n, f);
            }
            return node;
        }
        let node = link.map(|f| {
            let start = self.graph.positions[key.origin as usize];
            let n = self.new_node(
                NodeKind::Item { production: key.prod, dot: key.dot as usize },
                start,
                self.graph.positions[j],
            );
            self.add_family(n, f);
            n
        });
        let set = &mut self.sets[j];
        set.index.insert(key.clone(), set.items.len());
        set.items.push(Item { key, node });
        node
    }

    fn new_node(&mut self, kind: NodeKind, start: usize, end: usize) -> NodeId {
        self.nodes.push(ForestNode { kind, start, end, families: Vec::new() });
        self.nodes.len() - 1
    }

    fn add_family(&mut self, node: NodeId, family: Family) {
        if self.families.insert((node, family)) {
            self.nodes[node].families.push(family);
        }
    }

    fn process(&mut self, j: usize, item: Item) {
        let prod = self.grammar.production(item.key.prod);
        let dot = item.key.dot as usize;
        if dot == prod.rhs.len() {
            self.complete(j, item);
            return;
        }
        match prod.rhs[dot] {
            Symbol::T(t) => {
                let offset = self.graph.positions[j];
                let candidates = &self.graph.candidates;
                let lo = candidates.partition_point(|c| c.start < offset);
                let hi = candidates.partition_point(|c| c.start <= offset);
                for (c, cand) in candidates.iter().enumerate().take(hi).skip(lo) {
                    if cand.ty != t {
                        continue;
                    }
                    let target = self.set_of[&self.graph.next[c]];
                    let node = match self.tokens.get(&c) {
                        Some(&n) => n,
                        None => {
                            let n = self.new_node(NodeKind::Token { candidate: c }, cand.start, cand.end);
                            self.tokens.insert(c, n);
                            n
                        }
                    };
                    let sig = self.tables.terminal_sigs[t.index()];
                    self.advance(&item, node, sig, target, false);
                }
            }
            Symbol::N(nt) => {
                let index = self.sets[j].index[&item.key];
                self.sets[j].waiting.entry(nt).or_default().push(index);
                self.predict(j, nt);
                let done = self.sets[j].completed_empty.get(&nt).cloned().unwrap_or_default();
                for (node, sig) in done {
                    self.advance(&item, node, sig, j, true);
                }
            }
        }
    }

    fn complete(&mut self, j: usize, item: Item) {
        let Some((sig, flags)) = self.finish(&item.key) else { return };
        let prod = self.grammar.production(item.key.prod);
        let lhs = prod.lhs;
        let origin = item.key.origin as usize;
        let key = (lhs, origin as u32, j as u32, sig);
        let family = Family::Packed { production: item.key.prod, item: item.node, flags };
        if let Some(&node) = self.symbols.get(&key) {
            self.add_family(node, family);
            return;
        }
        let node =
            self.new_node(NodeKind::Symbol { nt: lhs, sig }, self.graph.positions[origin], self.graph.positions[j]);
        self.symbols.insert(key, node);
        self.add_family(node, family);
        if origin == j {
            self.sets[j].completed_empty.entry(lhs).or_default().push((node, sig));
        }
        let waiters = self.sets[origin].waiting.get(&lhs).cloned().unwrap_or_default();
        for w in waiters {
            let waiter = self.sets[origin].items[w].clone();
            self.advance(&waiter, node, sig, j, origin == j);
        }
    }

    fn advance(&mut self, item: &Item, child: NodeId, sig: Sig, target: usize, empty: bool) {
        let Some(state) = self.step(&item.key, sig, empty) else { return };
        let key = ItemKey { prod: item.key.prod, dot: item.key.dot + 1, origin: item.key.origin, state };
        self.add_item(target, key, Some(Family::Link { pred: item.node, child }));
    }

    /// State after reading a constituent with signature `c` at the dot.
    fn step(&self, key: &ItemKey, c: Sig, empty: bool) -> Option<ItemState> {
        let prod = self.grammar.production(key.prod);
        let table = &self.tables.prods[key.prod.index()];
        let k = key.dot as usize;
        let mut st = key.state.clone();

        if let Symbol::N(n) = prod.rhs[k] {
            let list = self.tables.list(n);
            if prod.slots[k] == Slot::Rest {
                st.count = c.count;
            } else if self.options.counts && list.min >= 2 && c.count < list.min {
                return None;
            }
        }
        if table.prio == PrioSource::Position(k) {
            st.prio = Some(c.prio);
        }
        if table.operators & bit(k) != 0 {
            if let Some(e) = c.op {
                st.ops.push((k as u16, e));
            }
        }
        if table.recursive & bit(k) != 0 {
            st.pending.push((k as u16, c.core, c.prio));
        }
        if let Some((tail, b)) = table.tail {
            if tail == k {
                let b = 1u64 << b;
                if empty {
                    if st.closed & b != 0 {
                        st.flags |= INNER_ATTACHMENT;
                    }
                    st.own_open |= b;
                } else {
                    if st.open & b != 0 {
                        st.flags |= OUTER_ATTACHMENT;
                    }
                    st.own_closed |= b;
                }
            }
        }
        if !empty {
            st.open = c.open;
            st.closed = c.closed;
        }
        if table.carry == Some(k) {
            st.carry = Some(c);
        }
        self.decide(key.prod, &mut st, k + 1)?;
        Some(st)
    }

    /// Runs the checks of pending recursive constituents whose operators and
    /// priority are all known once `dot` constituents have been read.
    fn decide(&self, prod: ProdId, st: &mut ItemState, dot: usize) -> Option<()> {
        if st.pending.is_empty() {
            return Some(());
        }
        let Some(p) = st.prio else { return Some(()) };
        let table = &self.tables.prods[prod.index()];
        let len = self.grammar.production(prod).rhs.len();
        let mut i = 0;
        while i < st.pending.len() {
            let (pos, core, q) = st.pending[i];
            let pos = pos as usize;
            if table.decide_after[pos] >= dot && dot < len {
                i += 1;
                continue;
            }
            st.pending.remove(i);
            if self.tables.precedes(p, q) {
                if self.options.priority_nesting {
                    return None;
                }
                st.flags |= NESTING;
            }
            if self.options.associativity
                && core == Some(prod)
                && !self.tables.related(p, q)
                && self.guarded(table, &st.ops, pos)
            {
                return None;
            }
        }
        Some(())
    }

    fn guarded(&self, table: &super::tables::ProdTable, ops: &[(u16, ElemIdx)], pos: usize) -> bool {
        if table.own_guard & bit(pos) != 0 {
            return true;
        }
        let rec = table.recursive;
        ops.iter().any(|&(j, e)| {
            let j = j as usize;
            let next = (j + 1..64).find(|&k| rec & bit(k) != 0);
            let prev = (0..j).rev().find(|&k| rec & bit(k) != 0);
            match self.tables.assoc[e as usize] {
                Associativity::LeftToRight => next == Some(pos),
                Associativity::RightToLeft => prev == Some(pos),
                Associativity::NonAssociative => next == Some(pos) || prev == Some(pos),
                Associativity::Undefined => false,
            }
        })
    }

    /// Signature and family flags of a completed item, or `None` when a
    /// constraint inhibits the reduction.
    fn finish(&self, key: &ItemKey) -> Option<(Sig, u8)> {
        let mut st = key.state.clone();
        let len = self.grammar.production(key.prod).rhs.len();
        self.decide(key.prod, &mut st, len)?;
        let table = &self.tables.prods[key.prod.index()];
        let masks = |sig: Sig| Sig { open: st.open, closed: st.closed, ..sig };
        let sig = match table.kind {
            ProdKind::Composite(_) => Sig {
                core: table.guarded.then_some(key.prod),
                prio: st.prio.flatten(),
                open: st.open | st.own_open,
                closed: st.closed | st.own_closed,
                ..Sig::default()
            },
            ProdKind::Selection => st.carry.unwrap_or_default(),
            ProdKind::List { recursive } => {
                let list = self.tables.list(self.grammar.production(key.prod).lhs);
                let mut count = 0;
                if list.tracked {
                    count = 1 + if recursive { st.count } else { 0 };
                    if self.options.counts && list.max.is_some_and(|m| count > m) {
                        return None;
                    }
                    count = list.cap(count);
                }
                masks(Sig { count, ..Sig::default() })
            }
            ProdKind::Wrapper => masks(Sig::default()),
        };
        Some((sig, st.flags))
    }
}
