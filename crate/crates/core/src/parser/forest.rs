//! Shared packed parse forests and the trees they contain.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde_json::{json, Value};

use super::tables::Sig;
use super::{AmbiguityError, AmbiguousSpan, ExplicitViolationError, NoParseError, ParseError};
use crate::grammar::{Grammar, NtId, ProdId, Symbol, TermId};
use crate::lexer::TokenGraph;

pub type NodeId = usize;

/// The family attaches a nested operand of lower priority.
pub const NESTING: u8 = 1;
/// A trailing optional constituent went to the outer of two nested
/// composition-constrained instances.
pub const OUTER_ATTACHMENT: u8 = 2;
/// A trailing optional constituent went to the inner instance.
pub const INNER_ATTACHMENT: u8 = 4;
/// Left in place by an EXPLICIT composition constraint.
pub const EXPLICIT_MARK: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Symbol {
        nt: NtId,
        sig: Sig,
    },
    /// Partial derivation: the first `dot` constituents of `production`.
    Item {
        production: ProdId,
        dot: usize,
    },
    Token {
        candidate: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// One way of deriving a symbol node; `item` is `None` for ε.
    Packed { production: ProdId, item: Option<NodeId>, flags: u8 },
    /// One way of deriving an item node: the shorter item and the last
    /// constituent.
    Link { pred: Option<NodeId>, child: NodeId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestNode {
    pub kind: NodeKind,
    /// Token-graph positions (offsets) delimiting the node.
    pub start: usize,
    pub end: usize,
    pub families: Vec<Family>,
}

#[derive(Debug, Clone)]
pub struct ParseForest {
    pub grammar: Arc<Grammar>,
    pub tokens: TokenGraph,
    pub nodes: Vec<ForestNode>,
    pub roots: Vec<NodeId>,
}

/// One derivation extracted from a forest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParseTree {
    Node { nt: NtId, production: ProdId, span: (usize, usize), children: Vec<ParseTree> },
    Leaf { terminal: TermId, candidate: usize, span: (usize, usize), text: String },
}

impl ParseTree {
    pub fn span(&self) -> (usize, usize) {
        match self {
            ParseTree::Node { span, .. } | ParseTree::Leaf { span, .. } => *span,
        }
    }

    pub fn children(&self) -> &[ParseTree] {
        match self {
            ParseTree::Node { children, .. } => children,
            ParseTree::Leaf { .. } => &[],
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&ParseTree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                ParseTree::Leaf { .. } => out.push(t),
                ParseTree::Node { children, .. } => stack.extend(children.iter().rev()),
            }
        }
        out
    }

    /// Bracketed rendering, e.g. `(<Expression> (<Binary> 1 - 2))`.
    pub fn render(&self, grammar: &Grammar) -> String {
        let mut out = String::new();
        self.render_into(grammar, &mut out);
        out
    }

    fn render_into(&self, grammar: &Grammar, out: &mut String) {
        match self {
            ParseTree::Leaf { text, .. } => out.push_str(text),
            ParseTree::Node { nt, children, .. } => {
                out.push('(');
                out.push_str(grammar.symbol_name(Symbol::N(*nt)));
                for c in children {
                    out.push(' ');
                    c.render_into(grammar, out);
                }
                out.push(')');
            }
        }
    }
}

/// Trees extracted by [`ParseForest::enumerate_parses`].
#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub trees: Vec<ParseTree>,
    /// Number of trees in the forest, saturating.
    pub total: u64,
    /// More trees exist than were returned.
    pub overflow: bool,
}

impl ParseForest {
    pub(crate) fn new(grammar: Arc<Grammar>, tokens: TokenGraph, nodes: Vec<ForestNode>, roots: Vec<NodeId>) -> Self {
        let mut forest = ParseForest { grammar, tokens, nodes, roots };
        forest.prune();
        forest
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &ForestNode {
        &self.nodes[id]
    }

    fn successors(family: &Family) -> impl Iterator<Item = NodeId> {
        let (a, b) = match *family {
            Family::Packed { item, .. } => (item, None),
            Family::Link { pred, child } => (pred, Some(child)),
        };
        a.into_iter().chain(b)
    }

    /// Drops families with an underivable constituent and nodes not
    /// reachable from a root, then renumbers the nodes.
    pub(crate) fn prune(&mut self) {
        let n = self.nodes.len();
        let mut productive = vec![false; n];
        loop {
            let mut changed = false;
            for i in 0..n {
                if productive[i] {
                    continue;
                }
                let node = &self.nodes[i];
                let ok = matches!(node.kind, NodeKind::Token { .. })
                    || node.families.iter().any(|f| Self::successors(f).all(|c| productive[c]));
                if ok {
                    productive[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for node in &mut self.nodes {
            node.families.retain(|f| Self::successors(f).all(|c| productive[c]));
        }
        let mut reachable = vec![false; n];
        let mut stack: Vec<NodeId> = self.roots.iter().copied().filter(|&r| productive[r]).collect();
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut reachable[i], true) {
                continue;
            }
            for f in &self.nodes[i].families {
                stack.extend(Self::successors(f).filter(|&c| !reachable[c]));
            }
        }
        let mut remap = vec![usize::MAX; n];
        let mut nodes = Vec::new();
        for (i, node) in std::mem::take(&mut self.nodes).into_iter().enumerate() {
            if reachable[i] {
                remap[i] = nodes.len();
                nodes.push(node);
            }
        }
        for node in &mut nodes {
            for f in &mut node.families {
                *f = match *f {
                    Family::Packed { production, item, flags } => {
                        Family::Packed { production, item: item.map(|x| remap[x]), flags }
                    }
                    Family::Link { pred, child } => Family::Link { pred: pred.map(|x| remap[x]), child: remap[child] },
                };
            }
        }
        let mut roots: Vec<NodeId> = self.roots.iter().filter(|&&r| reachable[r]).map(|&r| remap[r]).collect();
        roots.sort_unstable();
        roots.dedup();
        self.nodes = nodes;
        self.roots = roots;
        self.sort_families();
    }

    fn sort_families(&mut self) {
        let keys: Vec<(usize, usize)> = self.nodes.iter().map(|n| (n.start, n.end)).collect();
        for node in &mut self.nodes {
            node.families.sort_by_key(|f| match *f {
                Family::Packed { production, item, flags } => {
                    (production.0 as usize, item.map_or((0, 0), |i| keys[i]), item, flags as usize)
                }
                Family::Link { pred, child } => (keys[child].0, keys[child], pred, child),
            });
            node.families.dedup();
        }
    }

    fn children_of(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id].families.iter().flat_map(Self::successors)
    }

    /// Nodes lying on a cycle of the forest graph.
    fn cyclic_nodes(&self) -> Vec<bool> {
        let n = self.nodes.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut cyclic = vec![false; n];
        let mut counter = 0;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut work: Vec<(NodeId, Vec<NodeId>, usize)> = Vec::new();
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            work.push((root, self.children_of(root).collect(), 0));
            while let Some(frame) = work.last_mut() {
                let v = frame.0;
                if frame.2 < frame.1.len() {
                    let w = frame.1[frame.2];
                    frame.2 += 1;
                    if w == v {
                        cyclic[v] = true;
                    }
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        work.push((w, self.children_of(w).collect(), 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    work.pop();
                    if let Some(parent) = work.last() {
                        low[parent.0] = low[parent.0].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut members = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            members.push(w);
                            if w == v {
                                break;
                            }
                        }
                        if members.len() > 1 {
                            for m in members {
                                cyclic[m] = true;
                            }
                        }
                    }
                }
            }
        }
        cyclic
    }

    /// Up to `limit` trees in a deterministic order, together with the
    /// total number of trees. Derivations through unit or ε cycles are
    /// counted only without repeating a node.
    pub fn enumerate_parses(&self, limit: usize) -> Enumeration {
        let limit = limit.max(1);
        let mut ex = Extractor {
            forest: self,
            limit,
            cyclic: self.cyclic_nodes(),
            on_path: HashSet::new(),
            trees: HashMap::new(),
            seqs: HashMap::new(),
            counts: HashMap::new(),
        };
        let mut trees = Vec::new();
        let mut total: u64 = 0;
        for &root in &self.roots {
            total = total.saturating_add(ex.count(root));
            for t in ex.trees(root).iter() {
                if trees.len() < limit {
                    trees.push(t.clone());
                }
            }
        }
        let overflow = total > trees.len() as u64;
        Enumeration { trees, total, overflow }
    }

    /// The only tree of the forest.
    pub fn require_unique(&self) -> Result<ParseTree, ParseError> {
        let mut e = self.enumerate_parses(2);
        match e.trees.len() {
            0 => Err(ParseError::NoParse(NoParseError {
                offset: self.tokens.input_len,
                expected: Vec::new(),
                constraints_inhibited: true,
            })),
            1 => Ok(e.trees.pop().expect("one tree")),
            _ => {
                let marked = self.marked_spans();
                if !marked.is_empty() {
                    return Err(ParseError::ExplicitViolation(ExplicitViolationError { spans: marked }));
                }
                Err(ParseError::Ambiguity(AmbiguityError { total: e.total, spans: self.ambiguous_spans(3) }))
            }
        }
    }

    fn marked_spans(&self) -> Vec<AmbiguousSpan> {
        let mut out = Vec::new();
        for node in &self.nodes {
            if let NodeKind::Symbol { nt, .. } = node.kind {
                for f in &node.families {
                    if let Family::Packed { flags, .. } = f {
                        if flags & EXPLICIT_MARK != 0 {
                            out.push(self.span_entry(nt, node));
                        }
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn span_entry(&self, nt: NtId, node: &ForestNode) -> AmbiguousSpan {
        AmbiguousSpan { symbol: self.grammar.symbol_name(Symbol::N(nt)).to_string(), start: node.start, end: node.end }
    }

    /// Spans where derivations differ, innermost first.
    pub fn ambiguous_spans(&self, max: usize) -> Vec<AmbiguousSpan> {
        let mut out: Vec<AmbiguousSpan> = Vec::new();
        let mut groups: HashMap<(NtId, usize, usize), usize> = HashMap::new();
        for node in &self.nodes {
            let entry = match node.kind {
                NodeKind::Symbol { nt, .. } => {
                    *groups.entry((nt, node.start, node.end)).or_default() += 1;
                    (node.families.len() > 1).then(|| self.span_entry(nt, node))
                }
                NodeKind::Item { production, .. } if node.families.len() > 1 => {
                    Some(self.span_entry(self.grammar.production(production).lhs, node))
                }
                _ => None,
            };
            out.extend(entry);
        }
        for ((nt, start, end), count) in groups {
            if count > 1 {
                out.push(AmbiguousSpan { symbol: self.grammar.symbol_name(Symbol::N(nt)).to_string(), start, end });
            }
        }
        out.sort_by_key(|s| (s.end - s.start, s.start, s.symbol.clone()));
        out.dedup();
        out.truncate(max);
        out
    }

    fn label(&self, node: &ForestNode) -> String {
        let g = &self.grammar;
        match node.kind {
            NodeKind::Symbol { nt, .. } => g.symbol_name(Symbol::N(nt)).to_string(),
            NodeKind::Item { production, dot } => {
                let p = g.production(production);
                let mut s = format!("{} ::=", g.symbol_name(Symbol::N(p.lhs)));
                for (i, sym) in p.rhs.iter().enumerate() {
                    if i == dot {
                        s.push_str(" .");
                    }
                    s.push(' ');
                    s.push_str(g.symbol_name(*sym));
                }
                if dot == p.rhs.len() {
                    s.push_str(" .");
                }
                s
            }
            NodeKind::Token { candidate } => {
                let c = &self.tokens.candidates[candidate];
                format!("{} {:?}", g.terminal(c.ty).name, c.text)
            }
        }
    }

    /// JSON rendering of the packed structure.
    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let kind = match node.kind {
                    NodeKind::Symbol { .. } => "symbol",
                    NodeKind::Item { .. } => "item",
                    NodeKind::Token { .. } => "token",
                };
                let families: Vec<Value> = node
                    .families
                    .iter()
                    .map(|f| match *f {
                        Family::Packed { production, item, flags } => {
                            json!({ "production": production.0, "item": item, "flags": flags })
                        }
                        Family::Link { pred, child } => json!({ "pred": pred, "child": child }),
                    })
                    .collect();
                json!({
                    "id": i,
                    "kind": kind,
                    "label": self.label(node),
                    "span": [node.start, node.end],
                    "families": families,
                })
            })
            .collect();
        json!({ "roots": self.roots, "nodes": nodes })
    }
}

struct Extractor<'f> {
    forest: &'f ParseForest,
    limit: usize,
    cyclic: Vec<bool>,
    on_path: HashSet<NodeId>,
    trees: HashMap<NodeId, Arc<Vec<ParseTree>>>,
    seqs: HashMap<NodeId, Arc<Vec<Vec<ParseTree>>>>,
    counts: HashMap<NodeId, u64>,
}

impl Extractor<'_> {
    fn count(&mut self, id: NodeId) -> u64 {
        if let Some(&c) = self.counts.get(&id) {
            return c;
        }
        if !self.on_path.insert(id) {
            return 0;
        }
        let node = &self.forest.nodes[id];
        let mut total: u64 = 0;
        match node.kind {
            NodeKind::Token { .. } => total = 1,
            _ => {
                for f in node.families.clone() {
                    let n = match f {
                        Family::Packed { item, .. } => item.map_or(1, |i| self.count(i)),
                        Family::Link { pred, child } => {
                            let a = pred.map_or(1, |p| self.count(p));
                            if a == 0 {
                                0
                            } else {
                                a.saturating_mul(self.count(child))
                            }
                        }
                    };
                    total = total.saturating_add(n);
                }
            }
        }
        self.on_path.remove(&id);
        if !self.cyclic[id] {
            self.counts.insert(id, total);
        }
        total
    }

    fn trees(&mut self, id: NodeId) -> Arc<Vec<ParseTree>> {
        if let Some(t) = self.trees.get(&id) {
            return t.clone();
        }
        if !self.on_path.insert(id) {
            return Arc::new(Vec::new());
        }
        let node = self.forest.nodes[id].clone();
        let mut out = Vec::new();
        match node.kind {
            NodeKind::Token { candidate } => {
                let c = &self.forest.tokens.candidates[candidate];
                out.push(ParseTree::Leaf { terminal: c.ty, candidate, span: (c.start, c.end), text: c.text.clone() });
            }
            NodeKind::Symbol { nt, .. } => {
                for f in &node.families {
                    let Family::Packed { production, item, .. } = *f else { continue };
                    let seqs = match item {
                        Some(i) => self.seqs(i),
                        None => Arc::new(vec![Vec::new()]),
                    };
                    for children in seqs.iter() {
                        if out.len() >= self.limit {
                            break;
                        }
                        let span = tight(children).unwrap_or((node.start, node.start));
                        let mut children = children.clone();
                        place_empty(&mut children, span.0);
                        out.push(ParseTree::Node { nt, production, span, children });
                    }
                }
            }
            NodeKind::Item { .. } => unreachable!("items are expanded through seqs"),
        }
        self.on_path.remove(&id);
        let out = Arc::new(out);
        if !self.cyclic[id] {
            self.trees.insert(id, out.clone());
        }
        out
    }

    fn seqs(&mut self, id: NodeId) -> Arc<Vec<Vec<ParseTree>>> {
        if let Some(s) = self.seqs.get(&id) {
            return s.clone();
        }
        if !self.on_path.insert(id) {
            return Arc::new(Vec::new());
        }
        let node = self.forest.nodes[id].clone();
        let mut out: Vec<Vec<ParseTree>> = Vec::new();
        'families: for f in &node.families {
            let Family::Link { pred, child } = *f else { continue };
            let prefixes = match pred {
                Some(p) => self.seqs(p),
                None => Arc::new(vec![Vec::new()]),
            };
            if prefixes.is_empty() {
                continue;
            }
            let last = self.trees(child);
            for prefix in prefixes.iter() {
                for t in last.iter() {
                    if out.len() >= self.limit {
                        break 'families;
                    }
                    let mut seq = prefix.clone();
                    seq.push(t.clone());
                    out.push(seq);
                }
            }
        }
        self.on_path.remove(&id);
        let out = Arc::new(out);
        if !self.cyclic[id] {
            self.seqs.insert(id, out.clone());
        }
        out
    }
}

/// Moves empty children to the end of their preceding sibling, or to `start`
/// when none precedes them, so that they lie within the parent span.
fn place_empty(children: &mut [ParseTree], start: usize) {
    let mut cursor = start;
    for c in children {
        let (a, b) = c.span();
        if a == b {
            c.move_empty(cursor);
        } else {
            cursor = b;
        }
    }
}

impl ParseTree {
    fn move_empty(&mut self, at: usize) {
        match self {
            ParseTree::Node { span, children, .. } => {
                *span = (at, at);
                for c in children {
                    c.move_empty(at);
                }
            }
            ParseTree::Leaf { span, .. } => *span = (at, at),
        }
    }
}

/// Span from the first to the last token among `children`, if any.
fn tight(children: &[ParseTree]) -> Option<(usize, usize)> {
    let mut spans = children.iter().map(ParseTree::span).filter(|s| s.0 != s.1);
    let first = spans.next()?;
    let last = spans.next_back().unwrap_or(first);
    Some((first.0, last.1))
}
