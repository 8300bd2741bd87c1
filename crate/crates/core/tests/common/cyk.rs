//! Brute-force derivation enumeration over token sequences by dynamic
//! programming on spans. Grammars must not derive any nonterminal from
//! itself without consuming input. Token graphs are handled path by path.

use std::collections::HashMap;
use std::rc::Rc;

use modelgen::grammar::{Grammar, NtId, Symbol, TermId};
use modelgen::lexer::TokenGraph;
use modelgen::parser::ParseTree;

pub struct Cyk<'g> {
    g: &'g Grammar,
    /// Terminal and candidate index of each token.
    tokens: Vec<(TermId, usize)>,
    /// Fewest tokens each nonterminal derives.
    min_len: Vec<usize>,
    counts: HashMap<(NtId, usize, usize), u128>,
    trees: HashMap<(NtId, usize, usize), Rc<Vec<String>>>,
}

impl<'g> Cyk<'g> {
    pub fn new(g: &'g Grammar, tokens: &[(TermId, usize)]) -> Cyk<'g> {
        Cyk { g, tokens: tokens.to_vec(), min_len: min_lengths(g), counts: HashMap::new(), trees: HashMap::new() }
    }

    fn min_len_of(&self, symbols: &[Symbol]) -> usize {
        symbols
            .iter()
            .map(|s| match s {
                Symbol::T(_) => 1,
                Symbol::N(n) => self.min_len[n.index()],
            })
            .fold(0usize, usize::saturating_add)
    }

    /// Number of derivations of the whole token sequence.
    pub fn count(&mut self) -> u128 {
        self.count_nt(self.g.start, 0, self.tokens.len())
    }

    /// Canonical forms of all derivations, sorted.
    pub fn trees(&mut self) -> Vec<String> {
        let mut out = (*self.trees_nt(self.g.start, 0, self.tokens.len())).clone();
        out.sort();
        out
    }

    fn count_nt(&mut self, nt: NtId, i: usize, j: usize) -> u128 {
        if let Some(&c) = self.counts.get(&(nt, i, j)) {
            return c;
        }
        let mut total = 0u128;
        for &p in self.g.productions_of(nt) {
            let rhs = self.g.production(p).rhs.clone();
            total = total.saturating_add(self.count_seq(&rhs, i, j));
        }
        self.counts.insert((nt, i, j), total);
        total
    }

    fn count_seq(&mut self, rhs: &[Symbol], i: usize, j: usize) -> u128 {
        let Some((first, rest)) = rhs.split_first() else {
            return (i == j) as u128;
        };
        match *first {
            Symbol::T(t) => {
                if i < j && self.tokens[i].0 == t {
                    self.count_seq(rest, i + 1, j)
                } else {
                    0
                }
            }
            Symbol::N(b) => {
                let mut total = 0u128;
                let Some(hi) = j.checked_sub(self.min_len_of(rest)) else { return 0 };
                for m in i..=hi {
                    let left = self.count_nt(b, i, m);
                    if left > 0 {
                        total = total.saturating_add(left.saturating_mul(self.count_seq(rest, m, j)));
                    }
                }
                total
            }
        }
    }

    fn trees_nt(&mut self, nt: NtId, i: usize, j: usize) -> Rc<Vec<String>> {
        if let Some(t) = self.trees.get(&(nt, i, j)) {
            return t.clone();
        }
        let mut out = Vec::new();
        for &p in self.g.productions_of(nt) {
            let rhs = self.g.production(p).rhs.clone();
            for children in self.trees_seq(&rhs, i, j) {
                let mut s = format!("(P{}", p.0);
                for c in children {
                    s.push(' ');
                    s.push_str(&c);
                }
                s.push(')');
                out.push(s);
            }
        }
        let out = Rc::new(out);
        self.trees.insert((nt, i, j), out.clone());
        out
    }

    fn trees_seq(&mut self, rhs: &[Symbol], i: usize, j: usize) -> Vec<Vec<String>> {
        let Some((first, rest)) = rhs.split_first() else {
            return if i == j { vec![Vec::new()] } else { Vec::new() };
        };
        let mut out = Vec::new();
        match *first {
            Symbol::T(t) => {
                if i < j && self.tokens[i].0 == t {
                    for tail in self.trees_seq(rest, i + 1, j) {
                        let mut v = vec![format!("T{}@{}", t.0, self.tokens[i].1)];
                        v.extend(tail);
                        out.push(v);
                    }
                }
            }
            Symbol::N(b) => {
                let Some(hi) = j.checked_sub(self.min_len_of(rest)) else { return out };
                for m in i..=hi {
                    let heads = self.trees_nt(b, i, m);
                    if heads.is_empty() {
                        continue;
                    }
                    let tails = self.trees_seq(rest, m, j);
                    for h in heads.iter() {
                        for tail in &tails {
                            let mut v = vec![h.clone()];
                            v.extend(tail.iter().cloned());
                            out.push(v);
                        }
                    }
                }
            }
        }
        out
    }
}

fn min_lengths(g: &Grammar) -> Vec<usize> {
    let mut len = vec![usize::MAX; g.nonterminals.len()];
    loop {
        let mut changed = false;
        for p in &g.productions {
            let l = p
                .rhs
                .iter()
                .map(|s| match s {
                    Symbol::T(_) => 1,
                    Symbol::N(n) => len[n.index()],
                })
                .fold(0usize, usize::saturating_add);
            if l < len[p.lhs.index()] {
                len[p.lhs.index()] = l;
                changed = true;
            }
        }
        if !changed {
            return len;
        }
    }
}

/// Canonical form of a parse tree, with leaves named by candidate.
pub fn canonical(tree: &ParseTree) -> String {
    match tree {
        ParseTree::Leaf { terminal, candidate, .. } => format!("T{}@{}", terminal.0, candidate),
        ParseTree::Node { production, children, .. } => {
            let mut s = format!("(P{}", production.0);
            for c in children {
                s.push(' ');
                s.push_str(&canonical(c));
            }
            s.push(')');
            s
        }
    }
}

/// Every candidate path from the start of the graph to the end of the
/// input.
pub fn paths(graph: &TokenGraph) -> Vec<Vec<(TermId, usize)>> {
    fn walk(graph: &TokenGraph, c: usize, path: &mut Vec<(TermId, usize)>, out: &mut Vec<Vec<(TermId, usize)>>) {
        path.push((graph.candidates[c].ty, c));
        if graph.next[c] == graph.input_len {
            out.push(path.clone());
        }
        for &n in &graph.edges[c] {
            walk(graph, n, path, out);
        }
        path.pop();
    }
    let mut out = Vec::new();
    if graph.origin >= graph.input_len {
        out.push(Vec::new());
    }
    for &s in &graph.starts {
        walk(graph, s, &mut Vec::new(), &mut out);
    }
    out
}

/// Derivation count and, when at most `limit`, the sorted canonical trees
/// over all paths of `graph`.
pub fn oracle(g: &Grammar, graph: &TokenGraph, limit: u128) -> (u128, Option<Vec<String>>) {
    let paths = paths(graph);
    let total = paths.iter().fold(0u128, |acc, p| acc.saturating_add(Cyk::new(g, p).count()));
    if total > limit {
        return (total, None);
    }
    let mut trees = Vec::new();
    for p in &paths {
        trees.extend(Cyk::new(g, p).trees());
    }
    trees.sort();
    (total, Some(trees))
}
