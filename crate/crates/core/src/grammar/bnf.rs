use std::collections::VecDeque;
use std::fmt::Write;

use super::{Grammar, NtId, Symbol};

/// Renders the grammar as BNF, one line per nonterminal:
/// `<Lhs> ::= alt | alt`. Element symbols print as `<Name>`, delimiters as
/// quoted text and the empty alternative as `ε`. The start symbol comes
/// first, then nonterminals in breadth-first order of first use.
pub fn emit_bnf(grammar: &Grammar) -> String {
    let mut order = Vec::with_capacity(grammar.nonterminals.len());
    let mut seen = vec![false; grammar.nonterminals.len()];
    let mut queue = VecDeque::from([grammar.start]);
    seen[grammar.start.index()] = true;
    while let Some(nt) = queue.pop_front() {
        order.push(nt);
        for &p in grammar.productions_of(nt) {
            for &symbol in &grammar.production(p).rhs {
                if let Symbol::N(n) = symbol {
                    if !seen[n.index()] {
                        seen[n.index()] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    order.extend((0..grammar.nonterminals.len()).filter(|&i| !seen[i]).map(|i| NtId(i as u32)));

    let mut out = String::new();
    for nt in order {
        let alternatives: Vec<String> = grammar
            .productions_of(nt)
            .iter()
            .map(|&p| {
                let rhs = &grammar.production(p).rhs;
                if rhs.is_empty() {
                    "ε".to_string()
                } else {
                    rhs.iter().map(|&s| render(grammar, s)).collect::<Vec<_>>().join(" ")
                }
            })
            .collect();
        let _ = writeln!(out, "<{}> ::= {}", grammar.nonterminal(nt).name, alternatives.join(" | "));
    }
    out
}

fn render(grammar: &Grammar, symbol: Symbol) -> String {
    match symbol {
        Symbol::N(n) => format!("<{}>", grammar.nonterminal(n).name),
        Symbol::T(t) => {
            let terminal = grammar.terminal(t);
            if terminal.is_delimiter() {
                format!("\"{}\"", terminal.name.replace('"', "\\\""))
            } else {
                format!("<{}>", terminal.name)
            }
        }
    }
}
