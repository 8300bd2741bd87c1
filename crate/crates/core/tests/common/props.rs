//! Invariant checks shared by the property tests and the acceptance suite.
//! Each returns `Err` with a description of the first violation.

use std::collections::BTreeMap;

use modelgen::grammar::{Grammar, NonterminalKind, Origin, Slot, Symbol, TermId, TerminalKind};
use modelgen::instance::{instantiate, Child, InstanceNode};
use modelgen::lexer::{scan, Regex as SkipRegex};
use modelgen::model::{load_model, to_document, validate_model, ElementKind, PatternSpec};
use modelgen::parser::{disambiguate_composition, filter_priority, ParseForest, ParseOptions, ParseTree, Parser};
use modelgen::Language;

use super::cyk::{canonical, oracle};
use super::gen;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

/// Overlapping token types: keywords inside identifiers, integers inside
/// reals.
pub fn lexer_language() -> Language {
    Language::from_document(
        r#"{
  "root": "Text",
  "elements": {
    "Text": { "kind": "composite", "members": [
      { "name": "items", "element": "Item", "min": 0, "separator": ["\\+"] } ] },
    "Item": { "kind": "abstract" },
    "Keyword": { "extends": "Item", "kind": "basic", "pattern": { "regex": "if|iff|i" } },
    "Identifier": { "extends": "Item", "kind": "basic", "pattern": { "regex": "[a-z]+" } },
    "Number": { "extends": "Item", "kind": "basic", "value": { "field": "value", "type": "integer" } },
    "Decimal": { "extends": "Item", "kind": "basic", "value": { "field": "value", "type": "real" } }
  }
}"#,
    )
    .expect("lexer model is valid")
}

/// Source pattern of a terminal.
pub fn pattern_of(g: &Grammar, t: TermId) -> String {
    match &g.terminal(t).kind {
        TerminalKind::Delimiter(p) => p.clone(),
        TerminalKind::Element(id) => {
            let decl = g.model.get(id.as_str()).unwrap();
            match &decl.pattern {
                Some(PatternSpec::Regex(p)) => p.clone(),
                _ => decl.value.as_ref().and_then(|v| v.ty.implicit_pattern()).unwrap().to_string(),
            }
        }
    }
}

fn full_matchers(lang: &Language) -> Vec<regex::Regex> {
    let g = lang.grammar();
    (0..g.terminals.len())
        .map(|i| regex::Regex::new(&format!("^(?:{})$", pattern_of(g, TermId(i as u32)))).unwrap())
        .collect()
}

fn longest_full_match(re: &regex::Regex, input: &str, start: usize) -> Option<usize> {
    (start + 1..=input.len()).rev().find(|&k| input.is_char_boundary(k) && re.is_match(&input[start..k]))
}

/// Every candidate is the longest match of its type at its start, and every
/// type matching at a reachable offset has its longest match there.
pub fn candidate_maximality(lang: &Language, input: &str) -> Result<(), String> {
    let full = full_matchers(lang);
    let skip = SkipRegex::new(lang.model().skip_pattern()).unwrap();
    let graph = match scan(input, lang.token_types(), &skip) {
        Ok(g) => g,
        Err(e) => {
            for re in &full {
                ensure!(
                    longest_full_match(re, input, e.offset).is_none(),
                    "scan of {input:?} failed at {} where {re} matches",
                    e.offset
                );
            }
            return Ok(());
        }
    };
    for c in &graph.candidates {
        ensure!(c.text == input[c.start..c.end], "candidate text {:?} differs from its span", c.text);
        let re = &full[c.ty.0 as usize];
        ensure!(
            longest_full_match(re, input, c.start) == Some(c.end),
            "candidate {:?} at {} of {input:?} is not the longest match of {re}",
            c.text,
            c.start
        );
    }
    for &pos in graph.positions.iter().filter(|&&p| p < input.len()) {
        for (t, re) in full.iter().enumerate() {
            if let Some(end) = longest_full_match(re, input, pos) {
                ensure!(
                    graph.candidates.iter().any(|c| c.ty.0 as usize == t && c.start == pos && c.end == end),
                    "no candidate of {re} at {pos}..{end} in {input:?}"
                );
            }
        }
    }
    Ok(())
}

fn leaves(tree: &ParseTree) -> Vec<&ParseTree> {
    match tree {
        ParseTree::Leaf { .. } => vec![tree],
        ParseTree::Node { children, .. } => children.iter().flat_map(leaves).collect(),
    }
}

fn check_tree_spans(tree: &ParseTree) -> Result<(), String> {
    if let ParseTree::Node { span, children, .. } = tree {
        let mut at = span.0;
        for c in children {
            let s = c.span();
            if s.0 == s.1 && !matches!(c, ParseTree::Leaf { .. }) {
                continue;
            }
            ensure!(s.0 >= at && s.1 <= span.1, "child span {s:?} outside or before parent span {span:?}");
            at = s.1;
            check_tree_spans(c)?;
        }
    }
    Ok(())
}

fn check_instance_spans(node: &InstanceNode, input: &str) -> Result<(), String> {
    let mut at = node.span.0;
    for child in node.children.values() {
        let items: Vec<&InstanceNode> = match child {
            Child::Node(n) => vec![n],
            Child::List(items) => items.iter().collect(),
        };
        for n in items {
            ensure!(
                n.span.0 >= at && n.span.1 <= node.span.1,
                "{} span {:?} overlaps a sibling or leaves {} span {:?}",
                n.element,
                n.span,
                node.element,
                node.span
            );
            at = n.span.1;
            check_instance_spans(n, input)?;
        }
    }
    if node.children.is_empty() {
        if let Some(v) = node.values.values().next() {
            let text = &input[node.span.0..node.span.1];
            ensure!(!text.is_empty(), "basic instance {} has an empty span", node.element);
            ensure!(
                v.to_string().contains(text.trim_matches(|c| c == '"' || c == '\''))
                    || v.as_f64().is_some_and(|x| text.parse::<f64>().ok() == Some(x)),
                "value {v} does not come from {text:?}"
            );
        }
    }
    Ok(())
}

/// Leaves of every tree form a path of the token graph covering the input,
/// node spans nest, and instance spans nest in member order.
pub fn span_tiling(lang: &Language, input: &str) -> Result<(), String> {
    let Ok(forest) = lang.forest(input, ParseOptions::default()) else { return Ok(()) };
    let graph = &forest.tokens;
    for tree in forest.enumerate_parses(8).trees {
        let ls = leaves(&tree);
        let ids: Vec<usize> = ls
            .iter()
            .map(|l| match l {
                ParseTree::Leaf { candidate, .. } => *candidate,
                ParseTree::Node { .. } => unreachable!(),
            })
            .collect();
        match (ids.first(), ids.last()) {
            (Some(&first), Some(&last)) => {
                ensure!(graph.starts.contains(&first), "first leaf is not a start candidate");
                ensure!(graph.next[last] == graph.input_len, "last leaf does not reach the end of {input:?}");
            }
            _ => ensure!(graph.origin >= graph.input_len, "empty tree over non-empty input {input:?}"),
        }
        for w in ids.windows(2) {
            ensure!(
                graph.edges[w[0]].contains(&w[1]),
                "leaves {} and {} are not adjacent in the token graph",
                w[0],
                w[1]
            );
        }
        for l in &ls {
            if let ParseTree::Leaf { span, text, .. } = l {
                ensure!(input[span.0..span.1] == **text, "leaf text {text:?} differs from input span {span:?}");
            }
        }
        check_tree_spans(&tree)?;
        if let Ok(instance) = instantiate(&tree, lang.grammar()) {
            check_instance_spans(&instance, input)?;
        }
    }
    Ok(())
}

/// Every grammar construct yields the expected number of productions and
/// every member of a composite appears once in its production, through the
/// right kind of symbol.
pub fn production_counts(lang: &Language) -> Result<(), String> {
    let g = lang.grammar();
    for (i, nt) in g.nonterminals.iter().enumerate() {
        let prods = g.productions_of(modelgen::grammar::NtId(i as u32));
        let expected = match &nt.kind {
            NonterminalKind::Element(id) => match g.model.get(id.as_str()).unwrap().kind {
                ElementKind::Composite => 1,
                ElementKind::Abstract => g.hierarchy.direct_subtypes(id.as_str()).len(),
                ElementKind::Basic => return Err(format!("basic element {id} has a nonterminal")),
            },
            NonterminalKind::List { .. }
            | NonterminalKind::OptionalList { .. }
            | NonterminalKind::OptionalMember { .. } => 2,
        };
        ensure!(prods.len() == expected, "{} has {} productions, expected {expected}", nt.name, prods.len());
        if let NonterminalKind::List { .. } = nt.kind {
            let recursive = prods
                .iter()
                .filter(|&&p| matches!(g.production(p).origin, Origin::List { recursive: true, .. }))
                .count();
            ensure!(recursive == 1, "{} has {recursive} recursive productions", nt.name);
        }
    }
    for p in &g.productions {
        let Origin::Composite { element } = &p.origin else { continue };
        let decl = g.model.get(element.as_str()).unwrap();
        let mut seen = vec![0; decl.members.len()];
        for (sym, slot) in p.rhs.iter().zip(&p.slots) {
            let Slot::Member(i) = *slot else { continue };
            seen[i] += 1;
            let m = &decl.members[i];
            let kind = match sym {
                Symbol::N(n) => Some(&g.nonterminal(*n).kind),
                Symbol::T(_) => None,
            };
            let ok = if m.cardinality.is_repeated() {
                if m.cardinality.min == 0 {
                    matches!(kind, Some(NonterminalKind::OptionalList { .. }))
                } else {
                    matches!(kind, Some(NonterminalKind::List { .. }))
                }
            } else if m.cardinality.optional {
                matches!(kind, Some(NonterminalKind::OptionalMember { .. }))
            } else {
                g.element_symbol(m.element.as_str()) == Some(*sym)
            };
            ensure!(ok, "member {}.{} is referenced through {}", element, m.name, g.symbol_name(*sym));
        }
        ensure!(seen.iter().all(|&n| n == 1), "members of {element} appear {seen:?} times");
    }
    Ok(())
}

fn tree_multiset(forest: &ParseForest, limit: usize) -> Option<BTreeMap<String, usize>> {
    let e = forest.enumerate_parses(limit + 1);
    if e.total > limit as u64 {
        return None;
    }
    let mut out = BTreeMap::new();
    for t in &e.trees {
        *out.entry(canonical(t)).or_insert(0) += 1;
    }
    Some(out)
}

fn subset(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> bool {
    a.iter().all(|(k, n)| b.get(k).is_some_and(|m| n <= m))
}

fn list_counts_hold(g: &Grammar, tree: &ParseTree, continuing: bool) -> bool {
    let ParseTree::Node { nt, production, children, .. } = tree else { return true };
    if let NonterminalKind::List { min, max, .. } = &g.nonterminal(*nt).kind {
        if !continuing {
            let mut count = 0u32;
            let mut cur = Some(tree);
            while let Some(ParseTree::Node { production, children, .. }) = cur {
                count += 1;
                let slots = &g.production(*production).slots;
                cur = children.iter().zip(slots).find(|(_, s)| **s == Slot::Rest).map(|(c, _)| c);
            }
            if count < *min || max.is_some_and(|m| count > m) {
                return false;
            }
        }
    }
    let slots = &g.production(*production).slots;
    children.iter().zip(slots).all(|(c, s)| list_counts_hold(g, c, *s == Slot::Rest))
}

const TREE_LIMIT: usize = 400;

/// Inline constraints only remove derivations; list counts remove exactly
/// the derivations whose lists are out of bounds.
pub fn inhibition_soundness(lang: &Language, input: &str) -> Result<(), String> {
    let Ok(tokens) = lang.tokenize(input) else { return Ok(()) };
    let g = lang.grammar();
    let parser = Parser::new(g.clone());
    let Ok(all) = parser.parse_with(&tokens, ParseOptions::UNCONSTRAINED) else {
        ensure!(
            parser.parse(&tokens).is_err(),
            "constrained parse of {input:?} succeeds where the unconstrained fails"
        );
        return Ok(());
    };
    let Some(all_trees) = tree_multiset(&all, TREE_LIMIT) else { return Ok(()) };
    let constrained = parser.parse(&tokens).ok().and_then(|f| tree_multiset(&f, TREE_LIMIT)).unwrap_or_default();
    ensure!(subset(&constrained, &all_trees), "constrained parse of {input:?} has a tree the unconstrained lacks");
    let counts_only = ParseOptions { associativity: false, counts: true, priority_nesting: false };
    let counted =
        parser.parse_with(&tokens, counts_only).ok().and_then(|f| tree_multiset(&f, TREE_LIMIT)).unwrap_or_default();
    let e = all.enumerate_parses(TREE_LIMIT);
    let mut expected = BTreeMap::new();
    for t in e.trees.iter().filter(|t| list_counts_hold(g, t, false)) {
        *expected.entry(canonical(t)).or_insert(0) += 1;
    }
    ensure!(
        counted == expected,
        "list counts on {input:?}: {} trees survive, {} satisfy the bounds",
        counted.values().sum::<usize>(),
        expected.values().sum::<usize>()
    );
    Ok(())
}

/// The forest passes never add derivations, and the priority pass is
/// idempotent.
pub fn filter_monotonicity(lang: &Language, input: &str) -> Result<(), String> {
    let Ok(tokens) = lang.tokenize(input) else { return Ok(()) };
    let Ok(forest) = Parser::new(lang.grammar().clone()).parse(&tokens) else { return Ok(()) };
    let Some(base) = tree_multiset(&forest, TREE_LIMIT) else { return Ok(()) };
    let composed = disambiguate_composition(&forest);
    let prioritized = filter_priority(&forest);
    let both = filter_priority(&composed);
    let trees = |f: &ParseForest| tree_multiset(f, TREE_LIMIT).unwrap_or_default();
    let (c, p, b) = (trees(&composed), trees(&prioritized), trees(&both));
    ensure!(subset(&c, &base), "composition pass added a tree on {input:?}");
    ensure!(subset(&p, &base), "priority pass added a tree on {input:?}");
    ensure!(subset(&b, &c), "priority after composition added a tree on {input:?}");
    ensure!(trees(&filter_priority(&prioritized)) == p, "priority pass is not idempotent on {input:?}");
    ensure!(base.is_empty() || !p.is_empty(), "priority pass emptied a non-empty forest on {input:?}");
    Ok(())
}

/// Loading the document of a model gives the model back, and validation
/// neither depends on nor changes anything but the model.
pub fn model_round_trip(seed: u64) -> Result<(), String> {
    let model = gen::random_model(seed);
    let before = model.clone();
    let doc = to_document(&model);
    let loaded = load_model(&doc).map_err(|e| format!("reloading the document of seed {seed}: {e}\n{doc}"))?;
    ensure!(loaded == model, "round trip of seed {seed} changed the model\n{doc}");
    ensure!(validate_model(&model) == validate_model(&loaded), "validation differs after round trip");
    ensure!(model == before, "validation mutated the model");
    Ok(())
}

/// Random inputs for a generated language.
pub fn generated_inputs(lang: &Language, seed: u64, n: usize) -> Vec<String> {
    let g = lang.grammar();
    let mut rng = gen::rng(seed ^ 0x5eed);
    (0..n).filter_map(|_| gen::random_tokens(g, &mut rng, 10)).map(|t| gen::input_text(g, &t)).collect()
}

/// Compares unconstrained parses with brute-force enumeration on a few
/// inputs of the model generated from `seed`. `None` when the model is
/// invalid or has an ε-cycle.
pub fn oracle_agreement(seed: u64) -> Result<Option<usize>, String> {
    let Some(lang) = gen::random_language(seed) else { return Ok(None) };
    let g = lang.grammar();
    if gen::has_empty_cycle(g) {
        return Ok(None);
    }
    let parser = Parser::new(g.clone());
    let inputs = generated_inputs(&lang, seed, 4);
    for input in &inputs {
        let graph = lang.tokenize(input).map_err(|e| format!("seed {seed}: scanning {input:?}: {e}"))?;
        ensure!(
            graph.edges.iter().all(|e| e.len() <= 1) && graph.starts.len() <= 1,
            "seed {seed}: token graph of {input:?} is not a chain"
        );
        let (count, expected) = oracle(g, &graph, 2000);
        match parser.parse_with(&graph, ParseOptions::UNCONSTRAINED) {
            Err(_) => ensure!(count == 0, "seed {seed}: {input:?} has {count} derivations but no parse"),
            Ok(forest) => {
                let e = forest.enumerate_parses(2001);
                ensure!(
                    e.total as u128 == count,
                    "seed {seed}: {input:?} has {count} derivations, forest counts {}\n{}",
                    e.total,
                    modelgen::grammar::emit_bnf(g)
                );
                if let Some(expected) = expected {
                    let mut got: Vec<String> = e.trees.iter().map(canonical).collect();
                    got.sort();
                    ensure!(got == expected, "seed {seed}: trees of {input:?} differ from the oracle");
                }
            }
        }
    }
    Ok(Some(inputs.len()))
}
