//! One check per acceptance criterion. Each returns a one-line summary on
//! success and the first failure otherwise.

use modelgen::grammar::emit_bnf;
use modelgen::instance::{InstanceNode, TypedValue};
use modelgen::parser::{ParseError, ParseOptions, Parser};
use modelgen::{Error, Language};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use super::calc::{agrees, eval, random_expression, reference};
use super::cyk::oracle;
use super::{gen, language, model_text, props};

/// Model name, renames of fresh nonterminals and expected productions.
pub type Golden = (&'static str, &'static [(&'static str, &'static str)], &'static [&'static str]);

/// Micro-models with the productions they must emit, after renaming fresh
/// nonterminals to the names used in the quoted grammars.
pub const GOLDEN: &[Golden] = &[
    ("assignment", &[], &["<AssignmentStatement> ::= <Identifier> <Expression>"]),
    (
        "expression_choice",
        &[],
        &["<Expression> ::= <UnaryExpression> | <BinaryExpression> | <ParenthesizedExpression>"],
    ),
    (
        "output",
        &[],
        &[
            "<OutputStatement> ::= <ExpressionList>",
            "<ExpressionList> ::= <Expression> <ExpressionList> | <Expression>",
        ],
    ),
    ("program_main", &[], &[r#"<ProgramMain> ::= "main" <Statement>"#]),
    (
        "input_statement",
        &[],
        &[
            r#"<InputStatement> ::= "input" "(" <IdentifierList> ")" ";""#,
            "<IdentifierList> ::= <Identifier> <IdentifierList> | <Identifier>",
        ],
    ),
    (
        "default_separator",
        &[],
        &[
            r#"<VariableDeclaration> ::= <Type> <IdentifierList> ";""#,
            r#"<IdentifierList> ::= <Identifier> "," <IdentifierList> | <Identifier>"#,
        ],
    ),
    (
        "adhoc_separator",
        &[],
        &[
            r#"<InputStatement> ::= "input" "(" <InputStatementIdentifierList> ")" ";""#,
            r#"<InputStatementIdentifierList> ::= <Identifier> "," <InputStatementIdentifierList> | <Identifier>"#,
        ],
    ),
    (
        "if_then_else",
        &[("OptionalElseOfConditionalStatement", "OptionalElse")],
        &[
            r#"<ConditionalStatement> ::= "if" <Expression> <Statement> <OptionalElse>"#,
            r#"<OptionalElse> ::= "else" <Statement> | ε"#,
        ],
    ),
    (
        "expression_set",
        &[],
        &[
            r#"<ExpressionSet> ::= "{" <OptionalExpressionList> "}""#,
            "<OptionalExpressionList> ::= <ExpressionList> | ε",
            r#"<ExpressionList> ::= <Expression> "," <ExpressionList> | <Expression>"#,
        ],
    ),
    (
        "program_parameters",
        &[],
        &[
            "<Program> ::= <OptionalParameterList>",
            "<OptionalParameterList> ::= <ParameterList> | ε",
            "<ParameterList> ::= <Parameter> <ParameterList> | <Parameter>",
        ],
    ),
    (
        "calculator",
        &[],
        &[
            "<Expression> ::= <ParenthesizedExpression> | <BinaryExpression> | <UnaryExpression> | <LiteralExpression>",
            r#"<ParenthesizedExpression> ::= "(" <Expression> ")""#,
            "<BinaryExpression> ::= <Expression> <BinaryOperator> <Expression>",
            "<UnaryExpression> ::= <UnaryOperator> <Expression>",
            "<LiteralExpression> ::= <RealLiteral> | <IntegerLiteral>",
        ],
    ),
];

/// BNF of a bundled model with fresh nonterminals renamed.
pub fn renamed_bnf(name: &str, renames: &[(&str, &str)]) -> String {
    let mut text = emit_bnf(language(name).grammar());
    for (from, to) in renames {
        text = text.replace(&format!("<{from}>"), &format!("<{to}>"));
    }
    text
}

pub fn golden_grammars() -> Result<String, String> {
    let mut lines = 0;
    for (name, renames, expected) in GOLDEN {
        let text = renamed_bnf(name, renames);
        for line in *expected {
            if !text.lines().any(|l| l == *line) {
                return Err(format!("{name}: missing `{line}` in\n{text}"));
            }
            lines += 1;
        }
    }
    Ok(format!("{} models, {lines} productions", GOLDEN.len()))
}

pub const CALCULATOR_CASES: &[(&str, f64)] =
    &[("2+3*4", 14.0), ("8-3-2", 3.0), ("(1+2)*3", 9.0), ("100/10/5", 2.0), ("-5+3", -2.0), ("12.5*2", 25.0)];

pub const RANDOM_EXPRESSIONS: usize = 1000;

pub fn calculator() -> Result<String, String> {
    let lang = language("calculator");
    for (input, want) in CALCULATOR_CASES {
        let got = eval(&lang, input).map_err(|e| format!("{input}: {e}"))?;
        if got != *want {
            return Err(format!("{input} evaluates to {got}, expected {want}"));
        }
    }
    let mut rng = gen::rng(0xca1c);
    let mut integer_only = 0;
    for _ in 0..RANDOM_EXPRESSIONS {
        let depth = rand::Rng::gen_range(&mut rng, 0..=6);
        let (input, ints) = random_expression(&mut rng, depth);
        let want = reference(&input).map_err(|e| format!("reference rejects {input:?}: {e}"))?;
        let got = eval(&lang, &input).map_err(|e| format!("{input:?}: {e}"))?;
        if !agrees(got, want, ints) {
            return Err(format!("{input:?} evaluates to {got}, reference gives {want}"));
        }
        integer_only += ints as usize;
    }
    Ok(format!(
        "{} fixed cases, {RANDOM_EXPRESSIONS} random expressions ({integer_only} integer-only)",
        CALCULATOR_CASES.len()
    ))
}

fn elements(node: &InstanceNode) -> Vec<String> {
    node.descendants().iter().map(|n| n.element.to_string()).collect()
}

pub fn if_then_else_with(composition: &str) -> Language {
    let text = model_text("if_then_else").replace("\"EAGER\"", &format!("\"{composition}\""));
    Language::from_document(&text).unwrap()
}

/// Which statement the else branch of `if E1 if E2 S1 else S2` attaches
/// to: the condition of its owner.
pub fn else_owner(node: &InstanceNode) -> Option<String> {
    node.descendants()
        .into_iter()
        .find(|n| n.children.contains_key("else"))
        .and_then(|n| n.child("condition"))
        .and_then(|c| match c.value("name") {
            Some(TypedValue::String(s)) => Some(s.clone()),
            _ => None,
        })
}

pub fn disambiguation() -> Result<String, String> {
    let dangling = "if E1 if E2 S1 else S2";
    let eager = if_then_else_with("EAGER").parse(dangling).map_err(|e| format!("EAGER {dangling}: {e}"))?;
    if else_owner(&eager).as_deref() != Some("E2") {
        return Err(format!("EAGER attaches else to {:?}", else_owner(&eager)));
    }
    let expected_if = [
        "ConditionalStatement",
        "Expression",
        "ConditionalStatement",
        "Expression",
        "SimpleStatement",
        "SimpleStatement",
    ];
    if elements(&eager) != expected_if {
        return Err(format!("EAGER instance has elements {:?}", elements(&eager)));
    }
    let name = language("func_power").parse("func_power").map_err(|e| format!("func_power: {e}"))?;
    if elements(&name) != ["FunctionName"] {
        return Err(format!("func_power yields {:?}", elements(&name)));
    }
    let input = "output(3+5,4+1);";
    let output = language("output_function").parse(input).map_err(|e| format!("{input}: {e}"))?;
    if output.element.as_str() != "OutputStatement" {
        return Err(format!("{input} yields {}", output.element));
    }
    Ok("dangling else EAGER → inner if; func_power → FunctionName; output(...) → OutputStatement".into())
}

pub fn oracle_equivalence(models: usize) -> Result<String, String> {
    let mut tested = 0;
    let mut inputs = 0;
    let mut seed = 0u64;
    while tested < models {
        if seed > 50 * models as u64 {
            return Err(format!("only {tested} usable models in {seed} seeds"));
        }
        if let Some(n) = props::oracle_agreement(seed)? {
            tested += 1;
            inputs += n;
        }
        seed += 1;
    }
    let undefined =
        Language::from_document(&model_text("calculator").replace("\"LEFT_TO_RIGHT\"", "\"UNDEFINED\"")).unwrap();
    for (lang, constrained) in [(&undefined, 2u64), (&language("calculator"), 1)] {
        let tokens = lang.tokenize("1-2-3").unwrap();
        let (count, _) = oracle(lang.grammar(), &tokens, 100);
        let forest = Parser::new(lang.grammar().clone()).parse_with(&tokens, ParseOptions::UNCONSTRAINED).unwrap();
        let total = forest.enumerate_parses(100).total;
        if count != 2 || total != 2 {
            return Err(format!("1-2-3: oracle {count}, forest {total} unconstrained derivations"));
        }
        let got = lang.forest("1-2-3", ParseOptions::default()).map(|f| f.enumerate_parses(10).total).unwrap_or(0);
        if got != constrained {
            return Err(format!("1-2-3 has {got} constrained parses, expected {constrained}"));
        }
    }
    Ok(format!("{tested} models, {inputs} inputs (seeds 0..{seed}); 1-2-3 → 2, LEFT_TO_RIGHT → 1"))
}

pub fn cardinality() -> Result<String, String> {
    let program = language("program_parameters");
    for (input, accept) in [("", true), ("a", true), ("a b", true), ("a b c", false)] {
        match (program.parse(input), accept) {
            (Ok(i), true) => {
                let n = i.list("params").map_or(0, <[_]>::len);
                if n != input.split_whitespace().count() {
                    return Err(format!("{input:?} yields {n} parameters"));
                }
            }
            (Err(Error::Parse(ParseError::NoParse(_))), false) => {}
            (r, _) => return Err(format!("program {input:?}: {:?}", r.map(|i| i.to_json()))),
        }
    }
    let pairs = language("pair_list");
    if !matches!(pairs.parse("a"), Err(Error::Parse(ParseError::NoParse(_)))) {
        return Err("min=2 list accepts one element".into());
    }
    pairs.parse("a,b").map_err(|e| format!("min=2 list rejects two elements: {e}"))?;
    let cond = language("if_then_else");
    for input in ["if E1 S1", "if E1 S1 else S2"] {
        let i = cond.parse(input).map_err(|e| format!("{input}: {e}"))?;
        if i.children.contains_key("else") != input.contains("else") {
            return Err(format!("{input}: else member present is {}", i.children.contains_key("else")));
        }
    }
    Ok("0..2 parameters accept 0, 1, 2 and reject 3; min=2 rejects 1; optional else present and absent".into())
}

pub const PROPERTY_CASES: u32 = 100;

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), String>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, |v| check(v).map_err(TestCaseError::fail)).map_err(|e| format!("{name}: {e}"))
}

/// Lexer inputs over an alphabet where keywords, identifiers, integers and
/// reals overlap.
pub fn lexer_input() -> impl Strategy<Value = String> {
    "[abfi0-9+. ]{0,20}"
}

pub fn calculator_input() -> impl Strategy<Value = String> {
    (any::<u64>(), 0u32..=4).prop_map(|(seed, depth)| random_expression(&mut gen::rng(seed), depth).0)
}

pub fn generated_case() -> impl Strategy<Value = u64> {
    any::<u64>()
}

/// Runs `check` on each input of the generated language of `seed`.
pub fn on_generated(seed: u64, check: impl Fn(&Language, &str) -> Result<(), String>) -> Result<(), String> {
    let Some(lang) = gen::random_language(seed) else { return Ok(()) };
    for input in props::generated_inputs(&lang, seed, 3) {
        check(&lang, &input).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(())
}

pub fn property_suites() -> Result<String, String> {
    let lexer = props::lexer_language();
    let calc = language("calculator");
    run_property("candidate maximality", lexer_input(), |s| props::candidate_maximality(&lexer, &s))?;
    run_property("span tiling", calculator_input(), |s| props::span_tiling(&calc, &s))?;
    run_property("span tiling (generated)", generated_case(), |seed| on_generated(seed, props::span_tiling))?;
    run_property("production counts", generated_case(), |seed| match gen::random_language(seed) {
        Some(lang) => props::production_counts(&lang),
        None => Ok(()),
    })?;
    run_property("inhibition soundness", generated_case(), |seed| on_generated(seed, props::inhibition_soundness))?;
    run_property("filter monotonicity", generated_case(), |seed| on_generated(seed, props::filter_monotonicity))?;
    run_property("model round trip", generated_case(), props::model_round_trip)?;
    Ok(format!("7 suites × {PROPERTY_CASES} cases"))
}
