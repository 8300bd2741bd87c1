//! Calculator semantics: an evaluating visitor over instances and an
//! independent precedence-climbing reference evaluator.

use modelgen::instance::{InstanceNode, Results, Visitor};
use modelgen::Language;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn operator(node: &InstanceNode) -> &str {
    node.child("op").map(|o| o.element.as_str()).unwrap_or("")
}

fn nothing(_: &InstanceNode, _: &Results<f64>) -> f64 {
    f64::NAN
}

pub fn eval_visitor() -> Visitor<'static, f64> {
    Visitor::new()
        .on("ParenthesizedExpression", |_, r: &Results<f64>| *r.one("e").unwrap())
        .on("UnaryExpression", |n, r| {
            let e: f64 = *r.one("e").unwrap();
            if operator(n) == "MinusOperator" {
                -e
            } else {
                e
            }
        })
        .on("BinaryExpression", |n, r| {
            let (a, b) = (*r.one("e1").unwrap(), *r.one("e2").unwrap());
            match operator(n) {
                "AdditionOperator" => a + b,
                "SubstractionOperator" => a - b,
                "MultiplicationOperator" => a * b,
                "DivisionOperator" => a / b,
                other => panic!("unknown operator {other}"),
            }
        })
        .on("IntegerLiteral", |n, _| n.value("value").unwrap().as_f64().unwrap())
        .on("RealLiteral", |n, _| n.value("value").unwrap().as_f64().unwrap())
        .on("PlusOperator", nothing)
        .on("MinusOperator", nothing)
        .on("AdditionOperator", nothing)
        .on("SubstractionOperator", nothing)
        .on("MultiplicationOperator", nothing)
        .on("DivisionOperator", nothing)
}

pub fn eval(lang: &Language, input: &str) -> Result<f64, String> {
    let instance = lang.parse(input).map_err(|e| e.to_string())?;
    eval_visitor().visit(&instance).map_err(|e| e.to_string())
}

/// Evaluates instance JSON as printed by the command line.
pub fn eval_json(v: &serde_json::Value) -> f64 {
    let child = |name: &str| eval_json(&v["children"][name]);
    let op = || v["children"]["op"]["element"].as_str().unwrap_or("").to_string();
    match v["element"].as_str().unwrap() {
        "ParenthesizedExpression" => child("e"),
        "UnaryExpression" if op() == "MinusOperator" => -child("e"),
        "UnaryExpression" => child("e"),
        "BinaryExpression" => {
            let (a, b) = (child("e1"), child("e2"));
            match op().as_str() {
                "AdditionOperator" => a + b,
                "SubstractionOperator" => a - b,
                "MultiplicationOperator" => a * b,
                _ => a / b,
            }
        }
        _ => v["values"]["value"].as_f64().unwrap(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Op(char),
}

fn lex(input: &str) -> Result<Vec<Tok>, String> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            out.push(Tok::Num(input[start..i].parse().map_err(|e| format!("{e}"))?));
        } else if "+-*/()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected {c:?}"));
        }
    }
    Ok(out)
}

struct Reference {
    toks: Vec<Tok>,
    pos: usize,
}

impl Reference {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn binary(&mut self, level: u8) -> Result<f64, String> {
        let ops = if level == 0 { ['+', '-'] } else { ['*', '/'] };
        let mut acc = if level == 0 { self.binary(1)? } else { self.unary()? };
        while let Some(Tok::Op(c)) = self.peek().cloned() {
            if !ops.contains(&c) {
                break;
            }
            self.pos += 1;
            let rhs = if level == 0 { self.binary(1)? } else { self.unary()? };
            acc = match c {
                '+' => acc + rhs,
                '-' => acc - rhs,
                '*' => acc * rhs,
                _ => acc / rhs,
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<f64, String> {
        match self.peek().cloned() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let v = self.binary(0)?;
                if self.peek() != Some(&Tok::Op(')')) {
                    return Err("missing )".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(Tok::Num(x)) => {
                self.pos += 1;
                Ok(x)
            }
            other => Err(format!("unexpected {other:?}")),
        }
    }
}

/// Infix evaluation with unary signs binding tightest, then `*` `/`, then
/// `+` `-`, all binary operators grouping to the left.
pub fn reference(input: &str) -> Result<f64, String> {
    let mut r = Reference { toks: lex(input)?, pos: 0 };
    let v = r.binary(0)?;
    if r.pos != r.toks.len() {
        return Err(format!("trailing input at token {}", r.pos));
    }
    Ok(v)
}

/// A random expression of nesting depth at most `depth`, and whether all
/// its literals are integers.
pub fn random_expression(rng: &mut ChaCha8Rng, depth: u32) -> (String, bool) {
    let mut integer_only = true;
    let mut out = String::new();
    write_expression(rng, depth, &mut out, &mut integer_only);
    (out, integer_only)
}

fn space(rng: &mut ChaCha8Rng, out: &mut String) {
    if rng.gen_bool(0.3) {
        out.push(' ');
    }
}

fn write_expression(rng: &mut ChaCha8Rng, depth: u32, out: &mut String, integer_only: &mut bool) {
    let choice = if depth == 0 { 0 } else { rng.gen_range(0..20) };
    match choice {
        0..=4 => {
            let n: u32 = rng.gen_range(0..100);
            if rng.gen_bool(0.2) {
                *integer_only = false;
                match rng.gen_range(0..3) {
                    0 => out.push_str(&format!("{n}.")),
                    _ => out.push_str(&format!("{n}.{}", rng.gen_range(0..1000))),
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        5..=7 => {
            out.push(if rng.gen_bool(0.5) { '-' } else { '+' });
            space(rng, out);
            write_expression(rng, depth - 1, out, integer_only);
        }
        8..=16 => {
            write_expression(rng, depth - 1, out, integer_only);
            space(rng, out);
            out.push(['+', '-', '*', '/'][rng.gen_range(0..4)]);
            space(rng, out);
            write_expression(rng, depth - 1, out, integer_only);
        }
        _ => {
            out.push('(');
            write_expression(rng, depth - 1, out, integer_only);
            out.push(')');
        }
    }
}

/// Exact agreement for integer-only expressions, relative tolerance
/// 1e-12 otherwise.
pub fn agrees(got: f64, want: f64, integer_only: bool) -> bool {
    if got.is_nan() || want.is_nan() {
        return got.is_nan() && want.is_nan();
    }
    if integer_only || got.is_infinite() || want.is_infinite() || want == 0.0 {
        return got == want;
    }
    ((got - want) / want).abs() <= 1e-12
}
