//! The `modelgen` command line.
//!
//! Exit codes: 0 ok, 1 no parse, 2 invalid model, 3 document syntax,
//! 4 IO, 5 ambiguity or explicit-composition violation, 64 usage.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{Args, Parser as ClapParser, Subcommand};
use serde_json::{json, Value};

use crate::grammar::emit_bnf;
use crate::instance::instantiate;
use crate::lexer::TokenGraph;
use crate::model::{load_model, validate_model, DocumentError};
use crate::parser::{ParseError, ParseOptions};
use crate::{Error, Language};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_PARSE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DOCUMENT: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_AMBIGUOUS: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, ClapParser)]
#[command(name = "modelgen", version, about = "Parser generation from abstract syntax models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a model document and print the report.
    Check { model: PathBuf },
    /// Print the grammar synthesized from a model as BNF.
    Grammar { model: PathBuf },
    /// Parse an input file and print its instance as JSON.
    Parse(ParseArgs),
}

#[derive(Debug, Args)]
struct ParseArgs {
    model: PathBuf,
    input: PathBuf,
    /// Print up to --limit instances and the total number of parses.
    #[arg(long, conflicts_with = "require_unique")]
    all_parses: bool,
    /// Fail unless the input has exactly one parse (the default).
    #[arg(long)]
    require_unique: bool,
    #[arg(long, default_value = "16")]
    limit: NonZeroUsize,
    /// Write the token graph to standard error.
    #[arg(long)]
    dump_tokens: bool,
    /// Write the parse forest to standard error.
    #[arg(long)]
    dump_forest: bool,
    /// Write the result to a file instead of standard output.
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

/// Result of one invocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Outcome {
        Outcome { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn fail(code: i32, message: impl std::fmt::Display) -> Outcome {
        Outcome { code, stdout: String::new(), stderr: format!("error: {message}\n") }
    }
}

/// Runs the command line `args`, whose first item is the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text }
            } else {
                Outcome::ok(text)
            };
        }
    };
    match cli.command {
        Command::Check { model } => check(&model),
        Command::Grammar { model } => grammar(&model),
        Command::Parse(args) => parse(&args),
    }
}

fn read(path: &Path) -> Result<String, Outcome> {
    std::fs::read_to_string(path).map_err(|e| Outcome::fail(EXIT_IO, format!("cannot read {}: {e}", path.display())))
}

fn document_failure(e: &DocumentError) -> Outcome {
    Outcome::fail(EXIT_DOCUMENT, e)
}

fn check(path: &Path) -> Outcome {
    let text = match read(path) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let model = match load_model(&text) {
        Ok(m) => m,
        Err(e) => return document_failure(&e),
    };
    let report = validate_model(&model);
    let mut stdout = report.to_string();
    stdout.push('\n');
    if !report.is_valid() {
        return Outcome { code: EXIT_INVALID, stdout, stderr: String::new() };
    }
    match Language::new(model) {
        Ok(_) => Outcome::ok(stdout),
        Err(e) => Outcome { code: EXIT_INVALID, stdout, stderr: format!("error: {e}\n") },
    }
}

fn load_language(path: &Path) -> Result<Language, Outcome> {
    let text = read(path)?;
    Language::from_document(&text).map_err(|e| match e {
        Error::Document(d) => document_failure(&d),
        e => Outcome::fail(EXIT_INVALID, e),
    })
}

fn grammar(path: &Path) -> Outcome {
    match load_language(path) {
        Ok(lang) => Outcome::ok(emit_bnf(lang.grammar())),
        Err(o) => o,
    }
}

fn tokens_json(lang: &Language, graph: &TokenGraph) -> Value {
    let candidates: Vec<Value> = graph
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({
                "type": lang.grammar().terminal(c.ty).name,
                "start": c.start,
                "end": c.end,
                "text": c.text,
                "next": graph.edges[i],
            })
        })
        .collect();
    json!({ "input_len": graph.input_len, "starts": graph.starts, "candidates": candidates })
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

fn parse_failure(e: ParseError) -> Outcome {
    match e {
        ParseError::NoParse(_) => Outcome::fail(EXIT_NO_PARSE, e),
        ParseError::Ambiguity(_) | ParseError::ExplicitViolation(_) => Outcome::fail(EXIT_AMBIGUOUS, e),
    }
}

fn parse(args: &ParseArgs) -> Outcome {
    let lang = match load_language(&args.model) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let input = match read(&args.input) {
        Ok(t) => t,
        Err(o) => return o,
    };
    let mut stderr = String::new();
    let mut result = parse_input(&lang, &input, args, &mut stderr);
    if result.code == EXIT_OK {
        if let Some(path) = &args.output {
            if let Err(e) = std::fs::write(path, &result.stdout) {
                result = Outcome::fail(EXIT_IO, format!("cannot write {}: {e}", path.display()));
            } else {
                result.stdout.clear();
            }
        }
    }
    stderr.push_str(&result.stderr);
    result.stderr = stderr;
    result
}

fn parse_input(lang: &Language, input: &str, args: &ParseArgs, stderr: &mut String) -> Outcome {
    let tokens = match lang.tokenize(input) {
        Ok(t) => t,
        Err(e) => return Outcome::fail(EXIT_NO_PARSE, e),
    };
    if args.dump_tokens {
        stderr.push_str(&pretty(&tokens_json(lang, &tokens)));
    }
    let forest = match lang.forest_of(&tokens, ParseOptions::default()) {
        Ok(f) => f,
        Err(e) => return parse_failure(e.into()),
    };
    if args.dump_forest {
        stderr.push_str(&pretty(&forest.to_json()));
    }
    if args.all_parses {
        let e = forest.enumerate_parses(args.limit.get());
        let mut instances = Vec::new();
        for tree in &e.trees {
            match instantiate(tree, lang.grammar()) {
                Ok(i) => instances.push(i.to_json()),
                Err(err) => return Outcome::fail(EXIT_NO_PARSE, err),
            }
        }
        return Outcome::ok(pretty(&json!({ "instances": instances, "total": e.total })));
    }
    let tree = match forest.require_unique() {
        Ok(t) => t,
        Err(e) => return parse_failure(e),
    };
    match instantiate(&tree, lang.grammar()) {
        Ok(i) => Outcome::ok(pretty(&i.to_json())),
        Err(e) => Outcome::fail(EXIT_NO_PARSE, e),
    }
}
