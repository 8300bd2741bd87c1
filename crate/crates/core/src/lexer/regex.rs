//! A small backtracking-free regular expression engine for token patterns.
//!
//! Patterns are compiled to a Thompson NFA and matched anchored at a given
//! byte offset. The only query the lexer needs is the length of the longest
//! match starting at that offset, which a breadth-first simulation of the
//! NFA answers in `O(pattern * input)` time.
//!
//! Supported syntax: literal characters, escapes (`\n`, `\t`, `\r`, `\f`,
//! `\v`, `\0`, `\d`, `\D`, `\w`, `\W`, `\s`, `\S`, and any escaped
//! punctuation), character classes with ranges and negation, `.` (anything
//! except a newline), alternation, grouping (`(...)` and `(?:...)`), the
//! quantifiers `*`, `+`, `?` and bounded repetition `{m}`, `{m,}`, `{m,n}`.
//! Backreferences, lookaround and anchors are rejected.

use std::fmt;

use thiserror::Error;

const MAX_REPEAT: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid pattern `{pattern}` at position {position}: {reason}")]
pub struct RegexError {
    pub pattern: String,
    /// Character index into the pattern where the problem was detected.
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ClassSet {
    ranges: Vec<(char, char)>,
    negated: bool,
}

impl ClassSet {
    fn contains(&self, c: char) -> bool {
        let hit = self.ranges.iter().any(|&(lo, hi)| lo <= c && c <= hi);
        hit != self.negated
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Ast {
    Empty,
    Literal(char),
    Class(ClassSet),
    Any,
    Concat(Vec<Ast>),
    Alternate(Vec<Ast>),
    Repeat { node: Box<Ast>, min: u32, max: Option<u32> },
}

#[derive(Debug, Clone)]
enum Inst {
    Char(char),
    Class(ClassSet),
    Any,
    Split(usize, usize),
    Jump(usize),
    Match,
}

/// A compiled pattern.
#[derive(Clone)]
pub struct Regex {
    source: String,
    program: Vec<Inst>,
    start: usize,
}

impl fmt::Debug for Regex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Regex").field(&self.source).finish()
    }
}

impl PartialEq for Regex {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl Eq for Regex {}

impl Regex {
    pub fn new(pattern: &str) -> Result<Regex, RegexError> {
        let ast = Parser::new(pattern).parse()?;
        let mut compiler = Compiler { program: Vec::new() };
        let frag = compiler.compile(&ast);
        let accept = compiler.push(Inst::Match);
        compiler.patch(&frag.holes, accept);
        Ok(Regex { source: pattern.to_string(), program: compiler.program, start: frag.start })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    /// Length in bytes of the longest match of this pattern anchored at
    /// `position`, or `None` when no prefix of `input[position..]` matches.
    /// A zero-length match is reported as `Some(0)`.
    pub fn longest_match(&self, input: &str, position: usize) -> Option<usize> {
        let rest = input.get(position..)?;
        let n = self.program.len();
        let mut current = ThreadList::new(n);
        let mut next = ThreadList::new(n);
        let mut best = None;

        current.add(&self.program, self.start);
        if current.matched {
            best = Some(0);
        }
        for (offset, c) in rest.char_indices() {
            if current.threads.is_empty() {
                break;
            }
            next.clear();
            for &pc in &current.threads {
                let advance = match &self.program[pc] {
                    Inst::Char(expected) => *expected == c,
                    Inst::Class(set) => set.contains(c),
                    Inst::Any => c != '\n',
                    _ => false,
                };
                if advance {
                    next.add(&self.program, pc + 1);
                }
            }
            if next.matched {
                best = Some(offset + c.len_utf8());
            }
            std::mem::swap(&mut current, &mut next);
        }
        best
    }

    /// True when the whole of `text` matches.
    pub fn is_full_match(&self, text: &str) -> bool {
        let n = self.program.len();
        let mut current = ThreadList::new(n);
        let mut next = ThreadList::new(n);
        current.add(&self.program, self.start);
        for c in text.chars() {
            next.clear();
            for &pc in &current.threads {
                let advance = match &self.program[pc] {
                    Inst::Char(expected) => *expected == c,
                    Inst::Class(set) => set.contains(c),
                    Inst::Any => c != '\n',
                    _ => false,
                };
                if advance {
                    next.add(&self.program, pc + 1);
                }
            }
            std::mem::swap(&mut current, &mut next);
            if current.threads.is_empty() && !current.matched {
                return false;
            }
        }
        current.matched
    }

    /// If the pattern denotes exactly one fixed string, returns it.
    pub fn literal_text(&self) -> Option<String> {
        let ast = Parser::new(&self.source).parse().ok()?;
        let mut out = String::new();
        fn walk(ast: &Ast, out: &mut String) -> bool {
            match ast {
                Ast::Empty => true,
                Ast::Literal(c) => {
                    out.push(*c);
                    true
                }
                Ast::Concat(items) => items.iter().all(|item| walk(item, out)),
                Ast::Repeat { node, min, max: Some(max) } if min == max => (0..*min).all(|_| walk(node, out)),
                _ => false,
            }
        }
        walk(&ast, &mut out).then_some(out)
    }
}

struct ThreadList {
    threads: Vec<usize>,
    seen: Vec<bool>,
    marked: Vec<usize>,
    matched: bool,
}

impl ThreadList {
    fn new(size: usize) -> ThreadList {
        ThreadList { threads: Vec::new(), seen: vec![false; size], marked: Vec::new(), matched: false }
    }

    fn clear(&mut self) {
        for &pc in &self.marked {
            self.seen[pc] = false;
        }
        self.marked.clear();
        self.threads.clear();
        self.matched = false;
    }

    fn add(&mut self, program: &[Inst], pc: usize) {
        let mut stack = vec![pc];
        while let Some(pc) = stack.pop() {
            if self.seen[pc] {
                continue;
            }
            self.seen[pc] = true;
            self.marked.push(pc);
            match program[pc] {
                Inst::Split(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Inst::Jump(target) => stack.push(target),
                Inst::Match => self.matched = true,
                _ => self.threads.push(pc),
            }
        }
    }
}

struct Fragment {
    start: usize,
    holes: Vec<Hole>,
}

#[derive(Clone, Copy)]
enum Hole {
    Next(usize),
    SplitRight(usize),
}

struct Compiler {
    program: Vec<Inst>,
}

impl Compiler {
    fn push(&mut self, inst: Inst) -> usize {
        self.program.push(inst);
        self.program.len() - 1
    }

    fn patch(&mut self, holes: &[Hole], target: usize) {
        for hole in holes {
            match *hole {
                Hole::Next(pc) => self.program[pc] = Inst::Jump(target),
                Hole::SplitRight(pc) => {
                    if let Inst::Split(a, _) = self.program[pc] {
                        self.program[pc] = Inst::Split(a, target);
                    }
                }
            }
        }
    }

    fn single(&mut self, inst: Inst) -> Fragment {
        let pc = self.push(inst);
        let jump = self.push(Inst::Jump(usize::MAX));
        debug_assert_eq!(jump, pc + 1);
        Fragment { start: pc, holes: vec![Hole::Next(jump)] }
    }

    fn empty(&mut self) -> Fragment {
        let pc = self.push(Inst::Jump(usize::MAX));
        Fragment { start: pc, holes: vec![Hole::Next(pc)] }
    }

    fn compile(&mut self, ast: &Ast) -> Fragment {
        match ast {
            Ast::Empty => self.empty(),
            Ast::Literal(c) => self.single(Inst::Char(*c)),
            Ast::Class(set) => self.single(Inst::Class(set.clone())),
            Ast::Any => self.single(Inst::Any),
            Ast::Concat(items) => {
                let mut iter = items.iter();
                let Some(first) = iter.next() else {
                    return self.empty();
                };
                let mut frag = self.compile(first);
                for item in iter {
                    let next = self.compile(item);
                    self.patch(&frag.holes, next.start);
                    frag.holes = next.holes;
                }
                frag
            }
            Ast::Alternate(branches) => {
                let mut frags: Vec<Fragment> = branches.iter().map(|b| self.compile(b)).collect();
                let mut last = frags.pop().expect("alternation has at least one branch");
                while let Some(frag) = frags.pop() {
                    let split = self.push(Inst::Split(frag.start, last.start));
                    let mut holes = frag.holes;
                    holes.extend(last.holes);
                    last = Fragment { start: split, holes };
                }
                last
            }
            Ast::Repeat { node, min, max } => self.compile_repeat(node, *min, *max),
        }
    }

    fn compile_repeat(&mut self, node: &Ast, min: u32, max: Option<u32>) -> Fragment {
        let mut parts: Vec<Fragment> = Vec::new();
        for _ in 0..min {
            parts.push(self.compile(node));
        }
        match max {
            None => {
                // node*
                let body = self.compile(node);
                let split = self.push(Inst::Split(body.start, usize::MAX));
                self.patch(&body.holes, split);
                parts.push(Fragment { start: split, holes: vec![Hole::SplitRight(split)] });
            }
            Some(max) => {
                for _ in min..max {
                    let body = self.compile(node);
                    let split = self.push(Inst::Split(body.start, usize::MAX));
                    let mut holes = body.holes;
                    holes.push(Hole::SplitRight(split));
                    parts.push(Fragment { start: split, holes });
                }
            }
        }
        if parts.is_empty() {
            return self.empty();
        }
        let mut iter = parts.into_iter();
        let mut frag = iter.next().unwrap();
        for next in iter {
            self.patch(&frag.holes, next.start);
            frag.holes = next.holes;
        }
        frag
    }
}

struct Parser<'a> {
    pattern: &'a str,
    chars: Vec<char>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(pattern: &'a str) -> Parser<'a> {
        Parser { pattern, chars: pattern.chars().collect(), pos: 0 }
    }

    fn error(&self, position: usize, reason: impl Into<String>) -> RegexError {
        RegexError { pattern: self.pattern.to_string(), position, reason: reason.into() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Ast, RegexError> {
        let ast = self.alternation()?;
        if let Some(c) = self.peek() {
            return Err(self.error(self.pos, format!("unexpected `{c}`")));
        }
        Ok(ast)
    }

    fn alternation(&mut self) -> Result<Ast, RegexError> {
        let mut branches = vec![self.concat()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            branches.push(self.concat()?);
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { Ast::Alternate(branches) })
    }

    fn concat(&mut self) -> Result<Ast, RegexError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            if c == '|' || c == ')' {
                break;
            }
            let atom = self.atom()?;
            items.push(self.quantified(atom)?);
        }
        Ok(match items.len() {
            0 => Ast::Empty,
            1 => items.pop().unwrap(),
            _ => Ast::Concat(items),
        })
    }

    fn quantified(&mut self, mut atom: Ast) -> Result<Ast, RegexError> {
        loop {
            let start = self.pos;
            let (min, max) = match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    (0, None)
                }
                Some('+') => {
                    self.pos += 1;
                    (1, None)
                }
                Some('?') => {
                    self.pos += 1;
                    (0, Some(1))
                }
                Some('{') => match self.bounds()? {
                    Some(bounds) => bounds,
                    None => return Ok(atom),
                },
                _ => return Ok(atom),
            };
            if matches!(self.peek(), Some('?') | Some('+')) && start + 1 == self.pos {
                // Lazy and possessive modifiers have no meaning for longest match.
                return Err(self.error(self.pos, "lazy or possessive quantifiers are not supported"));
            }
            if matches!(atom, Ast::Empty) {
                return Err(self.error(start, "quantifier without a preceding expression"));
            }
            atom = Ast::Repeat { node: Box::new(atom), min, max };
        }
    }

    /// Parses `{m}`, `{m,}` or `{m,n}`. Returns `None` (leaving the cursor
    /// untouched) when the brace does not start a valid bound, in which case
    /// it is treated as a literal by the caller.
    fn bounds(&mut self) -> Result<Option<(u32, Option<u32>)>, RegexError> {
        let open = self.pos;
        let mut cursor = self.pos + 1;
        let read_number = |cursor: &mut usize, chars: &[char]| -> Option<u32> {
            let begin = *cursor;
            while chars.get(*cursor).is_some_and(|c| c.is_ascii_digit()) {
                *cursor += 1;
            }
            if begin == *cursor {
                return None;
            }
            chars[begin..*cursor].iter().collect::<String>().parse().ok()
        };
        let Some(min) = read_number(&mut cursor, &self.chars) else {
            return Ok(None);
        };
        let max = match self.chars.get(cursor) {
            Some('}') => Some(min),
            Some(',') => {
                cursor += 1;
                if self.chars.get(cursor) == Some(&'}') {
                    None
                } else {
                    let Some(max) = read_number(&mut cursor, &self.chars) else {
                        return Ok(None);
                    };
                    if self.chars.get(cursor) != Some(&'}') {
                        return Ok(None);
                    }
                    Some(max)
                }
            }
            _ => return Ok(None),
        };
        self.pos = cursor + 1;
        if let Some(max) = max {
            if max < min {
                return Err(self.error(open, format!("repetition bound {{{min},{max}}} has min > max")));
            }
        }
        if min > MAX_REPEAT || max.is_some_and(|m| m > MAX_REPEAT) {
            return Err(self.error(open, format!("repetition bound exceeds {MAX_REPEAT}")));
        }
        Ok(Some((min, max)))
    }

    fn atom(&mut self) -> Result<Ast, RegexError> {
        let start = self.pos;
        let c = self.peek().expect("atom called at end of pattern");
        self.pos += 1;
        match c {
            '(' => {
                if self.peek() == Some('?') {
                    if self.chars.get(self.pos + 1) == Some(&':') {
                        self.pos += 2;
                    } else {
                        return Err(self.error(start, "lookaround and inline flags are not supported"));
                    }
                }
                let inner = self.alternation()?;
                if self.peek() != Some(')') {
                    return Err(self.error(start, "unclosed group"));
                }
                self.pos += 1;
                Ok(inner)
            }
            '[' => self.class(start),
            '.' => Ok(Ast::Any),
            '\\' => self.escape(start, false).map(|e| match e {
                Escaped::Char(c) => Ast::Literal(c),
                Escaped::Set(set) => Ast::Class(set),
            }),
            '^' | '$' => {
                Err(self.error(start, "anchors are not supported; matching is always anchored at the scan position"))
            }
            '*' | '+' | '?' => Err(self.error(start, "quantifier without a preceding expression")),
            other => Ok(Ast::Literal(other)),
        }
    }

    fn escape(&mut self, start: usize, in_class: bool) -> Result<Escaped, RegexError> {
        let Some(c) = self.peek() else {
            return Err(self.error(start, "trailing backslash"));
        };
        self.pos += 1;
        let digit = || vec![('0', '9')];
        let word = || vec![('0', '9'), ('A', 'Z'), ('_', '_'), ('a', 'z')];
        let space = || vec![('\t', '\r'), (' ', ' ')];
        let set = |ranges: Vec<(char, char)>, negated| Escaped::Set(ClassSet { ranges, negated });
        Ok(match c {
            'n' => Escaped::Char('\n'),
            't' => Escaped::Char('\t'),
            'r' => Escaped::Char('\r'),
            'f' => Escaped::Char('\u{c}'),
            'v' => Escaped::Char('\u{b}'),
            '0' => Escaped::Char('\0'),
            'd' => set(digit(), false),
            'D' => set(digit(), true),
            'w' => set(word(), false),
            'W' => set(word(), true),
            's' => set(space(), false),
            'S' => set(space(), true),
            c if c.is_ascii_alphanumeric() => {
                let what = if in_class { "inside a class" } else { "" };
                return Err(self.error(start, format!("unsupported escape `\\{c}` {what}").trim_end().to_string()));
            }
            other => Escaped::Char(other),
        })
    }

    fn class(&mut self, start: usize) -> Result<Ast, RegexError> {
        let mut negated = false;
        if self.peek() == Some('^') {
            negated = true;
            self.pos += 1;
        }
        let mut ranges = Vec::new();
        let mut first = true;
        loop {
            let Some(c) = self.peek() else {
                return Err(self.error(start, "unclosed character class"));
            };
            if c == ']' && !first {
                self.pos += 1;
                break;
            }
            first = false;
            let item_start = self.pos;
            self.pos += 1;
            let lo = if c == '\\' {
                match self.escape(item_start, true)? {
                    Escaped::Char(c) => c,
                    Escaped::Set(set) => {
                        if set.negated {
                            return Err(
                                self.error(item_start, "negated shorthand classes are not supported inside brackets")
                            );
                        }
                        ranges.extend(set.ranges);
                        continue;
                    }
                }
            } else {
                c
            };
            let is_range = self.peek() == Some('-') && self.chars.get(self.pos + 1).is_some_and(|&n| n != ']');
            if is_range {
                self.pos += 1;
                let hi_start = self.pos;
                let hc = self.peek().unwrap();
                self.pos += 1;
                let hi = if hc == '\\' {
                    match self.escape(hi_start, true)? {
                        Escaped::Char(c) => c,
                        Escaped::Set(_) => return Err(self.error(hi_start, "class shorthand cannot end a range")),
                    }
                } else {
                    hc
                };
                if hi < lo {
                    return Err(self.error(item_start, format!("invalid range `{lo}-{hi}`")));
                }
                ranges.push((lo, hi));
            } else {
                ranges.push((lo, lo));
            }
        }
        Ok(Ast::Class(ClassSet { ranges, negated }))
    }
}

enum Escaped {
    Char(char),
    Set(ClassSet),
}
