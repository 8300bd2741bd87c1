use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::regex::Regex;
use super::{TokenMatcher, TokenType, TokenTypeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenCandidate {
    #[serde(rename = "type")]
    pub ty: TokenTypeId,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no token matches at offset {offset} (line {line}, column {column}): {excerpt}")]
pub struct ScanError {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    /// The input line containing the offset.
    pub excerpt: String,
}

/// Overlapping token candidates over an input. Candidate `b` follows `a`
/// when `b` starts where the skip pattern leaves off after `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenGraph {
    pub input_len: usize,
    /// Sorted by start offset, then end offset, then type.
    pub candidates: Vec<TokenCandidate>,
    /// Offset where the first token may start, after leading skipped text.
    pub origin: usize,
    /// Offset at which the successors of each candidate start.
    pub next: Vec<usize>,
    /// Distinct token boundaries reachable from the origin, ascending.
    pub positions: Vec<usize>,
    pub edges: Vec<Vec<usize>>,
    pub starts: Vec<usize>,
    pub accepting: Vec<usize>,
}

impl TokenGraph {
    fn build(input_len: usize, origin: usize, mut pairs: Vec<(TokenCandidate, usize)>) -> TokenGraph {
        pairs.sort_by_key(|(c, _)| (c.start, c.end, c.ty));
        let (candidates, next): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let mut positions: BTreeSet<usize> = next.iter().copied().collect();
        positions.insert(origin);
        let edges = next
            .iter()
            .map(|&n| {
                let lo = candidates.partition_point(|c| c.start < n);
                let hi = candidates.partition_point(|c| c.start <= n);
                (lo..hi).collect()
            })
            .collect();
        let starts = (0..candidates.len()).filter(|&i| candidates[i].start == origin).collect();
        let accepting = (0..candidates.len()).filter(|&i| next[i] == input_len).collect();
        TokenGraph {
            input_len,
            candidates,
            origin,
            next,
            positions: positions.into_iter().collect(),
            edges,
            starts,
            accepting,
        }
    }

    /// Whether some path of candidates covers the whole input.
    pub fn reaches_end(&self) -> bool {
        self.positions.last() == Some(&self.input_len)
    }
}

/// Length of the longest match of `ty` at `position`, if any. Custom
/// matcher results that are empty, overrun the input or split a
/// character are discarded.
pub fn longest_match(ty: &TokenType, input: &str, position: usize) -> Option<usize> {
    match &ty.matcher {
        TokenMatcher::Regex(re) => re.longest_match(input, position),
        TokenMatcher::Custom { matcher, args } => matcher
            .match_at(input, position, args)
            .filter(|&n| n > 0 && position + n <= input.len() && input.is_char_boundary(position + n)),
    }
}

fn skip_from(skip: &Regex, input: &str, offset: usize) -> usize {
    offset + skip.longest_match(input, offset).unwrap_or(0)
}

/// Scans `input` into a token graph holding, at every reachable offset,
/// the longest match of each token type.
///
/// Fails only when no path of candidates reaches the end of the input; the
/// reported offset is then the rightmost reachable offset where nothing
/// matches.
pub fn scan(input: &str, types: &[TokenType], skip: &Regex) -> Result<TokenGraph, ScanError> {
    let origin = skip_from(skip, input, 0);
    let mut pending: BTreeSet<usize> = BTreeSet::from([origin]);
    let mut done: BTreeSet<usize> = BTreeSet::new();
    let mut dead = None;
    let mut pairs = Vec::new();
    while let Some(offset) = pending.pop_first() {
        done.insert(offset);
        if offset >= input.len() {
            continue;
        }
        let mut matched = false;
        for ty in types {
            let Some(len) = longest_match(ty, input, offset).filter(|&n| n > 0) else { continue };
            matched = true;
            let end = offset + len;
            let next = skip_from(skip, input, end);
            if !done.contains(&next) {
                pending.insert(next);
            }
            pairs.push((TokenCandidate { ty: ty.id, start: offset, end, text: input[offset..end].to_string() }, next));
        }
        if !matched {
            dead = Some(offset);
        }
    }
    if !done.contains(&input.len()) {
        let offset = dead.unwrap_or(origin);
        return Err(scan_error(input, offset));
    }
    Ok(TokenGraph::build(input.len(), origin, pairs))
}

fn scan_error(input: &str, offset: usize) -> ScanError {
    let before = &input[..offset];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line_end = input[offset..].find('\n').map_or(input.len(), |i| offset + i);
    ScanError {
        offset,
        line: before.matches('\n').count() + 1,
        column: before[line_start..].chars().count() + 1,
        excerpt: input[line_start..line_end].to_string(),
    }
}

/// Removes every candidate whose exact span is also covered by a candidate
/// of a dominating type.
pub fn apply_lexical_precedence(graph: &TokenGraph, types: &[TokenType]) -> TokenGraph {
    let mut keep = Vec::with_capacity(graph.candidates.len());
    let mut i = 0;
    while i < graph.candidates.len() {
        let span = (graph.candidates[i].start, graph.candidates[i].end);
        let mut j = i;
        while j < graph.candidates.len() && (graph.candidates[j].start, graph.candidates[j].end) == span {
            j += 1;
        }
        for a in i..j {
            let ta = &types[graph.candidates[a].ty.index()];
            let beaten = (i..j).any(|b| b != a && types[graph.candidates[b].ty.index()].dominates(ta));
            if !beaten {
                keep.push((graph.candidates[a].clone(), graph.next[a]));
            }
        }
        i = j;
    }
    TokenGraph::build(graph.input_len, graph.origin, keep)
}
