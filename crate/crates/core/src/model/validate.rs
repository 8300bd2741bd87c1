use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::hierarchy::build_unchecked;
use super::precedence::Precedence;
use super::{is_identifier, ElementDecl, ElementId, ElementKind, LanguageModel, PatternSpec};
use crate::lexer::regex::Regex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    MissingRoot,
    InvalidIdentifier,
    DuplicateMember,
    DanglingReference,
    SupertypeCycle,
    MultipleSupertypes,
    PatternOnComposite,
    BasicWithMembers,
    MissingPattern,
    AbstractWithPattern,
    AbstractWithMembers,
    AbstractWithoutSubtypes,
    BasicWithSubtypes,
    RootIsBasic,
    InvalidCardinality,
    InvalidPattern,
    PrecedenceCycle,
    PrecedenceConflict,
    UnreachableElement,
    UnitCycle,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::MissingRoot => "MISSING_ROOT",
            IssueCode::InvalidIdentifier => "INVALID_IDENTIFIER",
            IssueCode::DuplicateMember => "DUPLICATE_MEMBER",
            IssueCode::DanglingReference => "DANGLING_REFERENCE",
            IssueCode::SupertypeCycle => "SUPERTYPE_CYCLE",
            IssueCode::MultipleSupertypes => "MULTIPLE_SUPERTYPES",
            IssueCode::PatternOnComposite => "PATTERN_ON_COMPOSITE",
            IssueCode::BasicWithMembers => "BASIC_WITH_MEMBERS",
            IssueCode::MissingPattern => "MISSING_PATTERN",
            IssueCode::AbstractWithPattern => "ABSTRACT_WITH_PATTERN",
            IssueCode::AbstractWithMembers => "ABSTRACT_WITH_MEMBERS",
            IssueCode::AbstractWithoutSubtypes => "ABSTRACT_WITHOUT_SUBTYPES",
            IssueCode::BasicWithSubtypes => "BASIC_WITH_SUBTYPES",
            IssueCode::RootIsBasic => "ROOT_IS_BASIC",
            IssueCode::InvalidCardinality => "INVALID_CARDINALITY",
            IssueCode::InvalidPattern => "INVALID_PATTERN",
            IssueCode::PrecedenceCycle => "PRECEDENCE_CYCLE",
            IssueCode::PrecedenceConflict => "PRECEDENCE_CONFLICT",
            IssueCode::UnreachableElement => "UNREACHABLE_ELEMENT",
            IssueCode::UnitCycle => "UNIT_CYCLE",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub code: IssueCode,
    /// `Element` or `Element.member`; empty for model-level issues.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}: {}", self.code, self.message)
        } else {
            write!(f, "{} at {}: {}", self.code, self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|i| i.code == code)
    }

    pub fn has_warning(&self, code: IssueCode) -> bool {
        self.warnings.iter().any(|i| i.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.errors {
            writeln!(f, "error: {issue}")?;
        }
        for issue in &self.warnings {
            writeln!(f, "warning: {issue}")?;
        }
        write!(f, "{} errors, {} warnings", self.errors.len(), self.warnings.len())
    }
}

struct Collector {
    report: ValidationReport,
}

impl Collector {
    fn error(&mut self, code: IssueCode, path: impl Into<String>, message: impl Into<String>) {
        self.report.errors.push(Issue { code, path: path.into(), message: message.into() });
    }

    fn warn(&mut self, code: IssueCode, path: impl Into<String>, message: impl Into<String>) {
        self.report.warnings.push(Issue { code, path: path.into(), message: message.into() });
    }
}

/// Checks every structural rule of the model. Problems are collected, never
/// raised; the model is usable iff the report has no errors.
pub fn validate_model(model: &LanguageModel) -> ValidationReport {
    let mut out = Collector { report: ValidationReport::default() };

    match model.get(model.root.as_str()) {
        None => out.error(IssueCode::MissingRoot, "", format!("root element `{}` is not declared", model.root)),
        Some(root) if root.kind == ElementKind::Basic => {
            out.error(IssueCode::RootIsBasic, root.id.as_str(), "the root element must be composite or abstract")
        }
        Some(_) => {}
    }
    if let Err(err) = Regex::new(model.skip_pattern()) {
        out.error(IssueCode::InvalidPattern, "skip", err.to_string());
    }

    let hierarchy = build_unchecked(model);
    for decl in model.elements.values() {
        check_element(model, decl, hierarchy.direct_subtypes(decl.id.as_str()).len(), &mut out);
    }
    check_supertype_cycles(model, &mut out);
    check_precedence(model, &mut out);

    if model.elements.contains_key(&model.root) {
        let reachable = reachable(model);
        for id in model.elements.keys() {
            if !reachable.contains(id) {
                out.warn(IssueCode::UnreachableElement, id.as_str(), "not reachable from the root");
            }
        }
    }
    for id in unit_cycle_elements(model) {
        out.warn(IssueCode::UnitCycle, id.as_str(), "can derive itself through a chain of unit derivations");
    }
    out.report
}

fn check_pattern(pattern: &str, path: &str, out: &mut Collector) {
    match Regex::new(pattern) {
        Err(err) => out.error(IssueCode::InvalidPattern, path, err.to_string()),
        Ok(re) if re.is_full_match("") => {
            out.error(IssueCode::InvalidPattern, path, format!("pattern `{pattern}` matches the empty string"))
        }
        Ok(_) => {}
    }
}

fn check_element(model: &LanguageModel, decl: &ElementDecl, subtypes: usize, out: &mut Collector) {
    let path = decl.id.as_str();
    if !is_identifier(path) {
        out.error(IssueCode::InvalidIdentifier, path, format!("`{path}` is not a valid identifier"));
    }
    if decl.extends.len() > 1 {
        out.error(IssueCode::MultipleSupertypes, path, "an element may extend at most one supertype");
    }
    for sup in &decl.extends {
        if !model.elements.contains_key(sup) {
            out.error(IssueCode::DanglingReference, path, format!("supertype `{sup}` is not declared"));
        }
    }
    for target in &decl.constraints.precedes {
        if !model.elements.contains_key(target) {
            out.error(IssueCode::DanglingReference, path, format!("precedes undeclared element `{target}`"));
        }
    }
    for pattern in decl.prefixes.iter().chain(&decl.suffixes).chain(&decl.default_separators) {
        check_pattern(pattern, path, out);
    }

    match decl.kind {
        ElementKind::Basic => {
            if !decl.members.is_empty() {
                if decl.pattern.is_some() {
                    out.error(IssueCode::PatternOnComposite, path, "an element with a pattern cannot have members");
                } else {
                    out.error(IssueCode::BasicWithMembers, path, "basic elements cannot have members");
                }
            }
            match &decl.pattern {
                Some(PatternSpec::Regex(re)) => check_pattern(re, path, out),
                Some(PatternSpec::Matcher { .. }) => {}
                None => {
                    let implicit = decl.value.as_ref().and_then(|v| v.ty.implicit_pattern());
                    if implicit.is_none() {
                        let why = match &decl.value {
                            Some(v) => format!("a {} value field requires an explicit pattern", v.ty.name()),
                            None => "basic elements need a pattern or a numeric or boolean value field".into(),
                        };
                        out.error(IssueCode::MissingPattern, path, why);
                    }
                }
            }
            if subtypes > 0 {
                out.error(IssueCode::BasicWithSubtypes, path, "basic elements cannot have subtypes");
            }
        }
        ElementKind::Composite => {
            if decl.pattern.is_some() || decl.value.is_some() {
                out.error(
                    IssueCode::PatternOnComposite,
                    path,
                    "composite elements cannot carry a pattern or value field",
                );
            }
        }
        ElementKind::Abstract => {
            if decl.pattern.is_some() || decl.value.is_some() {
                out.error(
                    IssueCode::AbstractWithPattern,
                    path,
                    "abstract elements cannot carry a pattern or value field",
                );
            }
            if !decl.members.is_empty() {
                out.error(IssueCode::AbstractWithMembers, path, "abstract elements cannot have members");
            }
            if subtypes == 0 {
                out.error(IssueCode::AbstractWithoutSubtypes, path, "abstract element has no subtypes");
            }
        }
    }

    let mut names = HashSet::new();
    for member in &decl.members {
        let mpath = format!("{path}.{}", member.name);
        if !is_identifier(&member.name) {
            out.error(IssueCode::InvalidIdentifier, &mpath, format!("`{}` is not a valid member name", member.name));
        }
        if !names.insert(member.name.as_str()) {
            out.error(IssueCode::DuplicateMember, &mpath, format!("member `{}` is declared twice", member.name));
        }
        if !model.elements.contains_key(&member.element) {
            out.error(IssueCode::DanglingReference, &mpath, format!("element `{}` is not declared", member.element));
        }
        let c = member.cardinality;
        if c.max == Some(0) {
            out.error(IssueCode::InvalidCardinality, &mpath, "max must be positive");
        } else if c.max.is_some_and(|max| c.min > max) {
            out.error(IssueCode::InvalidCardinality, &mpath, format!("min {} exceeds max {}", c.min, c.max.unwrap()));
        } else if c.optional && c.is_repeated() {
            out.error(IssueCode::InvalidCardinality, &mpath, "optional applies to scalar members; use min 0 for lists");
        }
        for pattern in member.prefixes.iter().chain(&member.suffixes).chain(member.separators.iter().flatten()) {
            check_pattern(pattern, &mpath, out);
        }
    }
}

fn check_supertype_cycles(model: &LanguageModel, out: &mut Collector) {
    let mut reported: HashSet<ElementId> = HashSet::new();
    for id in model.elements.keys() {
        let mut path = vec![id];
        let mut current = model.elements[id].supertype();
        while let Some(sup) = current {
            if sup == id {
                if path.iter().all(|p| !reported.contains(*p)) {
                    let names: Vec<&str> = path.iter().map(|p| p.as_str()).collect();
                    out.error(
                        IssueCode::SupertypeCycle,
                        id.as_str(),
                        format!("supertype cycle {} -> {id}", names.join(" -> ")),
                    );
                    reported.extend(path.iter().map(|p| (*p).clone()));
                }
                break;
            }
            if path.contains(&sup) || !model.elements.contains_key(sup) {
                break;
            }
            path.push(sup);
            current = model.elements[sup].supertype();
        }
    }
}

fn check_precedence(model: &LanguageModel, out: &mut Collector) {
    let precedence = Precedence::new(model);
    for id in model.elements.keys() {
        if precedence.edge(id.as_str(), id.as_str()) {
            out.error(
                IssueCode::PrecedenceCycle,
                id.as_str(),
                "element precedes itself through a chain of precedes edges",
            );
        }
    }
    for decl in model.elements.values() {
        for target in &decl.constraints.precedes {
            if !model.elements.contains_key(target) || precedence.edge(target.as_str(), decl.id.as_str()) {
                continue;
            }
            if let (Some(a), Some(b)) =
                (precedence.effective_value(decl.id.as_str()), precedence.effective_value(target.as_str()))
            {
                if b < a {
                    out.error(
                        IssueCode::PrecedenceConflict,
                        decl.id.as_str(),
                        format!("precedes `{target}` but has a lower priority (value {a} > {b})"),
                    );
                }
            }
        }
    }
}

fn reachable(model: &LanguageModel) -> HashSet<ElementId> {
    let mut subtypes: HashMap<&ElementId, Vec<&ElementId>> = HashMap::new();
    for decl in model.elements.values() {
        for sup in &decl.extends {
            subtypes.entry(sup).or_default().push(&decl.id);
        }
    }
    let mut seen = HashSet::new();
    let mut stack = vec![&model.root];
    while let Some(id) = stack.pop() {
        if !seen.insert(id.clone()) {
            continue;
        }
        if let Some(decl) = model.elements.get(id) {
            stack.extend(decl.members.iter().map(|m| &m.element).filter(|e| model.elements.contains_key(*e)));
        }
        stack.extend(subtypes.get(id).into_iter().flatten().copied());
    }
    seen
}

/// Elements lying on a cycle of derivations that consume no input and no
/// delimiter, such as `A ::= B`, `B ::= A`.
pub(crate) fn unit_cycle_elements(model: &LanguageModel) -> Vec<ElementId> {
    let hierarchy = build_unchecked(model);
    let has_refsite_delims = |id: &ElementId| {
        model
            .elements
            .get(id)
            .is_some_and(|d| d.kind != ElementKind::Composite && !(d.prefixes.is_empty() && d.suffixes.is_empty()))
    };

    let mut nullable: HashSet<ElementId> = HashSet::new();
    loop {
        let before = nullable.len();
        for decl in model.elements.values() {
            if nullable.contains(&decl.id) {
                continue;
            }
            let yes = match decl.kind {
                ElementKind::Basic => false,
                ElementKind::Abstract => hierarchy
                    .direct_subtypes(decl.id.as_str())
                    .iter()
                    .any(|s| nullable.contains(s) && !has_refsite_delims(s)),
                ElementKind::Composite => {
                    decl.prefixes.is_empty()
                        && decl.suffixes.is_empty()
                        && decl.members.iter().all(|m| {
                            m.prefixes.is_empty()
                                && m.suffixes.is_empty()
                                && (m.cardinality.optional
                                    || m.cardinality.min == 0
                                    || (nullable.contains(&m.element) && !has_refsite_delims(&m.element)))
                        })
                }
            };
            if yes {
                nullable.insert(decl.id.clone());
            }
        }
        if nullable.len() == before {
            break;
        }
    }

    let mut edges: HashMap<&ElementId, Vec<&ElementId>> = HashMap::new();
    for decl in model.elements.values() {
        let targets = edges.entry(&decl.id).or_default();
        match decl.kind {
            ElementKind::Basic => {}
            ElementKind::Abstract => {
                for sub in hierarchy.direct_subtypes(decl.id.as_str()) {
                    if !has_refsite_delims(sub) {
                        targets.push(sub);
                    }
                }
            }
            ElementKind::Composite => {
                // Composites with subtypes also select among them.
                for sub in hierarchy.direct_subtypes(decl.id.as_str()) {
                    if !has_refsite_delims(sub) {
                        targets.push(sub);
                    }
                }
                if !decl.prefixes.is_empty() || !decl.suffixes.is_empty() {
                    continue;
                }
                for (i, m) in decl.members.iter().enumerate() {
                    if !model.elements.contains_key(&m.element)
                        || !m.prefixes.is_empty()
                        || !m.suffixes.is_empty()
                        || has_refsite_delims(&m.element)
                    {
                        continue;
                    }
                    let others_nullable = decl.members.iter().enumerate().all(|(j, o)| {
                        j == i
                            || (o.prefixes.is_empty()
                                && o.suffixes.is_empty()
                                && (o.cardinality.optional
                                    || o.cardinality.min == 0
                                    || (nullable.contains(&o.element) && !has_refsite_delims(&o.element))))
                    });
                    if others_nullable {
                        targets.push(&m.element);
                    }
                }
            }
        }
    }

    let mut on_cycle = Vec::new();
    for id in model.elements.keys() {
        let mut seen: HashSet<&ElementId> = HashSet::new();
        let mut stack: Vec<&ElementId> = edges.get(id).cloned().unwrap_or_default();
        let mut found = false;
        while let Some(next) = stack.pop() {
            if next == id {
                found = true;
                break;
            }
            if seen.insert(next) {
                stack.extend(edges.get(next).into_iter().flatten().copied());
            }
        }
        if found {
            on_cycle.push(id.clone());
        }
    }
    on_cycle
}
