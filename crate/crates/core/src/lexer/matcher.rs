use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use super::regex::Regex;

/// A user-defined recognizer for basic elements.
///
/// `match_at` returns the length in bytes of the match starting at
/// `position`, or `None`. A returned length must be positive, end on a
/// character boundary and stay within the input; other results are
/// ignored by the scanner. Implementations must be deterministic and
/// either stateless or internally synchronized.
pub trait CustomMatcher: Send + Sync {
    fn name(&self) -> &str;
    fn match_at(&self, input: &str, position: usize, args: &str) -> Option<usize>;
}

/// Named custom matchers available to models.
#[derive(Clone, Default)]
pub struct MatcherRegistry {
    matchers: HashMap<String, Arc<dyn CustomMatcher>>,
}

impl fmt::Debug for MatcherRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<&String> = self.matchers.keys().collect();
        names.sort();
        f.debug_struct("MatcherRegistry").field("matchers", &names).finish()
    }
}

impl MatcherRegistry {
    pub fn new() -> MatcherRegistry {
        MatcherRegistry::default()
    }

    /// Registry with the `regex` and `literal` matchers, whose arguments
    /// are a pattern and a literal string respectively.
    pub fn with_builtins() -> MatcherRegistry {
        let mut registry = MatcherRegistry::new();
        registry.register(Arc::new(RegexMatcher::default()));
        registry.register(Arc::new(LiteralMatcher));
        registry
    }

    pub fn register(&mut self, matcher: Arc<dyn CustomMatcher>) {
        self.matchers.insert(matcher.name().to_string(), matcher);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn CustomMatcher>> {
        self.matchers.get(name).cloned()
    }
}

/// Matches the regular expression given as argument.
#[derive(Default)]
pub struct RegexMatcher {
    cache: Mutex<HashMap<String, Option<Regex>>>,
}

impl CustomMatcher for RegexMatcher {
    fn name(&self) -> &str {
        "regex"
    }

    fn match_at(&self, input: &str, position: usize, args: &str) -> Option<usize> {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        let re = cache.entry(args.to_string()).or_insert_with(|| Regex::new(args).ok());
        re.as_ref()?.longest_match(input, position).filter(|&n| n > 0)
    }
}

/// Matches its argument literally.
pub struct LiteralMatcher;

impl CustomMatcher for LiteralMatcher {
    fn name(&self) -> &str {
        "literal"
    }

    fn match_at(&self, input: &str, position: usize, args: &str) -> Option<usize> {
        (!args.is_empty() && input.get(position..)?.starts_with(args)).then_some(args.len())
    }
}
