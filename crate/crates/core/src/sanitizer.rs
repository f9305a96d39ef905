//! Rule-based canonicalization of raw error messages.
//!
//! A [`RuleSet`] is an ordered list of regular-expression rules. Each rule
//! either rewrites every match (`replace`) or discards the message outright
//! (`drop`). Code-specific fragments are replaced by the placeholders
//! `NAME`, `NUMBER`, `STRING` and `TYPE`, so that e.g.
//! `NameError: name 'x' is not defined` and `NameError: name 'sum' is not defined`
//! land in the same class.
//!
//! Rule files are JSON:
//!
//! ```json
//! {
//!   "name": "python",
//!   "ascii_only": true,
//!   "rules": [
//!     { "pattern": "name '[^']*' is not defined",
//!       "action": "replace",
//!       "replacement": "name 'NAME' is not defined",
//!       "tests": [ { "in": "NameError: name 'x' is not defined",
//!                    "out": "NameError: name 'NAME' is not defined" } ] },
//!     { "pattern": "^Traceback", "action": "drop",
//!       "tests": [ { "in": "Traceback (most recent call last):", "out": null } ] }
//!   ]
//! }
//! ```
//!
//! Patterns use the `regex` crate dialect (no backreferences or lookaround).
//! Replacement templates use `$1`, `${1}` or `${name}` group references and
//! `$$` for a literal dollar sign.
//!
//! Every test vector is run through the whole rule set when the file is
//! loaded: the output must equal `out` when given, and must be a fixed point
//! of a second pass.

use std::fmt;
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Deserializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SanitizerError {
    #[error("rule file is not valid JSON: {0}")]
    Document(String),
    #[error("rule {index}: {reason}")]
    Parse { index: usize, reason: String },
    #[error("rule {index}: pattern {pattern:?} does not compile: {reason}")]
    Compile { index: usize, pattern: String, reason: String },
    #[error("rule {index}: replacement {template:?} refers to missing group {group:?}")]
    MissingGroup { index: usize, template: String, group: String },
    #[error("rule {index}: test input {input:?} gave {actual:?}, expected {expected:?}")]
    TestMismatch { index: usize, input: String, expected: Option<String>, actual: Option<String> },
    #[error("rule {index}: test input {input:?} is not stable: {once:?} then {twice:?}")]
    IdempotenceViolation { index: usize, input: String, once: String, twice: Option<String> },
    #[error("profile: {0}")]
    Profile(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleAction {
    Replace(String),
    Drop,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pattern: Regex,
    action: RuleAction,
}

impl Rule {
    pub fn replace(pattern: &str, template: &str) -> Result<Self, SanitizerError> {
        Self::build(0, pattern, RuleAction::Replace(template.to_string()))
    }

    pub fn drop(pattern: &str) -> Result<Self, SanitizerError> {
        Self::build(0, pattern, RuleAction::Drop)
    }

    fn build(index: usize, pattern: &str, action: RuleAction) -> Result<Self, SanitizerError> {
        let regex = Regex::new(pattern).map_err(|e| SanitizerError::Compile {
            index,
            pattern: pattern.to_string(),
            reason: e.to_string(),
        })?;
        if let RuleAction::Replace(template) = &action {
            for group in template_groups(template) {
                let exists = match group.parse::<usize>() {
                    Ok(i) => i < regex.captures_len(),
                    Err(_) => regex.capture_names().flatten().any(|n| n == group),
                };
                if !exists {
                    return Err(SanitizerError::MissingGroup { index, template: template.clone(), group });
                }
            }
        }
        Ok(Rule { pattern: regex, action })
    }

    pub fn pattern(&self) -> &str {
        self.pattern.as_str()
    }

    pub fn action(&self) -> &RuleAction {
        &self.action
    }
}

/// Group references in a replacement template, following the `regex` crate's
/// expansion rules: `$$` is a literal, `${...}` is braced, and a bare `$name`
/// takes the longest run of `[_0-9A-Za-z]`.
fn template_groups(template: &str) -> Vec<String> {
    let bytes = template.as_bytes();
    let mut groups = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'$' {
            i += 1;
            continue;
        }
        i += 1;
        match bytes.get(i) {
            Some(b'$') => i += 1,
            Some(b'{') => {
                if let Some(end) = template[i + 1..].find('}') {
                    groups.push(template[i + 1..i + 1 + end].to_string());
                    i += end + 2;
                }
            }
            _ => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                if i > start {
                    groups.push(template[start..i].to_string());
                }
            }
        }
    }
    groups
}

/// An ordered, immutable list of rules plus the non-ASCII filter flag.
#[derive(Debug, Clone)]
pub struct RuleSet {
    name: Option<String>,
    rules: Vec<Rule>,
    ascii_only: bool,
}

const PYTHON_RULES: &str = include_str!("../rules/python.json");
const JAVA_RULES: &str = include_str!("../rules/java.json");

impl RuleSet {
    pub fn new(rules: Vec<Rule>, ascii_only: bool) -> Self {
        RuleSet { name: None, rules, ascii_only }
    }

    pub fn empty(ascii_only: bool) -> Self {
        Self::new(Vec::new(), ascii_only)
    }

    /// The bundled Python-style rule set.
    pub fn python() -> Self {
        Self::from_json_str(PYTHON_RULES).expect("bundled python rules are valid")
    }

    /// The bundled Java-style rule set.
    pub fn java() -> Self {
        Self::from_json_str(JAVA_RULES).expect("bundled java rules are valid")
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn ascii_only(&self) -> bool {
        self.ascii_only
    }

    /// Parses, compiles and self-tests a rule file.
    pub fn from_json_str(text: &str) -> Result<Self, SanitizerError> {
        let doc: RuleFile = serde_json::from_str(text).map_err(|e| SanitizerError::Document(e.to_string()))?;
        let mut rules = Vec::with_capacity(doc.rules.len());
        let mut vectors = Vec::new();
        for (index, value) in doc.rules.into_iter().enumerate() {
            let entry: RuleEntry =
                serde_json::from_value(value).map_err(|e| SanitizerError::Parse { index, reason: e.to_string() })?;
            let action = match (entry.action, entry.replacement) {
                (ActionName::Replace, Some(r)) => RuleAction::Replace(r),
                (ActionName::Replace, None) => {
                    return Err(SanitizerError::Parse { index, reason: "replace rule needs a replacement".into() })
                }
                (ActionName::Drop, None) => RuleAction::Drop,
                (ActionName::Drop, Some(_)) => {
                    return Err(SanitizerError::Parse { index, reason: "drop rule takes no replacement".into() })
                }
            };
            rules.push(Rule::build(index, &entry.pattern, action)?);
            vectors.extend(entry.tests.into_iter().map(|t| (index, t)));
        }
        let set = RuleSet { name: doc.name, rules, ascii_only: doc.ascii_only };
        for (index, vector) in vectors {
            set.check_vector(index, vector)?;
        }
        Ok(set)
    }

    fn check_vector(&self, index: usize, vector: TestVector) -> Result<(), SanitizerError> {
        let once = sanitize_message(&vector.input, self);
        if let Some(expected) = vector.out {
            if once != expected {
                return Err(SanitizerError::TestMismatch { index, input: vector.input, expected, actual: once });
            }
        }
        if let Some(once) = once {
            let twice = sanitize_message(&once, self);
            if twice.as_deref() != Some(once.as_str()) {
                return Err(SanitizerError::IdempotenceViolation { index, input: vector.input, once, twice });
            }
        }
        Ok(())
    }
}

pub fn load_ruleset(path: impl AsRef<Path>) -> Result<RuleSet, SanitizerError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| SanitizerError::Io { path: path.display().to_string(), source })?;
    RuleSet::from_json_str(&text)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    ascii_only: bool,
    rules: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum ActionName {
    Replace,
    Drop,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    pattern: String,
    action: ActionName,
    #[serde(default)]
    replacement: Option<String>,
    #[serde(default)]
    tests: Vec<TestVector>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TestVector {
    #[serde(rename = "in")]
    input: String,
    // absent: only the fixed-point check runs; null: the message must be dropped
    #[serde(default, deserialize_with = "present")]
    out: Option<Option<String>>,
}

fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<String>>, D::Error> {
    Option::<String>::deserialize(d).map(Some)
}

/// Canonical form of `msg`, or `None` if it is dropped.
///
/// With `ascii_only`, any byte >= 0x80 drops the message before any rule
/// runs. Rules then apply in order, each as a global substitution; a
/// matching drop rule ends processing. Runs of tabs, carriage returns and
/// newlines in the result become a single space. An empty result counts as
/// dropped.
pub fn sanitize_message(msg: &str, rules: &RuleSet) -> Option<String> {
    if rules.ascii_only && !msg.is_ascii() {
        return None;
    }
    let mut text = msg.to_string();
    for rule in &rules.rules {
        match &rule.action {
            RuleAction::Drop => {
                if rule.pattern.is_match(&text) {
                    return None;
                }
            }
            RuleAction::Replace(template) => {
                if let std::borrow::Cow::Owned(s) = rule.pattern.replace_all(&text, template.as_str()) {
                    text = s;
                }
            }
        }
    }
    let text = collapse_line_breaks(&text);
    (!text.is_empty()).then_some(text)
}

fn collapse_line_breaks(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_run = false;
    for c in text.chars() {
        if matches!(c, '\t' | '\r' | '\n') {
            if !in_run {
                out.push(' ');
            }
            in_run = true;
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

/// Locates the first error message in a tool transcript.
#[derive(Debug, Clone)]
pub struct LanguageProfile {
    name: String,
    error_line_matcher: Regex,
}

const PYTHON_PROFILE: &str = include_str!("../rules/python.profile.json");
const JAVA_PROFILE: &str = include_str!("../rules/java.profile.json");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    name: String,
    error_line_matcher: String,
}

impl LanguageProfile {
    pub fn new(name: impl Into<String>, error_line_matcher: &str) -> Result<Self, SanitizerError> {
        let error_line_matcher = Regex::new(error_line_matcher)
            .map_err(|e| SanitizerError::Profile(format!("matcher {error_line_matcher:?} does not compile: {e}")))?;
        Ok(LanguageProfile { name: name.into(), error_line_matcher })
    }

    pub fn from_json_str(text: &str) -> Result<Self, SanitizerError> {
        let doc: ProfileFile = serde_json::from_str(text).map_err(|e| SanitizerError::Profile(e.to_string()))?;
        Self::new(doc.name, &doc.error_line_matcher)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SanitizerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| SanitizerError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }

    pub fn python() -> Self {
        Self::from_json_str(PYTHON_PROFILE).expect("bundled python profile is valid")
    }

    pub fn java() -> Self {
        Self::from_json_str(JAVA_PROFILE).expect("bundled java profile is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The first line the matcher accepts. If the matcher has capture groups,
    /// the first group that took part in the match is returned instead of the
    /// whole match.
    pub fn first_error(&self, raw_output: &str) -> Option<String> {
        raw_output.lines().find_map(|line| {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let caps = self.error_line_matcher.captures(line)?;
            let m = caps.iter().skip(1).flatten().next().or_else(|| caps.get(0))?;
            Some(m.as_str().to_string())
        })
    }
}

impl fmt::Display for LanguageProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.error_line_matcher.as_str())
    }
}

pub fn first_error(raw_output: &str, profile: &LanguageProfile) -> Option<String> {
    profile.first_error(raw_output)
}
