//! Splits reformulated text into ordered localization steps.
//!
//! A reformulation such as
//! `find the moment when I fried the meat, next find the moment after this with the cooker`
//! becomes two steps: `I fried the meat` with no relation, then `with the cooker`
//! constrained to come after the first step's moment.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ReformulateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Relation {
    None,
    After,
    Before,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::None => "NONE",
            Relation::After => "AFTER",
            Relation::Before => "BEFORE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub description: String,
    pub relation: Relation,
}

/// Non-empty ordered steps; the first step never carries a relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Step>", into = "Vec<Step>")]
pub struct InstructionSequence {
    steps: Vec<Step>,
}

impl InstructionSequence {
    pub fn new(steps: Vec<Step>) -> Result<Self, ReformulateError> {
        match steps.first() {
            None => return Err(ReformulateError::Unparseable("no steps".into())),
            Some(first) if first.relation != Relation::None => {
                return Err(ReformulateError::Unparseable("first step must not carry a relation".into()))
            }
            _ => {}
        }
        if steps.iter().any(|s| s.description.trim().is_empty()) {
            return Err(ReformulateError::Unparseable("empty step description".into()));
        }
        Ok(Self { steps })
    }

    /// A single unconstrained step.
    pub fn single(description: impl Into<String>) -> Result<Self, ReformulateError> {
        Self::new(vec![Step { description: description.into(), relation: Relation::None }])
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All step descriptions joined with spaces.
    pub fn joined_description(&self) -> String {
        self.steps.iter().map(|s| s.description.as_str()).collect::<Vec<_>>().join(" ")
    }
}

impl TryFrom<Vec<Step>> for InstructionSequence {
    type Error = ReformulateError;

    fn try_from(steps: Vec<Step>) -> Result<Self, Self::Error> {
        InstructionSequence::new(steps)
    }
}

impl From<InstructionSequence> for Vec<Step> {
    fn from(seq: InstructionSequence) -> Self {
        seq.steps
    }
}

const DELIMITERS: [&str; 5] = [", next ", "; next ", ". next ", ", then ", ". then "];

const RELATION_PHRASES: [(&str, Relation); 4] = [
    ("after this", Relation::After),
    ("after that", Relation::After),
    ("before this", Relation::Before),
    ("before that", Relation::Before),
];

/// Case-insensitive split on the step delimiters. Byte offsets stay valid
/// because only ASCII is lowercased.
fn split_steps(text: &str) -> Vec<&str> {
    let lower = text.to_ascii_lowercase();
    let mut parts = Vec::new();
    let mut last = 0;
    let mut i = 0;
    while i < lower.len() {
        if let Some(d) = DELIMITERS.iter().find(|d| lower[i..].starts_with(**d)) {
            parts.push(&text[last..i]);
            // keep the delimiter's leading punctuation out of both sides
            i += d.len();
            last = i;
        } else {
            i += lower[i..].chars().next().map_or(1, char::len_utf8);
        }
    }
    parts.push(&text[last..]);
    parts
}

fn strip_prefix_ci<'a>(s: &'a str, prefix: &str) -> Option<&'a str> {
    let head = s.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix).then(|| &s[prefix.len()..])
}

/// Strips the leading instruction boilerplate from a single step fragment.
fn step_description(fragment: &str) -> String {
    let mut rest = fragment.trim();
    if let Some(r) = strip_prefix_ci(rest, "find the moment") {
        rest = r.trim_start();
    }
    for (phrase, _) in RELATION_PHRASES {
        if let Some(r) = strip_prefix_ci(rest, phrase) {
            rest = r.trim_start();
            break;
        }
    }
    for lead in ["when ", "where "] {
        if let Some(r) = strip_prefix_ci(rest, lead) {
            rest = r.trim_start();
            break;
        }
    }
    let rest = rest.trim_end_matches(['.', ' ', ',', ';']);
    if rest.eq_ignore_ascii_case("when") || rest.eq_ignore_ascii_case("where") {
        return String::new();
    }
    rest.to_string()
}

fn step_relation(fragment: &str) -> Relation {
    let lower = fragment.to_ascii_lowercase();
    RELATION_PHRASES
        .iter()
        .filter_map(|(p, r)| lower.find(p).map(|pos| (pos, *r)))
        .min_by_key(|(pos, _)| *pos)
        .map_or(Relation::None, |(_, r)| r)
}

/// Parses reformulated text into an instruction sequence. Fails only when no
/// step with a non-empty description can be recovered.
pub fn parse_instructions(reformulated_text: &str) -> Result<InstructionSequence, ReformulateError> {
    let mut steps = Vec::new();
    for fragment in split_steps(reformulated_text) {
        let description = step_description(fragment);
        if description.is_empty() {
            continue;
        }
        let relation = if steps.is_empty() { Relation::None } else { step_relation(fragment) };
        steps.push(Step { description, relation });
    }
    if steps.is_empty() {
        return Err(ReformulateError::Unparseable(reformulated_text.to_string()));
    }
    InstructionSequence::new(steps)
}

/// Like [`parse_instructions`], but degrades to a single step holding the
/// whole trimmed text. The flag is true when the fallback was taken.
pub fn parse_or_fallback(reformulated_text: &str) -> Result<(InstructionSequence, bool), ReformulateError> {
    match parse_instructions(reformulated_text) {
        Ok(seq) => Ok((seq, false)),
        Err(_) => Ok((InstructionSequence::single(reformulated_text.trim())?, true)),
    }
}
