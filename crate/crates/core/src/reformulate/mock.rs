//! Offline stand-in for the chat endpoint.
//!
//! The mock reads the user query back out of the prompt, classifies it with
//! [`match_template`] and fills a fixed sentence frame per template. The two
//! worked examples from the prompt are answered with their exact outputs.

use super::client::{ChatClient, ClientError};
use super::prompt::PromptText;
use super::template::{match_template, normalize, TemplateId};
use super::Source;

/// The worked examples embedded in the prompt, as (query, reformulation).
pub const WORKED_EXAMPLES: [(&str, &str); 2] = [
    (
        "What did I sprinkle on the cooking pan?",
        "find the moment when I sprinkled something on the cooking pan.",
    ),
    (
        "Did I turn off the cooker after I fried the meat?",
        "find the moment when I fried the meat, next find the moment after this with the cooker (I may turn off the cooker).",
    ),
];

#[derive(Debug, Clone, Copy, Default)]
pub struct MockClient;

impl ChatClient for MockClient {
    fn complete(&self, prompt: &PromptText) -> Result<String, ClientError> {
        Ok(mock_complete(prompt))
    }

    fn source(&self) -> Source {
        Source::Mock
    }
}

/// Deterministic reformulation of the query embedded in `prompt`.
pub fn mock_complete(prompt: &PromptText) -> String {
    let query = prompt.user_query().unwrap_or(prompt.text.as_str());
    rewrite(query)
}

/// The query with whitespace collapsed and trailing `?`/`.`/`!` removed,
/// alongside an ASCII-lowercased copy with identical byte offsets.
struct Body {
    text: String,
    lower: String,
}

impl Body {
    fn new(query: &str) -> Self {
        let text =
            query.split_whitespace().collect::<Vec<_>>().join(" ").trim_end_matches(['?', '.', '!', ' ']).to_string();
        let lower = text.to_ascii_lowercase();
        Body { text, lower }
    }

    /// Text following the first occurrence of `phrase`.
    fn after(&self, phrase: &str) -> Option<&str> {
        let pos = self.lower.find(phrase)?;
        non_empty(&self.text[pos + phrase.len()..])
    }

    /// Text strictly between `from` and the next `to`.
    fn between(&self, from: &str, to: &str) -> Option<&str> {
        let start = self.lower.find(from)? + from.len();
        let end = start + self.lower[start..].find(to)?;
        non_empty(&self.text[start..end])
    }

    /// First temporal relation word with its byte offset.
    fn relation(&self) -> Option<(usize, &'static str)> {
        [" after ", " before "].iter().filter_map(|w| self.lower.find(w).map(|p| (p, w.trim()))).min_by_key(|(p, _)| *p)
    }
}

fn non_empty(s: &str) -> Option<&str> {
    let s = s.trim();
    (!s.is_empty()).then_some(s)
}

/// The trailing noun phrase of a verb phrase, e.g. `the cooker` in
/// `turn off the cooker`.
fn object_of(phrase: &str) -> Option<&str> {
    let lower = phrase.to_ascii_lowercase();
    ["the ", "my ", "a ", "an "]
        .iter()
        .filter_map(|d| if lower.starts_with(d) { Some(0) } else { lower.rfind(&format!(" {d}")).map(|p| p + 1) })
        .max()
        .map(|p| &phrase[p..])
}

fn two_step(anchor: &str, relation: &str, target: &str, note: &str) -> String {
    format!("find the moment when {anchor}, next find the moment {relation} this with {target} ({note}).")
}

fn rewrite(query: &str) -> String {
    let norm = normalize(query);
    if let Some((_, out)) = WORKED_EXAMPLES.iter().find(|(q, _)| normalize(q) == norm) {
        return out.to_string();
    }
    let body = Body::new(query);
    match_template(query)
        .and_then(|t| frame(t, &body))
        .unwrap_or_else(|| format!("find the moment when {}.", body.text))
}

fn frame(template: TemplateId, b: &Body) -> Option<String> {
    use TemplateId::*;
    let out = match template {
        ObjWhereBeforeAfter => {
            let (pos, rel) = b.relation()?;
            let object = b.between("where is ", &format!(" {rel} "))?;
            let anchor = non_empty(&b.text[pos + rel.len() + 2..])?;
            two_step(anchor, rel, object, &format!("{object} may be visible"))
        }
        ObjectState => {
            if let Some((pos, rel)) = b.relation().filter(|_| b.lower.starts_with("did i ")) {
                let action = non_empty(&b.text["did i ".len()..pos])?;
                let anchor = non_empty(&b.text[pos + rel.len() + 2..])?;
                match object_of(action) {
                    Some(object) => two_step(anchor, rel, object, &format!("I may {action}")),
                    None => {
                        format!("find the moment when {anchor}, next find the moment {rel} this where I may {action}.")
                    }
                }
            } else if let Some(action) = b.after("did i ") {
                format!("find the moment when I {action} (the state of the object should be visible).")
            } else {
                let rest = b.text.split_once(' ').map(|(_, r)| r)?;
                format!("find the moment when I last saw {rest} (the state of the object should be visible).")
            }
        }
        ObjWhere => {
            let object = b.after("where is ")?;
            format!("find the moment when I last saw {object} (I may have put {object} somewhere).")
        }
        WhereIsMyX => {
            let object = b.after("where is my ")?;
            format!("find the moment when I last saw my {object} (I may have put my {object} somewhere).")
        }
        WhereDidIPutX => {
            let object = b.after("where did i put ")?;
            format!(
                "find the moment when I put {object} somewhere (the place where {object} ends up should be visible)."
            )
        }
        PutInX => {
            let container = b.after("what did i put in ").or_else(|| b.after("what did i put "))?;
            format!("find the moment when I put something in {container} (the inside of {container} may be visible).")
        }
        Quantity => match (b.between("how many ", " did i "), b.after(" did i ")) {
            (Some(items), Some(action)) => {
                format!("find the moment when I {action} the {items} (I should count the {items}).")
            }
            _ => {
                let items = b.after("how many ")?;
                format!("find the moment when the {items} are visible (I should count them).")
            }
        },
        WhatXDidIY => {
            let action = b.after("did i ")?;
            let what = b.between("what ", "did i ").unwrap_or("object");
            format!("find the moment when I {action} something (the {what} should be visible).")
        }
        LocationSeen => {
            let object = b.after("did i see ").or_else(|| b.after("location "))?;
            format!("find the moment when I saw {object} (the surrounding location should be visible).")
        }
        WhatXIsY => {
            let (what, verb) = [" is ", " was ", " are ", " were "]
                .iter()
                .filter_map(|v| b.between("what ", v).map(|w| (w, *v)))
                .min_by_key(|(w, _)| w.len())?;
            let subject = b.after(&format!("{what}{verb}").to_ascii_lowercase())?;
            format!("find the moment when {subject} is clearly visible (I may check what {what} it is).")
        }
        InteractDuringX => {
            let activity = b.after(" when ")?;
            format!("find the moment when {activity}, and look for the person I interacted with.")
        }
        TalkToInX => {
            let place = b.after("talk to ")?;
            format!("find the moment when I talked to someone {place} (the person should be visible).")
        }
        InteractWithRoleX => {
            let person = b.after("interact with ")?;
            format!("find the moment when I interacted with {person} (the person with this role should be visible).")
        }
    };
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{word_count, Query};
    use crate::reformulate::parse::{parse_instructions, Relation};
    use crate::reformulate::prompt::{build_prompt, DEFAULT_MODEL};
    use crate::reformulate::template::EXAMPLE_QUERIES;

    fn mock(text: &str) -> String {
        let q = Query::new("q", text, None).unwrap();
        mock_complete(&build_prompt(&q, DEFAULT_MODEL, 0.0).unwrap())
    }

    #[test]
    fn worked_examples_verbatim() {
        assert_eq!(
            mock("What did I sprinkle on the cooking pan?"),
            "find the moment when I sprinkled something on the cooking pan."
        );
        assert_eq!(
            mock("Did I turn off the cooker after I fried the meat?"),
            "find the moment when I fried the meat, next find the moment after this with the cooker (I may turn off the cooker)."
        );
    }

    #[test]
    fn object_state_frame_generalizes_worked_example() {
        // same frame as the second worked example, without the lookup table
        assert_eq!(rewrite_frame_only("Did I turn off the cooker after I fried the meat?"), WORKED_EXAMPLES[1].1);
    }

    fn rewrite_frame_only(q: &str) -> String {
        frame(match_template(q).unwrap(), &Body::new(q)).unwrap()
    }

    #[test]
    fn unmatched_query_uses_generic_frame() {
        assert_eq!(mock("abc?"), "find the moment when abc.");
        assert_eq!(mock("Tell me a joke"), "find the moment when Tell me a joke.");
    }

    #[test]
    fn every_template_round_trips_through_parser() {
        for (text, template) in EXAMPLE_QUERIES {
            let out = mock(text);
            let seq = parse_instructions(&out).unwrap_or_else(|e| panic!("{text} -> {out}: {e}"));
            assert!(!seq.is_empty());
            assert!(word_count(&out) > word_count(text), "{text} -> {out}");
            if template == TemplateId::ObjWhereBeforeAfter {
                assert_eq!(seq.len(), 2, "{out}");
                assert_ne!(seq.steps()[1].relation, Relation::None);
            }
        }
    }

    #[test]
    fn before_after_frames() {
        assert_eq!(
            mock("Where is the kettle before I boiled the water?"),
            "find the moment when I boiled the water, next find the moment before this with the kettle (the kettle may be visible)."
        );
        let seq = parse_instructions(&mock("Did I close the fridge before I left the kitchen?")).unwrap();
        assert_eq!(seq.steps()[0].description, "I left the kitchen");
        assert_eq!(seq.steps()[1].relation, Relation::Before);
    }

    #[test]
    fn sample_frames() {
        assert_eq!(
            mock("How many eggs did I crack?"),
            "find the moment when I crack the eggs (I should count the eggs)."
        );
        assert_eq!(
            mock("What color is the bucket?"),
            "find the moment when the bucket is clearly visible (I may check what color it is)."
        );
        assert_eq!(
            mock("Where is my wallet?"),
            "find the moment when I last saw my wallet (I may have put my wallet somewhere)."
        );
    }

    #[test]
    fn deterministic() {
        for (text, _) in EXAMPLE_QUERIES {
            assert_eq!(mock(text), mock(text));
        }
    }
}
