use serde::{Deserialize, Serialize};

use super::ReformulateError;
use crate::domain::Query;

/// Everything in the reformulation prompt that precedes the user query.
pub const PROMPT_PREAMBLE: &str = "\
You are Eva, a super intelligent assistant that help users locate moments in videos via natural language queries.

You are:
- helpful and friendly
- not able to directly access the video's content
- decompose a complex event query into a series of logically coherent actions
- good at understanding user's intent and extract the core steps from the query in order to answer the user's question

You can use an external tool named Locator, which is able to locate moments in videos given detailed natural language queries.

The user will ask a question about objects, places, and people in an ego-centric video, and the key to answer the question is to first locate relevant moments given the query.

Your goal is to reformulate the query into a series of instructions for the Locator.

There are some templates for user's query as following:
- Where is object X before / after event Y?
- Where is object X?
- What did I put in X?
- How many X's? (quantity question)
- What X did I Y?
- In what location did I see object X ?
- What X is Y?
- State of an object
- Where is my object X?
- Where did I put X?
- Who did I interact with when I did activity X?
- Who did I talk to in location X?
- When did I interact with person with role X?

Here are some examples:
Example 1:
query: What did I sprinkle on the cooking pan?
output: find the moment when I sprinkled something on the cooking pan.
Example 2:
query: Did I turn off the cooker after I fried the meat?
output: find the moment when I fried the meat, next find the moment after this with the cooker (I may turn off the cooker).

Now reformulate this query ";

/// Terminates the prompt after the substituted query.
pub const PROMPT_SUFFIX: &str = ":";

/// The thirteen query template lines listed in the prompt, in order.
pub const TEMPLATE_LINES: [&str; 13] = [
    "- Where is object X before / after event Y?",
    "- Where is object X?",
    "- What did I put in X?",
    "- How many X's? (quantity question)",
    "- What X did I Y?",
    "- In what location did I see object X ?",
    "- What X is Y?",
    "- State of an object",
    "- Where is my object X?",
    "- Where did I put X?",
    "- Who did I interact with when I did activity X?",
    "- Who did I talk to in location X?",
    "- When did I interact with person with role X?",
];

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptText {
    pub text: String,
    pub model_hint: String,
    pub temperature: f64,
}

impl PromptText {
    /// Recovers the user query from a prompt produced by [`build_prompt`].
    pub fn user_query(&self) -> Option<&str> {
        self.text.strip_prefix(PROMPT_PREAMBLE).and_then(|rest| rest.strip_suffix(PROMPT_SUFFIX))
    }
}

/// Fills the reformulation prompt with `query.text`. The query is inserted
/// verbatim exactly once, so placeholder-like text in the query survives.
pub fn build_prompt(query: &Query, model_hint: &str, temperature: f64) -> Result<PromptText, ReformulateError> {
    if query.text.trim().is_empty() {
        return Err(ReformulateError::EmptyQuery(query.query_id.clone()));
    }
    if !(0.0..=2.0).contains(&temperature) {
        return Err(ReformulateError::Temperature(temperature));
    }
    let mut text = String::with_capacity(PROMPT_PREAMBLE.len() + query.text.len() + 1);
    text.push_str(PROMPT_PREAMBLE);
    text.push_str(&query.text);
    text.push_str(PROMPT_SUFFIX);
    Ok(PromptText { text, model_hint: model_hint.to_string(), temperature })
}
