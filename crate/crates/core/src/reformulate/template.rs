use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The thirteen query templates offered to the LLM, one per template line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TemplateId {
    ObjWhereBeforeAfter,
    ObjWhere,
    PutInX,
    Quantity,
    WhatXDidIY,
    LocationSeen,
    WhatXIsY,
    ObjectState,
    WhereIsMyX,
    WhereDidIPutX,
    InteractDuringX,
    TalkToInX,
    InteractWithRoleX,
}

impl TemplateId {
    pub const ALL: [TemplateId; 13] = [
        TemplateId::ObjWhereBeforeAfter,
        TemplateId::ObjWhere,
        TemplateId::PutInX,
        TemplateId::Quantity,
        TemplateId::WhatXDidIY,
        TemplateId::LocationSeen,
        TemplateId::WhatXIsY,
        TemplateId::ObjectState,
        TemplateId::WhereIsMyX,
        TemplateId::WhereDidIPutX,
        TemplateId::InteractDuringX,
        TemplateId::TalkToInX,
        TemplateId::InteractWithRoleX,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::ObjWhereBeforeAfter => "OBJ_WHERE_BEFORE_AFTER",
            TemplateId::ObjWhere => "OBJ_WHERE",
            TemplateId::PutInX => "PUT_IN_X",
            TemplateId::Quantity => "QUANTITY",
            TemplateId::WhatXDidIY => "WHAT_X_DID_I_Y",
            TemplateId::LocationSeen => "LOCATION_SEEN",
            TemplateId::WhatXIsY => "WHAT_X_IS_Y",
            TemplateId::ObjectState => "OBJECT_STATE",
            TemplateId::WhereIsMyX => "WHERE_IS_MY_X",
            TemplateId::WhereDidIPutX => "WHERE_DID_I_PUT_X",
            TemplateId::InteractDuringX => "INTERACT_DURING_X",
            TemplateId::TalkToInX => "TALK_TO_IN_X",
            TemplateId::InteractWithRoleX => "INTERACT_WITH_ROLE_X",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| format!("unknown template {s:?}"))
    }
}

/// One example query per template, with placeholder nouns filled in.
pub const EXAMPLE_QUERIES: [(&str, TemplateId); 13] = [
    ("Where is the kettle after I boiled the water?", TemplateId::ObjWhereBeforeAfter),
    ("Where is the phone?", TemplateId::ObjWhere),
    ("What did I put in the drawer?", TemplateId::PutInX),
    ("How many eggs did I crack?", TemplateId::Quantity),
    ("What vegetable did I cut?", TemplateId::WhatXDidIY),
    ("In what location did I see the ladder?", TemplateId::LocationSeen),
    ("What color is the bucket?", TemplateId::WhatXIsY),
    ("Is the fridge door open?", TemplateId::ObjectState),
    ("Where is my wallet?", TemplateId::WhereIsMyX),
    ("Where did I put the keys?", TemplateId::WhereDidIPutX),
    ("Who did I interact with when I washed the car?", TemplateId::InteractDuringX),
    ("Who did I talk to in the garage?", TemplateId::TalkToInX),
    ("When did I interact with the cashier?", TemplateId::InteractWithRoleX),
];

/// Lowercases, collapses whitespace and drops trailing `?`/`.`/`!`.
pub(crate) fn normalize(text: &str) -> String {
    let joined = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    joined.trim_end_matches(['?', '.', '!', ' ']).to_string()
}

fn has_word(haystack: &str, word: &str) -> bool {
    haystack.split(' ').any(|w| w == word)
}

fn has_relation(q: &str) -> bool {
    has_word(q, "before") || has_word(q, "after")
}

/// Keyword classifier over the normalized query; first matching rule wins.
pub fn match_template(query_text: &str) -> Option<TemplateId> {
    let q = normalize(query_text);
    let q = q.as_str();
    use TemplateId::*;

    if q.starts_with("how many") {
        return Some(Quantity);
    }
    if q.contains("where did i put") {
        return Some(WhereDidIPutX);
    }
    if q.contains("who did i talk to") {
        return Some(TalkToInX);
    }
    if q.contains("where is my") {
        return Some(WhereIsMyX);
    }
    if q.contains("where is") && has_relation(q) {
        return Some(ObjWhereBeforeAfter);
    }
    if q.contains("where is") {
        return Some(ObjWhere);
    }
    if q.contains("what did i put") {
        return Some(PutInX);
    }
    if q.contains("in what location") {
        return Some(LocationSeen);
    }
    if q.contains("who did i interact") {
        return Some(InteractDuringX);
    }
    if q.contains("when did i interact") {
        return Some(InteractWithRoleX);
    }
    if q.starts_with("did i ") || ["is the ", "was the ", "are the ", "were the "].iter().any(|p| q.starts_with(p)) {
        return Some(ObjectState);
    }
    if let Some(rest) = q.strip_prefix("what ") {
        // verb position decides between "what X did I Y" and "what X is Y"
        let words: Vec<&str> = rest.split(' ').collect();
        let did = words.windows(2).position(|w| w == ["did", "i"]);
        let is = words.iter().position(|w| matches!(*w, "is" | "was" | "are" | "were"));
        return match (did, is) {
            (Some(d), Some(i)) if i < d => Some(WhatXIsY),
            (Some(_), _) => Some(WhatXDidIY),
            (None, Some(_)) => Some(WhatXIsY),
            (None, None) => None,
        };
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use TemplateId::*;

    #[test]
    fn keyword_table_examples() {
        assert_eq!(match_template("Where did I put the scissors?"), Some(WhereDidIPutX));
        assert_eq!(match_template("How many onions did I chop?"), Some(Quantity));
        assert_eq!(match_template("Tell me a joke"), None);
    }

    #[test]
    fn one_instance_per_template() {
        for (text, expected) in instances() {
            assert_eq!(match_template(text), Some(expected), "{text}");
        }
        let mut seen: Vec<_> = instances().iter().map(|(_, t)| *t).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 13);
    }

    #[test]
    fn paper_examples_classify() {
        assert_eq!(match_template("What did I sprinkle on the cooking pan?"), Some(WhatXDidIY));
        assert_eq!(match_template("Did I turn off the cooker after I fried the meat?"), Some(ObjectState));
    }

    #[test]
    fn relation_words_need_word_boundaries() {
        // "afternoon" is not "after"
        assert_eq!(match_template("Where is the bag this afternoon?"), Some(ObjWhere));
    }

    #[test]
    fn ids_round_trip_through_strings() {
        for t in TemplateId::ALL {
            assert_eq!(t.as_str().parse::<TemplateId>(), Ok(t));
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
    }

    fn instances() -> [(&'static str, TemplateId); 13] {
        EXAMPLE_QUERIES
    }
}
