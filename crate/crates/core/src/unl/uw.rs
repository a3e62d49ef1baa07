//! Universal Words: a headword plus an ordered set of restrictions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UwError {
    #[error("malformed UW `{text}`: {reason}")]
    Malformed { text: String, reason: String },
}

fn malformed(text: &str, reason: impl Into<String>) -> UwError {
    UwError::Malformed {
        text: text.to_string(),
        reason: reason.into(),
    }
}

/// Direction of a restriction: `>` (the headword is a kind of / has the
/// relation towards the target) or `<` (inverse).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = ">")]
    Forward,
    #[serde(rename = "<")]
    Backward,
}

impl Direction {
    pub fn as_char(self) -> char {
        match self {
            Direction::Forward => '>',
            Direction::Backward => '<',
        }
    }
}

/// One `rel>target` triple inside a UW. The target is kept verbatim, nested
/// parentheses included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Restriction {
    pub relation: String,
    pub direction: Direction,
    pub target: String,
}

impl Restriction {
    pub fn new(relation: &str, direction: Direction, target: &str) -> Self {
        Restriction {
            relation: relation.to_string(),
            direction,
            target: target.to_string(),
        }
    }

    /// `icl>furniture` style shorthand; panics on bad input, test helper.
    pub fn fwd(relation: &str, target: &str) -> Self {
        Restriction::new(relation, Direction::Forward, target)
    }

    fn parse(uw_text: &str, text: &str) -> Result<Self, UwError> {
        let text = text.trim();
        let pos = text
            .find(['>', '<'])
            .ok_or_else(|| malformed(uw_text, format!("restriction `{text}` has no `>` or `<`")))?;
        let relation = text[..pos].trim().to_ascii_lowercase();
        let direction = if text.as_bytes()[pos] == b'>' {
            Direction::Forward
        } else {
            Direction::Backward
        };
        let target = collapse_spaces(&text[pos + 1..]);
        let rel_ok = (2..=4).contains(&relation.len()) && relation.bytes().all(|b| b.is_ascii_lowercase());
        if !rel_ok {
            return Err(malformed(uw_text, format!("bad restriction relation `{relation}`")));
        }
        if target.is_empty() {
            return Err(malformed(uw_text, format!("empty target in restriction `{text}`")));
        }
        Ok(Restriction {
            relation,
            direction,
            target,
        })
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.relation, self.direction.as_char(), self.target)
    }
}

/// A Universal Word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Uw {
    pub headword: String,
    pub restrictions: Vec<Restriction>,
}

impl Uw {
    pub fn new(headword: &str, restrictions: Vec<Restriction>) -> Self {
        let mut uw = Uw {
            headword: collapse_spaces(headword),
            restrictions: Vec::with_capacity(restrictions.len()),
        };
        for r in restrictions {
            if !uw.restrictions.contains(&r) {
                uw.restrictions.push(r);
            }
        }
        uw
    }

    pub fn parse(text: &str) -> Result<Self, UwError> {
        parse_uw(text)
    }

    pub fn has_restriction(&self, r: &Restriction) -> bool {
        self.restrictions.contains(r)
    }

    /// Targets of the `icl>` restrictions: the classes this UW belongs to.
    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.restrictions
            .iter()
            .filter(|r| r.relation == "icl" && r.direction == Direction::Forward)
            .map(|r| r.target.as_str())
    }
}

impl fmt::Display for Uw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.headword)?;
        if !self.restrictions.is_empty() {
            f.write_str("(")?;
            for (i, r) in self.restrictions.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{r}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FromStr for Uw {
    type Err = UwError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_uw(s)
    }
}

pub(crate) fn collapse_spaces(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split `text` on commas that sit at parenthesis depth zero.
pub(crate) fn split_top_level(text: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

/// Parse a UW such as `look for(icl>action, agt>human, obj>thing)`.
pub fn parse_uw(text: &str) -> Result<Uw, UwError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(malformed(text, "empty text"));
    }
    let mut depth = 0i32;
    for c in trimmed.chars() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(malformed(text, "unbalanced parentheses"));
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(malformed(text, "unbalanced parentheses"));
    }

    let (head, inner) = match trimmed.find('(') {
        None => (trimmed, None),
        Some(open) => {
            if !trimmed.ends_with(')') {
                return Err(malformed(text, "text after restriction list"));
            }
            // the first `(` must close at the very end
            let mut d = 0i32;
            for (i, c) in trimmed.char_indices().skip_while(|&(i, _)| i < open) {
                match c {
                    '(' => d += 1,
                    ')' => {
                        d -= 1;
                        if d == 0 && i != trimmed.len() - 1 {
                            return Err(malformed(text, "text after restriction list"));
                        }
                    }
                    _ => {}
                }
            }
            (&trimmed[..open], Some(&trimmed[open + 1..trimmed.len() - 1]))
        }
    };

    let headword = collapse_spaces(head);
    if headword.is_empty() {
        return Err(malformed(text, "empty headword"));
    }
    if headword.contains([',', '(', ')']) {
        return Err(malformed(text, "headword contains `,` or parentheses"));
    }

    let mut restrictions = Vec::new();
    if let Some(inner) = inner {
        if inner.trim().is_empty() {
            return Err(malformed(text, "empty restriction list"));
        }
        for part in split_top_level(inner, ',') {
            let r = Restriction::parse(text, part)?;
            if !restrictions.contains(&r) {
                restrictions.push(r);
            }
        }
    }
    Ok(Uw {
        headword,
        restrictions,
    })
}
