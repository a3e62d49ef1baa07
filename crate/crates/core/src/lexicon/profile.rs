use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LexiconError;
use crate::localize::{LocalizeParams, PseudoDistance};

/// A user profile: dictionary priorities, domain boosts, attribute defaults
/// for cultural localization, and localization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub dictionary_priorities: Vec<String>,
    pub domain_boosts: BTreeMap<String, f64>,
    /// (category, attribute class) -> default attribute.
    pub attribute_defaults: BTreeMap<(String, String), String>,
    pub distance: PseudoDistance,
    pub localize: LocalizeParams,
    /// Style preferences applied to every node before paraphrase choice.
    pub style: Vec<String>,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            name: "default".into(),
            dictionary_priorities: Vec::new(),
            domain_boosts: BTreeMap::new(),
            attribute_defaults: BTreeMap::new(),
            distance: PseudoDistance::default(),
            localize: LocalizeParams::default(),
            style: Vec::new(),
        }
    }
}

impl Profile {
    pub fn default_for(&self, category: &str, class: &str) -> Option<&str> {
        self.attribute_defaults
            .get(&(category.to_string(), class.to_string()))
            .map(String::as_str)
    }
}

/// Parse a profile file: `[profile NAME]` sections of `key = value` lines.
///
/// Keys: `dictionaries`, `domain.D`, `default.CAT.CLASS`, `distance.headword`,
/// `distance.restriction`, `distance.context`, `localize.max-distance`,
/// `localize.widen-margin`, `localize.max-candidates`, `style`.
pub fn parse_profiles(text: &str) -> Result<Vec<Profile>, LexiconError> {
    let mut out: Vec<Profile> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| LexiconError::Format { line: line_no, message };
        if let Some(head) = line.strip_prefix('[') {
            let name = head
                .strip_suffix(']')
                .and_then(|h| h.trim().strip_prefix("profile "))
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| err(format!("expected `[profile NAME]`, got `{line}`")))?;
            if out.iter().any(|p| p.name == name) {
                return Err(err(format!("profile `{name}` declared twice")));
            }
            out.push(Profile {
                name: name.to_string(),
                ..Profile::default()
            });
            continue;
        }
        let profile = out
            .last_mut()
            .ok_or_else(|| err("setting outside of a [profile] section".into()))?;
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let num = |v: &str| -> Result<f64, LexiconError> {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| err(format!("`{key}` needs a non-negative number, got `{v}`")))
        };
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["dictionaries"] => {
                profile.dictionary_priorities = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            ["style"] => {
                profile.style = value.split_whitespace().map(str::to_string).collect();
            }
            ["domain", d] => {
                profile.domain_boosts.insert(d.to_string(), num(value)?);
            }
            ["default", cat, class] => {
                profile
                    .attribute_defaults
                    .insert((cat.to_string(), class.to_string()), value.to_string());
            }
            ["distance", "headword"] => profile.distance.headword_mismatch = num(value)?,
            ["distance", "restriction"] => profile.distance.restriction_asymmetry = num(value)?,
            ["distance", "context"] => profile.distance.context_conflict = num(value)?,
            ["localize", "max-distance"] => profile.localize.max_distance = Some(num(value)?),
            ["localize", "widen-margin"] => profile.localize.widen_margin = num(value)?,
            ["localize", "max-candidates"] => profile.localize.max_candidates = num(value)? as usize,
            _ => return Err(err(format!("unknown profile key `{key}`"))),
        }
    }
    Ok(out)
}

pub fn load_profiles(path: &Path) -> Result<Vec<Profile>, LexiconError> {
    parse_profiles(&std::fs::read_to_string(path)?)
}
