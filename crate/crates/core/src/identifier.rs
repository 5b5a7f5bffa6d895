//! WEC identifiers and grid queries.
//!
//! An identifier is a `;`-separated list of `key:value` pairs that must contain
//! the five system keys `algo`, `dims`, `dataset`, `unit` and `fold`. Any number
//! of additional user keys may follow. The normalized form sorts pairs by key,
//! so two identifiers are equal iff their normalized strings are byte-equal.
//!
//! A query joins one or more specs with `&`. Inside a spec every value may be a
//! brace set `{v1,v2,...}`; a spec expands to the Cartesian product of its brace
//! sets with the leftmost set varying slowest.
//!
//! ```text
//! query := spec ("&" spec)*
//! spec  := pair (";" pair)*
//! pair  := key ":" (value | "{" value ("," value)* "}")
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// The attributes every identifier must carry.
pub const SYSTEM_KEYS: [&str; 5] = ["algo", "dims", "dataset", "unit", "fold"];

const RESERVED: [char; 6] = [';', ':', '&', '{', '}', ','];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentifierError {
    #[error("empty identifier")]
    Empty,
    #[error("malformed pair `{pair}`: {reason}")]
    MalformedPair { pair: String, reason: &'static str },
    #[error("invalid key `{0}`: keys are lowercase ASCII letters, digits, `_` or `-` and start with a letter")]
    InvalidKey(String),
    #[error("invalid value `{value}` for key `{key}`")]
    InvalidValue { key: String, value: String },
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("missing system key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid `dims` value `{0}`: expected a positive integer")]
    InvalidDims(String),
    #[error("invalid `fold` value `{0}`: expected 0 or 1")]
    InvalidFold(String),
    #[error("empty brace set for key `{0}`")]
    EmptyBraceSet(String),
    #[error("nested or unbalanced braces for key `{0}`")]
    NestedBraces(String),
    #[error("query expands to duplicate identifier `{0}`")]
    DuplicateExpansion(String),
}

/// A validated, order-independent WEC identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WecIdentifier {
    attributes: BTreeMap<String, String>,
}

impl WecIdentifier {
    /// Builds an identifier from already split pairs, validating everything
    /// `parse_identifier` would.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, IdentifierError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut attributes = BTreeMap::new();
        for (k, v) in pairs {
            let (k, v) = (k.into(), v.into());
            validate_key(&k)?;
            validate_value(&k, &v)?;
            if attributes.contains_key(&k) {
                return Err(IdentifierError::DuplicateKey(k));
            }
            attributes.insert(k, v);
        }
        if attributes.is_empty() {
            return Err(IdentifierError::Empty);
        }
        for key in SYSTEM_KEYS {
            if !attributes.contains_key(key) {
                return Err(IdentifierError::MissingKey(key));
            }
        }
        let dims = &attributes["dims"];
        if !dims.bytes().all(|b| b.is_ascii_digit()) || dims.parse::<u32>().map_or(true, |d| d == 0)
        {
            return Err(IdentifierError::InvalidDims(dims.clone()));
        }
        let fold = &attributes["fold"];
        if fold != "0" && fold != "1" {
            return Err(IdentifierError::InvalidFold(fold.clone()));
        }
        Ok(Self { attributes })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&str, &str)> {
        self.attributes
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn algo(&self) -> &str {
        &self.attributes["algo"]
    }

    pub fn dataset(&self) -> &str {
        &self.attributes["dataset"]
    }

    pub fn unit(&self) -> &str {
        &self.attributes["unit"]
    }

    pub fn dims(&self) -> usize {
        self.attributes["dims"]
            .parse()
            .expect("validated on construction")
    }

    /// `true` for `fold:1`, i.e. the WEC was trained on lowercased text.
    pub fn folded(&self) -> bool {
        self.attributes["fold"] == "1"
    }

    pub fn stemmed(&self) -> bool {
        self.unit() == "stem"
    }

    /// `key:value` pairs sorted by key and joined with `;`.
    pub fn normalize(&self) -> String {
        let mut out = String::new();
        for (i, (k, v)) in self.attributes.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            out.push_str(k);
            out.push(':');
            out.push_str(v);
        }
        out
    }

    /// Whether every `(key, value)` of `filter` is present in this identifier.
    pub fn matches(&self, filter: &BTreeMap<String, String>) -> bool {
        filter
            .iter()
            .all(|(k, v)| self.attributes.get(k).is_some_and(|own| own == v))
    }

    /// Filesystem-safe name derived from the normalized form: `:` becomes `=`,
    /// `;` becomes `.`, and any byte of a key or value outside
    /// `[A-Za-z0-9_-]` is percent-encoded so the mapping stays injective.
    pub fn file_stem(&self) -> String {
        let mut out = String::new();
        for (i, (k, v)) in self.attributes.iter().enumerate() {
            if i > 0 {
                out.push('.');
            }
            percent_encode(k, &mut out);
            out.push('=');
            percent_encode(v, &mut out);
        }
        out
    }
}

fn percent_encode(s: &str, out: &mut String) {
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
}

impl fmt::Display for WecIdentifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.normalize())
    }
}

impl FromStr for WecIdentifier {
    type Err = IdentifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_identifier(s)
    }
}

/// Parses a single brace-free identifier.
pub fn parse_identifier(text: &str) -> Result<WecIdentifier, IdentifierError> {
    let mut pairs = Vec::new();
    for raw in split_pairs(text)? {
        let (key, value) = split_pair(raw)?;
        if value.contains(['{', '}']) {
            return Err(IdentifierError::MalformedPair {
                pair: raw.trim().to_string(),
                reason: "brace sets are only allowed in queries",
            });
        }
        pairs.push((key, value));
    }
    WecIdentifier::from_pairs(pairs)
}

/// Normalized string of an identifier. Equivalent to [`WecIdentifier::normalize`].
pub fn normalize(id: &WecIdentifier) -> String {
    id.normalize()
}

/// A parsed query: the raw per-WEC specs and their expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WecQuery {
    pub specs: Vec<String>,
    pub expanded: Vec<WecIdentifier>,
}

impl WecQuery {
    pub fn len(&self) -> usize {
        self.expanded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expanded.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, WecIdentifier> {
        self.expanded.iter()
    }
}

impl FromStr for WecQuery {
    type Err = IdentifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_query(s)
    }
}

/// Parses and expands a grid query.
pub fn parse_query(text: &str) -> Result<WecQuery, IdentifierError> {
    if text.trim().is_empty() {
        return Err(IdentifierError::Empty);
    }
    let mut specs = Vec::new();
    let mut expanded = Vec::new();
    let mut seen = HashSet::new();
    for spec in text.split('&') {
        let spec = spec.trim();
        let mut slots: Vec<(&str, Vec<&str>)> = Vec::new();
        for raw in split_pairs(spec)? {
            let (key, value) = split_pair(raw)?;
            slots.push((key, expand_value(key, value)?));
        }
        // leftmost slot varies slowest: odometer over slot indices
        let mut idx = vec![0usize; slots.len()];
        'expand: loop {
            let id =
                WecIdentifier::from_pairs(slots.iter().zip(&idx).map(|((k, vs), &i)| (*k, vs[i])))?;
            let norm = id.normalize();
            if !seen.insert(norm.clone()) {
                return Err(IdentifierError::DuplicateExpansion(norm));
            }
            expanded.push(id);

            for pos in (0..slots.len()).rev() {
                idx[pos] += 1;
                if idx[pos] < slots[pos].1.len() {
                    continue 'expand;
                }
                idx[pos] = 0;
            }
            break;
        }
        specs.push(spec.to_string());
    }
    Ok(WecQuery { specs, expanded })
}

fn split_pairs(text: &str) -> Result<Vec<&str>, IdentifierError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(IdentifierError::Empty);
    }
    Ok(text.split(';').map(str::trim).collect())
}

fn split_pair(raw: &str) -> Result<(&str, &str), IdentifierError> {
    let malformed = |reason| IdentifierError::MalformedPair {
        pair: raw.to_string(),
        reason,
    };
    if raw.is_empty() {
        return Err(malformed("empty pair"));
    }
    let (key, value) = raw
        .split_once(':')
        .ok_or_else(|| malformed("expected `key:value`"))?;
    let (key, value) = (key.trim(), value.trim());
    validate_key(key)?;
    if value.is_empty() {
        return Err(malformed("empty value"));
    }
    Ok((key, value))
}

fn expand_value<'a>(key: &str, value: &'a str) -> Result<Vec<&'a str>, IdentifierError> {
    let Some(inner) = value.strip_prefix('{') else {
        if value.contains(['{', '}']) {
            return Err(IdentifierError::NestedBraces(key.to_string()));
        }
        return Ok(vec![value]);
    };
    let inner = inner
        .strip_suffix('}')
        .ok_or_else(|| IdentifierError::NestedBraces(key.to_string()))?;
    if inner.contains(['{', '}']) {
        return Err(IdentifierError::NestedBraces(key.to_string()));
    }
    if inner.trim().is_empty() {
        return Err(IdentifierError::EmptyBraceSet(key.to_string()));
    }
    let values: Vec<&str> = inner.split(',').map(str::trim).collect();
    for v in &values {
        if v.is_empty() {
            return Err(IdentifierError::InvalidValue {
                key: key.to_string(),
                value: value.to_string(),
            });
        }
    }
    Ok(values)
}

fn validate_key(key: &str) -> Result<(), IdentifierError> {
    let mut bytes = key.bytes();
    let ok = matches!(bytes.next(), Some(b'a'..=b'z'))
        && bytes.all(|b| matches!(b, b'a'..=b'z' | b'0'..=b'9' | b'_' | b'-'));
    if ok {
        Ok(())
    } else {
        Err(IdentifierError::InvalidKey(key.to_string()))
    }
}

fn validate_value(key: &str, value: &str) -> Result<(), IdentifierError> {
    let bad = value.is_empty()
        || value
            .chars()
            .any(|c| RESERVED.contains(&c) || c.is_whitespace() || c.is_control());
    if bad {
        Err(IdentifierError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
        })
    } else {
        Ok(())
    }
}
