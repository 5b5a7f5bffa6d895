//! Multi-WEC vector retrieval.
//!
//! [`get_vectors`] expands a query, preprocesses raw inputs with each WEC's
//! own pipeline, looks the tokens up and returns one [`WecResult`] per
//! expanded identifier, in expansion order.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CatalogError};
use crate::identifier::parse_query;
use crate::preprocess::PreprocessCache;
use crate::Error;

/// Input units: raw lines, or token lists that are looked up as they are.
#[derive(Debug, Clone, Copy)]
pub enum Inputs<'a> {
    Raw(&'a [String]),
    Tokens(&'a [Vec<String>]),
}

impl Inputs<'_> {
    pub fn len(&self) -> usize {
        match self {
            Inputs::Raw(r) => r.len(),
            Inputs::Tokens(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetrieveOptions {
    /// One pair per token occurrence, in token order. Otherwise one pair per
    /// distinct found word.
    pub in_order: bool,
    /// `false` drops the words and returns bare vectors in pair order.
    pub as_tuple: bool,
    /// Apply the WEC's phrase joining to raw inputs.
    pub phrases: bool,
}

impl Default for RetrieveOptions {
    fn default() -> Self {
        Self {
            in_order: false,
            as_tuple: true,
            phrases: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hits {
    Pairs(Vec<(String, Vec<f32>)>),
    Vectors(Vec<Vec<f32>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    /// The raw input, empty for pre-tokenized input.
    pub raw: String,
    pub tokens: Vec<String>,
    #[serde(flatten)]
    pub hits: Hits,
    pub missing: Vec<String>,
}

impl UnitResult {
    /// Word/vector pairs; empty when retrieved with `as_tuple = false`.
    pub fn pairs(&self) -> &[(String, Vec<f32>)] {
        match &self.hits {
            Hits::Pairs(p) => p,
            Hits::Vectors(_) => &[],
        }
    }

    pub fn vectors(&self) -> Vec<&[f32]> {
        match &self.hits {
            Hits::Pairs(p) => p.iter().map(|(_, v)| v.as_slice()).collect(),
            Hits::Vectors(v) => v.iter().map(Vec::as_slice).collect(),
        }
    }

    /// The raw input, or the tokens joined by spaces when there was none.
    pub fn text(&self) -> String {
        if self.raw.is_empty() {
            self.tokens.join(" ")
        } else {
            self.raw.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WecResult {
    pub identifier: String,
    pub units: Vec<UnitResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub per_wec: Vec<WecResult>,
}

impl RetrievalResult {
    pub fn get(&self, identifier: &str) -> Option<&WecResult> {
        self.per_wec.iter().find(|w| w.identifier == identifier)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Retrieves vectors for `inputs` from every WEC named by `query`.
pub fn get_vectors(
    catalog: &Catalog,
    query: &str,
    cache: &PreprocessCache,
    inputs: Inputs<'_>,
    options: RetrieveOptions,
) -> Result<RetrievalResult, Error> {
    let query = parse_query(query)?;
    let per_wec = query
        .expanded
        .par_iter()
        .map(|id| -> Result<WecResult, Error> {
            let entry = catalog
                .lookup(id)
                .ok_or_else(|| CatalogError::NotFound(id.normalize()))?;
            let store = catalog.store(id)?;
            let mut units = Vec::with_capacity(inputs.len());
            for i in 0..inputs.len() {
                let (raw, tokens) = match inputs {
                    Inputs::Raw(lines) => {
                        let raw = lines[i].clone();
                        let tokens =
                            catalog.preprocess(&entry, &raw, Some(cache), options.phrases)?;
                        (raw, tokens)
                    }
                    Inputs::Tokens(lists) => (String::new(), lists[i].clone()),
                };
                let (pairs, missing) = lookup(&tokens, options.in_order, |w| store.get(w));
                let hits = if options.as_tuple {
                    Hits::Pairs(pairs)
                } else {
                    Hits::Vectors(pairs.into_iter().map(|(_, v)| v).collect())
                };
                units.push(UnitResult {
                    raw,
                    tokens,
                    hits,
                    missing,
                });
            }
            Ok(WecResult {
                identifier: id.normalize(),
                units,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RetrievalResult { per_wec })
}

type Lookup = (Vec<(String, Vec<f32>)>, Vec<String>);

fn lookup(tokens: &[String], in_order: bool, get: impl Fn(&str) -> Option<Vec<f32>>) -> Lookup {
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    if in_order {
        let mut memo: std::collections::HashMap<&str, Option<Vec<f32>>> = Default::default();
        for t in tokens {
            let hit = memo.entry(t).or_insert_with(|| get(t));
            match hit {
                Some(v) => pairs.push((t.clone(), v.clone())),
                None => missing.push(t.clone()),
            }
        }
    } else {
        let mut seen = HashSet::new();
        for t in tokens {
            if !seen.insert(t.as_str()) {
                continue;
            }
            match get(t) {
                Some(v) => pairs.push((t.clone(), v)),
                None => missing.push(t.clone()),
            }
        }
    }
    (pairs, missing)
}
