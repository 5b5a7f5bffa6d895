//! Level-1 preprocessing: raw line to tokens.
//!
//! A [`PipelineDescriptor`] is an ordered list of stages plus a SHA-256 hash
//! over their canonical text form. The text form is one stage per line:
//!
//! ```text
//! tokenize <rules>
//! case_fold
//! stem porter
//! stopwords <name> <sha256 of list>
//! strip_special <rules>
//! external <sha256> <command line>
//! ```
//!
//! Stages that are absent are off. The first stage must produce tokens
//! (`tokenize` or `external`); a later tokenizing stage sees the current
//! tokens joined by single spaces.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::porter;
use super::stopwords::StopwordList;
use super::tokenize::{SpecialRules, TokenizerRules};
use crate::identifier::WecIdentifier;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("pipeline must start with a tokenizing stage")]
    NoTokenizer,
    #[error("stage `{stage}` failed: {reason}")]
    StageFailed { stage: String, reason: String },
    #[error("cannot parse pipeline line `{line}`: {reason}")]
    Parse { line: String, reason: String },
    #[error("unknown stopword list `{name}` ({hash})")]
    UnknownList { name: String, hash: String },
    #[error("pipeline does not match identifier `{id}`: {reason}")]
    Mismatch { id: String, reason: &'static str },
}

/// A command that reads one raw line on stdin and writes one line of
/// whitespace-separated tokens on stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalCommand {
    command: String,
    hash: String,
}

impl ExternalCommand {
    /// Records `command` and hashes it together with the contents of its
    /// program file, when that file can be found.
    pub fn new(command: impl Into<String>) -> Self {
        let command = command.into();
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        if let Some(bytes) = command
            .split_whitespace()
            .next()
            .and_then(resolve_program)
            .and_then(|p| std::fs::read(p).ok())
        {
            h.update(b"\0");
            h.update(&bytes);
        }
        Self {
            command,
            hash: hex::encode(h.finalize()),
        }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn run(&self, line: &str) -> Result<Vec<String>, PipelineError> {
        let fail = |reason: String| PipelineError::StageFailed {
            stage: format!("external {}", self.command),
            reason,
        };
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("spawn: {e}")))?;
        {
            let mut stdin = child.stdin.take().expect("piped");
            // a command that exits without reading its input is not an error here
            let _ = stdin.write_all(line.as_bytes());
            let _ = stdin.write_all(b"\n");
        }
        let mut out = String::new();
        child
            .stdout
            .take()
            .expect("piped")
            .read_to_string(&mut out)
            .map_err(|e| fail(format!("reading output: {e}")))?;
        let status = child.wait().map_err(|e| fail(e.to_string()))?;
        if !status.success() {
            let mut err = String::new();
            if let Some(mut s) = child.stderr.take() {
                let _ = s.read_to_string(&mut err);
            }
            return Err(fail(format!("{status}: {}", err.trim())));
        }
        let body = out.strip_suffix('\n').unwrap_or(&out);
        let body = body.strip_suffix('\r').unwrap_or(body);
        if body.contains('\n') {
            return Err(fail("expected exactly one output line".into()));
        }
        Ok(body.split_whitespace().map(str::to_string).collect())
    }
}

fn resolve_program(name: &str) -> Option<PathBuf> {
    if name.contains('/') {
        let p = Path::new(name);
        return p.is_file().then(|| p.to_path_buf());
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|d| d.join(name))
            .find(|p| p.is_file())
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    Tokenize(TokenizerRules),
    CaseFold,
    Stem,
    Stopwords(Arc<StopwordList>),
    StripSpecial(SpecialRules),
    External(ExternalCommand),
}

impl Stage {
    fn produces_tokens(&self) -> bool {
        matches!(self, Stage::Tokenize(_) | Stage::External(_))
    }

    /// Canonical one-line form.
    pub fn to_line(&self) -> String {
        match self {
            Stage::Tokenize(r) => format!("tokenize {}", r.id()),
            Stage::CaseFold => "case_fold".to_string(),
            Stage::Stem => "stem porter".to_string(),
            Stage::Stopwords(l) => format!("stopwords {} {}", l.name(), l.hash()),
            Stage::StripSpecial(r) => format!("strip_special {}", r.id()),
            Stage::External(c) => format!("external {} {}", c.hash(), c.command()),
        }
    }

    fn apply(&self, tokens: Option<Vec<String>>, raw: &str) -> Result<Vec<String>, PipelineError> {
        let joined;
        let text = match &tokens {
            Some(t) => {
                joined = t.join(" ");
                joined.as_str()
            }
            None => raw,
        };
        match self {
            Stage::Tokenize(rules) => Ok(rules.tokenize(text)),
            Stage::External(cmd) => cmd.run(text),
            other => {
                let tokens = tokens.ok_or(PipelineError::NoTokenizer)?;
                Ok(match other {
                    Stage::CaseFold => tokens.into_iter().map(|t| t.to_lowercase()).collect(),
                    Stage::Stem => tokens.iter().map(|t| porter::stem(t)).collect(),
                    Stage::Stopwords(list) => {
                        tokens.into_iter().filter(|t| !list.contains(t)).collect()
                    }
                    Stage::StripSpecial(rules) => {
                        tokens.into_iter().filter(|t| rules.keep(t)).collect()
                    }
                    Stage::Tokenize(_) | Stage::External(_) => unreachable!(),
                })
            }
        }
    }
}

/// Optional stages for [`PipelineDescriptor::for_identifier`].
#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub tokenizer: TokenizerRules,
    pub stopwords: Option<Arc<StopwordList>>,
    pub strip_special: bool,
    /// Replaces the built-in tokenizer.
    pub external: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineDescriptor {
    stages: Vec<Stage>,
    hash: String,
}

impl PipelineDescriptor {
    pub fn new(stages: Vec<Stage>) -> Result<Self, PipelineError> {
        if !stages.first().is_some_and(Stage::produces_tokens) {
            return Err(PipelineError::NoTokenizer);
        }
        let mut h = Sha256::new();
        h.update(b"wecstore-pipeline-v1\n");
        for s in &stages {
            h.update(s.to_line().as_bytes());
            h.update(b"\n");
        }
        Ok(Self {
            stages,
            hash: hex::encode(h.finalize()),
        })
    }

    /// The standard pipeline for a WEC: case folding iff `fold:1`, Porter
    /// stemming iff `unit:stem`.
    pub fn for_identifier(id: &WecIdentifier, options: PipelineOptions) -> Self {
        let mut stages = vec![match options.external {
            Some(cmd) => Stage::External(ExternalCommand::new(cmd)),
            None => Stage::Tokenize(options.tokenizer),
        }];
        if options.strip_special {
            stages.push(Stage::StripSpecial(SpecialRules::Default));
        }
        if id.folded() {
            stages.push(Stage::CaseFold);
        }
        if let Some(list) = options.stopwords {
            stages.push(Stage::Stopwords(list));
        }
        if id.stemmed() {
            stages.push(Stage::Stem);
        }
        Self::new(stages).expect("starts with a tokenizer")
    }

    /// Checks the fold/unit invariants against the owning identifier.
    pub fn check_identifier(&self, id: &WecIdentifier) -> Result<(), PipelineError> {
        let mismatch = |reason| PipelineError::Mismatch {
            id: id.normalize(),
            reason,
        };
        let folds = self.stages.contains(&Stage::CaseFold);
        let stems = self.stages.contains(&Stage::Stem);
        if folds != id.folded() {
            return Err(mismatch("case folding must be on exactly when fold is 1"));
        }
        if stems != id.stemmed() {
            return Err(mismatch("stemming must be on exactly when unit is stem"));
        }
        Ok(())
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Stopword lists referenced by this pipeline.
    pub fn stopword_lists(&self) -> impl Iterator<Item = &Arc<StopwordList>> {
        self.stages.iter().filter_map(|s| match s {
            Stage::Stopwords(l) => Some(l),
            _ => None,
        })
    }

    pub fn to_lines(&self) -> Vec<String> {
        self.stages.iter().map(Stage::to_line).collect()
    }

    /// Inverse of [`to_lines`](Self::to_lines). `lists` resolves a stopword
    /// list from its name and content hash.
    pub fn from_lines<'a, I, F>(lines: I, mut lists: F) -> Result<Self, PipelineError>
    where
        I: IntoIterator<Item = &'a str>,
        F: FnMut(&str, &str) -> Option<Arc<StopwordList>>,
    {
        let mut stages = Vec::new();
        for line in lines {
            let parse_err = |reason: &str| PipelineError::Parse {
                line: line.to_string(),
                reason: reason.to_string(),
            };
            let (name, rest) = line.split_once(' ').unwrap_or((line, ""));
            let stage = match name {
                "tokenize" => Stage::Tokenize(rest.parse().map_err(|e: String| parse_err(&e))?),
                "case_fold" if rest.is_empty() => Stage::CaseFold,
                "stem" if rest == "porter" => Stage::Stem,
                "strip_special" => {
                    Stage::StripSpecial(rest.parse().map_err(|e: String| parse_err(&e))?)
                }
                "stopwords" => {
                    let (list, hash) = rest
                        .split_once(' ')
                        .ok_or_else(|| parse_err("expected `stopwords <name> <hash>`"))?;
                    let resolved = lists(list, hash).ok_or_else(|| PipelineError::UnknownList {
                        name: list.to_string(),
                        hash: hash.to_string(),
                    })?;
                    if resolved.hash() != hash {
                        return Err(parse_err("stopword list content does not match its hash"));
                    }
                    Stage::Stopwords(resolved)
                }
                "external" => {
                    let (hash, command) = rest
                        .split_once(' ')
                        .ok_or_else(|| parse_err("expected `external <hash> <command>`"))?;
                    Stage::External(ExternalCommand {
                        command: command.to_string(),
                        hash: hash.to_string(),
                    })
                }
                _ => return Err(parse_err("unknown stage")),
            };
            stages.push(stage);
        }
        Self::new(stages)
    }
}

type CacheKey = (String, String);

/// Memo of `(pipeline hash, raw line) -> tokens`. Safe to share across threads.
#[derive(Debug, Default)]
pub struct PreprocessCache {
    map: Mutex<HashMap<CacheKey, Arc<Vec<String>>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl PreprocessCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, hash: &str, raw: &str) -> Option<Arc<Vec<String>>> {
        let map = self.map.lock().unwrap();
        // HashMap<(String, String)> has no borrowed-tuple lookup
        let hit = map.get(&(hash.to_string(), raw.to_string())).cloned();
        drop(map);
        match &hit {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        hit
    }

    fn put(&self, hash: &str, raw: &str, tokens: Arc<Vec<String>>) {
        self.map
            .lock()
            .unwrap()
            .insert((hash.to_string(), raw.to_string()), tokens);
    }
}

/// Runs every stage of `p` over `raw`, consulting `cache` when given.
pub fn run_pipeline(
    p: &PipelineDescriptor,
    raw: &str,
    cache: Option<&PreprocessCache>,
) -> Result<Vec<String>, PipelineError> {
    if let Some(c) = cache {
        if let Some(hit) = c.get(p.hash(), raw) {
            return Ok(hit.as_ref().clone());
        }
    }
    let mut tokens = None;
    for stage in &p.stages {
        tokens = Some(stage.apply(tokens.take(), raw)?);
    }
    let tokens = tokens.unwrap_or_default();
    if let Some(c) = cache {
        c.put(p.hash(), raw, Arc::new(tokens.clone()));
    }
    Ok(tokens)
}
