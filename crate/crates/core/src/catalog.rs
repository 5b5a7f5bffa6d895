//! Registry of WECs under one root directory.
//!
//! ```text
//! <root>/
//!   catalog.manifest        one block per WEC (format below)
//!   <stem>.wec              store file, see [`crate::store`]
//!   <stem>.phrases          trained phrase model, if attached
//!   lists/<sha256>.txt      stopword lists referenced by pipelines
//! ```
//!
//! `<stem>` is [`WecIdentifier::file_stem`]. The manifest is line oriented:
//!
//! ```text
//! # wecstore catalog v1
//!
//! [wec algo:glove;dataset:6b;dims:50;fold:1;unit:token]
//! dims = 50
//! vocab_size = 400000
//! pipeline_hash = <sha256>
//! stage = tokenize default
//! stage = case_fold
//! phrases = none | vocab <max_len> | model <file> <sha256>
//! created_at = <unix seconds>
//! source_file = glove.6B.50d.txt
//! store_file = <stem>.wec
//! ```
//!
//! Blocks are sorted by normalized identifier; `store_file` is absent until
//! the import has finished. The manifest is replaced atomically, and all
//! writers serialize on an exclusive lock of `<root>/.lock`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::identifier::WecIdentifier;
use crate::preprocess::{
    apply_phrases_model, apply_phrases_vocab, run_pipeline, PhraseError, PhraseModel,
    PipelineDescriptor, PipelineError, PreprocessCache, StopwordList,
};
use crate::store::{
    self, BatchLookup, DuplicatePolicy, ImportOptions, ImportReport, StoreError, WecStore,
};

pub const MANIFEST_FILE: &str = "catalog.manifest";
const MANIFEST_HEADER: &str = "# wecstore catalog v1";
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("catalog root {0} does not exist")]
    MissingRoot(PathBuf),
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("WEC `{0}` is already registered")]
    Duplicate(String),
    #[error("unknown WEC `{0}`")]
    NotFound(String),
    #[error("WEC `{0}` has no imported vectors")]
    NotImported(String),
    #[error("WEC `{0}` is already imported")]
    AlreadyImported(String),
    #[error("deleting `{0}` requires force")]
    ForceRequired(String),
    #[error("WEC `{id}`: {source}")]
    Store {
        id: String,
        #[source]
        source: StoreError,
    },
    #[error("WEC `{id}`: {source}")]
    Pipeline {
        id: String,
        #[source]
        source: PipelineError,
    },
    #[error(transparent)]
    Phrase(#[from] PhraseError),
}

/// Level-2 configuration of a WEC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhraseJoin {
    None,
    /// Greedy longest match against the WEC's own vocabulary.
    Vocab {
        max_len: usize,
    },
    /// A trained model stored next to the WEC.
    Model {
        file: String,
        hash: String,
    },
}

/// Phrase setup passed to [`Catalog::register`].
#[derive(Debug, Clone, Default)]
pub enum PhraseSetup {
    #[default]
    None,
    Vocab {
        max_len: usize,
    },
    Model(PhraseModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub identifier: WecIdentifier,
    pub dims: usize,
    pub vocab_size: u64,
    pub pipeline: Arc<PipelineDescriptor>,
    pub phrases: PhraseJoin,
    pub created_at: u64,
    pub source_file: String,
    pub store_file: Option<String>,
}

impl CatalogEntry {
    pub fn normalized(&self) -> String {
        self.identifier.normalize()
    }

    pub fn pipeline_hash(&self) -> &str {
        self.pipeline.hash()
    }

    pub fn is_imported(&self) -> bool {
        self.store_file.is_some()
    }

    fn write_block(&self, out: &mut String) {
        let _ = writeln!(out, "[wec {}]", self.normalized());
        let _ = writeln!(out, "dims = {}", self.dims);
        let _ = writeln!(out, "vocab_size = {}", self.vocab_size);
        let _ = writeln!(out, "pipeline_hash = {}", self.pipeline.hash());
        for line in self.pipeline.to_lines() {
            let _ = writeln!(out, "stage = {line}");
        }
        match &self.phrases {
            PhraseJoin::None => out.push_str("phrases = none\n"),
            PhraseJoin::Vocab { max_len } => {
                let _ = writeln!(out, "phrases = vocab {max_len}");
            }
            PhraseJoin::Model { file, hash } => {
                let _ = writeln!(out, "phrases = model {file} {hash}");
            }
        }
        let _ = writeln!(out, "created_at = {}", self.created_at);
        let _ = writeln!(out, "source_file = {}", self.source_file);
        if let Some(f) = &self.store_file {
            let _ = writeln!(out, "store_file = {f}");
        }
    }
}

type Entries = BTreeMap<String, CatalogEntry>;

/// Handle on a catalog root. Cheap to share behind an `Arc`; every method
/// takes `&self`.
#[derive(Debug)]
pub struct Catalog {
    root: PathBuf,
    entries: RwLock<Entries>,
    stores: RwLock<HashMap<String, Arc<WecStore>>>,
    models: RwLock<HashMap<String, Arc<PhraseModel>>>,
}

impl Catalog {
    /// Opens the catalog at `root`, creating the directory and an empty
    /// manifest when `create_if_missing` is set.
    pub fn open(root: impl AsRef<Path>, create_if_missing: bool) -> Result<Self, CatalogError> {
        let root = root.as_ref().to_path_buf();
        if !root.is_dir() {
            if !create_if_missing {
                return Err(CatalogError::MissingRoot(root));
            }
            fs::create_dir_all(&root)?;
        }
        let manifest = root.join(MANIFEST_FILE);
        if !manifest.exists() {
            if !create_if_missing {
                return Err(CatalogError::MissingRoot(root));
            }
            let _guard = lock_exclusive(&root.join(LOCK_FILE))?;
            if !manifest.exists() {
                write_atomic(&manifest, render(&Entries::new()).as_bytes())?;
            }
        }
        let entries = load(&root)?;
        Ok(Self {
            root,
            entries: RwLock::new(entries),
            stores: RwLock::default(),
            models: RwLock::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Current manifest contents as they are written to disk.
    pub fn manifest_text(&self) -> String {
        render(&self.entries.read().unwrap())
    }

    /// Re-reads the manifest written by other handles or processes.
    pub fn refresh(&self) -> Result<(), CatalogError> {
        let fresh = load(&self.root)?;
        *self.entries.write().unwrap() = fresh;
        Ok(())
    }

    /// Runs `f` on a fresh copy of the entries under the exclusive lock and
    /// persists the result.
    fn update<T>(
        &self,
        f: impl FnOnce(&mut Entries) -> Result<T, CatalogError>,
    ) -> Result<T, CatalogError> {
        let mut guard = self.entries.write().unwrap();
        let _lock = lock_exclusive(&self.root.join(LOCK_FILE))?;
        let mut entries = load(&self.root)?;
        let out = f(&mut entries)?;
        write_atomic(&self.root.join(MANIFEST_FILE), render(&entries).as_bytes())?;
        *guard = entries;
        Ok(out)
    }

    /// Adds a WEC. Vectors are added separately with
    /// [`import_from_file`](Self::import_from_file).
    pub fn register(
        &self,
        id: &WecIdentifier,
        pipeline: PipelineDescriptor,
        phrases: PhraseSetup,
        source: impl AsRef<Path>,
    ) -> Result<CatalogEntry, CatalogError> {
        let key = id.normalize();
        pipeline
            .check_identifier(id)
            .map_err(|source| CatalogError::Pipeline {
                id: key.clone(),
                source,
            })?;
        for list in pipeline.stopword_lists() {
            self.save_list(list)?;
        }
        let phrases = match phrases {
            PhraseSetup::None => PhraseJoin::None,
            PhraseSetup::Vocab { max_len } => PhraseJoin::Vocab { max_len },
            PhraseSetup::Model(model) => self.write_model(id, &model)?,
        };
        let source_file = source.as_ref().to_string_lossy().replace(['\n', '\r'], " ");
        let entry = CatalogEntry {
            identifier: id.clone(),
            dims: id.dims(),
            vocab_size: 0,
            pipeline: Arc::new(pipeline),
            phrases,
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            source_file,
            store_file: None,
        };
        self.update(|entries| {
            if entries.contains_key(&key) {
                return Err(CatalogError::Duplicate(key.clone()));
            }
            entries.insert(key.clone(), entry.clone());
            Ok(())
        })?;
        Ok(entry)
    }

    fn save_list(&self, list: &StopwordList) -> io::Result<()> {
        let dir = self.root.join("lists");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.txt", list.hash()));
        if !path.exists() {
            write_atomic(&path, list.to_text().as_bytes())?;
        }
        Ok(())
    }

    fn write_model(&self, id: &WecIdentifier, model: &PhraseModel) -> io::Result<PhraseJoin> {
        let file = format!("{}.phrases", id.file_stem());
        write_atomic(&self.root.join(&file), model.to_text().as_bytes())?;
        self.models
            .write()
            .unwrap()
            .insert(id.normalize(), Arc::new(model.clone()));
        Ok(PhraseJoin::Model {
            file,
            hash: model.hash(),
        })
    }

    /// Imports the text WEC at `path` into an already registered entry.
    pub fn import_from_file(
        &self,
        path: impl AsRef<Path>,
        id: &WecIdentifier,
        options: ImportOptions,
    ) -> Result<ImportReport, CatalogError> {
        let path = path.as_ref();
        self.fill(id, |target, dims| {
            let reader = BufReader::with_capacity(1 << 20, File::open(path)?);
            store::import_text(reader, target, dims, options)
        })
    }

    /// Fills an already registered entry from in-memory records.
    pub fn import_records<I, S, V>(
        &self,
        id: &WecIdentifier,
        records: I,
        on_duplicate: DuplicatePolicy,
    ) -> Result<ImportReport, CatalogError>
    where
        I: IntoIterator<Item = (S, V)>,
        S: AsRef<str>,
        V: AsRef<[f32]>,
    {
        self.fill(id, |target, dims| {
            store::import_records(records, target, dims, on_duplicate)
        })
    }

    fn fill(
        &self,
        id: &WecIdentifier,
        build: impl FnOnce(&Path, usize) -> Result<ImportReport, StoreError>,
    ) -> Result<ImportReport, CatalogError> {
        let key = id.normalize();
        let stem = id.file_stem();
        let _wec_lock = lock_exclusive(&self.root.join(format!(".{stem}.lock")))?;
        self.refresh()?;
        let entry = self
            .lookup(id)
            .ok_or_else(|| CatalogError::NotFound(key.clone()))?;
        if entry.is_imported() {
            return Err(CatalogError::AlreadyImported(key));
        }
        let store_file = format!("{stem}.wec");
        let report = build(&self.root.join(&store_file), entry.dims).map_err(|source| {
            CatalogError::Store {
                id: key.clone(),
                source,
            }
        })?;
        let vocab_size = report.imported;
        self.update(|entries| {
            let e = entries
                .get_mut(&key)
                .ok_or_else(|| CatalogError::NotFound(key.clone()))?;
            e.vocab_size = vocab_size;
            e.store_file = Some(store_file.clone());
            Ok(())
        })?;
        Ok(report)
    }

    /// Registers and imports in one step; a failed import removes the
    /// registration again so no partial WEC stays visible.
    pub fn import(
        &self,
        path: impl AsRef<Path>,
        id: &WecIdentifier,
        pipeline: PipelineDescriptor,
        phrases: PhraseSetup,
        options: ImportOptions,
    ) -> Result<ImportReport, CatalogError> {
        let path = path.as_ref();
        self.register(id, pipeline, phrases, path)?;
        match self.import_from_file(path, id, options) {
            Ok(r) => Ok(r),
            Err(e) => {
                let _ = self.delete(id, true);
                Err(e)
            }
        }
    }

    /// `None` when no entry exists.
    pub fn lookup(&self, id: &WecIdentifier) -> Option<CatalogEntry> {
        self.entries.read().unwrap().get(&id.normalize()).cloned()
    }

    fn entry(&self, id: &WecIdentifier) -> Result<CatalogEntry, CatalogError> {
        self.lookup(id)
            .ok_or_else(|| CatalogError::NotFound(id.normalize()))
    }

    /// Entries whose identifier contains every pair of `filter`, ordered by
    /// normalized identifier.
    pub fn list_entries(&self, filter: &BTreeMap<String, String>) -> Vec<CatalogEntry> {
        self.entries
            .read()
            .unwrap()
            .values()
            .filter(|e| e.identifier.matches(filter))
            .cloned()
            .collect()
    }

    /// Removes a WEC and its files. Identifiers are meant to be stable, so
    /// this refuses to run without `force`.
    pub fn delete(&self, id: &WecIdentifier, force: bool) -> Result<CatalogEntry, CatalogError> {
        let key = id.normalize();
        if !force {
            return Err(CatalogError::ForceRequired(key));
        }
        let removed = self.update(|entries| {
            entries
                .remove(&key)
                .ok_or_else(|| CatalogError::NotFound(key.clone()))
        })?;
        self.stores.write().unwrap().remove(&key);
        self.models.write().unwrap().remove(&key);
        if let Some(f) = &removed.store_file {
            let _ = fs::remove_file(self.root.join(f));
        }
        if let PhraseJoin::Model { file, .. } = &removed.phrases {
            let _ = fs::remove_file(self.root.join(file));
        }
        Ok(removed)
    }

    /// Stores (or replaces) the trained phrase model used for level 2.
    pub fn attach_phrase_model(
        &self,
        id: &WecIdentifier,
        model: &PhraseModel,
    ) -> Result<CatalogEntry, CatalogError> {
        let key = id.normalize();
        self.entry(id)?;
        let join = self.write_model(id, model)?;
        self.update(|entries| {
            let e = entries
                .get_mut(&key)
                .ok_or_else(|| CatalogError::NotFound(key.clone()))?;
            e.phrases = join.clone();
            Ok(e.clone())
        })
    }

    /// Switches level 2 to vocabulary matching, or off with `None`.
    pub fn set_vocab_phrases(
        &self,
        id: &WecIdentifier,
        max_len: Option<usize>,
    ) -> Result<CatalogEntry, CatalogError> {
        let key = id.normalize();
        self.update(|entries| {
            let e = entries
                .get_mut(&key)
                .ok_or_else(|| CatalogError::NotFound(key.clone()))?;
            e.phrases = match max_len {
                Some(max_len) => PhraseJoin::Vocab { max_len },
                None => PhraseJoin::None,
            };
            Ok(e.clone())
        })
    }

    pub fn phrase_model(
        &self,
        id: &WecIdentifier,
    ) -> Result<Option<Arc<PhraseModel>>, CatalogError> {
        let entry = self.entry(id)?;
        let PhraseJoin::Model { file, hash } = &entry.phrases else {
            return Ok(None);
        };
        let key = entry.normalized();
        if let Some(m) = self.models.read().unwrap().get(&key) {
            if &m.hash() == hash {
                return Ok(Some(m.clone()));
            }
        }
        let model = PhraseModel::from_text(&fs::read_to_string(self.root.join(file))?)?;
        let model = Arc::new(model);
        self.models.write().unwrap().insert(key, model.clone());
        Ok(Some(model))
    }

    /// Opened store of an imported WEC; opened once and then shared.
    pub fn store(&self, id: &WecIdentifier) -> Result<Arc<WecStore>, CatalogError> {
        let key = id.normalize();
        if let Some(s) = self.stores.read().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let entry = self.entry(id)?;
        let file = entry
            .store_file
            .ok_or_else(|| CatalogError::NotImported(key.clone()))?;
        let store = WecStore::open(self.root.join(file)).map_err(|source| CatalogError::Store {
            id: key.clone(),
            source,
        })?;
        let store = Arc::new(store);
        self.stores.write().unwrap().insert(key, store.clone());
        Ok(store)
    }

    pub fn get_vector(
        &self,
        id: &WecIdentifier,
        word: &str,
    ) -> Result<Option<Vec<f32>>, CatalogError> {
        Ok(self.store(id)?.get(word))
    }

    /// Found pairs (one per distinct word) and missing words (input order).
    pub fn get_vectors_batch<S: AsRef<str>>(
        &self,
        id: &WecIdentifier,
        words: &[S],
    ) -> Result<BatchLookup, CatalogError> {
        Ok(self.store(id)?.get_batch(words))
    }

    pub fn contains(&self, id: &WecIdentifier, word: &str) -> Result<bool, CatalogError> {
        Ok(self.store(id)?.contains(word))
    }

    pub fn vocab_size(&self, id: &WecIdentifier) -> Result<u64, CatalogError> {
        Ok(self.store(id)?.len() as u64)
    }

    /// Streams the vocabulary without materializing it.
    pub fn iterate_vocab(&self, id: &WecIdentifier) -> Result<VocabIter, CatalogError> {
        Ok(VocabIter {
            store: self.store(id)?,
            pos: 0,
        })
    }

    pub fn apply_phrases_vocab(
        &self,
        id: &WecIdentifier,
        tokens: &[String],
        max_len: usize,
    ) -> Result<Vec<String>, CatalogError> {
        Ok(apply_phrases_vocab(
            self.store(id)?.as_ref(),
            tokens,
            max_len,
        ))
    }

    /// Level 1 through the cache, then level 2 when configured and `phrases`
    /// is set.
    pub fn preprocess(
        &self,
        entry: &CatalogEntry,
        raw: &str,
        cache: Option<&PreprocessCache>,
        phrases: bool,
    ) -> Result<Vec<String>, CatalogError> {
        let tokens =
            run_pipeline(&entry.pipeline, raw, cache).map_err(|source| CatalogError::Pipeline {
                id: entry.normalized(),
                source,
            })?;
        self.join_phrases(entry, tokens, phrases)
    }

    /// Level 2 only.
    pub fn join_phrases(
        &self,
        entry: &CatalogEntry,
        tokens: Vec<String>,
        phrases: bool,
    ) -> Result<Vec<String>, CatalogError> {
        if !phrases {
            return Ok(tokens);
        }
        Ok(match &entry.phrases {
            PhraseJoin::None => tokens,
            PhraseJoin::Vocab { max_len } => {
                apply_phrases_vocab(self.store(&entry.identifier)?.as_ref(), &tokens, *max_len)
            }
            PhraseJoin::Model { .. } => match self.phrase_model(&entry.identifier)? {
                Some(m) => apply_phrases_model(&m, &tokens),
                None => tokens,
            },
        })
    }
}

/// Iterator over a WEC's words in byte order.
pub struct VocabIter {
    store: Arc<WecStore>,
    pos: usize,
}

impl Iterator for VocabIter {
    type Item = String;

    fn next(&mut self) -> Option<String> {
        let w = self.store.word_at(self.pos)?.to_string();
        self.pos += 1;
        Some(w)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.store.len() - self.pos;
        (left, Some(left))
    }
}

struct LockGuard(File);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = self.0.unlock();
    }
}

fn lock_exclusive(path: &Path) -> io::Result<LockGuard> {
    let f = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(path)?;
    f.lock()?;
    Ok(LockGuard(f))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn render(entries: &Entries) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for e in entries.values() {
        out.push('\n');
        e.write_block(&mut out);
    }
    out
}

fn load(root: &Path) -> Result<Entries, CatalogError> {
    let text = fs::read_to_string(root.join(MANIFEST_FILE))?;
    parse_manifest(&text, |name, hash| {
        if name == crate::preprocess::stopwords::DEFAULT_LIST
            && StopwordList::english().hash() == hash
        {
            return Some(Arc::new(StopwordList::english().clone()));
        }
        let words = fs::read_to_string(root.join("lists").join(format!("{hash}.txt"))).ok()?;
        Some(Arc::new(StopwordList::new(name, words.lines())))
    })
}

#[derive(Default)]
struct Block {
    id: Option<(usize, String)>,
    fields: Vec<(usize, String, String)>,
}

fn parse_manifest(
    text: &str,
    mut lists: impl FnMut(&str, &str) -> Option<Arc<StopwordList>>,
) -> Result<Entries, CatalogError> {
    let err = |line: usize, reason: String| CatalogError::Manifest { line, reason };
    let mut blocks: Vec<Block> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(id) = line.strip_prefix("[wec ").and_then(|r| r.strip_suffix(']')) {
            blocks.push(Block {
                id: Some((n, id.to_string())),
                fields: Vec::new(),
            });
            continue;
        }
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| err(n, "expected `key = value`".into()))?;
        blocks
            .last_mut()
            .ok_or_else(|| err(n, "field outside a [wec] block".into()))?
            .fields
            .push((n, k.to_string(), v.to_string()));
    }

    let mut entries = Entries::new();
    for block in blocks {
        let (n, id_text) = block.id.expect("blocks start with a header");
        let identifier: WecIdentifier = id_text
            .parse()
            .map_err(|e| err(n, format!("bad identifier: {e}")))?;
        let get = |key: &str| -> Option<(usize, String)> {
            block
                .fields
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(n, _, v)| (*n, v.clone()))
        };
        let need = |field: Option<(usize, String)>, key: &str| {
            field.ok_or_else(|| err(n, format!("missing `{key}`")))
        };
        let num = |(line, v): (usize, String)| -> Result<u64, CatalogError> {
            v.parse()
                .map_err(|_| err(line, format!("bad number `{v}`")))
        };
        let dims = num(need(get("dims"), "dims")?)? as usize;
        let vocab_size = num(need(get("vocab_size"), "vocab_size")?)?;
        let created_at = num(need(get("created_at"), "created_at")?)?;
        let (hn, pipeline_hash) = need(get("pipeline_hash"), "pipeline_hash")?;
        let source_file = need(get("source_file"), "source_file")?.1;
        let store_file = get("store_file").map(|(_, v)| v);
        let stage_lines: Vec<&str> = block
            .fields
            .iter()
            .filter(|(_, k, _)| k == "stage")
            .map(|(_, _, v)| v.as_str())
            .collect();
        let pipeline = PipelineDescriptor::from_lines(stage_lines, &mut lists)
            .map_err(|e| err(n, e.to_string()))?;
        if pipeline.hash() != pipeline_hash {
            return Err(err(hn, "pipeline hash does not match its stages".into()));
        }
        let (pn, phrases_text) = need(get("phrases"), "phrases")?;
        let parts: Vec<&str> = phrases_text.split(' ').collect();
        let phrases = match parts.as_slice() {
            ["none"] => PhraseJoin::None,
            ["vocab", m] => PhraseJoin::Vocab {
                max_len: m.parse().map_err(|_| err(pn, "bad max_len".into()))?,
            },
            ["model", file, hash] => PhraseJoin::Model {
                file: file.to_string(),
                hash: hash.to_string(),
            },
            _ => return Err(err(pn, format!("bad phrases `{phrases_text}`"))),
        };
        if dims != identifier.dims() {
            return Err(err(n, "dims differ from the identifier".into()));
        }
        let key = identifier.normalize();
        let entry = CatalogEntry {
            identifier,
            dims,
            vocab_size,
            pipeline: Arc::new(pipeline),
            phrases,
            created_at,
            source_file,
            store_file,
        };
        if entries.insert(key.clone(), entry).is_some() {
            return Err(err(n, format!("duplicate entry `{key}`")));
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identifier::parse_identifier;
    use crate::preprocess::PipelineOptions;

    fn id(s: &str) -> WecIdentifier {
        parse_identifier(s).unwrap()
    }

    fn pipeline(id: &WecIdentifier) -> PipelineDescriptor {
        PipelineDescriptor::for_identifier(id, PipelineOptions::default())
    }

    const GN: &str = "algo:w2v;dataset:googlenews;dims:300;fold:0;unit:token";

    #[test]
    fn register_then_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path(), true).unwrap();
        let gn = id(GN);
        let e = cat
            .register(
                &gn,
                pipeline(&gn),
                PhraseSetup::None,
                "GoogleNews-vectors-negative300.txt",
            )
            .unwrap();
        assert_eq!(e.vocab_size, 0);
        assert_eq!(e.dims, 300);
        assert!(!e.is_imported());
        let permuted = id("unit:token;fold:0;dims:300;dataset:googlenews;algo:w2v");
        assert_eq!(cat.lookup(&permuted), Some(e));
        assert!(cat
            .lookup(&id("algo:x;dataset:d;dims:1;fold:0;unit:token"))
            .is_none());
        assert!(matches!(cat.store(&gn), Err(CatalogError::NotImported(_))));

        let again = cat.register(&gn, pipeline(&gn), PhraseSetup::None, "x");
        assert!(matches!(again, Err(CatalogError::Duplicate(k)) if k == GN));
    }

    #[test]
    fn rejects_pipeline_not_matching_identifier() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path(), true).unwrap();
        let folded = id("algo:a;dataset:d;dims:2;fold:1;unit:token");
        let cased = id("algo:a;dataset:d;dims:2;fold:0;unit:token");
        let res = cat.register(&folded, pipeline(&cased), PhraseSetup::None, "f");
        assert!(matches!(res, Err(CatalogError::Pipeline { .. })));
    }

    #[test]
    fn open_without_create() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope");
        assert!(matches!(
            Catalog::open(&missing, false),
            Err(CatalogError::MissingRoot(_))
        ));
        Catalog::open(&missing, true).unwrap();
        Catalog::open(&missing, false).unwrap();
    }

    #[test]
    fn delete_requires_force() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path(), true).unwrap();
        let a = id("algo:a;dataset:d;dims:2;fold:0;unit:token");
        fs::write(dir.path().join("a.txt"), "x 1 2\n").unwrap();
        cat.import(
            dir.path().join("a.txt"),
            &a,
            pipeline(&a),
            PhraseSetup::None,
            Default::default(),
        )
        .unwrap();
        assert!(matches!(
            cat.delete(&a, false),
            Err(CatalogError::ForceRequired(_))
        ));
        assert!(cat.lookup(&a).is_some());
        cat.delete(&a, true).unwrap();
        assert!(cat.lookup(&a).is_none());
        assert!(!dir.path().join(format!("{}.wec", a.file_stem())).exists());
        assert!(matches!(
            cat.delete(&a, true),
            Err(CatalogError::NotFound(_))
        ));
    }

    #[test]
    fn failed_import_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path(), true).unwrap();
        let wide = id("algo:a;dataset:d;dims:300;fold:0;unit:token");
        let file = dir.path().join("narrow.txt");
        fs::write(&file, "x 1 2 3\n").unwrap();
        let res = cat.import(
            &file,
            &wide,
            pipeline(&wide),
            PhraseSetup::None,
            Default::default(),
        );
        assert!(matches!(
            res,
            Err(CatalogError::Store {
                source: StoreError::DimensionMismatch { .. },
                ..
            })
        ));
        assert!(cat.lookup(&wide).is_none());
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".wec"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn manifest_parse_errors() {
        let none = |_: &str, _: &str| None;
        assert!(parse_manifest("dims = 3\n", none).is_err());
        assert!(parse_manifest("[wec algo:a]\n", none).is_err());
        let ok = parse_manifest("# only a comment\n", none).unwrap();
        assert!(ok.is_empty());
    }

    #[test]
    fn second_handle_sees_registrations() {
        let dir = tempfile::tempdir().unwrap();
        let one = Catalog::open(dir.path(), true).unwrap();
        let two = Catalog::open(dir.path(), false).unwrap();
        let a = id("algo:a;dataset:d;dims:2;fold:0;unit:token");
        let b = id("algo:b;dataset:d;dims:2;fold:0;unit:token");
        one.register(&a, pipeline(&a), PhraseSetup::None, "a")
            .unwrap();
        // two writes after one: its update starts from the on-disk manifest
        two.register(&b, pipeline(&b), PhraseSetup::None, "b")
            .unwrap();
        assert_eq!(two.list_entries(&BTreeMap::new()).len(), 2);
        one.refresh().unwrap();
        assert_eq!(one.manifest_text(), two.manifest_text());
        assert!(matches!(
            two.register(&a, pipeline(&a), PhraseSetup::None, "a"),
            Err(CatalogError::Duplicate(_))
        ));
    }
}
