//! Single-file indexed storage for one WEC.
//!
//! ## File layout
//!
//! All integers are little-endian.
//!
//! ```text
//! +----------+------------------------+-------------+------------------+
//! |  HEADER  |        VECTORS         |  WORD BLOB  |      INDEX       |
//! | 48 bytes | count * dims * 4 bytes | (sorted)    | count * 16 bytes |
//! +----------+------------------------+-------------+------------------+
//!
//! HEADER: magic "WECSTOR1" | dims u32 | reserved u32 | count u64
//!         | blob_offset u64 | index_offset u64 | file_len u64
//! INDEX entry: word_offset u64 (into blob) | word_len u32 | record u32
//! ```
//!
//! Vectors are binary32 in input order; index entries are sorted by the
//! word's bytes, so a lookup is a binary search over the memory-mapped index
//! and touches `O(log n)` entries. Words are unique per file.
//!
//! Files are written to a temporary sibling and renamed into place on
//! [`StoreWriter::finish`], so readers never observe a partial store.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use memmap2::Mmap;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

const MAGIC: &[u8; 8] = b"WECSTOR1";
const HEADER_LEN: usize = 48;
const INDEX_ENTRY_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("corrupt store file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("line {line}: expected {expected} vector components, found {found}")]
    DimensionMismatch {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}: duplicate word `{word}` (first seen on line {first_line})")]
    DuplicateWord {
        word: String,
        line: u64,
        first_line: u64,
    },
    #[error("header declares {found} dimensions but the WEC has {expected}")]
    HeaderDims { expected: usize, found: usize },
    #[error("vector has {found} components, store expects {expected}")]
    VectorLength { expected: usize, found: usize },
    #[error("store capacity exceeded ({0} records)")]
    TooManyRecords(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    KeepFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeaderMode {
    /// A first line of exactly two integers is a `count dims` header.
    #[default]
    Auto,
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ImportOptions {
    pub on_duplicate: DuplicatePolicy,
    pub expect_header: HeaderMode,
    /// Count malformed lines in the report instead of failing.
    pub lenient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportReport {
    pub imported: u64,
    pub skipped_duplicates: u64,
    pub malformed_lines: Vec<(u64, String)>,
    #[serde(with = "duration_secs")]
    pub elapsed: Duration,
    pub bytes_text: u64,
    pub bytes_store: u64,
}

impl ImportReport {
    pub fn data_lines(&self) -> u64 {
        self.imported + self.skipped_duplicates + self.malformed_lines.len() as u64
    }

    /// Text size divided by store size.
    pub fn compression_ratio(&self) -> f64 {
        if self.bytes_store == 0 {
            0.0
        } else {
            self.bytes_text as f64 / self.bytes_store as f64
        }
    }
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// Found word/vector pairs and missing words.
pub type BatchLookup = (Vec<(String, Vec<f32>)>, Vec<String>);

/// Outcome of [`StoreWriter::push`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pushed {
    Inserted,
    /// The word was already present; carries the tag given with the first insert.
    Duplicate {
        first_tag: u64,
    },
}

/// Streams records into a new store file.
pub struct StoreWriter {
    dims: usize,
    target: PathBuf,
    tmp: NamedTempFile,
    out: BufWriter<File>,
    words: HashMap<Box<str>, (u32, u64)>,
    buf: Vec<u8>,
}

impl StoreWriter {
    /// Starts a store that will appear at `path` once finished.
    pub fn create(path: impl AsRef<Path>, dims: usize) -> Result<Self, StoreError> {
        let target = path.as_ref().to_path_buf();
        let dir = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let tmp = NamedTempFile::new_in(dir)?;
        let mut out = BufWriter::with_capacity(1 << 20, tmp.reopen()?);
        out.write_all(&[0u8; HEADER_LEN])?;
        Ok(Self {
            dims,
            target,
            tmp,
            out,
            words: HashMap::new(),
            buf: Vec::with_capacity(dims * 4),
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Appends a record unless `word` is already stored. `tag` is an opaque
    /// caller value (a line number for text imports) echoed back on duplicates.
    pub fn push(&mut self, word: &str, vector: &[f32], tag: u64) -> Result<Pushed, StoreError> {
        if vector.len() != self.dims {
            return Err(StoreError::VectorLength {
                expected: self.dims,
                found: vector.len(),
            });
        }
        if let Some(&(_, first_tag)) = self.words.get(word) {
            return Ok(Pushed::Duplicate { first_tag });
        }
        let record = u32::try_from(self.words.len())
            .map_err(|_| StoreError::TooManyRecords(self.words.len()))?;
        self.buf.clear();
        for x in vector {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
        self.out.write_all(&self.buf)?;
        self.words.insert(word.into(), (record, tag));
        Ok(Pushed::Inserted)
    }

    /// Writes the index and atomically moves the file into place.
    pub fn finish(mut self) -> Result<u64, StoreError> {
        let mut entries: Vec<(Box<str>, u32)> =
            self.words.drain().map(|(w, (rec, _))| (w, rec)).collect();
        entries.sort_unstable_by(|a, b| a.0.as_bytes().cmp(b.0.as_bytes()));

        let count = entries.len() as u64;
        let blob_offset = (HEADER_LEN + entries.len() * self.dims * 4) as u64;
        let mut word_offset = 0u64;
        for (w, _) in &entries {
            self.out.write_all(w.as_bytes())?;
        }
        let index_offset = blob_offset + entries.iter().map(|(w, _)| w.len() as u64).sum::<u64>();
        for (w, rec) in &entries {
            self.out.write_all(&word_offset.to_le_bytes())?;
            self.out.write_all(&(w.len() as u32).to_le_bytes())?;
            self.out.write_all(&rec.to_le_bytes())?;
            word_offset += w.len() as u64;
        }
        let file_len = index_offset + count * INDEX_ENTRY_LEN as u64;

        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&(self.dims as u32).to_le_bytes());
        header.extend_from_slice(&0u32.to_le_bytes());
        header.extend_from_slice(&count.to_le_bytes());
        header.extend_from_slice(&blob_offset.to_le_bytes());
        header.extend_from_slice(&index_offset.to_le_bytes());
        header.extend_from_slice(&file_len.to_le_bytes());

        let mut file = self.out.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(0))?;
        file.write_all(&header)?;
        file.sync_all()?;
        self.tmp
            .persist(&self.target)
            .map_err(|e| StoreError::Io(e.error))?;
        Ok(file_len)
    }
}

/// Read-only, memory-mapped view of a finished store file.
#[derive(Debug)]
pub struct WecStore {
    path: PathBuf,
    map: Mmap,
    dims: usize,
    count: usize,
    blob_offset: usize,
    index_offset: usize,
}

impl WecStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path)?;
        // SAFETY: store files are immutable once renamed into place; writers
        // only ever replace them through a new inode.
        let map = unsafe { Mmap::map(&file)? };
        let corrupt = |reason: &str| StoreError::Corrupt {
            path: path.clone(),
            reason: reason.to_string(),
        };
        if map.len() < HEADER_LEN || &map[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let dims = read_u32(&map, 8) as usize;
        let count = read_u64(&map, 16) as usize;
        let blob_offset = read_u64(&map, 24) as usize;
        let index_offset = read_u64(&map, 32) as usize;
        let file_len = read_u64(&map, 40) as usize;
        if file_len != map.len() {
            return Err(corrupt("length mismatch"));
        }
        let expected_blob = count
            .checked_mul(dims)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(HEADER_LEN));
        let expected_len = count
            .checked_mul(INDEX_ENTRY_LEN)
            .and_then(|n| n.checked_add(index_offset));
        if dims == 0
            || expected_blob != Some(blob_offset)
            || index_offset < blob_offset
            || expected_len != Some(file_len)
        {
            return Err(corrupt("inconsistent header"));
        }
        Ok(Self {
            path,
            map,
            dims,
            count,
            blob_offset,
            index_offset,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Size of the store file in bytes.
    pub fn file_len(&self) -> u64 {
        self.map.len() as u64
    }

    fn entry(&self, i: usize) -> (&[u8], usize) {
        let at = self.index_offset + i * INDEX_ENTRY_LEN;
        let off = read_u64(&self.map, at) as usize;
        let len = read_u32(&self.map, at + 8) as usize;
        let record = read_u32(&self.map, at + 12) as usize;
        let start = self.blob_offset + off;
        (&self.map[start..start + len], record)
    }

    fn find(&self, word: &str) -> Option<usize> {
        let key = word.as_bytes();
        let (mut lo, mut hi) = (0usize, self.count);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let (w, record) = self.entry(mid);
            match w.cmp(key) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(record),
            }
        }
        None
    }

    fn vector_at(&self, record: usize) -> Vec<f32> {
        let start = HEADER_LEN + record * self.dims * 4;
        self.map[start..start + self.dims * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect()
    }

    /// Exact-match lookup.
    pub fn get(&self, word: &str) -> Option<Vec<f32>> {
        self.find(word).map(|r| self.vector_at(r))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.find(word).is_some()
    }

    /// Looks up every word; `found` has one entry per distinct found word in
    /// first-occurrence order, `missing` keeps input order without repeats.
    pub fn get_batch<S: AsRef<str>>(&self, words: &[S]) -> BatchLookup {
        let mut found = Vec::new();
        let mut missing = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for w in words {
            let w = w.as_ref();
            if !seen.insert(w) {
                continue;
            }
            match self.get(w) {
                Some(v) => found.push((w.to_string(), v)),
                None => missing.push(w.to_string()),
            }
        }
        (found, missing)
    }

    /// The `i`-th word in byte order.
    pub fn word_at(&self, i: usize) -> Option<&str> {
        if i >= self.count {
            return None;
        }
        let (w, _) = self.entry(i);
        // written from &str keys, so always valid
        Some(std::str::from_utf8(w).unwrap_or_default())
    }

    /// Streams the vocabulary in byte order straight from the index.
    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        (0..self.count).filter_map(move |i| self.word_at(i))
    }
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn read_u64(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

/// Imports a plain-text WEC (GloVe or word2vec text layout) into a new store
/// file at `path`. Nothing is left at `path` if the import fails.
pub fn import_text<R: BufRead>(
    mut input: R,
    path: impl AsRef<Path>,
    dims: usize,
    options: ImportOptions,
) -> Result<ImportReport, StoreError> {
    let started = Instant::now();
    let mut writer = StoreWriter::create(path, dims)?;
    let mut report = ImportReport {
        imported: 0,
        skipped_duplicates: 0,
        malformed_lines: Vec::new(),
        elapsed: Duration::ZERO,
        bytes_text: 0,
        bytes_store: 0,
    };
    let mut line = String::new();
    let mut vector = Vec::with_capacity(dims);
    let mut lineno = 0u64;
    loop {
        line.clear();
        let n = input.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        report.bytes_text += n as u64;
        lineno += 1;
        let text = line.trim_end_matches(['\n', '\r']);
        if text.trim().is_empty() {
            continue;
        }

        if lineno == 1 && options.expect_header != HeaderMode::No {
            match parse_header(text) {
                Some((_, header_dims)) => {
                    if header_dims != dims {
                        return Err(StoreError::HeaderDims {
                            expected: dims,
                            found: header_dims,
                        });
                    }
                    continue;
                }
                None if options.expect_header == HeaderMode::Yes => {
                    return Err(StoreError::Malformed {
                        line: 1,
                        reason: "expected a `count dims` header".into(),
                    });
                }
                None => {}
            }
        }

        let mut fields = text.split_ascii_whitespace();
        let Some(word) = fields.next() else { continue };
        vector.clear();
        let mut bad: Option<StoreError> = None;
        let mut found = 0usize;
        for f in fields {
            found += 1;
            if found > dims {
                continue;
            }
            match f.parse::<f32>() {
                Ok(x) => vector.push(x),
                Err(_) if bad.is_none() => {
                    bad = Some(StoreError::Malformed {
                        line: lineno,
                        reason: format!("cannot parse `{f}` as a float"),
                    })
                }
                Err(_) => {}
            }
        }
        if found != dims {
            bad = Some(StoreError::DimensionMismatch {
                line: lineno,
                expected: dims,
                found,
            });
        }
        if let Some(err) = bad {
            if options.lenient {
                let reason = match err {
                    StoreError::Malformed { reason, .. } => reason,
                    other => other.to_string(),
                };
                report.malformed_lines.push((lineno, reason));
                continue;
            }
            return Err(err);
        }

        match writer.push(word, &vector, lineno)? {
            Pushed::Inserted => report.imported += 1,
            Pushed::Duplicate { first_tag } => match options.on_duplicate {
                DuplicatePolicy::KeepFirst => report.skipped_duplicates += 1,
                DuplicatePolicy::Reject => {
                    return Err(StoreError::DuplicateWord {
                        word: word.to_string(),
                        line: lineno,
                        first_line: first_tag,
                    })
                }
            },
        }
    }
    report.bytes_store = writer.finish()?;
    report.elapsed = started.elapsed();
    Ok(report)
}

/// Builds a store from in-memory records, e.g. vectors decoded from another
/// format. Tags in duplicate errors are 1-based record positions.
pub fn import_records<I, S, V>(
    records: I,
    path: impl AsRef<Path>,
    dims: usize,
    on_duplicate: DuplicatePolicy,
) -> Result<ImportReport, StoreError>
where
    I: IntoIterator<Item = (S, V)>,
    S: AsRef<str>,
    V: AsRef<[f32]>,
{
    let started = Instant::now();
    let mut writer = StoreWriter::create(path, dims)?;
    let (mut imported, mut skipped_duplicates) = (0, 0);
    for (i, (word, vector)) in records.into_iter().enumerate() {
        let (word, pos) = (word.as_ref(), i as u64 + 1);
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(StoreError::Malformed {
                line: pos,
                reason: format!("invalid word `{word}`"),
            });
        }
        match writer.push(word, vector.as_ref(), pos)? {
            Pushed::Inserted => imported += 1,
            Pushed::Duplicate { first_tag } => match on_duplicate {
                DuplicatePolicy::KeepFirst => skipped_duplicates += 1,
                DuplicatePolicy::Reject => {
                    return Err(StoreError::DuplicateWord {
                        word: word.to_string(),
                        line: pos,
                        first_line: first_tag,
                    })
                }
            },
        }
    }
    let bytes_store = writer.finish()?;
    Ok(ImportReport {
        imported,
        skipped_duplicates,
        malformed_lines: Vec::new(),
        elapsed: started.elapsed(),
        bytes_text: 0,
        bytes_store,
    })
}

fn parse_header(text: &str) -> Option<(u64, usize)> {
    let mut it = text.split_ascii_whitespace();
    let count = it.next()?.parse::<u64>().ok()?;
    let dims = it.next()?.parse::<usize>().ok()?;
    it.next().is_none().then_some((count, dims))
}
