//! Command-line front end.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analyse::{pairwise_distances, similarity_matrix, HeatmapFormat, Metric};
use crate::catalog::{Catalog, CatalogEntry, PhraseJoin, PhraseSetup};
use crate::identifier::{parse_identifier, IdentifierError, WecIdentifier};
use crate::preprocess::{
    run_pipeline, train_phrase_model, PhraseParams, PipelineDescriptor, PipelineOptions,
    PreprocessCache, StopwordList, TokenizerRules,
};
use crate::retrieve::{get_vectors, Hits, Inputs, RetrievalResult, RetrieveOptions};
use crate::store::{DuplicatePolicy, HeaderMode, ImportOptions};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "wecstore",
    version,
    about = "Store and query word embedding collections"
)]
pub struct Cli {
    /// Catalog directory.
    #[arg(long, env = "WECSTORE_ROOT", global = true, default_value = ".")]
    pub root: PathBuf,
    /// Create the catalog if it does not exist.
    #[arg(long, global = true)]
    pub create: bool,
    #[arg(long, value_enum, global = true, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register a WEC and import its vectors from a text file.
    Import(ImportArgs),
    /// List catalogued WECs.
    List {
        /// Attribute filter, e.g. `algo:glove;dims:300`.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Retrieve vectors for words or raw sentences.
    Vectors(VectorsArgs),
    /// Train a phrase model on a corpus and attach it to a WEC.
    TrainPhrases(TrainArgs),
    /// Rank sentence pairs from a TSV file by distance, one ranking per WEC.
    Sts(StsArgs),
    /// Write word-by-word similarity matrices for two sentences.
    Heatmap(HeatmapArgs),
    /// Remove a WEC and its files.
    Delete {
        identifier: String,
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DuplicateArg {
    Reject,
    KeepFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeaderArg {
    Auto,
    Yes,
    No,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub file: PathBuf,
    /// Full identifier, e.g. `algo:glove;dataset:6b;dims:50;fold:1;unit:token`.
    #[arg(long = "id")]
    pub identifier: String,
    /// `default` or `whitespace`.
    #[arg(long, default_value = "default")]
    pub tokenizer: String,
    /// Shell command used as tokenizer instead of the built-in one.
    #[arg(long)]
    pub external: Option<String>,
    /// `english` or a file with one word per line.
    #[arg(long)]
    pub stopwords: Option<String>,
    #[arg(long)]
    pub strip_special: bool,
    /// Join phrases by longest match against the vocabulary.
    #[arg(long, value_name = "MAX_LEN")]
    pub phrases_vocab: Option<usize>,
    #[arg(long, value_enum, default_value_t = DuplicateArg::Reject)]
    pub on_duplicate: DuplicateArg,
    #[arg(long, value_enum, default_value_t = HeaderArg::Auto)]
    pub header: HeaderArg,
    /// Skip malformed lines instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct VectorsArgs {
    pub query: String,
    /// Words, or sentences with `--raw`.
    pub items: Vec<String>,
    /// Read units from a file, one per line.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Treat each item as a raw sentence and preprocess it per WEC.
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub in_order: bool,
    #[arg(long)]
    pub no_phrases: bool,
    /// Emit bare vectors without their words.
    #[arg(long)]
    pub vectors_only: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub corpus: PathBuf,
    #[arg(long = "id")]
    pub identifier: String,
    #[arg(long, default_value_t = 0.0)]
    pub discount: f64,
    #[arg(long, default_value_t = crate::preprocess::phrases::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
}

#[derive(Debug, Args)]
pub struct StsArgs {
    pub query: String,
    pub input: PathBuf,
    /// Directory for the ranking files.
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value = "cosine")]
    pub metric: String,
    /// Most distant pairs first.
    #[arg(long)]
    pub reverse: bool,
    /// `english`, `none` or a file with one word per line.
    #[arg(long, default_value = "english")]
    pub stopwords: String,
    #[arg(long)]
    pub no_phrases: bool,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    pub query: String,
    pub sentence1: String,
    pub sentence2: String,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
    #[arg(long = "type", default_value = "csv")]
    pub file_type: String,
    #[arg(long, default_value = "cosine-similarity")]
    pub metric: String,
    #[arg(long)]
    pub no_phrases: bool,
}

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Identifier(_) => 3,
            Error::Catalog(_) => 4,
            Error::Store(_) => 5,
            Error::Pipeline(_) | Error::Phrase(_) => 6,
            Error::Analyse(_) => 7,
            Error::Input(_) | Error::Json(_) => 8,
            Error::Io(_) => 1,
        }
    }
}

/// Runs one command, writing its report to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Error> {
    let catalog = Catalog::open(&cli.root, cli.create)?;
    let json = cli.format == OutputFormat::Json;
    match cli.command {
        Command::Import(args) => cmd_import(&catalog, args, json, out),
        Command::List { filter } => cmd_list(&catalog, filter.as_deref(), json, out),
        Command::Vectors(args) => cmd_vectors(&catalog, args, json, out),
        Command::TrainPhrases(args) => cmd_train_phrases(&catalog, args, json, out),
        Command::Sts(args) => cmd_sts(&catalog, args, json, out),
        Command::Heatmap(args) => cmd_heatmap(&catalog, args, json, out),
        Command::Delete { identifier, force } => {
            let id = parse_identifier(&identifier)?;
            let entry = catalog.delete(&id, force)?;
            if json {
                writeln!(out, "{}", json!({ "deleted": entry.normalized() }))?;
            } else {
                writeln!(out, "deleted {}", entry.normalized())?;
            }
            Ok(())
        }
    }
}

fn load_stopwords(spec: &str) -> Result<Option<Arc<StopwordList>>, Error> {
    Ok(match spec {
        "none" => None,
        "english" => Some(Arc::new(StopwordList::english().clone())),
        path => Some(Arc::new(StopwordList::from_file(path)?)),
    })
}

fn cmd_import(
    catalog: &Catalog,
    args: ImportArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let id = parse_identifier(&args.identifier)?;
    let tokenizer: TokenizerRules = args.tokenizer.parse().map_err(Error::Input)?;
    let options = PipelineOptions {
        tokenizer,
        stopwords: match &args.stopwords {
            Some(s) => load_stopwords(s)?,
            None => None,
        },
        strip_special: args.strip_special,
        external: args.external,
    };
    let pipeline = PipelineDescriptor::for_identifier(&id, options);
    let phrases = match args.phrases_vocab {
        Some(max_len) => PhraseSetup::Vocab { max_len },
        None => PhraseSetup::None,
    };
    let import = ImportOptions {
        on_duplicate: match args.on_duplicate {
            DuplicateArg::Reject => DuplicatePolicy::Reject,
            DuplicateArg::KeepFirst => DuplicatePolicy::KeepFirst,
        },
        expect_header: match args.header {
            HeaderArg::Auto => HeaderMode::Auto,
            HeaderArg::Yes => HeaderMode::Yes,
            HeaderArg::No => HeaderMode::No,
        },
        lenient: args.lenient,
    };
    let report = catalog.import(&args.file, &id, pipeline, phrases, import)?;
    if json {
        let mut v = serde_json::to_value(&report)?;
        v["identifier"] = json!(id.normalize());
        v["compression_ratio"] = json!(report.compression_ratio());
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        writeln!(out, "identifier: {}", id.normalize())?;
        writeln!(out, "imported: {}", report.imported)?;
        writeln!(out, "skipped_duplicates: {}", report.skipped_duplicates)?;
        writeln!(out, "malformed_lines: {}", report.malformed_lines.len())?;
        for (line, reason) in &report.malformed_lines {
            writeln!(out, "  line {line}: {reason}")?;
        }
        writeln!(out, "text_bytes: {}", report.bytes_text)?;
        writeln!(out, "store_bytes: {}", report.bytes_store)?;
        writeln!(out, "text/store ratio: {:.3}", report.compression_ratio())?;
        writeln!(out, "elapsed: {:.3}s", report.elapsed.as_secs_f64())?;
    }
    Ok(())
}

/// Parses `key:value;key:value` into a filter map.
pub fn parse_filter(text: &str) -> Result<BTreeMap<String, String>, Error> {
    let mut map = BTreeMap::new();
    for pair in text
        .split([';', '&'])
        .map(str::trim)
        .filter(|p| !p.is_empty())
    {
        let (k, v) = pair
            .split_once(':')
            .ok_or_else(|| IdentifierError::MalformedPair {
                pair: pair.to_string(),
                reason: "expected key:value",
            })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn entry_json(e: &CatalogEntry) -> serde_json::Value {
    let phrases = match &e.phrases {
        PhraseJoin::None => json!(null),
        PhraseJoin::Vocab { max_len } => json!({ "vocab": max_len }),
        PhraseJoin::Model { file, hash } => json!({ "model": file, "hash": hash }),
    };
    json!({
        "identifier": e.normalized(),
        "dims": e.dims,
        "vocab_size": e.vocab_size,
        "pipeline_hash": e.pipeline_hash(),
        "pipeline": e.pipeline.to_lines(),
        "phrases": phrases,
        "created_at": e.created_at,
        "source_file": e.source_file,
        "imported": e.is_imported(),
    })
}

fn cmd_list(
    catalog: &Catalog,
    filter: Option<&str>,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let filter = match filter {
        Some(f) => parse_filter(f)?,
        None => BTreeMap::new(),
    };
    let entries = catalog.list_entries(&filter);
    if json {
        let list: Vec<_> = entries.iter().map(entry_json).collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&list)?)?;
        return Ok(());
    }
    for e in &entries {
        let phrases = match &e.phrases {
            PhraseJoin::None => "-".to_string(),
            PhraseJoin::Vocab { max_len } => format!("vocab/{max_len}"),
            PhraseJoin::Model { .. } => "model".to_string(),
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            e.normalized(),
            e.vocab_size,
            &e.pipeline_hash()[..12],
            phrases,
            e.source_file
        )?;
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, Error> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = Vec::new();
    for line in reader.lines() {
        lines.push(line?.trim_end_matches('\r').to_string());
    }
    Ok(lines)
}

fn write_result(res: &RetrievalResult, json: bool, out: &mut dyn Write) -> Result<(), Error> {
    if json {
        writeln!(out, "{}", res.to_json())?;
        return Ok(());
    }
    let fmt = |v: &[f32]| v.iter().map(f32::to_string).collect::<Vec<_>>().join(" ");
    for wec in &res.per_wec {
        writeln!(out, "# {}", wec.identifier)?;
        for unit in &wec.units {
            if !unit.raw.is_empty() {
                writeln!(out, "> {}", unit.raw)?;
            }
            match &unit.hits {
                Hits::Pairs(pairs) => {
                    for (w, v) in pairs {
                        writeln!(out, "{w}\t{}", fmt(v))?;
                    }
                }
                Hits::Vectors(vs) => {
                    for v in vs {
                        writeln!(out, "{}", fmt(v))?;
                    }
                }
            }
            if !unit.missing.is_empty() {
                writeln!(out, "missing\t{}", unit.missing.join(" "))?;
            }
        }
    }
    Ok(())
}

fn cmd_vectors(
    catalog: &Catalog,
    args: VectorsArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let mut items = args.items;
    if let Some(path) = &args.input {
        items.extend(read_lines(path)?);
    }
    if items.is_empty() {
        return Err(Error::Input("no words or sentences given".into()));
    }
    let options = RetrieveOptions {
        in_order: args.in_order,
        as_tuple: !args.vectors_only,
        phrases: !args.no_phrases,
    };
    let cache = PreprocessCache::new();
    let res = if args.raw {
        get_vectors(catalog, &args.query, &cache, Inputs::Raw(&items), options)?
    } else {
        let words: Vec<String> = items
            .iter()
            .flat_map(|s| s.split_whitespace())
            .map(str::to_string)
            .collect();
        get_vectors(
            catalog,
            &args.query,
            &cache,
            Inputs::Tokens(&[words]),
            options,
        )?
    };
    write_result(&res, json, out)
}

fn entry_for(catalog: &Catalog, id: &WecIdentifier) -> Result<CatalogEntry, Error> {
    catalog
        .lookup(id)
        .ok_or_else(|| crate::catalog::CatalogError::NotFound(id.normalize()).into())
}

fn cmd_train_phrases(
    catalog: &Catalog,
    args: TrainArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let id = parse_identifier(&args.identifier)?;
    let entry = entry_for(catalog, &id)?;
    let cache = PreprocessCache::new();
    let mut corpus = Vec::new();
    for line in read_lines(&args.corpus)? {
        corpus.push(run_pipeline(&entry.pipeline, &line, Some(&cache))?);
    }
    let params = PhraseParams {
        discount: args.discount,
        threshold: args.threshold,
        passes: args.passes,
    };
    let model = train_phrase_model(&corpus, params)?;
    let entry = catalog.attach_phrase_model(&id, &model)?;
    let hash = model.hash();
    if json {
        writeln!(
            out,
            "{}",
            json!({
                "identifier": entry.normalized(),
                "sentences": corpus.len(),
                "passes": model.passes(),
                "hash": hash,
            })
        )?;
    } else {
        writeln!(
            out,
            "attached phrase model {} ({} sentences, {} passes) to {}",
            &hash[..12],
            corpus.len(),
            model.passes(),
            entry.normalized()
        )?;
    }
    Ok(())
}

/// Splits STS input into its two sentence columns.
pub fn read_sts_pairs(text: &str) -> Result<(Vec<String>, Vec<String>), Error> {
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) => {
                left.push(a.to_string());
                right.push(b.to_string());
            }
            _ => {
                return Err(Error::Input(format!(
                    "line {}: expected two tab-separated sentences",
                    i + 1
                )))
            }
        }
    }
    if left.is_empty() {
        return Err(Error::Input("empty input".into()));
    }
    Ok((left, right))
}

fn cmd_sts(catalog: &Catalog, args: StsArgs, json: bool, out: &mut dyn Write) -> Result<(), Error> {
    let text = fs::read_to_string(&args.input)?;
    let (left, right) = read_sts_pairs(&text)?;
    let metric: Metric = args.metric.parse()?;
    let list = load_stopwords(&args.stopwords)?;
    let stopwords: HashSet<String> = list.as_ref().map(|l| l.set().clone()).unwrap_or_default();
    let list_info = list
        .as_ref()
        .map(|l| (l.name().to_string(), l.hash().to_string()));
    let options = RetrieveOptions {
        in_order: true,
        as_tuple: true,
        phrases: !args.no_phrases,
    };
    let cache = PreprocessCache::new();
    let res1 = get_vectors(catalog, &args.query, &cache, Inputs::Raw(&left), options)?;
    let res2 = get_vectors(catalog, &args.query, &cache, Inputs::Raw(&right), options)?;
    let ranking = pairwise_distances(&res1, &res2, &metric, args.reverse, &stopwords)?;
    fs::create_dir_all(&args.out)?;
    let mut written = Vec::new();
    for wec in &ranking.per_wec {
        let id = parse_identifier(&wec.identifier)?;
        let path = args.out.join(format!("{}.ranking.tsv", id.file_stem()));
        fs::write(&path, wec.to_tsv())?;
        written.push((wec, path));
    }
    if json {
        let files: Vec<_> = written
            .iter()
            .map(|(w, p)| {
                json!({
                    "identifier": w.identifier,
                    "file": p.to_string_lossy(),
                    "ranked": w.ranked.len(),
                    "undefined": w.undefined_pairs.len(),
                })
            })
            .collect();
        let stop = list_info.map(|(name, hash)| json!({ "name": name, "hash": hash }));
        let report = json!({ "pairs": left.len(), "stopwords": stop, "rankings": files });
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        match &list_info {
            Some((name, hash)) => writeln!(out, "stopwords\t{name}\t{hash}")?,
            None => writeln!(out, "stopwords\tnone")?,
        }
        for (w, p) in &written {
            writeln!(
                out,
                "{}\t{} ranked, {} undefined\t{}",
                w.identifier,
                w.ranked.len(),
                w.undefined_pairs.len(),
                p.display()
            )?;
        }
    }
    Ok(())
}

fn cmd_heatmap(
    catalog: &Catalog,
    args: HeatmapArgs,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let format: HeatmapFormat = args.file_type.parse()?;
    let metric: Metric = args.metric.parse()?;
    let options = RetrieveOptions {
        in_order: true,
        as_tuple: true,
        phrases: !args.no_phrases,
    };
    let cache = PreprocessCache::new();
    let sentences = [args.sentence1, args.sentence2];
    let res = get_vectors(
        catalog,
        &args.query,
        &cache,
        Inputs::Raw(&sentences),
        options,
    )?;
    fs::create_dir_all(&args.out)?;
    let mut files = Vec::new();
    for wec in &res.per_wec {
        let m = similarity_matrix(&wec.units[0], &wec.units[1], &metric)?;
        let id = parse_identifier(&wec.identifier)?;
        let path = args
            .out
            .join(format!("{}.heatmap.{}", id.file_stem(), format.extension()));
        m.export(&path, format)?;
        files.push((wec.identifier.clone(), path));
    }
    if json {
        let list: Vec<_> = files
            .iter()
            .map(|(id, p)| json!({ "identifier": id, "file": p.to_string_lossy() }))
            .collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&list)?)?;
    } else {
        for (id, p) in &files {
            writeln!(out, "{id}\t{}", p.display())?;
        }
    }
    Ok(())
}

/// Entry point used by the binary: parses `args`, runs, reports errors on
/// stderr and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
