//! Fixtures and reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use wecstore::{
    Catalog, ImportOptions, PhraseSetup, PipelineDescriptor, PipelineOptions, WecIdentifier,
};

pub fn id(text: &str) -> WecIdentifier {
    wecstore::parse_identifier(text).unwrap()
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Random float rendered the way embedding dumps usually are.
pub fn float_text<R: Rng>(rng: &mut R) -> String {
    let v: f64 = rng.gen_range(-3.0..3.0);
    match rng.gen_range(0..4) {
        0 => format!("{v:.5}"),
        1 => format!("{v:.8}"),
        2 => format!("{v:e}"),
        _ => format!("{}", v as f32),
    }
}

/// `n` distinct words `w0..`, each with `dims` random floats; returns the text
/// and the expected vectors, parsed straight from the text.
pub fn random_wec_text<R: Rng>(
    rng: &mut R,
    n: usize,
    dims: usize,
) -> (String, Vec<(String, Vec<f32>)>) {
    let mut text = String::new();
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let word = format!("w{i}");
        let floats: Vec<String> = (0..dims).map(|_| float_text(rng)).collect();
        let _ = writeln!(text, "{word} {}", floats.join(" "));
        records.push((
            word,
            floats.iter().map(|f| f.parse::<f32>().unwrap()).collect(),
        ));
    }
    (text, records)
}

/// Writes `records` as a GloVe-style text file.
pub fn write_wec(path: &Path, records: &[(&str, Vec<f32>)]) {
    let mut text = String::new();
    for (w, v) in records {
        let floats: Vec<String> = v.iter().map(f32::to_string).collect();
        let _ = writeln!(text, "{w} {}", floats.join(" "));
    }
    std::fs::write(path, text).unwrap();
}

/// Registers and imports `records` under `identifier` with the default pipeline.
pub fn import(catalog: &Catalog, dir: &Path, identifier: &str, records: &[(&str, Vec<f32>)]) {
    import_with(catalog, dir, identifier, records, PhraseSetup::None);
}

pub fn import_with(
    catalog: &Catalog,
    dir: &Path,
    identifier: &str,
    records: &[(&str, Vec<f32>)],
    phrases: PhraseSetup,
) {
    let wec = id(identifier);
    let path = dir.join(format!("{}.txt", wec.file_stem()));
    write_wec(&path, records);
    let pipeline = PipelineDescriptor::for_identifier(&wec, PipelineOptions::default());
    catalog
        .import(&path, &wec, pipeline, phrases, ImportOptions::default())
        .unwrap();
}

fn brute_count(corpus: &[Vec<String>], w: &str) -> u64 {
    corpus.iter().flatten().filter(|t| *t == w).count() as u64
}

fn brute_pair(corpus: &[Vec<String>], a: &str, b: &str) -> u64 {
    corpus
        .iter()
        .map(|s| (1..s.len()).filter(|&i| s[i - 1] == a && s[i] == b).count() as u64)
        .sum()
}

fn brute_scan(
    corpus: &[Vec<String>],
    tokens: &[String],
    discount: f64,
    threshold: f64,
) -> Vec<String> {
    let n = corpus.iter().map(Vec::len).sum::<usize>() as f64;
    let mut memo: HashMap<(String, String), bool> = HashMap::new();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() {
            let (a, b) = (&tokens[i], &tokens[i + 1]);
            let join = *memo.entry((a.clone(), b.clone())).or_insert_with(|| {
                let ab = brute_pair(corpus, a, b);
                ab > 0
                    && (ab as f64 - discount) * n
                        / (brute_count(corpus, a) as f64 * brute_count(corpus, b) as f64)
                        >= threshold
            });
            if join {
                out.push(format!("{a}_{b}"));
                i += 2;
                continue;
            }
        }
        out.push(tokens[i].clone());
        i += 1;
    }
    out
}

/// Reference phrase joining: recount the corpus by brute force for every pass.
pub fn brute_phrases(
    corpus: &[Vec<String>],
    tokens: &[String],
    discount: f64,
    threshold: f64,
    passes: usize,
) -> Vec<String> {
    let mut corpus = corpus.to_vec();
    let mut tokens = tokens.to_vec();
    for _ in 0..passes {
        tokens = brute_scan(&corpus, &tokens, discount, threshold);
        corpus = corpus
            .iter()
            .map(|s| brute_scan(&corpus, s, discount, threshold))
            .collect();
    }
    tokens
}

/// Float64 cosine distance written out longhand.
pub fn ref_cosine_distance(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] as f64 * b[i] as f64;
        na += a[i] as f64 * a[i] as f64;
        nb += b[i] as f64 * b[i] as f64;
    }
    1.0 - dot / (na.sqrt() * nb.sqrt())
}
