//! Similarity analytics over retrieval results.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retrieve::{Hits, RetrievalResult, UnitResult};

#[derive(Debug, Error)]
pub enum AnalyseError {
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero-norm vector, distance undefined")]
    ZeroNorm,
    #[error("results cover different WECs (`{0}` vs `{1}`)")]
    WecMismatch(String, String),
    #[error("WEC `{id}`: {left} units vs {right} units")]
    UnitCountMismatch {
        id: String,
        left: usize,
        right: usize,
    },
    #[error("no tokens with vectors on the {0} side")]
    EmptyTokens(&'static str),
    #[error("{rows}x{cols} matrix with {row_labels} row and {col_labels} column labels")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        row_labels: usize,
        col_labels: usize,
    },
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("unknown heatmap format `{0}`")]
    UnknownFormat(String),
    #[error("heatmap csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mean of the non-stopword vectors of a sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub vector: Vec<f32>,
    pub used_tokens: Vec<String>,
    pub excluded: Vec<String>,
    pub defined: bool,
}

/// Averages `pairs`, skipping words in `stopwords`. Accumulates in `f64`.
pub fn average_vector(
    pairs: &[(String, Vec<f32>)],
    stopwords: &HashSet<String>,
) -> Result<SentenceVector, AnalyseError> {
    let mut sum: Vec<f64> = Vec::new();
    let mut used_tokens = Vec::new();
    let mut excluded = Vec::new();
    let dims = pairs.first().map_or(0, |p| p.1.len());
    for (word, v) in pairs {
        if v.len() != dims {
            return Err(AnalyseError::LengthMismatch(dims, v.len()));
        }
        if stopwords.contains(word) {
            excluded.push(word.clone());
            continue;
        }
        if sum.is_empty() {
            sum = vec![0.0; dims];
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += f64::from(*x);
        }
        used_tokens.push(word.clone());
    }
    let n = used_tokens.len() as f64;
    Ok(SentenceVector {
        vector: sum.into_iter().map(|s| (s / n) as f32).collect(),
        defined: !used_tokens.is_empty(),
        used_tokens,
        excluded,
    })
}

fn dot_norms(a: &[f32], b: &[f32]) -> Result<(f64, f64, f64), AnalyseError> {
    if a.len() != b.len() {
        return Err(AnalyseError::LengthMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    Ok((dot, na.sqrt(), nb.sqrt()))
}

/// `1 - cos(a, b)`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &[f32], b: &[f32]) -> Result<f64, AnalyseError> {
    Ok(1.0 - cosine_similarity(a, b)?)
}

/// `cos(a, b)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64, AnalyseError> {
    let (dot, na, nb) = dot_norms(a, b)?;
    if na == 0.0 || nb == 0.0 {
        return Err(AnalyseError::ZeroNorm);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn euclidean_distance(a: &[f32], b: &[f32]) -> Result<f64, AnalyseError> {
    if a.len() != b.len() {
        return Err(AnalyseError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2))
        .sum::<f64>()
        .sqrt())
}

pub type MetricFn = dyn Fn(&[f32], &[f32]) -> Result<f64, AnalyseError> + Send + Sync;

/// A vector distance or similarity.
#[derive(Clone)]
pub enum Metric {
    CosineDistance,
    CosineSimilarity,
    Euclidean,
    Custom(String, Arc<MetricFn>),
}

impl Metric {
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(&[f32], &[f32]) -> Result<f64, AnalyseError> + Send + Sync + 'static,
    ) -> Self {
        Metric::Custom(name.into(), Arc::new(f))
    }

    pub fn name(&self) -> &str {
        match self {
            Metric::CosineDistance => "cosine",
            Metric::CosineSimilarity => "cosine-similarity",
            Metric::Euclidean => "euclidean",
            Metric::Custom(name, _) => name,
        }
    }

    pub fn eval(&self, a: &[f32], b: &[f32]) -> Result<f64, AnalyseError> {
        match self {
            Metric::CosineDistance => cosine_distance(a, b),
            Metric::CosineSimilarity => cosine_similarity(a, b),
            Metric::Euclidean => euclidean_distance(a, b),
            Metric::Custom(_, f) => f(a, b),
        }
    }
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Metric({})", self.name())
    }
}

impl FromStr for Metric {
    type Err = AnalyseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Metric::CosineDistance),
            "cosine-similarity" => Ok(Metric::CosineSimilarity),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(AnalyseError::UnknownMetric(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPair {
    pub distance: f64,
    pub sentence1: String,
    pub sentence2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WecRanking {
    pub identifier: String,
    pub ranked: Vec<RankedPair>,
    /// Input pair indices skipped because a sentence vector or the distance
    /// was undefined.
    pub undefined_pairs: Vec<usize>,
}

impl WecRanking {
    /// `distance<TAB>sentence1<TAB>sentence2` lines, 6 decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for p in &self.ranked {
            let _ = writeln!(out, "{:.6}\t{}\t{}", p.distance, p.sentence1, p.sentence2);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRanking {
    pub per_wec: Vec<WecRanking>,
}

/// Sentence average for one unit: OOV tokens are already absent from the
/// pairs and are reported as excluded alongside stopwords. Units retrieved
/// without words average every vector.
pub fn unit_average(
    unit: &UnitResult,
    stopwords: &HashSet<String>,
) -> Result<SentenceVector, AnalyseError> {
    let mut sv = match &unit.hits {
        Hits::Pairs(pairs) => average_vector(pairs, stopwords)?,
        Hits::Vectors(vectors) => {
            let pairs: Vec<(String, Vec<f32>)> =
                vectors.iter().map(|v| (String::new(), v.clone())).collect();
            let mut sv = average_vector(&pairs, &HashSet::new())?;
            sv.used_tokens.clear();
            sv
        }
    };
    sv.excluded.extend(unit.missing.iter().cloned());
    Ok(sv)
}

/// Pairs unit `i` of `res1` with unit `i` of `res2` for every WEC, averages
/// both sentences and ranks the pairs by `metric`: ascending, or descending
/// with `reverse`. Ties are ordered by `(sentence1, sentence2)`.
pub fn pairwise_distances(
    res1: &RetrievalResult,
    res2: &RetrievalResult,
    metric: &Metric,
    reverse: bool,
    stopwords: &HashSet<String>,
) -> Result<DistanceRanking, AnalyseError> {
    if res1.per_wec.len() != res2.per_wec.len() {
        let name = |r: &RetrievalResult| {
            r.per_wec
                .iter()
                .map(|w| w.identifier.as_str())
                .collect::<Vec<_>>()
                .join("&")
        };
        return Err(AnalyseError::WecMismatch(name(res1), name(res2)));
    }
    let mut per_wec = Vec::with_capacity(res1.per_wec.len());
    for (w1, w2) in res1.per_wec.iter().zip(&res2.per_wec) {
        if w1.identifier != w2.identifier {
            return Err(AnalyseError::WecMismatch(
                w1.identifier.clone(),
                w2.identifier.clone(),
            ));
        }
        if w1.units.len() != w2.units.len() {
            return Err(AnalyseError::UnitCountMismatch {
                id: w1.identifier.clone(),
                left: w1.units.len(),
                right: w2.units.len(),
            });
        }
        let mut ranked = Vec::with_capacity(w1.units.len());
        let mut undefined_pairs = Vec::new();
        for (i, (u1, u2)) in w1.units.iter().zip(&w2.units).enumerate() {
            let (a, b) = (unit_average(u1, stopwords)?, unit_average(u2, stopwords)?);
            let distance = if a.defined && b.defined {
                metric
                    .eval(&a.vector, &b.vector)
                    .ok()
                    .filter(|d| !d.is_nan())
            } else {
                None
            };
            match distance {
                Some(distance) => ranked.push(RankedPair {
                    distance,
                    sentence1: u1.text(),
                    sentence2: u2.text(),
                }),
                None => undefined_pairs.push(i),
            }
        }
        sort_ranked(&mut ranked, reverse);
        per_wec.push(WecRanking {
            identifier: w1.identifier.clone(),
            ranked,
            undefined_pairs,
        });
    }
    Ok(DistanceRanking { per_wec })
}

fn sort_ranked(ranked: &mut [RankedPair], reverse: bool) {
    ranked.sort_by(|x, y| {
        let by_distance = if reverse {
            y.distance.total_cmp(&x.distance)
        } else {
            x.distance.total_cmp(&y.distance)
        };
        by_distance
            .then_with(|| x.sentence1.cmp(&y.sentence1))
            .then_with(|| x.sentence2.cmp(&y.sentence2))
    });
}

/// Word-by-word scores between two units of the same WEC.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Cell `(i, j)` is `metric(row word i, column word j)`; labels are the
/// lookup words, so joined phrases show up as e.g. `petri_net`.
pub fn similarity_matrix(
    u1: &UnitResult,
    u2: &UnitResult,
    metric: &Metric,
) -> Result<SimilarityMatrix, AnalyseError> {
    let (p1, p2) = (u1.pairs(), u2.pairs());
    if p1.is_empty() {
        return Err(AnalyseError::EmptyTokens("row"));
    }
    if p2.is_empty() {
        return Err(AnalyseError::EmptyTokens("column"));
    }
    let (d1, d2) = (p1[0].1.len(), p2[0].1.len());
    if d1 != d2 {
        return Err(AnalyseError::LengthMismatch(d1, d2));
    }
    let values = p1
        .iter()
        .map(|(_, a)| p2.iter().map(|(_, b)| metric.eval(a, b)).collect())
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    Ok(SimilarityMatrix {
        rows: p1.iter().map(|p| p.0.clone()).collect(),
        cols: p2.iter().map(|p| p.0.clone()).collect(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatmapFormat {
    Csv,
    Svg,
}

impl HeatmapFormat {
    pub fn extension(self) -> &'static str {
        match self {
            HeatmapFormat::Csv => "csv",
            HeatmapFormat::Svg => "svg",
        }
    }
}

impl FromStr for HeatmapFormat {
    type Err = AnalyseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(HeatmapFormat::Csv),
            "svg" => Ok(HeatmapFormat::Svg),
            other => Err(AnalyseError::UnknownFormat(other.to_string())),
        }
    }
}

fn check_shape(values: &[Vec<f64>], rows: &[String], cols: &[String]) -> Result<(), AnalyseError> {
    let ragged = values.iter().any(|r| r.len() != cols.len());
    if values.len() != rows.len() || ragged {
        return Err(AnalyseError::ShapeMismatch {
            rows: values.len(),
            cols: values.first().map_or(0, Vec::len),
            row_labels: rows.len(),
            col_labels: cols.len(),
        });
    }
    Ok(())
}

/// CSV: a header of column labels after an empty corner cell, then one row
/// per row label with cells printed to 6 decimals.
pub fn heatmap_csv(
    values: &[Vec<f64>],
    rows: &[String],
    cols: &[String],
) -> Result<String, AnalyseError> {
    check_shape(values, rows, cols)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| AnalyseError::Csv(e.to_string());
    let mut header = vec![String::new()];
    header.extend(cols.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (label, row) in rows.iter().zip(values) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| AnalyseError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 input"))
}

/// Parses the CSV written by [`heatmap_csv`].
pub fn parse_heatmap_csv(text: &str) -> Result<SimilarityMatrix, AnalyseError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let csv_err = |e: csv::Error| AnalyseError::Csv(e.to_string());
    let header = records
        .next()
        .ok_or_else(|| AnalyseError::Csv("empty file".into()))?
        .map_err(csv_err)?;
    let cols: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let mut it = rec.iter();
        rows.push(it.next().unwrap_or_default().to_string());
        let row = it
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| AnalyseError::Csv(format!("bad cell `{c}`")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        values.push(row);
    }
    check_shape(&values, &rows, &cols)?;
    Ok(SimilarityMatrix { rows, cols, values })
}

const CELL: usize = 40;
const MARGIN: usize = 120;

/// SVG: one `rect` per cell, gray level linear over `[min, max]` of the
/// matrix with black at the maximum and white at the minimum (all black
/// when every cell is equal). Row labels run down the left edge, column
/// labels along the top.
pub fn heatmap_svg(
    values: &[Vec<f64>],
    rows: &[String],
    cols: &[String],
) -> Result<String, AnalyseError> {
    check_shape(values, rows, cols)?;
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (min, max) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let width = MARGIN + cols.len() * CELL;
    let height = MARGIN + rows.len() * CELL;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    for (j, label) in cols.iter().enumerate() {
        let x = MARGIN + j * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" transform="rotate(-45 {x} {y})">{l}</text>"#,
            y = MARGIN - 6,
            l = xml_escape(label)
        );
    }
    for (i, (label, row)) in rows.iter().zip(values).enumerate() {
        let y = MARGIN + i * CELL;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{ty}" text-anchor="end">{l}</text>"#,
            x = MARGIN - 6,
            ty = y + CELL / 2 + 4,
            l = xml_escape(label)
        );
        for (j, v) in row.iter().enumerate() {
            let g = gray_level(*v, min, max);
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({g},{g},{g})"><title>{v:.6}</title></rect>"#,
                x = MARGIN + j * CELL,
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// 0 (black) at `max`, 255 (white) at `min`.
pub fn gray_level(v: f64, min: f64, max: f64) -> u8 {
    if !v.is_finite() || !max.is_finite() || max <= min {
        return 0;
    }
    (255.0 * (max - v) / (max - min)).round().clamp(0.0, 255.0) as u8
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Writes a heatmap file in the given format.
pub fn export_heatmap(
    values: &[Vec<f64>],
    rows: &[String],
    cols: &[String],
    path: impl AsRef<Path>,
    format: HeatmapFormat,
) -> Result<(), AnalyseError> {
    let text = match format {
        HeatmapFormat::Csv => heatmap_csv(values, rows, cols)?,
        HeatmapFormat::Svg => heatmap_svg(values, rows, cols)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

impl SimilarityMatrix {
    pub fn export(
        &self,
        path: impl AsRef<Path>,
        format: HeatmapFormat,
    ) -> Result<(), AnalyseError> {
        export_heatmap(&self.values, &self.rows, &self.cols, path, format)
    }

    pub fn transpose(&self) -> SimilarityMatrix {
        let values = (0..self.cols.len())
            .map(|j| self.values.iter().map(|row| row[j]).collect())
            .collect();
        SimilarityMatrix {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieve::WecResult;

    fn pairs(items: &[(&str, &[f32])]) -> Vec<(String, Vec<f32>)> {
        items
            .iter()
            .map(|(w, v)| (w.to_string(), v.to_vec()))
            .collect()
    }

    fn unit(raw: &str, items: &[(&str, &[f32])]) -> UnitResult {
        UnitResult {
            raw: raw.to_string(),
            tokens: items.iter().map(|p| p.0.to_string()).collect(),
            hits: Hits::Pairs(pairs(items)),
            missing: vec![],
        }
    }

    fn stop(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn averages() {
        let sv = average_vector(
            &pairs(&[("a", &[1.0, 2.0]), ("b", &[3.0, 4.0])]),
            &stop(&[]),
        )
        .unwrap();
        assert_eq!(sv.vector, vec![2.0, 3.0]);
        assert!(sv.defined);
        let sv = average_vector(
            &pairs(&[("the", &[9.0, 9.0]), ("net", &[1.0, 1.0])]),
            &stop(&["the"]),
        )
        .unwrap();
        assert_eq!(sv.vector, vec![1.0, 1.0]);
        assert_eq!(sv.excluded, ["the"]);
        let sv = average_vector(&pairs(&[("the", &[9.0])]), &stop(&["the"])).unwrap();
        assert!(!sv.defined && sv.used_tokens.is_empty());
        assert!(matches!(
            average_vector(&pairs(&[("a", &[1.0]), ("b", &[1.0, 2.0])]), &stop(&[])),
            Err(AnalyseError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn cosine_cases() {
        assert!(
            cosine_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0])
                .unwrap()
                .abs()
                < 1e-7
        );
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        let d = cosine_distance(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((d - (1.0 - 1.0 / 2f64.sqrt())).abs() < 1e-12);
        assert!((d - 0.2928932).abs() < 1e-7);
        assert!(matches!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(AnalyseError::ZeroNorm)
        ));
        assert!(matches!(
            cosine_distance(&[1.0], &[1.0, 0.0]),
            Err(AnalyseError::LengthMismatch(..))
        ));
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-2.0, 0.0]).unwrap(), 2.0);
    }

    fn result(id: &str, units: Vec<UnitResult>) -> RetrievalResult {
        RetrievalResult {
            per_wec: vec![WecResult {
                identifier: id.to_string(),
                units,
            }],
        }
    }

    #[test]
    fn ranks_by_exhaustive_order() {
        let left = result(
            "w",
            vec![
                unit("s1", &[("a", &[1.0, 0.0])]),
                unit("s2", &[("b", &[1.0, 1.0])]),
                unit("s3", &[("c", &[0.0, 1.0])]),
            ],
        );
        let right = result(
            "w",
            vec![
                unit("t1", &[("a", &[0.0, 1.0])]),
                unit("t2", &[("b", &[1.0, 1.0])]),
                unit("t3", &[("c", &[1.0, 2.0])]),
            ],
        );
        let r =
            pairwise_distances(&left, &right, &Metric::CosineDistance, false, &stop(&[])).unwrap();
        let order: Vec<&str> = r.per_wec[0]
            .ranked
            .iter()
            .map(|p| p.sentence1.as_str())
            .collect();
        // distances: s1/t1 = 1, s2/t2 = 0, s3/t3 = 1 - 2/sqrt(5)
        assert_eq!(order, ["s2", "s3", "s1"]);
        let rev =
            pairwise_distances(&left, &right, &Metric::CosineDistance, true, &stop(&[])).unwrap();
        let order: Vec<&str> = rev.per_wec[0]
            .ranked
            .iter()
            .map(|p| p.sentence1.as_str())
            .collect();
        assert_eq!(order, ["s1", "s3", "s2"]);
    }

    #[test]
    fn bare_vectors_average_everything() {
        let u = UnitResult {
            raw: "the net".into(),
            tokens: vec!["the".into(), "net".into()],
            hits: Hits::Vectors(vec![vec![1.0, 0.0], vec![3.0, 2.0]]),
            missing: vec![],
        };
        let sv = unit_average(&u, &stop(&["the"])).unwrap();
        assert_eq!(sv.vector, vec![2.0, 1.0]);
        assert!(sv.defined);
    }

    #[test]
    fn undefined_pairs_are_reported() {
        let left = result(
            "w",
            vec![unit("the", &[("the", &[1.0])]), unit("x", &[("x", &[1.0])])],
        );
        let right = result(
            "w",
            vec![unit("y", &[("y", &[1.0])]), unit("z", &[("z", &[0.0])])],
        );
        let r = pairwise_distances(
            &left,
            &right,
            &Metric::CosineDistance,
            false,
            &stop(&["the"]),
        )
        .unwrap();
        assert!(r.per_wec[0].ranked.is_empty());
        assert_eq!(r.per_wec[0].undefined_pairs, [0, 1]);
    }

    #[test]
    fn mismatches() {
        let a = result("w", vec![unit("a", &[("a", &[1.0])])]);
        let b = result("v", vec![unit("a", &[("a", &[1.0])])]);
        let c = result("w", vec![]);
        assert!(matches!(
            pairwise_distances(&a, &b, &Metric::CosineDistance, false, &stop(&[])),
            Err(AnalyseError::WecMismatch(..))
        ));
        assert!(matches!(
            pairwise_distances(&a, &c, &Metric::CosineDistance, false, &stop(&[])),
            Err(AnalyseError::UnitCountMismatch { .. })
        ));
    }

    #[test]
    fn ties_break_on_text() {
        let left = result(
            "w",
            vec![unit("b", &[("x", &[1.0])]), unit("a", &[("x", &[1.0])])],
        );
        let right = result(
            "w",
            vec![unit("q", &[("x", &[1.0])]), unit("q", &[("x", &[1.0])])],
        );
        let r =
            pairwise_distances(&left, &right, &Metric::CosineDistance, false, &stop(&[])).unwrap();
        assert_eq!(r.per_wec[0].ranked[0].sentence1, "a");
        assert_eq!(r.per_wec[0].to_tsv(), "0.000000\ta\tq\n0.000000\tb\tq\n");
    }

    #[test]
    fn matrix_against_brute_force() {
        let u1 = unit("", &[("a", &[1.0, 0.0]), ("b", &[1.0, 1.0])]);
        let u2 = unit(
            "",
            &[("c", &[0.0, 1.0]), ("d", &[2.0, 0.0]), ("e", &[-1.0, 1.0])],
        );
        let m = similarity_matrix(&u1, &u2, &Metric::CosineSimilarity).unwrap();
        assert_eq!(m.rows, ["a", "b"]);
        assert_eq!(m.cols, ["c", "d", "e"]);
        for (i, (_, a)) in u1.pairs().iter().enumerate() {
            for (j, (_, b)) in u2.pairs().iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| f64::from(x * y)).sum();
                let n = |v: &[f32]| v.iter().map(|x| f64::from(x * x)).sum::<f64>().sqrt();
                assert!((m.values[i][j] - dot / (n(a) * n(b))).abs() < 1e-12);
            }
        }
        let orth = similarity_matrix(
            &unit("", &[("a", &[1.0, 0.0])]),
            &unit("", &[("b", &[0.0, 1.0])]),
            &Metric::CosineSimilarity,
        )
        .unwrap();
        assert_eq!(orth.values, vec![vec![0.0]]);
        assert!(matches!(
            similarity_matrix(&unit("", &[]), &u2, &Metric::CosineSimilarity),
            Err(AnalyseError::EmptyTokens("row"))
        ));
        assert!(matches!(
            similarity_matrix(&unit("", &[("a", &[1.0])]), &u2, &Metric::CosineSimilarity),
            Err(AnalyseError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn csv_output() {
        let labels = vec!["x".to_string(), "y,z".to_string()];
        let csv = heatmap_csv(&[vec![1.0, 0.5], vec![0.5, 1.0]], &labels, &labels).unwrap();
        assert_eq!(
            csv,
            ",x,\"y,z\"\nx,1.000000,0.500000\n\"y,z\",0.500000,1.000000\n"
        );
        let back = parse_heatmap_csv(&csv).unwrap();
        assert_eq!(back.rows, labels);
        assert_eq!(back.values[0][1], 0.5);
        assert!(matches!(
            heatmap_csv(&[vec![1.0]], &labels, &labels),
            Err(AnalyseError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn svg_gray_map() {
        assert_eq!(gray_level(1.0, 0.0, 1.0), 0);
        assert_eq!(gray_level(0.0, 0.0, 1.0), 255);
        assert_eq!(gray_level(0.5, 0.0, 1.0), 128);
        assert_eq!(gray_level(3.0, 3.0, 3.0), 0);
        let labels = vec!["a<b".to_string()];
        let svg = heatmap_svg(&[vec![0.25]], &labels, &labels).unwrap();
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<rect").count(), 1);
    }

    #[test]
    fn metric_names() {
        for name in ["cosine", "cosine-similarity", "euclidean"] {
            assert_eq!(name.parse::<Metric>().unwrap().name(), name);
        }
        assert!("manhattan".parse::<Metric>().is_err());
        let m = Metric::custom("dot", |a, b| {
            Ok(a.iter().zip(b).map(|(x, y)| f64::from(x * y)).sum())
        });
        assert_eq!(m.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(
            Metric::Euclidean.eval(&[0.0, 3.0], &[4.0, 0.0]).unwrap(),
            5.0
        );
    }
}
