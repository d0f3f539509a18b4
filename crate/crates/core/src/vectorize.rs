//! Bag-of-n-grams feature extraction: raw counts or smoothed TF-IDF over
//! word or character n-grams, with document-frequency and vocabulary-size
//! caps.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::matrix::DocTermMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Count,
    Tfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analyzer {
    Word,
    Char,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Count => "count",
            Weighting::Tfidf => "tfidf",
        })
    }
}

impl fmt::Display for Analyzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Analyzer::Word => "word",
            Analyzer::Char => "char",
        })
    }
}

impl FromStr for Weighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(Weighting::Count),
            "tfidf" => Ok(Weighting::Tfidf),
            _ => Err(Error::invalid(format!("unknown weighting {s:?}"))),
        }
    }
}

impl FromStr for Analyzer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Analyzer::Word),
            "char" => Ok(Analyzer::Char),
            _ => Err(Error::invalid(format!("unknown analyzer {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VectorizerConfig {
    pub weighting: Weighting,
    pub analyzer: Analyzer,
    pub ngram_range: (usize, usize),
    pub max_features: usize,
    /// Maximum document-frequency ratio; features in a larger share of the
    /// fitted documents are dropped.
    pub max_df: f64,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        VectorizerConfig {
            weighting: Weighting::Count,
            analyzer: Analyzer::Word,
            ngram_range: (1, 1),
            max_features: 1500,
            max_df: 0.7,
        }
    }
}

impl VectorizerConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.ngram_range;
        if lo < 1 || lo > hi {
            return Err(Error::invalid(format!("invalid n-gram range ({lo}, {hi})")));
        }
        if self.max_features < 1 {
            return Err(Error::invalid("max_features must be at least 1"));
        }
        if !(self.max_df > 0.0 && self.max_df <= 1.0) {
            return Err(Error::invalid(format!("max_df must lie in (0, 1], got {}", self.max_df)));
        }
        Ok(())
    }

    /// The parts of the config a fitted vocabulary depends on at transform time.
    fn compatible_with(&self, other: &VectorizerConfig) -> bool {
        self.weighting == other.weighting
            && self.analyzer == other.analyzer
            && self.ngram_range == other.ngram_range
    }
}

/// All n-grams of a document, repeated per occurrence.
///
/// Word n-grams join tokens with a single space. Character n-grams slide
/// over the tokens re-joined by single spaces, so word boundaries appear
/// inside the features.
pub fn analyze(doc: &Document, analyzer: Analyzer, (lo, hi): (usize, usize)) -> Vec<String> {
    let mut out = Vec::new();
    match analyzer {
        Analyzer::Word => {
            for n in lo..=hi {
                out.extend(doc.tokens.windows(n).map(|w| w.join(" ")));
            }
        }
        Analyzer::Char => {
            let chars: Vec<char> = doc.tokens.join(" ").chars().collect();
            for n in lo..=hi {
                out.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VocabularyData {
    config: VectorizerConfig,
    n_docs_fitted: usize,
    features: Vec<String>,
    document_frequency: Vec<usize>,
    idf: Option<Vec<f64>>,
}

/// Fitted feature index. Columns are assigned in codepoint order of the
/// retained features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    data: VocabularyData,
    index: HashMap<String, usize>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(data: VocabularyData) -> Self {
        let index = data
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        Vocabulary { data, index }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        v.data
    }
}

const VOCAB_FORMAT: &str = "# satira-vocabulary v1";

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.data.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.features.is_empty()
    }

    pub fn config(&self) -> &VectorizerConfig {
        &self.data.config
    }

    pub fn n_docs_fitted(&self) -> usize {
        self.data.n_docs_fitted
    }

    pub fn features(&self) -> &[String] {
        &self.data.features
    }

    pub fn feature(&self, index: usize) -> &str {
        &self.data.features[index]
    }

    pub fn index_of(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    pub fn document_frequency(&self) -> &[usize] {
        &self.data.document_frequency
    }

    pub fn idf(&self) -> Option<&[f64]> {
        self.data.idf.as_deref()
    }

    /// Human-readable export: a versioned header, the config echo, then
    /// `feature<TAB>index<TAB>df<TAB>idf` per line (idf empty for counts).
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let c = &self.data.config;
        writeln!(out, "{VOCAB_FORMAT}")?;
        writeln!(out, "weighting={}", c.weighting)?;
        writeln!(out, "analyzer={}", c.analyzer)?;
        writeln!(out, "ngram={},{}", c.ngram_range.0, c.ngram_range.1)?;
        writeln!(out, "max_features={}", c.max_features)?;
        writeln!(out, "max_df={}", c.max_df)?;
        writeln!(out, "n_docs={}", self.data.n_docs_fitted)?;
        for (i, f) in self.data.features.iter().enumerate() {
            let idf = self.data.idf.as_ref().map(|v| v[i].to_string()).unwrap_or_default();
            writeln!(out, "{f}\t{i}\t{}\t{idf}", self.data.document_frequency[i])?;
        }
        Ok(())
    }

    pub fn read_text(content: &str) -> Result<Vocabulary> {
        let mut lines = content.lines().enumerate();
        match lines.next() {
            Some((_, VOCAB_FORMAT)) => {}
            Some((_, other)) => {
                return Err(Error::ModelFormat(format!("unsupported vocabulary format {other:?}")))
            }
            None => return Err(Error::ModelFormat("empty vocabulary file".into())),
        }
        let mut config = VectorizerConfig::default();
        let mut n_docs = None;
        let mut features = Vec::new();
        let mut dfs = Vec::new();
        let mut idfs: Vec<Option<f64>> = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            let bad = |m: &str| Error::parse(line_no, m.to_string());
            if line.contains('\t') {
                let parts: Vec<&str> = line.split('\t').collect();
                if parts.len() != 4 {
                    return Err(bad("expected feature, index, df, idf"));
                }
                let index: usize = parts[1].parse().map_err(|_| bad("bad index"))?;
                if index != features.len() {
                    return Err(bad("indices must be contiguous from 0"));
                }
                features.push(parts[0].to_string());
                dfs.push(parts[2].parse().map_err(|_| bad("bad df"))?);
                idfs.push(if parts[3].is_empty() {
                    None
                } else {
                    Some(parts[3].parse().map_err(|_| bad("bad idf"))?)
                });
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            match key {
                "weighting" => config.weighting = value.parse()?,
                "analyzer" => config.analyzer = value.parse()?,
                "ngram" => {
                    let (lo, hi) = value.split_once(',').ok_or_else(|| bad("bad ngram"))?;
                    config.ngram_range = (
                        lo.parse().map_err(|_| bad("bad ngram"))?,
                        hi.parse().map_err(|_| bad("bad ngram"))?,
                    );
                }
                "max_features" => config.max_features = value.parse().map_err(|_| bad("bad max_features"))?,
                "max_df" => config.max_df = value.parse().map_err(|_| bad("bad max_df"))?,
                "n_docs" => n_docs = Some(value.parse().map_err(|_| bad("bad n_docs"))?),
                _ => return Err(bad("unknown key")),
            }
        }
        let idf = match config.weighting {
            Weighting::Tfidf => Some(
                idfs.into_iter()
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| Error::ModelFormat("tfidf vocabulary missing idf values".into()))?,
            ),
            Weighting::Count => None,
        };
        Ok(VocabularyData {
            config,
            n_docs_fitted: n_docs.ok_or_else(|| Error::ModelFormat("missing n_docs".into()))?,
            features,
            document_frequency: dfs,
            idf,
        }
        .into())
    }
}

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn fit(docs: &[Document], cfg: &VectorizerConfig) -> Result<Vocabulary> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::InsufficientData("cannot fit a vocabulary on zero documents".into()));
    }
    // feature -> (total occurrences, document frequency)
    let mut stats: HashMap<String, (u64, usize)> = HashMap::new();
    for doc in docs {
        let grams = analyze(doc, cfg.analyzer, cfg.ngram_range);
        let mut seen = HashSet::with_capacity(grams.len());
        for g in grams {
            let first = !seen.contains(&g);
            let entry = stats.entry(g.clone()).or_insert((0, 0));
            entry.0 += 1;
            if first {
                entry.1 += 1;
                seen.insert(g);
            }
        }
    }
    let n_docs = docs.len();
    let mut candidates: Vec<(String, u64, usize)> = stats
        .into_iter()
        .filter(|(_, (_, df))| *df as f64 / n_docs as f64 <= cfg.max_df)
        .map(|(f, (total, df))| (f, total, df))
        .collect();
    if candidates.is_empty() {
        return Err(Error::InsufficientData(
            "every candidate feature was removed by the max_df filter".into(),
        ));
    }
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    candidates.truncate(cfg.max_features);
    candidates.sort_by(|a, b| a.0.cmp(&b.0));

    let document_frequency: Vec<usize> = candidates.iter().map(|c| c.2).collect();
    let idf = (cfg.weighting == Weighting::Tfidf)
        .then(|| document_frequency.iter().map(|&df| smoothed_idf(n_docs, df)).collect());
    Ok(VocabularyData {
        config: *cfg,
        n_docs_fitted: n_docs,
        features: candidates.into_iter().map(|c| c.0).collect(),
        document_frequency,
        idf,
    }
    .into())
}

fn transform_row(doc: &Document, vocab: &Vocabulary) -> Vec<(usize, f64)> {
    let cfg = vocab.config();
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for g in analyze(doc, cfg.analyzer, cfg.ngram_range) {
        if let Some(col) = vocab.index_of(&g) {
            *counts.entry(col).or_insert(0.0) += 1.0;
        }
    }
    let mut row: Vec<(usize, f64)> = counts.into_iter().collect();
    row.sort_by_key(|&(c, _)| c);
    if let Some(idf) = vocab.idf() {
        for (c, v) in row.iter_mut() {
            *v *= idf[*c];
        }
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in row.iter_mut() {
                *v /= norm;
            }
        }
    }
    row
}

pub fn transform(docs: &[Document], vocab: &Vocabulary, cfg: &VectorizerConfig) -> Result<DocTermMatrix> {
    if !cfg.compatible_with(vocab.config()) {
        return Err(Error::invalid(format!(
            "vectorizer config ({}, {}, {:?}) does not match the fitted vocabulary ({}, {}, {:?})",
            cfg.weighting,
            cfg.analyzer,
            cfg.ngram_range,
            vocab.config().weighting,
            vocab.config().analyzer,
            vocab.config().ngram_range
        )));
    }
    let rows: Vec<Vec<(usize, f64)>> = docs.par_iter().map(|d| transform_row(d, vocab)).collect();
    let mut m = DocTermMatrix::empty(vocab.len());
    for row in rows {
        m.push_row(row)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn docs(specs: &[&str]) -> Vec<Document> {
        specs
            .iter()
            .enumerate()
            .map(|(i, s)| Document::new(format!("d{i}"), *s, None))
            .collect()
    }

    fn word(max_df: f64, max_features: usize, weighting: Weighting) -> VectorizerConfig {
        VectorizerConfig {
            weighting,
            analyzer: Analyzer::Word,
            ngram_range: (1, 1),
            max_features,
            max_df,
        }
    }

    #[test]
    fn max_df_filter() {
        let v = fit(&docs(&["a b", "a c"]), &word(0.7, 1500, Weighting::Count)).unwrap();
        assert_eq!(v.features(), &["b".to_string(), "c".to_string()]);
    }

    #[test]
    fn max_features_cap_with_tie_rule() {
        let v = fit(&docs(&["a b", "a c"]), &word(1.0, 2, Weighting::Count)).unwrap();
        assert_eq!(v.features(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn char_windows() {
        let cfg = VectorizerConfig {
            analyzer: Analyzer::Char,
            ngram_range: (2, 3),
            max_df: 1.0,
            ..Default::default()
        };
        let v = fit(&docs(&["ab"]), &cfg).unwrap();
        assert_eq!(v.features(), &["ab".to_string()]);

        let grams = analyze(&docs(&["ab c"])[0], Analyzer::Char, (2, 3));
        assert_eq!(grams, vec!["ab", "b ", " c", "ab ", "b c"]);
        let grams = analyze(&docs(&["قال"])[0], Analyzer::Char, (2, 2));
        assert_eq!(grams, vec!["قا", "ال"]);
    }

    #[test]
    fn word_ngram_range() {
        let grams = analyze(&docs(&["a b c"])[0], Analyzer::Word, (2, 3));
        assert_eq!(grams, vec!["a b", "b c", "a b c"]);
    }

    #[test]
    fn fit_errors() {
        assert!(fit(&[], &VectorizerConfig::default()).is_err());
        assert!(fit(&docs(&["a", "a"]), &word(0.7, 10, Weighting::Count)).is_err());
        let bad = VectorizerConfig {
            ngram_range: (2, 1),
            ..Default::default()
        };
        assert!(fit(&docs(&["a"]), &bad).is_err());
    }

    #[test]
    fn count_transform() {
        let cfg = word(1.0, 10, Weighting::Count);
        let v = fit(&docs(&["b c"]), &cfg).unwrap();
        assert_eq!(v.index_of("b"), Some(0));
        assert_eq!(v.index_of("c"), Some(1));
        let m = transform(&docs(&["b b c", "z"]), &v, &cfg).unwrap();
        assert_eq!(m.row(0), (&[0usize, 1][..], &[2.0, 1.0][..]));
        assert_eq!(m.row(1).0.len(), 0);
    }

    #[test]
    fn tfidf_hand_computed() {
        let cfg = word(1.0, 10, Weighting::Tfidf);
        let v = fit(&docs(&["a b", "a"]), &cfg).unwrap();
        let idf_a = (3.0f64 / 3.0).ln() + 1.0;
        let idf_b = (3.0f64 / 2.0).ln() + 1.0;
        assert_eq!(v.idf().unwrap(), &[idf_a, idf_b]);
        let m = transform(&docs(&["a b"]), &v, &cfg).unwrap();
        let norm = (idf_a * idf_a + idf_b * idf_b).sqrt();
        assert_abs_diff_eq!(m.get(0, 0), idf_a / norm, epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(0, 1), idf_b / norm, epsilon = 1e-15);
        assert_abs_diff_eq!(m.row_norm(0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn transform_rejects_mismatched_config() {
        let cfg = word(1.0, 10, Weighting::Count);
        let v = fit(&docs(&["a b"]), &cfg).unwrap();
        let other = VectorizerConfig {
            weighting: Weighting::Tfidf,
            ..cfg
        };
        assert!(transform(&docs(&["a"]), &v, &other).is_err());
        // caps do not matter after fitting
        let capped = VectorizerConfig { max_features: 1, ..cfg };
        assert!(transform(&docs(&["a"]), &v, &capped).is_ok());
    }

    #[test]
    fn vocabulary_text_roundtrip() {
        let cfg = VectorizerConfig {
            weighting: Weighting::Tfidf,
            analyzer: Analyzer::Char,
            ngram_range: (2, 3),
            max_features: 50,
            max_df: 0.9,
        };
        let v = fit(&docs(&["قال الناطق", "خبر عاجل", "قال خبر"]), &cfg).unwrap();
        let mut out = Vec::new();
        v.write_text(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let back = Vocabulary::read_text(&text).unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::read_text(&text.replace("v1", "v9")).is_err());
    }

    #[test]
    fn vocabulary_serde_rebuilds_index() {
        let cfg = word(1.0, 10, Weighting::Count);
        let v = fit(&docs(&["x y z"]), &cfg).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back.index_of("z"), Some(2));
        assert_eq!(back, v);
    }
}
