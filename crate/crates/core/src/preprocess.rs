//! Text cleaning: character-level normalization, whitespace tokenization,
//! n-gram frequency dictionaries for boilerplate discovery, and removal of
//! curated stop phrases.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizationConfig {
    pub strip_diacritics: bool,
    pub strip_latin: bool,
    pub strip_special: bool,
    pub collapse_whitespace: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            strip_diacritics: true,
            strip_latin: true,
            strip_special: true,
            collapse_whitespace: true,
        }
    }
}

/// Harakat, tanween, shadda, sukun and the other combining marks in
/// U+064B..U+065F, plus the superscript alef.
pub fn is_arabic_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{065F}' | '\u{0670}')
}

fn in_arabic_block(c: char) -> bool {
    matches!(c,
        '\u{0600}'..='\u{06FF}'
        | '\u{0750}'..='\u{077F}'
        | '\u{08A0}'..='\u{08FF}'
        | '\u{FB50}'..='\u{FDFF}'
        | '\u{FE70}'..='\u{FEFF}')
}

/// Letters of the Arabic script blocks. Diacritics count as part of the
/// letter so that `strip_special` alone never removes them.
pub fn is_arabic_letter(c: char) -> bool {
    in_arabic_block(c) && (c.is_alphabetic() || is_arabic_diacritic(c))
}

/// ASCII, Arabic-Indic and extended Arabic-Indic digits.
pub fn is_digit(c: char) -> bool {
    c.is_ascii_digit() || matches!(c, '\u{0660}'..='\u{0669}' | '\u{06F0}'..='\u{06F9}')
}

pub fn normalize(text: &str, cfg: &NormalizationConfig) -> String {
    let filtered: String = text
        .chars()
        .filter(|&c| {
            if cfg.strip_diacritics && is_arabic_diacritic(c) {
                return false;
            }
            if cfg.strip_latin && c.is_ascii_alphabetic() {
                return false;
            }
            if cfg.strip_special && !(is_arabic_letter(c) || is_digit(c) || c.is_whitespace()) {
                return false;
            }
            true
        })
        .collect();
    if cfg.collapse_whitespace {
        filtered.split_whitespace().collect::<Vec<_>>().join(" ")
    } else {
        filtered
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Normalize a document's text and re-tokenize it.
pub fn normalize_document(doc: &Document, cfg: &NormalizationConfig) -> Document {
    doc.with_tokens(tokenize(&normalize(&doc.text, cfg)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramFrequency {
    n: usize,
    counts: BTreeMap<String, u64>,
}

impl NgramFrequency {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, ngram: &str) -> u64 {
        self.counts.get(ngram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// TSV export, `ngram<TAB>count`, in key order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (ngram, count) in &self.counts {
            writeln!(out, "{ngram}\t{count}")?;
        }
        Ok(())
    }
}

/// Count every contiguous `n`-token window; windows never span two documents.
pub fn ngram_frequency<'a, I>(documents: I, n: usize) -> Result<NgramFrequency>
where
    I: IntoIterator<Item = &'a Document>,
{
    if !(1..=3).contains(&n) {
        return Err(Error::invalid(format!("n-gram order must be 1, 2 or 3, got {n}")));
    }
    let mut counts = BTreeMap::new();
    for doc in documents {
        for window in doc.tokens.windows(n) {
            *counts.entry(window.join(" ")).or_insert(0) += 1;
        }
    }
    Ok(NgramFrequency { n, counts })
}

/// The `ceil(fraction * distinct)` most frequent entries, count descending,
/// ties in codepoint order of the n-gram.
pub fn top_fraction(freq: &NgramFrequency, fraction: f64) -> Result<Vec<(String, u64)>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction must lie in (0, 1], got {fraction}")));
    }
    let keep = (fraction * freq.len() as f64).ceil() as usize;
    let mut entries: Vec<(String, u64)> =
        freq.counts.iter().map(|(k, &v)| (k.clone(), v)).collect();
    // BTreeMap iteration is already codepoint-ordered; a stable sort on count keeps that.
    entries.sort_by_key(|e| std::cmp::Reverse(e.1));
    entries.truncate(keep.min(entries.len()));
    Ok(entries)
}

/// Phrases of one to three tokens, matched against token streams
/// left to right, longest phrase first, without overlap.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseSet {
    phrases: Vec<String>,
    // index = phrase length - 1
    by_len: [HashSet<Vec<String>>; 3],
}

impl PhraseSet {
    pub fn new<I, S>(phrases: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = PhraseSet::default();
        for phrase in phrases {
            let phrase = phrase.as_ref();
            let tokens = tokenize(phrase);
            if tokens.is_empty() {
                return Err(Error::invalid("empty phrase"));
            }
            if tokens.len() > 3 {
                return Err(Error::invalid(format!(
                    "phrase {phrase:?} has {} tokens; at most 3 allowed",
                    tokens.len()
                )));
            }
            let canonical = tokens.join(" ");
            if !set.by_len[tokens.len() - 1].insert(tokens) {
                return Err(Error::invalid(format!("duplicate phrase {canonical:?}")));
            }
            set.phrases.push(canonical);
        }
        Ok(set)
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn has_multiword(&self) -> bool {
        !self.by_len[1].is_empty() || !self.by_len[2].is_empty()
    }

    /// Length of the longest phrase starting at `tokens[start]`, if any.
    fn match_at(&self, tokens: &[String], start: usize) -> Option<usize> {
        (1..=3).rev().find(|&len| {
            start + len <= tokens.len() && self.by_len[len - 1].contains(&tokens[start..start + len])
        })
    }

    /// Spans `(start, len)` of all non-overlapping matches.
    pub fn find_matches(&self, tokens: &[String]) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match self.match_at(tokens, i) {
                Some(len) => {
                    spans.push((i, len));
                    i += len;
                }
                None => i += 1,
            }
        }
        spans
    }

    pub fn count_matches(&self, tokens: &[String]) -> usize {
        self.find_matches(tokens).len()
    }

    /// Token stream with every match deleted.
    pub fn remove_from(&self, tokens: &[String]) -> Vec<String> {
        let mut kept = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            match self.match_at(tokens, i) {
                Some(len) => i += len,
                None => {
                    kept.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        kept
    }
}

/// Read a phrase file: UTF-8, one phrase per line, `#` lines and blank lines
/// ignored. With a normalization config each phrase is normalized first;
/// phrases that normalize to nothing are dropped and repeats collapse.
pub fn parse_phrase_lines(content: &str, norm: Option<&NormalizationConfig>) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in content.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let phrase = match norm {
            Some(cfg) => normalize(line, cfg),
            None => tokenize(line).join(" "),
        };
        if phrase.is_empty() {
            log::warn!("phrase {line:?} is empty after normalization; dropped");
            continue;
        }
        if seen.insert(phrase.clone()) {
            out.push(phrase);
        }
    }
    out
}

pub(crate) fn read_phrase_file(path: &Path, norm: Option<&NormalizationConfig>) -> Result<Vec<String>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_phrase_lines(&content, norm))
}

/// Curated, source-specific boilerplate phrases.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopPhraseList {
    set: PhraseSet,
}

impl StopPhraseList {
    pub fn new<I, S>(phrases: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Ok(StopPhraseList {
            set: PhraseSet::new(phrases)?,
        })
    }

    pub fn from_file(path: &Path, norm: Option<&NormalizationConfig>) -> Result<Self> {
        StopPhraseList::new(read_phrase_file(path, norm)?)
    }

    pub fn phrases(&self) -> &[String] {
        self.set.phrases()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// Merge several lists, keeping first occurrences.
    pub fn merged<'a, I>(lists: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a StopPhraseList>,
    {
        let mut seen = HashSet::new();
        let mut phrases = Vec::new();
        for list in lists {
            for p in list.phrases() {
                if seen.insert(p.clone()) {
                    phrases.push(p.clone());
                }
            }
        }
        StopPhraseList::new(phrases)
    }
}

pub fn apply_stop_phrases(doc: &Document, phrases: &StopPhraseList) -> Document {
    doc.with_tokens(phrases.set.remove_from(&doc.tokens))
}

/// Full cleaning pass: normalize, tokenize, drop stop phrases.
pub fn clean_document(doc: &Document, norm: &NormalizationConfig, phrases: &StopPhraseList) -> Document {
    apply_stop_phrases(&normalize_document(doc, norm), phrases)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn doc(tokens: &str) -> Document {
        Document::new("d", tokens, None)
    }

    #[test]
    fn normalize_examples() {
        let cfg = NormalizationConfig::default();
        assert_eq!(normalize("مُحَمَّد", &cfg), "محمد");
        assert_eq!(normalize("BBC خبر عاجل!", &cfg), "خبر عاجل");
        assert_eq!(normalize("", &cfg), "");
        assert_eq!(normalize("عام ٢٠٢٠ و2021", &cfg), "عام ٢٠٢٠ و2021");
    }

    #[test]
    fn normalize_flags_are_independent() {
        let keep_marks = NormalizationConfig {
            strip_diacritics: false,
            ..Default::default()
        };
        assert_eq!(normalize("مُحَمَّد!", &keep_marks), "مُحَمَّد");

        let latin_only = NormalizationConfig {
            strip_diacritics: false,
            strip_latin: true,
            strip_special: false,
            collapse_whitespace: false,
        };
        assert_eq!(normalize("BBC  خبر!", &latin_only), "  خبر!");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("قال الناطق"), vec!["قال", "الناطق"]);
        assert_eq!(tokenize("  خبر  "), vec!["خبر"]);
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn ngram_counts() {
        let d = doc("a b a");
        let uni = ngram_frequency([&d], 1).unwrap();
        assert_eq!(uni.get("a"), 2);
        assert_eq!(uni.get("b"), 1);
        let bi = ngram_frequency([&d], 2).unwrap();
        assert_eq!(bi.len(), 2);
        assert_eq!(bi.get("a b"), 1);
        assert_eq!(bi.get("b a"), 1);

        let (x, y) = (doc("a"), doc("b"));
        assert!(ngram_frequency([&x, &y], 2).unwrap().is_empty());
        assert!(ngram_frequency([&x], 4).is_err());
        assert!(ngram_frequency([&x], 0).is_err());
    }

    #[test]
    fn ngram_tsv() {
        let d = doc("b a b");
        let mut out = Vec::new();
        ngram_frequency([&d], 1).unwrap().write_tsv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a\t1\nb\t2\n");
    }

    #[test]
    fn top_fraction_ceiling_and_ties() {
        let d = doc("k0 k1 k1 k2 k3 k4 k5 k6 k7 k8 k9");
        let f = ngram_frequency([&d], 1).unwrap();
        assert_eq!(f.len(), 10);
        assert_eq!(top_fraction(&f, 0.1).unwrap(), vec![("k1".to_string(), 2)]);

        let d = doc("c a b b a a a b b b a");
        let mut f = ngram_frequency([&d], 1).unwrap();
        f.counts.insert("c".into(), 1);
        assert_eq!(f.get("a"), 5);
        assert_eq!(f.get("b"), 5);
        assert_eq!(
            top_fraction(&f, 0.66).unwrap(),
            vec![("a".to_string(), 5), ("b".to_string(), 5)]
        );
        // ceil(0.67 * 3) = ceil(2.01) = 3
        assert_eq!(top_fraction(&f, 0.67).unwrap().len(), 3);

        let empty = ngram_frequency(std::iter::empty(), 1).unwrap();
        assert!(top_fraction(&empty, 0.1).unwrap().is_empty());
        assert!(top_fraction(&f, 0.0).is_err());
        assert!(top_fraction(&f, 1.5).is_err());
    }

    #[test]
    fn stop_phrase_examples() {
        let list = StopPhraseList::new(["خاص للحدود"]).unwrap();
        let d = doc("خاص للحدود خبر");
        assert_eq!(apply_stop_phrases(&d, &list).tokens, toks("خبر"));

        let d = doc("a b c");
        assert_eq!(apply_stop_phrases(&d, &StopPhraseList::default()).tokens, toks("a b c"));

        let list = StopPhraseList::new(["a a"]).unwrap();
        let d = doc("a a a");
        let cleaned = apply_stop_phrases(&d, &list);
        assert_eq!(cleaned.tokens, toks("a"));
        assert_eq!(d.tokens.len(), 3, "input is left untouched");
    }

    #[test]
    fn longest_phrase_wins() {
        let list = StopPhraseList::new(["a", "a b c", "a b"]).unwrap();
        let d = doc("a b c a b d a");
        assert_eq!(apply_stop_phrases(&d, &list).tokens, toks("d"));
    }

    #[test]
    fn phrase_set_validation() {
        assert!(PhraseSet::new(["a b c d"]).is_err());
        assert!(PhraseSet::new(["  "]).is_err());
        assert!(PhraseSet::new(["a  b", "a b"]).is_err());
    }

    #[test]
    fn phrase_file_parsing() {
        let content = "# header\nشارك برأيك\n\nBBC Arabic\n  الشرق الأوسط  \nشارك برأيك\n";
        let raw = parse_phrase_lines(content, None);
        assert_eq!(raw, vec!["شارك برأيك", "BBC Arabic", "الشرق الأوسط"]);
        let normalized = parse_phrase_lines(content, Some(&NormalizationConfig::default()));
        assert_eq!(normalized, vec!["شارك برأيك", "الشرق الأوسط"]);
    }

    #[test]
    fn clean_document_pipeline() {
        let list = StopPhraseList::new(["خاص للحدود"]).unwrap();
        let d = Document::new("x", "خاصّ للحدود: BBC قالَ الناطق", None);
        let cleaned = clean_document(&d, &NormalizationConfig::default(), &list);
        assert_eq!(cleaned.tokens, toks("قال الناطق"));
        assert_eq!(cleaned.text, "قال الناطق");
    }
}
