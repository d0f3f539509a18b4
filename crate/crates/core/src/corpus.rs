//! Labeled article collections: loading, canonical serialization and
//! reproducible train/test splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary article label. `Fake` is the positive class throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Fake,
    Real,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Fake, Label::Real];

    /// Class index used by every model: `Fake` = 0, `Real` = 1.
    pub fn index(self) -> usize {
        match self {
            Label::Fake => 0,
            Label::Real => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::Fake),
            1 => Some(Label::Real),
            _ => None,
        }
    }

    /// 1.0 for the positive (fake) class, 0.0 otherwise.
    pub fn target(self) -> f64 {
        match self {
            Label::Fake => 1.0,
            Label::Real => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fake => "fake",
            Label::Real => "real",
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Fake => Label::Real,
            Label::Real => Label::Fake,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fake" => Ok(Label::Fake),
            "real" => Ok(Label::Real),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// One article. `tokens` is the token multiset the measures and vectorizers
/// operate on; it starts as the whitespace split of `text`.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub label: Option<Label>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<Label>) -> Self {
        let text = text.into();
        let tokens = text.split_whitespace().map(str::to_string).collect();
        Document {
            id: id.into(),
            text,
            tokens,
            label,
        }
    }

    /// Copy of this document carrying a new token stream (text rewritten to match).
    pub fn with_tokens(&self, tokens: Vec<String>) -> Document {
        Document {
            id: self.id.clone(),
            text: tokens.join(" "),
            tokens,
            label: self.label,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledCorpus {
    documents: Vec<Document>,
    class_counts: BTreeMap<Label, usize>,
}

impl LabeledCorpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        let mut class_counts = BTreeMap::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if let Some(label) = doc.label {
                *class_counts.entry(label).or_insert(0) += 1;
            }
        }
        Ok(LabeledCorpus {
            documents,
            class_counts,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn class_counts(&self) -> &BTreeMap<Label, usize> {
        &self.class_counts
    }

    pub fn count(&self, label: Label) -> usize {
        self.class_counts.get(&label).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.documents.iter()
    }

    /// Labels of every document, failing on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<Label>> {
        self.documents
            .iter()
            .map(|d| {
                d.label
                    .ok_or_else(|| Error::invalid(format!("document {:?} is unlabeled", d.id)))
            })
            .collect()
    }

    /// Apply a per-document rewrite, keeping ids and labels.
    pub fn map_documents<F>(&self, f: F) -> Result<LabeledCorpus>
    where
        F: FnMut(&Document) -> Document,
    {
        LabeledCorpus::new(self.documents.iter().map(f).collect())
    }
}

impl<'a> IntoIterator for &'a LabeledCorpus {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.documents.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guess from the file extension; anything other than `.csv` is JSONL.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Debug, Deserialize)]
struct JsonRecord {
    id: String,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'static str>,
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<LabeledCorpus> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CorpusFormat::Jsonl => parse_jsonl(&content),
        CorpusFormat::Csv => parse_csv(&content),
    }
}

fn strip_bom(content: &str) -> &str {
    content.strip_prefix('\u{feff}').unwrap_or(content)
}

fn parse_label(raw: Option<&str>, line: usize) -> Result<Option<Label>> {
    match raw {
        None | Some("") => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|e: Error| Error::parse(line, e.to_string())),
    }
}

/// serde_json appends "at line L column C" relative to the record; keep the
/// message and the column only.
fn json_error(line: usize, e: &serde_json::Error) -> Error {
    let msg = e.to_string();
    let msg = msg.rfind(" at line ").map_or(msg.as_str(), |i| &msg[..i]);
    Error::parse(line, format!("{msg} (column {})", e.column()))
}

/// Parse JSONL. Blank lines and lines starting with `#` (metadata headers
/// written by the CLI) are skipped.
pub fn parse_jsonl(content: &str) -> Result<LabeledCorpus> {
    let mut docs = Vec::new();
    for (i, line) in strip_bom(content).lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(trimmed).map_err(|e| json_error(line_no, &e))?;
        let label = parse_label(rec.label.as_deref(), line_no)?;
        docs.push(Document::new(rec.id, rec.text, label));
    }
    LabeledCorpus::new(docs)
}

/// Parse CSV with the exact header `id,text,label`.
pub fn parse_csv(content: &str) -> Result<LabeledCorpus> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(strip_bom(content).as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .clone();
    if headers.is_empty() {
        return LabeledCorpus::new(Vec::new());
    }
    if headers.iter().collect::<Vec<_>>() != ["id", "text", "label"] {
        return Err(Error::parse(
            1,
            format!("expected header id,text,label, found {}", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut docs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let label = parse_label(record.get(2), line)?;
        docs.push(Document::new(&record[0], &record[1], label));
    }
    LabeledCorpus::new(docs)
}

/// Write the canonical JSONL form: compact objects with keys `id`, `text`,
/// `label` in that order, `label` omitted when absent, one per line.
pub fn write_jsonl<W: Write>(corpus: &LabeledCorpus, mut out: W) -> std::io::Result<()> {
    for doc in corpus {
        let rec = JsonRecordOut {
            id: &doc.id,
            text: &doc.text,
            label: doc.label.map(Label::as_str),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.2,
            seed: 42,
            stratified: true,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Partition a labeled corpus into train and test sets. Both outputs keep the
/// original document order.
pub fn split(corpus: &LabeledCorpus, cfg: &SplitConfig) -> Result<(LabeledCorpus, LabeledCorpus)> {
    cfg.validate()?;
    let labels = corpus.labels()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut in_test = vec![false; corpus.len()];

    let groups: Vec<Vec<usize>> = if cfg.stratified {
        Label::ALL
            .iter()
            .map(|&label| {
                (0..labels.len())
                    .filter(|&i| labels[i] == label)
                    .collect::<Vec<_>>()
            })
            .collect()
    } else {
        vec![(0..labels.len()).collect()]
    };

    for (g, mut members) in groups.into_iter().enumerate() {
        if cfg.stratified && members.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "class {} has {} documents; stratified split needs at least 2",
                Label::ALL[g],
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * cfg.test_fraction).round() as usize;
        for &i in &members[..n_test] {
            in_test[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (doc, &is_test) in corpus.iter().zip(&in_test) {
        if is_test {
            test.push(doc.clone());
        } else {
            train.push(doc.clone());
        }
    }
    Ok((LabeledCorpus::new(train)?, LabeledCorpus::new(test)?))
}
