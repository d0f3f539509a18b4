//! Per-article lexico-grammatical measures: journalistic register (share of
//! tokens covered by cliche matches), sentiment intensity (same over an
//! emotion lexicon) and the first-person-plural verb ratio.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Document, Label, LabeledCorpus};
use crate::error::{Error, Result};
use crate::meta::sha256_hex;
use crate::preprocess::{parse_phrase_lines, NormalizationConfig, PhraseSet};

/// A named phrase set (cliches or emotive phrases), 1-3 tokens per phrase.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    name: String,
    phrases: PhraseSet,
    checksum: Option<String>,
}

impl Lexicon {
    pub fn new<I, S>(name: impl Into<String>, phrases: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        let phrases = PhraseSet::new(phrases)?;
        if phrases.is_empty() {
            return Err(Error::invalid(format!("lexicon {name:?} is empty")));
        }
        Ok(Lexicon {
            name,
            phrases,
            checksum: None,
        })
    }

    /// Load a phrase-per-line file, normalizing every entry with `norm` so
    /// it matches a corpus cleaned the same way.
    pub fn from_file(name: impl Into<String>, path: &Path, norm: &NormalizationConfig) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let content = String::from_utf8(bytes.clone())
            .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
        let mut lexicon = Lexicon::new(name, parse_phrase_lines(&content, Some(norm)))?;
        lexicon.checksum = Some(sha256_hex(&bytes));
        Ok(lexicon)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phrases(&self) -> &[String] {
        self.phrases.phrases()
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    /// sha256 of the source file, when loaded from disk.
    pub fn checksum(&self) -> Option<&str> {
        self.checksum.as_deref()
    }
}

/// Matched lexicon occurrences divided by the token count. Single-token
/// entries contribute one per matching token; a multiword entry contributes
/// one per non-overlapping occurrence.
pub fn lexicon_score(doc: &Document, lexicon: &Lexicon) -> Result<f64> {
    if doc.tokens.is_empty() {
        return Err(Error::EmptyDocument(doc.id.clone()));
    }
    let hits = lexicon.phrases.count_matches(&doc.tokens);
    Ok(hits as f64 / doc.tokens.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosToken {
    pub surface: String,
    pub pos: String,
}

impl PosToken {
    pub fn new(surface: impl Into<String>, pos: impl Into<String>) -> Self {
        PosToken {
            surface: surface.into(),
            pos: pos.into(),
        }
    }
}

/// Universal `VERB` or a Penn-Arabic verb tag (`VBD`, `VBP`, `VBN`, ...).
pub fn is_verb_tag(pos: &str) -> bool {
    pos == "VERB" || pos.starts_with("VB")
}

/// ن- prefix or -نا suffix on the surface form.
pub fn has_fpp_inflection(surface: &str) -> bool {
    surface.starts_with('ن') || surface.ends_with("نا")
}

/// Share of verbs carrying first-person-plural inflection; `None` when the
/// sequence has no verbs.
pub fn fpp_verb_ratio(tagged: &[PosToken]) -> Option<f64> {
    let (verbs, fpp) = tagged
        .iter()
        .filter(|t| is_verb_tag(&t.pos))
        .fold((0usize, 0usize), |(v, f), t| {
            (v + 1, f + usize::from(has_fpp_inflection(&t.surface)))
        });
    (verbs > 0).then(|| fpp as f64 / verbs as f64)
}

/// Parse tagger output: `surface<TAB>pos` per line, documents separated by
/// one or more blank lines.
pub fn parse_tagged(content: &str) -> Result<Vec<Vec<PosToken>>> {
    let mut docs = Vec::new();
    let mut current = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                docs.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (surface, pos) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(i + 1, "expected surface<TAB>pos"))?;
        let (surface, pos) = (surface.trim(), pos.trim());
        if surface.is_empty() || pos.is_empty() {
            return Err(Error::parse(i + 1, "empty surface or tag"));
        }
        current.push(PosToken::new(surface, pos));
    }
    if !current.is_empty() {
        docs.push(current);
    }
    Ok(docs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    JournalisticRegister,
    SentimentIntensity,
    FppVerbRatio,
}

impl Measure {
    pub const ALL: [Measure; 3] = [
        Measure::JournalisticRegister,
        Measure::SentimentIntensity,
        Measure::FppVerbRatio,
    ];

    /// Column name in the profile CSV.
    pub fn column(self) -> &'static str {
        match self {
            Measure::JournalisticRegister => "J",
            Measure::SentimentIntensity => "S",
            Measure::FppVerbRatio => "fpp_ratio",
        }
    }

    pub fn from_column(s: &str) -> Option<Measure> {
        match s {
            "J" | "j" => Some(Measure::JournalisticRegister),
            "S" | "s" => Some(Measure::SentimentIntensity),
            "fpp" | "fpp_ratio" => Some(Measure::FppVerbRatio),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureVector {
    pub doc_id: String,
    pub label: Label,
    pub journalistic_register: f64,
    pub sentiment_intensity: f64,
    pub fpp_verb_ratio: Option<f64>,
}

impl MeasureVector {
    /// Value of one measure, NaN when undefined.
    pub fn get(&self, measure: Measure) -> f64 {
        match measure {
            Measure::JournalisticRegister => self.journalistic_register,
            Measure::SentimentIntensity => self.sentiment_intensity,
            Measure::FppVerbRatio => self.fpp_verb_ratio.unwrap_or(f64::NAN),
        }
    }
}

/// Measure vectors grouped by class, each group in corpus order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusProfile {
    pub fake: Vec<MeasureVector>,
    pub real: Vec<MeasureVector>,
}

impl CorpusProfile {
    pub fn group(&self, label: Label) -> &[MeasureVector] {
        match label {
            Label::Fake => &self.fake,
            Label::Real => &self.real,
        }
    }

    pub fn column(&self, label: Label, measure: Measure) -> Vec<f64> {
        self.group(label).iter().map(|m| m.get(measure)).collect()
    }

    pub fn len(&self) -> usize {
        self.fake.len() + self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// CSV `doc_id,label,J,S,fpp_ratio`, fake group first; undefined ratios
    /// are empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::invalid(format!("csv: {e}"));
        w.write_record(["doc_id", "label", "J", "S", "fpp_ratio"]).map_err(csv_err)?;
        for m in self.fake.iter().chain(&self.real) {
            w.write_record([
                m.doc_id.clone(),
                m.label.to_string(),
                m.journalistic_register.to_string(),
                m.sentiment_intensity.to_string(),
                m.fpp_verb_ratio.map(|v| v.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("csv: {e}")))?;
        Ok(())
    }

    /// Inverse of [`CorpusProfile::write_csv`]; `#` comment lines are skipped.
    pub fn read_csv(content: &str) -> Result<CorpusProfile> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(content.as_bytes());
        let mut profile = CorpusProfile::default();
        for record in reader.records() {
            let record = record.map_err(|e| {
                Error::parse(e.position().map(|p| p.line() as usize).unwrap_or(0), e.to_string())
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.len() != 5 {
                return Err(Error::parse(line, format!("expected 5 fields, found {}", record.len())));
            }
            let label: Label = record[1].parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::parse(line, format!("not a number: {s:?}")))
            };
            let m = MeasureVector {
                doc_id: record[0].to_string(),
                label,
                journalistic_register: num(&record[2])?,
                sentiment_intensity: num(&record[3])?,
                fpp_verb_ratio: if record[4].is_empty() { None } else { Some(num(&record[4])?) },
            };
            match label {
                Label::Fake => profile.fake.push(m),
                Label::Real => profile.real.push(m),
            }
        }
        Ok(profile)
    }
}

/// Apply the three measures to every labeled document. `tagged`, when given,
/// must align one-to-one with the corpus documents.
pub fn corpus_profile(
    corpus: &LabeledCorpus,
    cliches: &Lexicon,
    emotions: &Lexicon,
    tagged: Option<&[Vec<PosToken>]>,
) -> Result<CorpusProfile> {
    if let Some(t) = tagged {
        if t.len() != corpus.len() {
            return Err(Error::DimensionMismatch {
                expected: corpus.len(),
                found: t.len(),
            });
        }
    }
    let vectors: Vec<Result<MeasureVector>> = corpus
        .documents()
        .par_iter()
        .enumerate()
        .map(|(i, doc)| {
            let wrap = |e: Error| Error::InDocument {
                id: doc.id.clone(),
                source: Box::new(e),
            };
            let label = doc
                .label
                .ok_or_else(|| wrap(Error::invalid("document is unlabeled")))?;
            Ok(MeasureVector {
                doc_id: doc.id.clone(),
                label,
                journalistic_register: lexicon_score(doc, cliches).map_err(wrap)?,
                sentiment_intensity: lexicon_score(doc, emotions).map_err(wrap)?,
                fpp_verb_ratio: tagged.and_then(|t| fpp_verb_ratio(&t[i])),
            })
        })
        .collect();

    let mut profile = CorpusProfile::default();
    for v in vectors {
        let v = v?;
        match v.label {
            Label::Fake => profile.fake.push(v),
            Label::Real => profile.real.push(v),
        }
    }
    Ok(profile)
}
