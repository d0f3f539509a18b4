//! C ABI for the satira toolkit.
//!
//! Conventions:
//! - Fallible functions return a [`SatiraStatus`]; results go through out-pointers.
//! - On failure a message is stored per thread; fetch it with
//!   [`satira_last_error_message`] and release it with [`satira_string_free`].
//! - Lexicons and models are opaque handles created by `*_load` functions and
//!   released by the matching `*_free`.
//! - Strings are NUL-terminated UTF-8. Strings returned by the library are
//!   owned by the caller and must be released with [`satira_string_free`].
//! - Panics never cross the boundary; they surface as `SATIRA_STATUS_PANIC`.
//!
//! # Safety
//!
//! Pointer arguments must be valid for the duration of the call and non-null
//! unless documented otherwise. Handles must come from this library and must
//! not be used after being freed.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use satira::eval::evaluate;
use satira::models::persist::load_model;
use satira::models::TrainedPipeline;
use satira::preprocess::{normalize, NormalizationConfig};
use satira::stats::{ttest_two_tailed, NanPolicy, TTestVariant};
use satira::stylometrics::{fpp_verb_ratio, lexicon_score, Lexicon, PosToken};
use satira::{Document, Error, Label};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatiraStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    DimensionMismatch = 6,
    InsufficientData = 7,
    ModelFormat = 8,
    EmptyDocument = 9,
    Panic = 10,
    Other = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatiraLabel {
    Fake = 0,
    Real = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatiraTTestVariant {
    Pooled = 0,
    Welch = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatiraNanPolicy {
    Propagate = 0,
    Omit = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatiraTTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Per-class arrays are indexed by [`SatiraLabel`]; `confusion` is row-major
/// `[gold][predicted]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatiraEvalReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
    pub confusion: [usize; 4],
}

/// Opaque phrase lexicon.
pub struct SatiraLexicon {
    inner: Lexicon,
}

/// Opaque trained classifier.
pub struct SatiraModel {
    inner: TrainedPipeline,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<String>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(SatiraStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = status_of(&e);
        Failure(status, e.to_string())
    }
}

fn status_of(e: &Error) -> SatiraStatus {
    match e {
        Error::Io { .. } => SatiraStatus::Io,
        Error::Parse { .. } | Error::UnknownLabel(_) | Error::DuplicateId(_) => SatiraStatus::Parse,
        Error::InvalidArgument(_) => SatiraStatus::InvalidArgument,
        Error::EmptyDocument(_) => SatiraStatus::EmptyDocument,
        Error::DimensionMismatch { .. } => SatiraStatus::DimensionMismatch,
        Error::InsufficientData(_) => SatiraStatus::InsufficientData,
        Error::ModelFormat(_) => SatiraStatus::ModelFormat,
        Error::InFile { source, .. } | Error::InDocument { source, .. } => status_of(source),
        _ => SatiraStatus::Other,
    }
}

/// Run `f`, converting errors and panics into a status code.
fn guard<F>(f: F) -> SatiraStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SatiraStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            SatiraStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SatiraStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SatiraStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(SatiraStatus::InvalidArgument, "string contains NUL".into()))
}

fn to_label(raw: i32) -> Result<Label, Failure> {
    match raw {
        0 => Ok(Label::Fake),
        1 => Ok(Label::Real),
        _ => Err(Failure(
            SatiraStatus::InvalidArgument,
            format!("label {raw} is neither SATIRA_LABEL_FAKE nor SATIRA_LABEL_REAL"),
        )),
    }
}

fn from_label(l: Label) -> SatiraLabel {
    match l {
        Label::Fake => SatiraLabel::Fake,
        Label::Real => SatiraLabel::Real,
    }
}

/// Library version, a static string that must not be freed.
#[no_mangle]
pub extern "C" fn satira_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Free the result
/// with [`satira_string_free`].
#[no_mangle]
pub extern "C" fn satira_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_deref() {
        Some(m) => CString::new(m.replace('\0', " ")).map_or(std::ptr::null_mut(), CString::into_raw),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn satira_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Normalize Arabic text with the default settings (diacritics, Latin
/// letters and special characters removed, whitespace collapsed).
#[no_mangle]
pub unsafe extern "C" fn satira_normalize(text: *const c_char, out: *mut *mut c_char) -> SatiraStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        *out = c_string(normalize(text, &NormalizationConfig::default()))?;
        Ok(())
    })
}

/// Load a phrase lexicon (one phrase per line, `#` comments).
#[no_mangle]
pub unsafe extern "C" fn satira_lexicon_load(
    name: *const c_char,
    path: *const c_char,
    out: *mut *mut SatiraLexicon,
) -> SatiraStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let inner = Lexicon::from_file(name, Path::new(path), &NormalizationConfig::default())?;
        *out = Box::into_raw(Box::new(SatiraLexicon { inner }));
        Ok(())
    })
}

/// Build a lexicon from newline-separated phrases held in memory.
#[no_mangle]
pub unsafe extern "C" fn satira_lexicon_from_lines(
    name: *const c_char,
    lines: *const c_char,
    out: *mut *mut SatiraLexicon,
) -> SatiraStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let lines = str_arg(lines, "lines")?;
        let out = out_arg(out, "out")?;
        let norm = NormalizationConfig::default();
        let phrases = satira::preprocess::parse_phrase_lines(lines, Some(&norm));
        let inner = Lexicon::new(name, phrases)?;
        *out = Box::into_raw(Box::new(SatiraLexicon { inner }));
        Ok(())
    })
}

/// Number of phrases in a lexicon.
#[no_mangle]
pub unsafe extern "C" fn satira_lexicon_len(lexicon: *const SatiraLexicon) -> usize {
    lexicon.as_ref().map_or(0, |l| l.inner.len())
}

/// Lexicon matches per token of `text`, after normalization.
#[no_mangle]
pub unsafe extern "C" fn satira_lexicon_score(
    lexicon: *const SatiraLexicon,
    text: *const c_char,
    out: *mut f64,
) -> SatiraStatus {
    guard(|| {
        let lexicon = lexicon.as_ref().ok_or_else(|| null("lexicon"))?;
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let doc = Document::new("ffi", normalize(text, &NormalizationConfig::default()), None);
        *out = lexicon_score(&doc, &lexicon.inner)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn satira_lexicon_free(lexicon: *mut SatiraLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Share of verbs inflected for first person plural. `surfaces` and `tags`
/// hold `len` strings each. `*defined` is false when there are no verbs, in
/// which case `*out` is NaN.
#[no_mangle]
pub unsafe extern "C" fn satira_fpp_verb_ratio(
    surfaces: *const *const c_char,
    tags: *const *const c_char,
    len: usize,
    out: *mut f64,
    defined: *mut bool,
) -> SatiraStatus {
    guard(|| {
        let surfaces = slice_arg(surfaces, len, "surfaces")?;
        let tags = slice_arg(tags, len, "tags")?;
        let out = out_arg(out, "out")?;
        let defined = out_arg(defined, "defined")?;
        let tokens = surfaces
            .iter()
            .zip(tags)
            .map(|(&s, &t)| Ok(PosToken::new(str_arg(s, "surface")?, str_arg(t, "tag")?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        let ratio = fpp_verb_ratio(&tokens);
        *defined = ratio.is_some();
        *out = ratio.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Two-tailed two-sample t-test.
#[no_mangle]
pub unsafe extern "C" fn satira_ttest(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    variant: SatiraTTestVariant,
    nan_policy: SatiraNanPolicy,
    out: *mut SatiraTTestResult,
) -> SatiraStatus {
    guard(|| {
        let a = slice_arg(a, n_a, "a")?;
        let b = slice_arg(b, n_b, "b")?;
        let out = out_arg(out, "out")?;
        let variant = match variant {
            SatiraTTestVariant::Pooled => TTestVariant::Pooled,
            SatiraTTestVariant::Welch => TTestVariant::Welch,
        };
        let policy = match nan_policy {
            SatiraNanPolicy::Propagate => NanPolicy::Propagate,
            SatiraNanPolicy::Omit => NanPolicy::Omit,
        };
        let r = ttest_two_tailed(a, b, variant, policy)?;
        *out = SatiraTTestResult {
            statistic: r.statistic,
            p_value: r.p_value,
            df: r.df,
            n_a: r.n_a,
            n_b: r.n_b,
        };
        Ok(())
    })
}

/// Load a model file written by `satira train`.
#[no_mangle]
pub unsafe extern "C" fn satira_model_load(path: *const c_char, out: *mut *mut SatiraModel) -> SatiraStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let saved = load_model(Path::new(path))?;
        *out = Box::into_raw(Box::new(SatiraModel { inner: saved.pipeline }));
        Ok(())
    })
}

/// Classify one document. The text is normalized first; `probability_fake`
/// may be NULL.
#[no_mangle]
pub unsafe extern "C" fn satira_model_predict(
    model: *const SatiraModel,
    text: *const c_char,
    label: *mut SatiraLabel,
    probability_fake: *mut f64,
) -> SatiraStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let text = str_arg(text, "text")?;
        let label = out_arg(label, "label")?;
        let doc = Document::new("ffi", normalize(text, &NormalizationConfig::default()), None);
        let p = model.inner.predict(std::slice::from_ref(&doc))?[0];
        *label = from_label(p.label);
        if let Some(out) = probability_fake.as_mut() {
            *out = p.probability;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn satira_model_free(model: *mut SatiraModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Accuracy, per-class and macro precision/recall/F1, and the confusion
/// matrix of `n` predictions against gold labels. Labels are
/// [`SatiraLabel`] values passed as `int32_t`.
#[no_mangle]
pub unsafe extern "C" fn satira_evaluate(
    predicted: *const i32,
    gold: *const i32,
    n: usize,
    out: *mut SatiraEvalReport,
) -> SatiraStatus {
    guard(|| {
        let predicted = slice_arg(predicted, n, "predicted")?;
        let gold = slice_arg(gold, n, "gold")?;
        let out = out_arg(out, "out")?;
        let p = predicted.iter().map(|&l| to_label(l)).collect::<Result<Vec<_>, _>>()?;
        let g = gold.iter().map(|&l| to_label(l)).collect::<Result<Vec<_>, _>>()?;
        let r = evaluate(&p, &g)?;
        *out = SatiraEvalReport {
            accuracy: r.accuracy,
            macro_precision: r.macro_precision,
            macro_recall: r.macro_recall,
            macro_f1: r.macro_f1,
            precision: r.per_class.map(|m| m.precision),
            recall: r.per_class.map(|m| m.recall),
            f1: r.per_class.map(|m| m.f1),
            confusion: [r.confusion[0][0], r.confusion[0][1], r.confusion[1][0], r.confusion[1][1]],
        };
        Ok(())
    })
}
