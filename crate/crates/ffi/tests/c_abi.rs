use std::ffi::{c_char, CStr, CString};
use std::ptr;

use satira::corpus::{Document, Label, LabeledCorpus};
use satira::models::persist::save_model;
use satira::models::{train_pipeline, PipelineConfig};
use satira::vectorize::VectorizerConfig;
use satira_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = satira_last_error_message();
    assert!(!p.is_null());
    let msg = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { satira_string_free(p) };
    msg
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(satira_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn normalize_round_trip() {
    let input = cstr("مَرْحَبًا   Hello بالعالم!");
    let mut out: *mut c_char = ptr::null_mut();
    let st = unsafe { satira_normalize(input.as_ptr(), &mut out) };
    assert_eq!(st, SatiraStatus::Ok);
    let s = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { satira_string_free(out) };
    assert_eq!(s, "مرحبا بالعالم");
    assert!(satira_last_error_message().is_null());
}

#[test]
fn null_arguments_are_reported() {
    let mut out: *mut c_char = ptr::null_mut();
    let st = unsafe { satira_normalize(ptr::null(), &mut out) };
    assert_eq!(st, SatiraStatus::NullPointer);
    assert!(last_error().contains("text"));
    let input = cstr("x");
    assert_eq!(unsafe { satira_normalize(input.as_ptr(), ptr::null_mut()) }, SatiraStatus::NullPointer);
}

#[test]
fn invalid_utf8_is_reported() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut out: *mut c_char = ptr::null_mut();
    let st = unsafe { satira_normalize(bytes.as_ptr().cast(), &mut out) };
    assert_eq!(st, SatiraStatus::InvalidUtf8);
}

#[test]
fn lexicon_scoring() {
    let name = cstr("cliches");
    let lines = cstr("# comment\nقال الناطق باسم\nوأكد\n");
    let mut lex: *mut SatiraLexicon = ptr::null_mut();
    assert_eq!(unsafe { satira_lexicon_from_lines(name.as_ptr(), lines.as_ptr(), &mut lex) }, SatiraStatus::Ok);
    assert_eq!(unsafe { satira_lexicon_len(lex) }, 2);
    let text = cstr("قال الناطق باسم الوزارة وأكد الخبر");
    let mut score = -1.0;
    assert_eq!(unsafe { satira_lexicon_score(lex, text.as_ptr(), &mut score) }, SatiraStatus::Ok);
    // six tokens, two matches
    assert_eq!(score, 2.0 / 6.0);

    let empty = cstr("   ");
    assert_eq!(unsafe { satira_lexicon_score(lex, empty.as_ptr(), &mut score) }, SatiraStatus::EmptyDocument);
    unsafe { satira_lexicon_free(lex) };
    unsafe { satira_lexicon_free(ptr::null_mut()) };

    let mut none: *mut SatiraLexicon = ptr::null_mut();
    let blank = cstr("# only a comment\n");
    let st = unsafe { satira_lexicon_from_lines(name.as_ptr(), blank.as_ptr(), &mut none) };
    assert_eq!(st, SatiraStatus::InvalidArgument);
    assert!(none.is_null());
}

#[test]
fn lexicon_from_missing_file() {
    let name = cstr("x");
    let path = cstr("/nonexistent/lexicon.txt");
    let mut lex: *mut SatiraLexicon = ptr::null_mut();
    assert_eq!(unsafe { satira_lexicon_load(name.as_ptr(), path.as_ptr(), &mut lex) }, SatiraStatus::Io);
    assert!(last_error().contains("/nonexistent/lexicon.txt"));
}

#[test]
fn fpp_ratio() {
    let s: Vec<CString> = ["نروي", "كتب", "البيت", "شارفنا"].iter().map(|x| cstr(x)).collect();
    let t: Vec<CString> = ["VERB", "VBD", "NOUN", "VERB"].iter().map(|x| cstr(x)).collect();
    let sp: Vec<*const c_char> = s.iter().map(|c| c.as_ptr()).collect();
    let tp: Vec<*const c_char> = t.iter().map(|c| c.as_ptr()).collect();
    let mut out = 0.0;
    let mut defined = false;
    let st = unsafe { satira_fpp_verb_ratio(sp.as_ptr(), tp.as_ptr(), 4, &mut out, &mut defined) };
    assert_eq!(st, SatiraStatus::Ok);
    assert!(defined);
    assert_eq!(out, 2.0 / 3.0);

    let st = unsafe { satira_fpp_verb_ratio(sp.as_ptr(), tp.as_ptr(), 0, &mut out, &mut defined) };
    assert_eq!(st, SatiraStatus::Ok);
    assert!(!defined);
    assert!(out.is_nan());
}

#[test]
fn ttest_fixture() {
    let a = [1.0, 2.0, 3.0];
    let b = [1.0, 2.0, 4.0];
    let mut r = SatiraTTestResult {
        statistic: 0.0,
        p_value: 0.0,
        df: 0.0,
        n_a: 0,
        n_b: 0,
    };
    let st = unsafe {
        satira_ttest(
            a.as_ptr(),
            3,
            b.as_ptr(),
            3,
            SatiraTTestVariant::Pooled,
            SatiraNanPolicy::Omit,
            &mut r,
        )
    };
    assert_eq!(st, SatiraStatus::Ok);
    assert!((r.statistic + 1.0 / 10f64.sqrt()).abs() < 1e-12);
    assert_eq!((r.n_a, r.n_b), (3, 3));
    assert_eq!(r.df, 4.0);

    let st = unsafe {
        satira_ttest(a.as_ptr(), 1, b.as_ptr(), 3, SatiraTTestVariant::Welch, SatiraNanPolicy::Omit, &mut r)
    };
    assert_eq!(st, SatiraStatus::InsufficientData);
}

#[test]
fn evaluate_fixture() {
    let gold = [0, 0, 1, 1];
    let pred = [0, 1, 1, 1];
    let mut r = std::mem::MaybeUninit::<SatiraEvalReport>::uninit();
    let st = unsafe { satira_evaluate(pred.as_ptr(), gold.as_ptr(), 4, r.as_mut_ptr()) };
    assert_eq!(st, SatiraStatus::Ok);
    let r = unsafe { r.assume_init() };
    assert_eq!(r.accuracy, 0.75);
    assert!((r.macro_f1 - 11.0 / 15.0).abs() < 1e-12);
    assert_eq!(r.confusion, [1, 1, 0, 2]);
    assert_eq!(r.recall, [0.5, 1.0]);

    let bad = [0, 7, 1, 1];
    let mut r = std::mem::MaybeUninit::<SatiraEvalReport>::uninit();
    let st = unsafe { satira_evaluate(bad.as_ptr(), gold.as_ptr(), 4, r.as_mut_ptr()) };
    assert_eq!(st, SatiraStatus::InvalidArgument);
}

#[test]
fn model_load_and_predict() {
    let mut docs = Vec::new();
    for i in 0..10 {
        docs.push(Document::new(format!("f{i}"), "نكتة ساخر كذب", Some(Label::Fake)));
        docs.push(Document::new(format!("r{i}"), "وزير رسمي تقرير", Some(Label::Real)));
    }
    let corpus = LabeledCorpus::new(docs).unwrap();
    let cfg = PipelineConfig {
        vectorizer: VectorizerConfig {
            max_df: 1.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let (pipeline, _) = train_pipeline(&corpus, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&path, &pipeline, &cfg, serde_json::Value::Null).unwrap();

    let p = cstr(path.to_str().unwrap());
    let mut model: *mut SatiraModel = ptr::null_mut();
    assert_eq!(unsafe { satira_model_load(p.as_ptr(), &mut model) }, SatiraStatus::Ok);
    let mut label = SatiraLabel::Real;
    let mut prob = 0.0;
    let text = cstr("نُكتة ساخر");
    assert_eq!(unsafe { satira_model_predict(model, text.as_ptr(), &mut label, &mut prob) }, SatiraStatus::Ok);
    assert_eq!(label, SatiraLabel::Fake);
    assert!(prob > 0.5);
    let text = cstr("وزير");
    assert_eq!(unsafe { satira_model_predict(model, text.as_ptr(), &mut label, ptr::null_mut()) }, SatiraStatus::Ok);
    assert_eq!(label, SatiraLabel::Real);
    unsafe { satira_model_free(model) };

    std::fs::write(&path, "{\"format\":\"satira-model\",\"version\":99}").unwrap();
    let mut model: *mut SatiraModel = ptr::null_mut();
    assert_eq!(unsafe { satira_model_load(p.as_ptr(), &mut model) }, SatiraStatus::ModelFormat);
    assert!(last_error().contains("version 99"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/satira.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\n\
             int probe(void) {{\n\
               SatiraTTestResult r; double a[3] = {{1, 2, 3}};\n\
               SatiraStatus s = satira_ttest(a, 3, a, 3, SATIRA_T_TEST_VARIANT_POOLED, SATIRA_NAN_POLICY_OMIT, &r);\n\
               char *e = satira_last_error_message(); satira_string_free(e);\n\
               return s == SATIRA_STATUS_OK ? 0 : 1;\n\
             }}\n"
        ),
    )
    .unwrap();
    let compiler = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = std::process::Command::new(&compiler)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "{compiler} rejected the generated header"),
        Err(e) => eprintln!("no C compiler ({compiler}: {e}); header check not run"),
    }
}
