use std::collections::BTreeSet;

use proptest::prelude::*;
use satira::corpus::{parse_jsonl, split, write_jsonl, Document, Label, LabeledCorpus, SplitConfig};
use satira::preprocess::{
    apply_stop_phrases, ngram_frequency, normalize, NormalizationConfig, StopPhraseList,
};
use satira::stylometrics::{fpp_verb_ratio, lexicon_score, Lexicon, PosToken};

const MIXED: &[char] = &[
    'ك', 'ت', 'ب', 'ن', 'ا', 'ل', 'م', 'ي', 'ة', 'ى', 'ء', 'أ', '\u{064E}', '\u{064F}', '\u{0650}', '\u{0651}',
    '\u{0652}', '\u{0670}', '\u{064B}', 'a', 'Z', 'q', '1', '٣', '۵', '!', '"', '\\', '،', '؟', '.', '-', ' ', ' ',
    '\t', '\n', '\u{00A0}', 'é', '中', '😀',
];

fn mixed_text(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(MIXED), 0..max).prop_map(String::from_iter)
}

const WORDS: &[&str] = &["قال", "الناطق", "باسم", "وأكد", "الخبر", "في", "من", "نكتب", "كتبنا", "يكتب"];

fn token_list(min: usize, max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(WORDS).prop_map(String::from), min..max)
}

fn all_configs() -> Vec<NormalizationConfig> {
    (0..16u8)
        .map(|m| NormalizationConfig {
            strip_diacritics: m & 1 != 0,
            strip_latin: m & 2 != 0,
            strip_special: m & 4 != 0,
            collapse_whitespace: m & 8 != 0,
        })
        .collect()
}

fn labeled(labels: &[bool]) -> LabeledCorpus {
    let docs = labels
        .iter()
        .enumerate()
        .map(|(i, &fake)| {
            let label = if fake { Label::Fake } else { Label::Real };
            Document::new(format!("d{i}"), "نص", Some(label))
        })
        .collect();
    LabeledCorpus::new(docs).unwrap()
}

proptest! {
    #[test]
    fn split_is_a_partition(
        labels in prop::collection::vec(any::<bool>(), 4..80),
        fraction in 0.01f64..0.99,
        seed in any::<u64>(),
        stratified in any::<bool>(),
    ) {
        let n_fake = labels.iter().filter(|&&f| f).count();
        prop_assume!(!stratified || (n_fake >= 2 && labels.len() - n_fake >= 2));
        let corpus = labeled(&labels);
        let cfg = SplitConfig { test_fraction: fraction, seed, stratified };
        let (train, test) = split(&corpus, &cfg).unwrap();
        let a: BTreeSet<_> = train.iter().map(|d| d.id.clone()).collect();
        let b: BTreeSet<_> = test.iter().map(|d| d.id.clone()).collect();
        prop_assert!(a.is_disjoint(&b));
        prop_assert_eq!(a.len() + b.len(), corpus.len());
        let all: BTreeSet<_> = corpus.iter().map(|d| d.id.clone()).collect();
        prop_assert_eq!(a.union(&b).cloned().collect::<BTreeSet<_>>(), all);
    }

    #[test]
    fn jsonl_round_trip_is_byte_identical(
        texts in prop::collection::vec(mixed_text(40), 1..10),
        labels in prop::collection::vec(prop::option::of(any::<bool>()), 10),
    ) {
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let label = labels[i].map(|f| if f { Label::Fake } else { Label::Real });
                Document::new(format!("id-{i}\"x"), t.clone(), label)
            })
            .collect();
        let corpus = LabeledCorpus::new(docs).unwrap();
        let mut first = Vec::new();
        write_jsonl(&corpus, &mut first).unwrap();
        let reloaded = parse_jsonl(std::str::from_utf8(&first).unwrap()).unwrap();
        let mut second = Vec::new();
        write_jsonl(&reloaded, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn normalize_is_idempotent(text in mixed_text(80)) {
        for cfg in all_configs() {
            let once = normalize(&text, &cfg);
            prop_assert_eq!(normalize(&once, &cfg), once.clone(), "{:?}", cfg);
        }
    }

    #[test]
    fn unigram_counts_sum_to_token_count(docs in prop::collection::vec(token_list(0, 30), 1..8)) {
        let docs: Vec<Document> = docs
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i}"), t.join(" "), None))
            .collect();
        let freq = ngram_frequency(docs.iter(), 1).unwrap();
        let total: usize = docs.iter().map(Document::len).sum();
        prop_assert_eq!(freq.total(), total as u64);
    }

    #[test]
    fn stop_phrases_never_grow_documents(tokens in token_list(0, 40), pick in prop::collection::vec(0usize..WORDS.len(), 1..4)) {
        let phrase = pick.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" ");
        let list = StopPhraseList::new([phrase.as_str()]).unwrap();
        let doc = Document::new("d", tokens.join(" "), None);
        let cleaned = apply_stop_phrases(&doc, &list);
        prop_assert!(cleaned.len() <= doc.len());
        if !tokens.join(" ").contains(&phrase) {
            prop_assert_eq!(cleaned.tokens, doc.tokens);
        }
    }

    #[test]
    fn stop_phrases_absent_is_noop(tokens in token_list(0, 40)) {
        let list = StopPhraseList::new(["غائب", "عبارة غير موجودة"]).unwrap();
        let doc = Document::new("d", tokens.join(" "), None);
        prop_assert_eq!(apply_stop_phrases(&doc, &list), doc);
    }

    #[test]
    fn lexicon_score_is_a_proportion(tokens in token_list(1, 50)) {
        let lex = Lexicon::new("c", ["قال الناطق باسم", "وأكد", "من", "في من"]).unwrap();
        let s = lexicon_score(&Document::new("d", tokens.join(" "), None), &lex).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn single_token_lexicon_ignores_order_and_duplication(
        tokens in token_list(1, 40),
        perm_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let lex = Lexicon::new("c", ["وأكد", "من", "نكتب"]).unwrap();
        let doc = Document::new("d", tokens.join(" "), None);
        let base = lexicon_score(&doc, &lex).unwrap();

        let mut shuffled = tokens.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        prop_assert_eq!(lexicon_score(&doc.with_tokens(shuffled), &lex).unwrap(), base);

        let doubled: Vec<String> = tokens.iter().flat_map(|t| [t.clone(), t.clone()]).collect();
        prop_assert_eq!(lexicon_score(&doc.with_tokens(doubled), &lex).unwrap(), base);
    }

    #[test]
    fn fpp_ratio_ignores_non_verbs(
        verbs in prop::collection::vec((prop::sample::select(WORDS), prop::sample::select(&["VERB", "VBD", "VBP"][..])), 0..20),
        extra in prop::collection::vec((prop::sample::select(WORDS), prop::sample::select(&["NOUN", "ADJ", "PUNC", "NN", "PRP"][..]), 0usize..30), 0..20),
    ) {
        let tagged: Vec<PosToken> = verbs.iter().map(|(s, t)| PosToken::new(*s, *t)).collect();
        let base = fpp_verb_ratio(&tagged);
        let mut with_extra = tagged.clone();
        for (s, t, at) in &extra {
            let pos = at % (with_extra.len() + 1);
            with_extra.insert(pos, PosToken::new(*s, *t));
        }
        prop_assert_eq!(fpp_verb_ratio(&with_extra), base);
    }
}
