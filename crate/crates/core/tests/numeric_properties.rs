use proptest::prelude::*;
use satira::corpus::Document;
use satira::stats::{student_t_two_tailed_p, ttest_two_tailed, NanPolicy, TTestVariant};
use satira::vectorize::{analyze, fit, transform, Analyzer, VectorizerConfig, Weighting};

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 2..30)
}

fn variant() -> impl Strategy<Value = TTestVariant> {
    prop_oneof![Just(TTestVariant::Pooled), Just(TTestVariant::Welch)]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

const VOCAB: &[&str] = &["سلام", "خبر", "وزير", "نكتة", "في", "من", "غزة", "الاثنين"];

fn corpus() -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec(prop::collection::vec(prop::sample::select(VOCAB), 0..25), 2..12).prop_map(|docs| {
        docs.iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i}"), t.join(" "), None))
            .collect()
    })
}

fn config() -> impl Strategy<Value = VectorizerConfig> {
    (
        prop_oneof![Just(Weighting::Count), Just(Weighting::Tfidf)],
        prop_oneof![Just(Analyzer::Word), Just(Analyzer::Char)],
        1usize..3,
        0usize..2,
        1usize..50,
    )
        .prop_map(|(weighting, analyzer, lo, extra, max_features)| VectorizerConfig {
            weighting,
            analyzer,
            ngram_range: (lo, lo + extra),
            max_features,
            max_df: 1.0,
        })
}

proptest! {
    #[test]
    fn swapping_samples_negates_statistic(a in sample(), b in sample(), v in variant()) {
        let (Ok(ab), Ok(ba)) = (
            ttest_two_tailed(&a, &b, v, NanPolicy::Omit),
            ttest_two_tailed(&b, &a, v, NanPolicy::Omit),
        ) else {
            return Ok(());
        };
        prop_assert_eq!(ab.statistic, -ba.statistic);
        prop_assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn shift_leaves_test_unchanged(a in sample(), b in sample(), c in -10.0f64..10.0, v in variant()) {
        let Ok(base) = ttest_two_tailed(&a, &b, v, NanPolicy::Omit) else { return Ok(()) };
        prop_assume!(base.statistic.is_finite());
        let sa: Vec<f64> = a.iter().map(|x| x + c).collect();
        let sb: Vec<f64> = b.iter().map(|x| x + c).collect();
        let shifted = ttest_two_tailed(&sa, &sb, v, NanPolicy::Omit).unwrap();
        prop_assert!(close(base.statistic, shifted.statistic, 1e-12), "{} vs {}", base.statistic, shifted.statistic);
        prop_assert!((base.p_value - shifted.p_value).abs() <= 1e-12);
    }

    #[test]
    fn scale_leaves_statistic_unchanged(a in sample(), b in sample(), k in 0.01f64..100.0, v in variant()) {
        let Ok(base) = ttest_two_tailed(&a, &b, v, NanPolicy::Omit) else { return Ok(()) };
        prop_assume!(base.statistic.is_finite());
        let sa: Vec<f64> = a.iter().map(|x| x * k).collect();
        let sb: Vec<f64> = b.iter().map(|x| x * k).collect();
        let scaled = ttest_two_tailed(&sa, &sb, v, NanPolicy::Omit).unwrap();
        prop_assert!(close(base.statistic, scaled.statistic, 1e-12), "{} vs {}", base.statistic, scaled.statistic);
    }

    #[test]
    fn p_value_decreases_with_statistic(t1 in 0.0f64..50.0, dt in 0.0f64..50.0, df in 1.0f64..500.0) {
        let p1 = student_t_two_tailed_p(t1, df);
        let p2 = student_t_two_tailed_p(t1 + dt, df);
        prop_assert!(p2 <= p1, "p({}) = {} > p({}) = {}", t1 + dt, p2, t1, p1);
        prop_assert!((0.0..=1.0).contains(&p1));
        prop_assert_eq!(student_t_two_tailed_p(-t1, df), p1);
    }

    #[test]
    fn count_columns_match_fit_frequencies(docs in corpus(), cfg in config()) {
        let cfg = VectorizerConfig { weighting: Weighting::Count, ..cfg };
        let Ok(vocab) = fit(&docs, &cfg) else { return Ok(()) };
        let x = transform(&docs, &vocab, &cfg).unwrap();
        for (col, feature) in vocab.features().iter().enumerate() {
            let column_sum: f64 = (0..x.n_rows()).map(|r| x.get(r, col)).sum();
            let occurrences = docs
                .iter()
                .map(|d| analyze(d, cfg.analyzer, cfg.ngram_range).iter().filter(|g| *g == feature).count())
                .sum::<usize>();
            prop_assert!(column_sum <= occurrences as f64);
            prop_assert_eq!(column_sum, occurrences as f64);
        }
    }

    #[test]
    fn tfidf_rows_are_unit_or_empty(docs in corpus(), cfg in config()) {
        let cfg = VectorizerConfig { weighting: Weighting::Tfidf, ..cfg };
        let Ok(vocab) = fit(&docs, &cfg) else { return Ok(()) };
        let x = transform(&docs, &vocab, &cfg).unwrap();
        for r in 0..x.n_rows() {
            let n = x.row_norm(r);
            prop_assert!(n.abs() < 1e-9 || (n - 1.0).abs() < 1e-9, "row {} norm {}", r, n);
        }
    }

    #[test]
    fn transform_commutes_with_permutation(docs in corpus(), cfg in config(), rot in 0usize..12) {
        let Ok(vocab) = fit(&docs, &cfg) else { return Ok(()) };
        let x = transform(&docs, &vocab, &cfg).unwrap();
        let k = rot % docs.len();
        let mut rotated = docs.clone();
        rotated.rotate_left(k);
        let y = transform(&rotated, &vocab, &cfg).unwrap();
        for r in 0..docs.len() {
            prop_assert_eq!(y.row(r), x.row((r + k) % docs.len()));
        }
    }

    #[test]
    fn fit_is_deterministic(docs in corpus(), cfg in config()) {
        let a = fit(&docs, &cfg);
        let b = fit(&docs, &cfg);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "fit succeeded only once"),
        }
    }
}
