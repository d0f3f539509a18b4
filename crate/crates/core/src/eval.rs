//! Classification metrics and naive Bayes feature rankings.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::models::nb::NaiveBayesModel;
use crate::vectorize::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// The class was never predicted, so precision is defined as 0.
    pub precision_undefined: bool,
    /// The class never occurs in the gold labels, so recall is defined as 0.
    pub recall_undefined: bool,
    /// Precision and recall are both 0, so F1 is defined as 0.
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    /// Indexed by [`Label::index`].
    pub per_class: [ClassMetrics; 2],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// `confusion[gold][predicted]`, indexed by [`Label::index`].
    pub confusion: [[usize; 2]; 2],
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn evaluate(pred: &[Label], gold: &[Label]) -> Result<EvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            found: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::InsufficientData("cannot evaluate zero predictions".into()));
    }
    let mut confusion = [[0usize; 2]; 2];
    for (p, g) in pred.iter().zip(gold) {
        confusion[g.index()][p.index()] += 1;
    }
    let per_class = Label::ALL.map(|c| {
        let i = c.index();
        let tp = confusion[i][i];
        let (precision, precision_undefined) = ratio(tp, confusion[0][i] + confusion[1][i]);
        let support = confusion[i][0] + confusion[i][1];
        let (recall, recall_undefined) = ratio(tp, support);
        let (f1, f1_undefined) = if precision + recall == 0.0 {
            (0.0, true)
        } else {
            (2.0 * precision * recall / (precision + recall), false)
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support,
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    });
    let n = gold.len();
    let mean = |f: fn(&ClassMetrics) -> f64| (f(&per_class[0]) + f(&per_class[1])) / 2.0;
    Ok(EvalReport {
        n,
        accuracy: (confusion[0][0] + confusion[1][1]) as f64 / n as f64,
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        confusion,
    })
}

impl EvalReport {
    /// Flat `key=value` lines.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("n".to_string(), self.n.to_string()),
            ("accuracy".to_string(), self.accuracy.to_string()),
            ("macro_precision".to_string(), self.macro_precision.to_string()),
            ("macro_recall".to_string(), self.macro_recall.to_string()),
            ("macro_f1".to_string(), self.macro_f1.to_string()),
        ];
        for c in Label::ALL {
            let m = &self.per_class[c.index()];
            kv.push((format!("{c}.precision"), m.precision.to_string()));
            kv.push((format!("{c}.recall"), m.recall.to_string()));
            kv.push((format!("{c}.f1"), m.f1.to_string()));
            kv.push((format!("{c}.support"), m.support.to_string()));
            kv.push((format!("{c}.precision_undefined"), m.precision_undefined.to_string()));
            kv.push((format!("{c}.recall_undefined"), m.recall_undefined.to_string()));
            kv.push((format!("{c}.f1_undefined"), m.f1_undefined.to_string()));
        }
        for g in Label::ALL {
            for p in Label::ALL {
                kv.push((
                    format!("confusion.{g}.{p}"),
                    self.confusion[g.index()][p.index()].to_string(),
                ));
            }
        }
        kv
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (k, v) in self.key_values() {
            writeln!(out, "{k}={v}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        let per_class: serde_json::Map<String, serde_json::Value> = Label::ALL
            .iter()
            .map(|c| {
                (
                    c.to_string(),
                    serde_json::to_value(self.per_class[c.index()]).expect("metrics serialize"),
                )
            })
            .collect();
        v["per_class"] = per_class.into();
        v["labels"] = serde_json::json!(Label::ALL.map(|c| c.to_string()));
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub feature: String,
    /// log P(f | class) - log P(f | other class).
    pub score: f64,
    /// log P(f | class).
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub class: Label,
    pub entries: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rank\tfeature\tscore\tlog_prob")?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", i + 1, e.feature, e.score, e.log_prob)?;
        }
        Ok(())
    }
}

fn rank(model: &NaiveBayesModel, vocab: &Vocabulary, class: Label, k: usize) -> FeatureRanking {
    let own = &model.feature_log_prob[class.index()];
    let other = &model.feature_log_prob[class.other().index()];
    let mut entries: Vec<RankedFeature> = vocab
        .features()
        .iter()
        .enumerate()
        .map(|(i, f)| RankedFeature {
            feature: f.clone(),
            score: own[i] - other[i],
            log_prob: own[i],
        })
        .collect();
    entries.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    entries.truncate(k);
    FeatureRanking { class, entries }
}

/// The `k` features most indicative of each class, as (fake, real).
pub fn top_informative_features(
    model: &NaiveBayesModel,
    vocab: &Vocabulary,
    k: usize,
) -> Result<(FeatureRanking, FeatureRanking)> {
    if model.n_features() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            found: model.n_features(),
        });
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let k = if k > vocab.len() {
        log::warn!("requested {k} features but the vocabulary has {}; clamping", vocab.len());
        vocab.len()
    } else {
        k
    };
    Ok((rank(model, vocab, Label::Fake, k), rank(model, vocab, Label::Real, k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::models::nb::nb_fit;
    use crate::vectorize::{fit, transform, VectorizerConfig};
    use approx::assert_abs_diff_eq;
    use Label::{Fake as F, Real as R};

    #[test]
    fn perfect_prediction() {
        let r = evaluate(&[F, R, R, F], &[F, R, R, F]).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn hand_computed_fixture() {
        let r = evaluate(&[F, R, R, R], &[F, F, R, R]).unwrap();
        assert_eq!(r.accuracy, 0.75);
        let f = r.per_class[0];
        let re = r.per_class[1];
        assert_eq!((f.precision, f.recall), (1.0, 0.5));
        assert_abs_diff_eq!(f.f1, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(re.precision, 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(re.recall, 1.0);
        assert_abs_diff_eq!(re.f1, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(r.macro_f1, 11.0 / 15.0, epsilon = 1e-12);
        assert_eq!(r.confusion, [[1, 1], [0, 2]]);
    }

    #[test]
    fn degenerate_predictor() {
        let r = evaluate(&[R, R, R, R], &[F, F, R, R]).unwrap();
        assert_eq!(r.per_class[1].recall, 1.0);
        assert_eq!(r.per_class[0].f1, 0.0);
        assert!(r.per_class[0].precision_undefined);
        assert!(r.per_class[0].f1_undefined);
        assert!(r.macro_f1.is_finite());
    }

    #[test]
    fn length_checks() {
        assert!(evaluate(&[F], &[F, R]).is_err());
        assert!(evaluate(&[], &[]).is_err());
    }

    #[test]
    fn text_and_json_output() {
        let r = evaluate(&[F, R, R, R], &[F, F, R, R]).unwrap();
        let mut buf = Vec::new();
        r.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("accuracy=0.75\n"));
        assert!(text.contains("confusion.fake.real=1\n"));
        let j = r.to_json();
        assert_eq!(j["per_class"]["fake"]["recall"], 0.5);
        assert_eq!(j["confusion"][0][1], 1);
    }

    fn fixture() -> (NaiveBayesModel, Vocabulary) {
        let docs = vec![
            Document::new("1", "a a b", Some(F)),
            Document::new("2", "a c", Some(F)),
            Document::new("3", "b b c", Some(R)),
            Document::new("4", "c c", Some(R)),
        ];
        let cfg = VectorizerConfig {
            max_df: 1.0,
            ..Default::default()
        };
        let vocab = fit(&docs, &cfg).unwrap();
        let x = transform(&docs, &vocab, &cfg).unwrap();
        let model = nb_fit(&x, &[F, F, R, R], 1.0).unwrap();
        (model, vocab)
    }

    #[test]
    fn fake_ranking_led_by_largest_gap() {
        let (model, vocab) = fixture();
        let (fake, real) = top_informative_features(&model, &vocab, 3).unwrap();
        assert_eq!(fake.entries[0].feature, "a");
        assert_abs_diff_eq!(fake.entries[0].score, (0.5f64 / 0.125).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(fake.entries[0].log_prob, 0.5f64.ln(), epsilon = 1e-12);
        assert_eq!(real.entries[0].feature, "c");
        let mut all: Vec<_> = fake.entries.iter().map(|e| e.feature.clone()).collect();
        all.sort();
        assert_eq!(all, vocab.features());
    }

    #[test]
    fn ties_break_lexicographically_and_k_clamps() {
        let (mut model, vocab) = fixture();
        model.feature_log_prob[1] = model.feature_log_prob[0].clone();
        let (fake, real) = top_informative_features(&model, &vocab, 10).unwrap();
        let names: Vec<_> = fake.entries.iter().map(|e| e.feature.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(real.entries.len(), 3);
        assert!(top_informative_features(&model, &vocab, 0).is_err());
    }

    #[test]
    fn tsv_layout() {
        let (model, vocab) = fixture();
        let (fake, _) = top_informative_features(&model, &vocab, 1).unwrap();
        let mut buf = Vec::new();
        fake.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rank\tfeature\tscore\tlog_prob\n1\ta\t"));
    }
}
