//! Multinomial naive Bayes over non-negative document-term features.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::matrix::DocTermMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    /// log P(class), indexed by [`Label::index`].
    pub class_log_prior: [f64; 2],
    /// log P(feature | class), one row per class.
    pub feature_log_prob: [Vec<f64>; 2],
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbPrediction {
    pub label: Label,
    /// log P(class) + sum of count * log P(feature | class), per class.
    pub joint_log: [f64; 2],
}

impl NbPrediction {
    /// Posterior probability of the fake class.
    pub fn fake_probability(&self) -> f64 {
        let [f, r] = self.joint_log;
        1.0 / (1.0 + (r - f).exp())
    }
}

impl NaiveBayesModel {
    pub fn n_features(&self) -> usize {
        self.feature_log_prob[0].len()
    }
}

pub fn nb_fit(x: &DocTermMatrix, y: &[Label], alpha: f64) -> Result<NaiveBayesModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: y.len(),
        });
    }
    if x.values().iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("multinomial naive Bayes needs non-negative finite features"));
    }
    let n_features = x.n_cols();
    let mut class_count = [0usize; 2];
    let mut feature_count = [vec![0.0f64; n_features], vec![0.0f64; n_features]];
    for (r, &label) in y.iter().enumerate() {
        let c = label.index();
        class_count[c] += 1;
        let (cols, vals) = x.row(r);
        for (&col, &v) in cols.iter().zip(vals) {
            feature_count[c][col] += v;
        }
    }
    for label in Label::ALL {
        if class_count[label.index()] == 0 {
            return Err(Error::InsufficientData(format!("no training documents of class {label}")));
        }
    }
    let n = y.len() as f64;
    let class_log_prior = [
        (class_count[0] as f64 / n).ln(),
        (class_count[1] as f64 / n).ln(),
    ];
    let feature_log_prob = feature_count.map(|counts| {
        let denom = (counts.iter().sum::<f64>() + alpha * n_features as f64).ln();
        counts.iter().map(|&c| (c + alpha).ln() - denom).collect::<Vec<_>>()
    });
    Ok(NaiveBayesModel {
        class_log_prior,
        feature_log_prob,
        alpha,
    })
}

/// Argmax of the joint log-likelihood; exact ties go to `Fake`.
pub fn nb_predict(model: &NaiveBayesModel, x: &DocTermMatrix) -> Result<Vec<NbPrediction>> {
    if x.n_cols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            found: x.n_cols(),
        });
    }
    Ok((0..x.n_rows())
        .map(|r| {
            let (cols, vals) = x.row(r);
            let joint_log = [0, 1].map(|c| {
                model.class_log_prior[c]
                    + cols
                        .iter()
                        .zip(vals)
                        .map(|(&col, &v)| v * model.feature_log_prob[c][col])
                        .sum::<f64>()
            });
            let label = if joint_log[0] >= joint_log[1] {
                Label::Fake
            } else {
                Label::Real
            };
            NbPrediction { label, joint_log }
        })
        .collect())
}
