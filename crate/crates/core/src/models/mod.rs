//! Classifiers and the train/predict pipeline that pairs each with its
//! feature extraction.

pub mod cnn;
pub mod embeddings;
pub mod gbt;
pub mod nb;
pub mod persist;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Label, LabeledCorpus};
use crate::error::{Error, Result};
use crate::meta::sha256_hex;
use crate::vectorize::{self, VectorizerConfig, Vocabulary};

use cnn::{cnn_forward, cnn_train, CnnConfig, ConvNetModel, TokenIndex, TrainConfig};
use embeddings::parse_embeddings;
use gbt::{gbt_fit, gbt_predict, BoostedTreesModel, GbtConfig};
use nb::{nb_fit, nb_predict, NaiveBayesModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nb,
    Gbt,
    Cnn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Nb => "nb",
            ModelKind::Gbt => "gbt",
            ModelKind::Cnn => "cnn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb" => Ok(ModelKind::Nb),
            "gbt" => Ok(ModelKind::Gbt),
            "cnn" => Ok(ModelKind::Cnn),
            _ => Err(Error::invalid(format!("unknown model {s:?} (expected nb, gbt or cnn)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub model: ModelKind,
    pub vectorizer: VectorizerConfig,
    /// Additive smoothing for naive Bayes.
    pub alpha: f64,
    pub gbt: GbtConfig,
    pub cnn: CnnConfig,
    pub train: TrainConfig,
    /// Most frequent training tokens given an embedding row.
    pub max_vocab: usize,
    /// Word-vector file for the CNN.
    pub embeddings: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: ModelKind::Nb,
            vectorizer: VectorizerConfig::default(),
            alpha: 1.0,
            gbt: GbtConfig::default(),
            cnn: CnnConfig::default(),
            train: TrainConfig::default(),
            max_vocab: 20_000,
            embeddings: None,
        }
    }
}

/// Where a CNN's frozen embedding matrix came from. Models store this
/// instead of the matrix and rebuild the matrix on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSource {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedPipeline {
    NaiveBayes {
        vocabulary: Vocabulary,
        model: NaiveBayesModel,
    },
    BoostedTrees {
        vocabulary: Vocabulary,
        model: BoostedTreesModel,
    },
    ConvNet {
        tokens: TokenIndex,
        source: EmbeddingSource,
        /// Share of indexed tokens that had a pretrained vector.
        coverage: f64,
        model: ConvNetModel,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Estimated probability of the fake class.
    pub probability: f64,
}

/// Extra output of training that is not part of the model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingLog {
    pub loss_history: Vec<f64>,
    pub embedding_coverage: Option<f64>,
}

pub(crate) fn read_embedding_file(path: &Path) -> Result<(String, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let sha = sha256_hex(&bytes);
    let content = String::from_utf8(bytes)
        .map_err(|_| Error::invalid(format!("{}: embedding file is not UTF-8", path.display())))?;
    Ok((content, sha))
}

pub fn train_pipeline(corpus: &LabeledCorpus, cfg: &PipelineConfig) -> Result<(TrainedPipeline, TrainingLog)> {
    let labels = corpus.labels()?;
    let docs = corpus.documents();
    match cfg.model {
        ModelKind::Nb => {
            let vocabulary = vectorize::fit(docs, &cfg.vectorizer)?;
            let x = vectorize::transform(docs, &vocabulary, &cfg.vectorizer)?;
            let model = nb_fit(&x, &labels, cfg.alpha)?;
            Ok((TrainedPipeline::NaiveBayes { vocabulary, model }, TrainingLog::default()))
        }
        ModelKind::Gbt => {
            let vocabulary = vectorize::fit(docs, &cfg.vectorizer)?;
            let x = vectorize::transform(docs, &vocabulary, &cfg.vectorizer)?.to_dense();
            let fit = gbt_fit(&x, &labels, &cfg.gbt)?;
            Ok((
                TrainedPipeline::BoostedTrees {
                    vocabulary,
                    model: fit.model,
                },
                TrainingLog {
                    loss_history: fit.loss_history,
                    embedding_coverage: None,
                },
            ))
        }
        ModelKind::Cnn => {
            let path = cfg
                .embeddings
                .as_deref()
                .ok_or_else(|| Error::invalid("the cnn model needs an embeddings file"))?;
            let tokens = TokenIndex::build(docs, cfg.max_vocab);
            let (content, sha256) = read_embedding_file(path)?;
            let loaded = parse_embeddings(&content, &tokens, cfg.cnn.embedding_dim)?;
            log::info!(
                "embeddings cover {}/{} indexed tokens ({:.1}%)",
                loaded.covered,
                tokens.len(),
                100.0 * loaded.coverage
            );
            let init = ConvNetModel::new(cfg.cnn, loaded.matrix, cfg.train.seed)?;
            let seqs: Vec<Vec<usize>> = docs
                .iter()
                .map(|d| tokens.encode(d, cfg.cnn.max_sequence_length))
                .collect();
            let trained = cnn_train(&init, &seqs, &labels, &cfg.train)?;
            Ok((
                TrainedPipeline::ConvNet {
                    tokens,
                    source: EmbeddingSource {
                        path: path.to_path_buf(),
                        sha256,
                    },
                    coverage: loaded.coverage,
                    model: trained.model,
                },
                TrainingLog {
                    loss_history: trained.loss_history,
                    embedding_coverage: Some(loaded.coverage),
                },
            ))
        }
    }
}

impl TrainedPipeline {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedPipeline::NaiveBayes { .. } => ModelKind::Nb,
            TrainedPipeline::BoostedTrees { .. } => ModelKind::Gbt,
            TrainedPipeline::ConvNet { .. } => ModelKind::Cnn,
        }
    }

    pub fn vocabulary(&self) -> Option<&Vocabulary> {
        match self {
            TrainedPipeline::NaiveBayes { vocabulary, .. } | TrainedPipeline::BoostedTrees { vocabulary, .. } => {
                Some(vocabulary)
            }
            TrainedPipeline::ConvNet { .. } => None,
        }
    }

    pub fn predict(&self, docs: &[Document]) -> Result<Vec<Prediction>> {
        match self {
            TrainedPipeline::NaiveBayes { vocabulary, model } => {
                let x = vectorize::transform(docs, vocabulary, vocabulary.config())?;
                Ok(nb_predict(model, &x)?
                    .into_iter()
                    .map(|p| Prediction {
                        label: p.label,
                        probability: p.fake_probability(),
                    })
                    .collect())
            }
            TrainedPipeline::BoostedTrees { vocabulary, model } => {
                let x = vectorize::transform(docs, vocabulary, vocabulary.config())?.to_dense();
                Ok(gbt_predict(model, &x)?
                    .into_iter()
                    .map(|p| Prediction {
                        label: p.label,
                        probability: p.probability,
                    })
                    .collect())
            }
            TrainedPipeline::ConvNet { tokens, model, .. } => docs
                .par_iter()
                .map(|d| {
                    let ids = tokens.encode(d, model.config().max_sequence_length);
                    let probability = cnn_forward(model, &ids)?;
                    Ok(Prediction {
                        label: if probability >= 0.5 { Label::Fake } else { Label::Real },
                        probability,
                    })
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> LabeledCorpus {
        let mut docs = Vec::new();
        for i in 0..10 {
            docs.push(Document::new(format!("f{i}"), "كذب ساخر نكتة", Some(Label::Fake)));
            docs.push(Document::new(format!("r{i}"), "وزير رسمي تقرير", Some(Label::Real)));
        }
        LabeledCorpus::new(docs).unwrap()
    }

    #[test]
    fn model_kind_round_trip() {
        for k in [ModelKind::Nb, ModelKind::Gbt, ModelKind::Cnn] {
            assert_eq!(k.to_string().parse::<ModelKind>().unwrap(), k);
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn nb_and_gbt_pipelines_separate_disjoint_vocabularies() {
        let c = corpus();
        for model in [ModelKind::Nb, ModelKind::Gbt] {
            let cfg = PipelineConfig {
                model,
                vectorizer: VectorizerConfig {
                    max_df: 1.0,
                    ..Default::default()
                },
                ..Default::default()
            };
            let (p, _) = train_pipeline(&c, &cfg).unwrap();
            let preds = p.predict(c.documents()).unwrap();
            for (d, pr) in c.iter().zip(&preds) {
                assert_eq!(Some(pr.label), d.label, "{model}");
            }
        }
    }

    #[test]
    fn cnn_needs_embeddings() {
        let cfg = PipelineConfig {
            model: ModelKind::Cnn,
            ..Default::default()
        };
        assert!(train_pipeline(&corpus(), &cfg).is_err());
    }
}
