//! Versioned JSON model files.
//!
//! A file is one object: `format`, `version`, provenance `meta`, the model
//! `kind`, an echo of the training `config`, and the kind-specific `model`
//! body. The format tag and version are checked before the body is read.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::models::cnn::{CnnConfig, ConvNetModel, TokenIndex};
use crate::models::embeddings::parse_embeddings;
use crate::models::gbt::BoostedTreesModel;
use crate::models::nb::NaiveBayesModel;
use crate::models::{read_embedding_file, EmbeddingSource, ModelKind, PipelineConfig, TrainedPipeline};
use crate::vectorize::Vocabulary;

pub const MODEL_FORMAT: &str = "satira-model";
pub const MODEL_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u64,
    meta: Value,
    kind: ModelKind,
    config: PipelineConfig,
    model: Value,
}

#[derive(Serialize, Deserialize)]
struct NbBody {
    vocabulary: Vocabulary,
    params: NaiveBayesModel,
}

#[derive(Serialize, Deserialize)]
struct GbtBody {
    vocabulary: Vocabulary,
    params: BoostedTreesModel,
}

#[derive(Serialize, Deserialize)]
struct CnnBody {
    tokens: TokenIndex,
    embeddings: EmbeddingSource,
    coverage: f64,
    config: CnnConfig,
    params: Vec<f64>,
}

/// A model file's contents.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub pipeline: TrainedPipeline,
    pub config: PipelineConfig,
    pub meta: Value,
}

fn body(pipeline: &TrainedPipeline) -> Result<Value> {
    let v = match pipeline {
        TrainedPipeline::NaiveBayes { vocabulary, model } => serde_json::to_value(NbBody {
            vocabulary: vocabulary.clone(),
            params: model.clone(),
        }),
        TrainedPipeline::BoostedTrees { vocabulary, model } => serde_json::to_value(GbtBody {
            vocabulary: vocabulary.clone(),
            params: model.clone(),
        }),
        TrainedPipeline::ConvNet {
            tokens,
            source,
            coverage,
            model,
        } => serde_json::to_value(CnnBody {
            tokens: tokens.clone(),
            embeddings: source.clone(),
            coverage: *coverage,
            config: *model.config(),
            params: model.params().to_vec(),
        }),
    };
    v.map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn write_model<W: Write>(
    out: W,
    pipeline: &TrainedPipeline,
    config: &PipelineConfig,
    meta: Value,
) -> Result<()> {
    let env = Envelope {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        meta,
        kind: pipeline.kind(),
        config: config.clone(),
        model: body(pipeline)?,
    };
    serde_json::to_writer_pretty(out, &env).map_err(|e| Error::ModelFormat(e.to_string()))
}

pub fn save_model(path: &Path, pipeline: &TrainedPipeline, config: &PipelineConfig, meta: Value) -> Result<()> {
    let mut buf = Vec::new();
    write_model(&mut buf, pipeline, config, meta)?;
    buf.push(b'\n');
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parse a model file. A CNN's embedding file is re-read from its recorded
/// path and must still have the recorded checksum.
pub fn read_model(content: &str) -> Result<SavedModel> {
    let raw: Value = serde_json::from_str(content).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let format = raw.get("format").and_then(Value::as_str);
    if format != Some(MODEL_FORMAT) {
        return Err(Error::ModelFormat(format!("not a {MODEL_FORMAT} file")));
    }
    match raw.get("version").and_then(Value::as_u64) {
        Some(MODEL_VERSION) => {}
        Some(v) => {
            return Err(Error::ModelFormat(format!(
                "unsupported version {v} (this build reads version {MODEL_VERSION})"
            )))
        }
        None => return Err(Error::ModelFormat("missing version".into())),
    }
    let env: Envelope = serde_json::from_value(raw).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let bad = |e: serde_json::Error| Error::ModelFormat(e.to_string());
    let pipeline = match env.kind {
        ModelKind::Nb => {
            let b: NbBody = serde_json::from_value(env.model).map_err(bad)?;
            if b.params.n_features() != b.vocabulary.len() {
                return Err(Error::DimensionMismatch {
                    expected: b.vocabulary.len(),
                    found: b.params.n_features(),
                });
            }
            TrainedPipeline::NaiveBayes {
                vocabulary: b.vocabulary,
                model: b.params,
            }
        }
        ModelKind::Gbt => {
            let b: GbtBody = serde_json::from_value(env.model).map_err(bad)?;
            if b.params.n_features != b.vocabulary.len() {
                return Err(Error::DimensionMismatch {
                    expected: b.vocabulary.len(),
                    found: b.params.n_features,
                });
            }
            TrainedPipeline::BoostedTrees {
                vocabulary: b.vocabulary,
                model: b.params,
            }
        }
        ModelKind::Cnn => {
            let b: CnnBody = serde_json::from_value(env.model).map_err(bad)?;
            let (text, sha) = read_embedding_file(&b.embeddings.path)?;
            if sha != b.embeddings.sha256 {
                return Err(Error::ModelFormat(format!(
                    "embedding file {} changed since training (sha256 {sha}, expected {})",
                    b.embeddings.path.display(),
                    b.embeddings.sha256
                )));
            }
            let matrix: DenseMatrix = parse_embeddings(&text, &b.tokens, b.config.embedding_dim)?.matrix;
            TrainedPipeline::ConvNet {
                model: ConvNetModel::from_parts(b.config, matrix, b.params)?,
                tokens: b.tokens,
                source: b.embeddings,
                coverage: b.coverage,
            }
        }
    };
    Ok(SavedModel {
        pipeline,
        config: env.config,
        meta: env.meta,
    })
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_model(&content)
}
