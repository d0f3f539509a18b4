//! Reader and writer for the plain-text word-vector format: a header line
//! `<count> <dim>`, then `token v1 ... v_dim` per line.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::models::cnn::TokenIndex;

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedEmbeddings {
    /// One row per token id, padding row 0 and uncovered tokens all zero.
    pub matrix: DenseMatrix,
    /// Share of indexed tokens found in the file (1.0 for an empty index).
    pub coverage: f64,
    pub covered: usize,
}

pub fn load_embeddings(path: &Path, vocab: &TokenIndex, expected_dim: usize) -> Result<LoadedEmbeddings> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&content, vocab, expected_dim)
}

pub fn parse_embeddings(content: &str, vocab: &TokenIndex, expected_dim: usize) -> Result<LoadedEmbeddings> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing `<count> <dim>` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::parse(1, "header must be `<count> <dim>`"));
    }
    let _count: usize = fields[0].parse().map_err(|_| Error::parse(1, "bad vector count"))?;
    let dim: usize = fields[1].parse().map_err(|_| Error::parse(1, "bad dimension"))?;
    if dim != expected_dim {
        return Err(Error::DimensionMismatch {
            expected: expected_dim,
            found: dim,
        });
    }

    let mut matrix = DenseMatrix::zeros(vocab.n_rows(), dim);
    let mut filled = vec![false; vocab.n_rows()];
    let mut covered = 0;
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap_or_default();
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(Error::parse(
                line_no,
                format!("expected {dim} values after the token, found {}", values.len()),
            ));
        }
        let id = vocab.id(token);
        if id == 0 || filled[id] {
            continue;
        }
        let row = matrix.row_mut(id);
        for (slot, raw) in row.iter_mut().zip(&values) {
            *slot = raw
                .parse()
                .map_err(|_| Error::parse(line_no, format!("not a number: {raw:?}")))?;
        }
        filled[id] = true;
        covered += 1;
    }
    let coverage = if vocab.is_empty() {
        1.0
    } else {
        covered as f64 / vocab.len() as f64
    };
    Ok(LoadedEmbeddings {
        matrix,
        coverage,
        covered,
    })
}

/// Write vectors in the same text format.
pub fn write_embeddings<W: Write>(mut out: W, vectors: &[(String, Vec<f64>)], dim: usize) -> std::io::Result<()> {
    writeln!(out, "{} {}", vectors.len(), dim)?;
    for (token, v) in vectors {
        write!(out, "{token}")?;
        for x in v {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
