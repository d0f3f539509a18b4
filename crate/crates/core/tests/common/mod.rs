//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satira::corpus::{Document, Label, LabeledCorpus};
use satira::models::cnn::ConvNetModel;

const LETTERS: &[char] = &[
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق',
    'ك', 'ل', 'م', 'ه', 'و', 'ي',
];

/// `n` distinct Arabic-letter words starting with `initial`.
pub fn words(initial: char, n: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    'outer: for a in LETTERS {
        for b in LETTERS {
            if out.len() == n {
                break 'outer;
            }
            out.push(format!("{initial}{a}{b}"));
        }
    }
    out
}

/// Balanced corpus in which each class draws from its own vocabulary.
pub fn separable_corpus(n_docs: usize, seed: u64) -> LabeledCorpus {
    let fake = words('س', 60);
    let real = words('ك', 60);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..n_docs)
        .map(|i| {
            let (label, vocab) = if i % 2 == 0 {
                (Label::Fake, &fake)
            } else {
                (Label::Real, &real)
            };
            let len = rng.gen_range(15..40);
            let text: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
            Document::new(format!("doc{i:04}"), text.join(" "), Some(label))
        })
        .collect();
    LabeledCorpus::new(docs).unwrap()
}

/// Random vectors for every token of `corpus` in the word-vector text format.
pub fn write_random_embeddings(path: &Path, corpus: &LabeledCorpus, dim: usize, seed: u64) {
    let mut tokens: Vec<&str> = corpus.iter().flat_map(|d| d.tokens.iter().map(String::as_str)).collect();
    tokens.sort_unstable();
    tokens.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    writeln!(f, "{} {dim}", tokens.len()).unwrap();
    for t in tokens {
        write!(f, "{t}").unwrap();
        for _ in 0..dim {
            write!(f, " {:.6}", rng.gen_range(-1.0..1.0)).unwrap();
        }
        writeln!(f).unwrap();
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Forward pass written directly from the definition: every window, every
/// filter, every kernel offset and embedding component summed explicitly.
pub fn conv_oracle(model: &ConvNetModel, ids: &[usize]) -> f64 {
    let cfg = model.config();
    let (nf, k, d) = (cfg.n_filters, cfg.kernel_size, cfg.embedding_dim);
    let emb = model.embedding();
    let mut z = model.dense_bias();
    for f in 0..nf {
        let mut best = f64::NEG_INFINITY;
        for t in 0..=ids.len() - k {
            let mut s = model.conv_bias()[f];
            for j in 0..k {
                for e in 0..d {
                    s += model.conv_weight(f, j, e) * emb.get(ids[t + j], e);
                }
            }
            best = best.max(s);
        }
        z += model.dense_weights()[f] * best.max(0.0);
    }
    sigmoid(z)
}
