//! Tools for telling satirical fake news from real news in Arabic text:
//! corpus loading and cleaning, stylometric measures with significance
//! tests, bag-of-n-gram features, and naive Bayes, boosted-tree and
//! convolutional classifiers with evaluation.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod meta;
pub mod models;
pub mod preprocess;
pub mod stats;
pub mod stylometrics;
pub mod vectorize;

pub use corpus::{Document, Label, LabeledCorpus};
pub use error::{Error, Result};
