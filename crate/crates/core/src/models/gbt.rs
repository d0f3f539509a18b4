//! Gradient-boosted regression trees under the logistic loss (Newton
//! boosting): per round, gradients `p - y` and hessians `p (1 - p)` drive an
//! exact greedy split search, and each leaf takes the weight `-G / (H + λ)`.
//!
//! Split search works on per-feature presorted columns that store only the
//! non-zero entries; the zeros of each node form one implicit block, which
//! keeps bag-of-words inputs cheap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 regularization on leaf weights.
    pub lambda: f64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            lambda: 1.0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds < 1 {
            return Err(Error::invalid("n_rounds must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { weight: f64 },
}

/// A binary regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("a tree needs at least one node"));
        }
        for n in &nodes {
            if let TreeNode::Split { left, right, .. } = n {
                if *left >= nodes.len() || *right >= nodes.len() {
                    return Err(Error::invalid("split child index out of range"));
                }
            }
        }
        let tree = RegressionTree { nodes };
        // rejects cycles
        tree.depth_checked(0, 0, tree.nodes.len())?;
        Ok(tree)
    }

    pub fn leaf(weight: f64) -> Self {
        RegressionTree {
            nodes: vec![TreeNode::Leaf { weight }],
        }
    }

    pub fn stump(feature: usize, threshold: f64, left_weight: f64, right_weight: f64) -> Self {
        RegressionTree {
            nodes: vec![
                TreeNode::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { weight: left_weight },
                TreeNode::Leaf { weight: right_weight },
            ],
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Index of the leaf a row lands in.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { .. } => return i,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { weight } => weight,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.depth_checked(0, 0, self.nodes.len()).unwrap_or(usize::MAX)
    }

    fn depth_checked(&self, node: usize, level: usize, limit: usize) -> Result<usize> {
        if level > limit {
            return Err(Error::invalid("tree contains a cycle"));
        }
        match self.nodes[node] {
            TreeNode::Leaf { .. } => Ok(level),
            TreeNode::Split { left, right, .. } => Ok(self
                .depth_checked(left, level + 1, limit)?
                .max(self.depth_checked(right, level + 1, limit)?)),
        }
    }

    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTreesModel {
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_rounds: usize,
    /// Initial margin (log-odds).
    pub base_score: f64,
    pub lambda: f64,
    pub n_features: usize,
}

impl BoostedTreesModel {
    pub fn new(
        base_score: f64,
        learning_rate: f64,
        trees: Vec<RegressionTree>,
        n_features: usize,
    ) -> Result<Self> {
        if let Some(f) = trees.iter().filter_map(RegressionTree::max_feature).max() {
            if f >= n_features {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    found: f + 1,
                });
            }
        }
        Ok(BoostedTreesModel {
            max_depth: trees.iter().map(RegressionTree::depth).max().unwrap_or(0),
            n_rounds: trees.len(),
            trees,
            learning_rate,
            base_score,
            lambda: 1.0,
            n_features,
        })
    }

    /// Margin using only the first `n_trees` trees.
    pub fn margin_with(&self, row: &[f64], n_trees: usize) -> f64 {
        self.base_score
            + self.learning_rate
                * self.trees[..n_trees.min(self.trees.len())]
                    .iter()
                    .map(|t| t.predict_row(row))
                    .sum::<f64>()
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.margin_with(row, self.trees.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtFit {
    pub model: BoostedTreesModel,
    /// Mean training log-loss: entry 0 at the base score, entry r after round r.
    pub loss_history: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic loss of margin `z` against a 0/1 target.
pub fn logistic_loss(z: f64, target: f64) -> f64 {
    softplus(z) - target * z
}

fn mean_loss(margins: &[f64], targets: &[f64]) -> f64 {
    margins
        .iter()
        .zip(targets)
        .map(|(&z, &y)| logistic_loss(z, y))
        .sum::<f64>()
        / margins.len() as f64
}

const BASE_RATE_CLAMP: f64 = 1e-6;

/// Non-zero entries of one feature, sorted by value, split at the zero
/// position: `entries[..n_neg]` are negative, the rest positive.
struct SortedColumn {
    entries: Vec<(f64, u32)>,
    n_neg: usize,
}

fn presort(x: &DenseMatrix) -> Vec<SortedColumn> {
    (0..x.n_cols())
        .into_par_iter()
        .map(|f| {
            let mut entries: Vec<(f64, u32)> = (0..x.n_rows())
                .filter_map(|r| {
                    let v = x.get(r, f);
                    (v != 0.0).then_some((v, r as u32))
                })
                .collect();
            entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let n_neg = entries.partition_point(|e| e.0 < 0.0);
            SortedColumn { entries, n_neg }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct NodeStats {
    g: f64,
    h: f64,
    count: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct ScanState {
    gl: f64,
    hl: f64,
    last: Option<f64>,
    best: Option<Candidate>,
}

fn split_gain(gl: f64, hl: f64, node: &NodeStats, lambda: f64) -> f64 {
    let (gr, hr) = (node.g - gl, node.h - hl);
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - node.g * node.g / (node.h + lambda))
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}

/// Best split of `feature` for every open node (indexed by slot).
#[allow(clippy::too_many_arguments)]
fn scan_feature(
    feature: usize,
    col: &SortedColumn,
    row_slot: &[u32],
    open: &[NodeStats],
    grad: &[f64],
    hess: &[f64],
    lambda: f64,
) -> Vec<Option<Candidate>> {
    const CLOSED: u32 = u32::MAX;
    let mut nz = vec![(0.0f64, 0.0f64, 0usize); open.len()];
    for &(_, r) in &col.entries {
        let s = row_slot[r as usize];
        if s != CLOSED {
            let e = &mut nz[s as usize];
            e.0 += grad[r as usize];
            e.1 += hess[r as usize];
            e.2 += 1;
        }
    }
    let mut state: Vec<ScanState> = (0..open.len())
        .map(|_| ScanState {
            gl: 0.0,
            hl: 0.0,
            last: None,
            best: None,
        })
        .collect();

    let visit = |slot: usize, value: f64, g: f64, h: f64, state: &mut Vec<ScanState>| {
        let st = &mut state[slot];
        if let Some(last) = st.last {
            if value > last {
                let gain = split_gain(st.gl, st.hl, &open[slot], lambda);
                if st.best.map_or(true, |b| gain > b.gain) {
                    st.best = Some(Candidate {
                        gain,
                        feature,
                        threshold: midpoint(last, value),
                    });
                }
            }
        }
        st.gl += g;
        st.hl += h;
        st.last = Some(value);
    };

    for &(v, r) in &col.entries[..col.n_neg] {
        let s = row_slot[r as usize];
        if s != CLOSED {
            visit(s as usize, v, grad[r as usize], hess[r as usize], &mut state);
        }
    }
    for (slot, node) in open.iter().enumerate() {
        let (g, h, c) = nz[slot];
        if node.count > c {
            visit(slot, 0.0, node.g - g, node.h - h, &mut state);
        }
    }
    for &(v, r) in &col.entries[col.n_neg..] {
        let s = row_slot[r as usize];
        if s != CLOSED {
            visit(s as usize, v, grad[r as usize], hess[r as usize], &mut state);
        }
    }
    state.into_iter().map(|s| s.best).collect()
}

fn node_stats(rows: impl Iterator<Item = usize>, grad: &[f64], hess: &[f64]) -> NodeStats {
    let mut s = NodeStats {
        g: 0.0,
        h: 0.0,
        count: 0,
    };
    for r in rows {
        s.g += grad[r];
        s.h += hess[r];
        s.count += 1;
    }
    s
}

/// Grow one tree level by level. Returns the tree and each row's leaf index.
fn grow_tree(
    x: &DenseMatrix,
    columns: &[SortedColumn],
    grad: &[f64],
    hess: &[f64],
    cfg: &GbtConfig,
) -> (RegressionTree, Vec<usize>) {
    let n = x.n_rows();
    let mut nodes: Vec<Option<TreeNode>> = vec![None];
    let mut row_node = vec![0usize; n];
    let mut open: Vec<(usize, NodeStats)> = vec![(0, node_stats(0..n, grad, hess))];

    let leaf_weight = |s: &NodeStats| -s.g / (s.h + cfg.lambda);

    for _level in 0..cfg.max_depth {
        if open.is_empty() {
            break;
        }
        let mut row_slot = vec![u32::MAX; n];
        let mut slot_of_node = vec![u32::MAX; nodes.len()];
        for (slot, (node, _)) in open.iter().enumerate() {
            slot_of_node[*node] = slot as u32;
        }
        for r in 0..n {
            row_slot[r] = slot_of_node[row_node[r]];
        }
        let stats: Vec<NodeStats> = open.iter().map(|(_, s)| *s).collect();

        let per_feature: Vec<Vec<Option<Candidate>>> = columns
            .par_iter()
            .enumerate()
            .map(|(f, col)| scan_feature(f, col, &row_slot, &stats, grad, hess, cfg.lambda))
            .collect();

        // Sequential reduction keeps the lowest feature index on ties.
        let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
        for cands in &per_feature {
            for (slot, c) in cands.iter().enumerate() {
                if let Some(c) = c {
                    if best[slot].map_or(true, |b| c.gain > b.gain) {
                        best[slot] = Some(*c);
                    }
                }
            }
        }

        let mut next_open = Vec::new();
        let mut split_children: Vec<Option<(usize, usize, usize, f64)>> = vec![None; open.len()];
        for (slot, (node, s)) in open.iter().enumerate() {
            match best[slot] {
                Some(c) if c.gain > 0.0 => {
                    let (left, right) = (nodes.len(), nodes.len() + 1);
                    nodes.push(None);
                    nodes.push(None);
                    nodes[*node] = Some(TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    });
                    split_children[slot] = Some((left, right, c.feature, c.threshold));
                }
                _ => nodes[*node] = Some(TreeNode::Leaf { weight: leaf_weight(s) }),
            }
        }
        for r in 0..n {
            let slot = row_slot[r];
            if slot == u32::MAX {
                continue;
            }
            if let Some((left, right, f, t)) = split_children[slot as usize] {
                row_node[r] = if x.get(r, f) < t { left } else { right };
            }
        }
        for (left, right, _, _) in split_children.iter().flatten() {
            for child in [*left, *right] {
                let s = node_stats((0..n).filter(|&r| row_node[r] == child), grad, hess);
                next_open.push((child, s));
            }
        }
        open = next_open;
    }
    for (node, s) in &open {
        nodes[*node] = Some(TreeNode::Leaf { weight: leaf_weight(s) });
    }
    let nodes = nodes
        .into_iter()
        .map(|n| n.expect("every node is resolved"))
        .collect();
    (RegressionTree { nodes }, row_node)
}

pub fn gbt_fit(x: &DenseMatrix, y: &[Label], cfg: &GbtConfig) -> Result<GbtFit> {
    cfg.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.n_rows(),
            found: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("features must be finite"));
    }
    let targets: Vec<f64> = y.iter().map(|l| l.target()).collect();
    let base_rate = (targets.iter().sum::<f64>() / targets.len() as f64)
        .clamp(BASE_RATE_CLAMP, 1.0 - BASE_RATE_CLAMP);
    let base_score = (base_rate / (1.0 - base_rate)).ln();

    let columns = presort(x);
    let mut margins = vec![base_score; y.len()];
    let mut loss_history = vec![mean_loss(&margins, &targets)];
    let mut trees = Vec::with_capacity(cfg.n_rounds);

    for _round in 0..cfg.n_rounds {
        let (grad, hess): (Vec<f64>, Vec<f64>) = margins
            .iter()
            .zip(&targets)
            .map(|(&z, &t)| {
                let p = sigmoid(z);
                (p - t, p * (1.0 - p))
            })
            .unzip();
        let (tree, leaf_of_row) = grow_tree(x, &columns, &grad, &hess, cfg);
        for (m, &leaf) in margins.iter_mut().zip(&leaf_of_row) {
            if let TreeNode::Leaf { weight } = tree.nodes[leaf] {
                *m += cfg.learning_rate * weight;
            }
        }
        trees.push(tree);
        loss_history.push(mean_loss(&margins, &targets));
    }

    Ok(GbtFit {
        model: BoostedTreesModel {
            trees,
            learning_rate: cfg.learning_rate,
            max_depth: cfg.max_depth,
            n_rounds: cfg.n_rounds,
            base_score,
            lambda: cfg.lambda,
            n_features: x.n_cols(),
        },
        loss_history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtPrediction {
    pub probability: f64,
    pub label: Label,
}

/// P(fake) per row; label `Fake` when the probability is at least 0.5.
pub fn gbt_predict(model: &BoostedTreesModel, x: &DenseMatrix) -> Result<Vec<GbtPrediction>> {
    if x.n_cols() != model.n_features {
        return Err(Error::DimensionMismatch {
            expected: model.n_features,
            found: x.n_cols(),
        });
    }
    Ok((0..x.n_rows())
        .map(|r| {
            let probability = sigmoid(model.margin(x.row(r)));
            GbtPrediction {
                probability,
                label: if probability >= 0.5 { Label::Fake } else { Label::Real },
            }
        })
        .collect())
}
