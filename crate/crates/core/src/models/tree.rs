//! Binary decision trees and the CART (Gini) builder shared by the decision
//! tree and random forest families.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

/// Tree stored as a node arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Adds each split's gain to its feature's slot.
    pub fn accumulate_gain(&self, out: &mut [f64]) {
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = n {
                out[*feature] += gain;
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

/// Midpoint threshold that keeps `lo` on the left and `hi` on the right.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CartOptions {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means all, in index order.
    pub max_features: Option<usize>,
}

fn gini(pos: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best Gini split of `rows` on one feature; ties keep the lowest threshold.
fn best_split_on(
    column: &[f64],
    y: &[f64],
    rows: &[usize],
    total_pos: f64,
    scratch: &mut Vec<(f64, f64)>,
) -> Option<(f64, f64)> {
    scratch.clear();
    scratch.extend(rows.iter().map(|&r| (column[r], y[r])));
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = scratch.len() as f64;
    let parent = n * gini(total_pos, n);
    let mut left_pos = 0.0;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..scratch.len() - 1 {
        left_pos += scratch[i].1;
        if scratch[i].0 == scratch[i + 1].0 {
            continue;
        }
        let nl = (i + 1) as f64;
        let nr = n - nl;
        let decrease = parent - nl * gini(left_pos, nl) - nr * gini(total_pos - left_pos, nr);
        if best.is_none_or(|(g, _)| decrease > g) {
            best = Some((decrease, midpoint(scratch[i].0, scratch[i + 1].0)));
        }
    }
    best
}

/// Grows a classification tree whose leaves hold the positive-class fraction.
///
/// Split gain is the weighted Gini decrease divided by the number of training
/// rows. Zero-gain splits are taken while a node is impure. Ties go to the
/// lowest feature index, then the lowest threshold.
pub(crate) fn build_cart(
    columns: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    opts: CartOptions,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n_features = columns.len();
    let n_total = rows.len() as f64;
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut stack = vec![(0usize, rows, 0usize)];
    let mut scratch = Vec::new();
    let mut order: Vec<usize> = (0..n_features).collect();

    while let Some((node, rows, depth)) = stack.pop() {
        let n = rows.len();
        let pos: f64 = rows.iter().map(|&r| y[r]).sum();
        let value = pos / n as f64;
        let pure = pos == 0.0 || pos == n as f64;
        if pure || n < opts.min_samples_split || opts.max_depth.is_some_and(|d| depth >= d) {
            nodes[node] = Node::Leaf { value };
            continue;
        }

        let mut best: Option<BestSplit> = None;
        let mut consider = |feats: &[usize], best: &mut Option<BestSplit>| {
            for &f in feats {
                if let Some((gain, threshold)) =
                    best_split_on(&columns[f], y, &rows, pos, &mut scratch)
                {
                    let better = match best {
                        None => true,
                        Some(b) => gain > b.gain || (gain == b.gain && f < b.feature),
                    };
                    if better {
                        *best = Some(BestSplit {
                            feature: f,
                            threshold,
                            gain,
                        });
                    }
                }
            }
        };
        match opts.max_features {
            Some(m) if m < n_features => {
                order.shuffle(rng);
                let mut chosen = order[..m].to_vec();
                chosen.sort_unstable();
                consider(&chosen, &mut best);
                // keep drawing until some feature separates the node
                for &f in &order[m..] {
                    if best.is_some() {
                        break;
                    }
                    consider(&[f], &mut best);
                }
            }
            _ => {
                let all: Vec<usize> = (0..n_features).collect();
                consider(&all, &mut best);
            }
        }

        let Some(split) = best else {
            nodes[node] = Node::Leaf { value };
            continue;
        };
        let column = &columns[split.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| column[r] <= split.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            gain: split.gain.max(0.0) / n_total,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    Tree { nodes }
}
