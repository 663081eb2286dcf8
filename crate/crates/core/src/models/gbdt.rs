//! Histogram-based gradient boosting with logistic loss.
//!
//! Features are quantized into at most `max_bins` bins per column from the
//! training data. Trees are grown either leaf-wise (best-first, bounded by a
//! leaf count) or level-wise (breadth-first, bounded by depth). Leaf values
//! are Newton steps `-G / (H + l2)` shrunk by the learning rate.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Node, Tree};
use super::{sigmoid, GbdtParams, Growth};

/// Per-feature bin upper bounds; the last bound is `+inf`.
struct BinMapper {
    uppers: Vec<Vec<f64>>,
}

impl BinMapper {
    fn fit(columns: &[Vec<f64>], max_bins: usize) -> Self {
        let uppers = columns
            .iter()
            .map(|col| {
                let mut sorted = col.clone();
                sorted.sort_by(f64::total_cmp);
                let mut distinct: Vec<(f64, usize)> = Vec::new();
                for v in sorted {
                    match distinct.last_mut() {
                        Some((last, c)) if *last == v => *c += 1,
                        _ => distinct.push((v, 1)),
                    }
                }
                let mut bounds = Vec::new();
                if distinct.len() <= max_bins {
                    for w in distinct.windows(2) {
                        bounds.push(midpoint(w[0].0, w[1].0));
                    }
                } else {
                    let per_bin = col.len() as f64 / max_bins as f64;
                    let mut cum = 0usize;
                    for (i, (v, c)) in distinct.iter().enumerate().take(distinct.len() - 1) {
                        cum += c;
                        if cum as f64 >= per_bin * (bounds.len() + 1) as f64
                            && bounds.len() + 1 < max_bins
                        {
                            bounds.push(midpoint(*v, distinct[i + 1].0));
                        }
                    }
                }
                bounds.push(f64::INFINITY);
                bounds
            })
            .collect();
        Self { uppers }
    }

    fn bin(&self, feature: usize, value: f64) -> u8 {
        let u = &self.uppers[feature];
        u.partition_point(|b| *b < value) as u8
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Bucket {
    g: f64,
    h: f64,
    n: usize,
}

struct SplitCandidate {
    feature: usize,
    bin: usize,
    gain: f64,
}

struct Grower<'a> {
    bins: &'a [Vec<u8>],
    mapper: &'a BinMapper,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbdtParams,
}

struct Leaf {
    node: usize,
    rows: Vec<usize>,
    depth: usize,
    g: f64,
    h: f64,
    split: Option<SplitCandidate>,
}

impl Grower<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.l2)
    }

    fn find_split(&self, rows: &[usize], g: f64, h: f64, depth: usize) -> Option<SplitCandidate> {
        if self.params.max_depth.is_some_and(|d| depth >= d)
            || rows.len() < 2 * self.params.min_samples_leaf
        {
            return None;
        }
        let parent = self.score(g, h);
        let mut best: Option<SplitCandidate> = None;
        let mut hist: Vec<Bucket> = Vec::new();
        for (f, col) in self.bins.iter().enumerate() {
            let n_bins = self.mapper.uppers[f].len();
            if n_bins < 2 {
                continue;
            }
            hist.clear();
            hist.resize(n_bins, Bucket::default());
            for &r in rows {
                let b = &mut hist[col[r] as usize];
                b.g += self.grad[r];
                b.h += self.hess[r];
                b.n += 1;
            }
            let mut left = Bucket::default();
            for (bin, bucket) in hist.iter().enumerate().take(n_bins - 1) {
                left.g += bucket.g;
                left.h += bucket.h;
                left.n += bucket.n;
                let (rn, rg, rh) = (rows.len() - left.n, g - left.g, h - left.h);
                if left.n < self.params.min_samples_leaf || rn < self.params.min_samples_leaf {
                    continue;
                }
                if left.h < self.params.min_hessian || rh < self.params.min_hessian {
                    continue;
                }
                let gain = 0.5 * (self.score(left.g, left.h) + self.score(rg, rh) - parent);
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate { feature: f, bin, gain });
                }
            }
        }
        best
    }

    fn make_leaf(&self, node: usize, rows: Vec<usize>, depth: usize) -> Leaf {
        let g = rows.iter().map(|&r| self.grad[r]).sum();
        let h = rows.iter().map(|&r| self.hess[r]).sum();
        let split = self.find_split(&rows, g, h, depth);
        Leaf { node, rows, depth, g, h, split }
    }

    fn split_leaf(&self, nodes: &mut Vec<Node>, leaf: Leaf) -> (Leaf, Leaf) {
        let split = leaf.split.expect("leaf has a split");
        let col = &self.bins[split.feature];
        let (lr, rr): (Vec<usize>, Vec<usize>) =
            leaf.rows.iter().partition(|&&r| col[r] as usize <= split.bin);
        let left = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[leaf.node] = Node::Split {
            feature: split.feature,
            threshold: self.mapper.uppers[split.feature][split.bin],
            left,
            right,
            gain: split.gain,
        };
        (
            self.make_leaf(left, lr, leaf.depth + 1),
            self.make_leaf(right, rr, leaf.depth + 1),
        )
    }

    /// Grows one tree; returns it with the final leaves' row sets and values.
    fn grow(&self, rows: Vec<usize>) -> (Tree, Vec<(Vec<usize>, f64)>) {
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let max_leaves = self.params.num_leaves.unwrap_or(usize::MAX);
        let mut leaves = vec![self.make_leaf(0, rows, 0)];

        match self.params.growth {
            Growth::LeafWise => {
                while leaves.len() < max_leaves {
                    let mut best: Option<(usize, f64)> = None;
                    for (i, l) in leaves.iter().enumerate() {
                        if let Some(s) = &l.split {
                            if best.is_none_or(|(_, g)| s.gain > g) {
                                best = Some((i, s.gain));
                            }
                        }
                    }
                    let Some((i, _)) = best else { break };
                    let leaf = leaves.remove(i);
                    let (l, r) = self.split_leaf(&mut nodes, leaf);
                    leaves.push(l);
                    leaves.push(r);
                }
            }
            Growth::LevelWise => {
                let mut frontier = std::mem::take(&mut leaves);
                let mut n_leaves = 1;
                while !frontier.is_empty() {
                    let mut next = Vec::new();
                    for leaf in frontier {
                        if leaf.split.is_some() && n_leaves < max_leaves {
                            let (l, r) = self.split_leaf(&mut nodes, leaf);
                            n_leaves += 1;
                            next.push(l);
                            next.push(r);
                        } else {
                            leaves.push(leaf);
                        }
                    }
                    frontier = next;
                }
            }
        }

        let out = leaves
            .into_iter()
            .map(|leaf| {
                let value = -self.params.learning_rate * leaf.g / (leaf.h + self.params.l2);
                nodes[leaf.node] = Node::Leaf { value };
                (leaf.rows, value)
            })
            .collect();
        (Tree { nodes }, out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Initial log-odds.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss before the first tree and after each round.
    pub train_log_loss: Vec<f64>,
}

fn log_loss(raw: &[f64], y: &[f64]) -> f64 {
    raw.iter()
        .zip(y)
        .map(|(&f, &t)| {
            // log(1 + e^f) - t * f, computed stably
            let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
            softplus - t * f
        })
        .sum::<f64>()
        / raw.len() as f64
}

impl GbdtModel {
    pub fn fit(columns: &[Vec<f64>], y: &[f64], params: &GbdtParams) -> Self {
        let n = y.len();
        let prior = (y.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let base_score = (prior / (1.0 - prior)).ln();
        let mapper = BinMapper::fit(columns, params.max_bins);
        let bins: Vec<Vec<u8>> = columns
            .iter()
            .enumerate()
            .map(|(f, col)| col.iter().map(|&v| mapper.bin(f, v)).collect())
            .collect();

        let mut raw = vec![base_score; n];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        let mut trees = Vec::with_capacity(params.rounds);
        let mut history = vec![log_loss(&raw, y)];
        for _ in 0..params.rounds {
            for i in 0..n {
                let p = sigmoid(raw[i]);
                grad[i] = p - y[i];
                hess[i] = (p * (1.0 - p)).max(1e-16);
            }
            let grower = Grower {
                bins: &bins,
                mapper: &mapper,
                grad: &grad,
                hess: &hess,
                params,
            };
            let (tree, leaves) = grower.grow((0..n).collect());
            for (rows, value) in leaves {
                for r in rows {
                    raw[r] += value;
                }
            }
            trees.push(tree);
            history.push(log_loss(&raw, y));
        }
        Self {
            base_score,
            trees,
            train_log_loss: history,
        }
    }

    pub fn decision_value(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }
}
