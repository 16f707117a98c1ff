//! Exact inference for a first-order chain over the labels `{B, I, O}`.

use alloc::vec::Vec;

use crate::corpus::Tag;

const L: usize = Tag::COUNT;

/// Emission scores per position and the label transition matrix
/// (`trans[from][to]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub emit: Vec<[f64; L]>,
    pub trans: [[f64; L]; L],
}

impl Potentials {
    pub fn len(&self) -> usize {
        self.emit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emit.is_empty()
    }

    /// Unnormalized log score of a labeling. Accumulates in the same order
    /// as [`viterbi`], so the two agree bit for bit.
    pub fn score(&self, labels: &[Tag]) -> f64 {
        debug_assert_eq!(labels.len(), self.emit.len());
        let Some(&first) = labels.first() else {
            return 0.0;
        };
        let mut acc = self.emit[0][first.index()];
        for t in 1..labels.len() {
            acc = acc + self.trans[labels[t - 1].index()][labels[t].index()];
            acc = acc + self.emit[t][labels[t].index()];
        }
        acc
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| libm::exp(x - m)).sum();
    m + libm::log(s)
}

/// Forward log-scores `alpha[t][y]`.
fn forward(p: &Potentials) -> Vec<[f64; L]> {
    let n = p.len();
    let mut alpha = Vec::with_capacity(n);
    if n == 0 {
        return alpha;
    }
    alpha.push(p.emit[0]);
    for t in 1..n {
        let prev: [f64; L] = alpha[t - 1];
        let mut cur = [0.0; L];
        for (y, c) in cur.iter_mut().enumerate() {
            let terms: [f64; L] = core::array::from_fn(|yp| prev[yp] + p.trans[yp][y]);
            *c = log_sum_exp(&terms) + p.emit[t][y];
        }
        alpha.push(cur);
    }
    alpha
}

/// Backward log-scores `beta[t][y]`, with `beta[n-1] = 0`.
fn backward(p: &Potentials) -> Vec<[f64; L]> {
    let n = p.len();
    let mut beta = alloc::vec![[0.0; L]; n];
    for t in (0..n.saturating_sub(1)).rev() {
        for y in 0..L {
            let terms: [f64; L] =
                core::array::from_fn(|yn| p.trans[y][yn] + p.emit[t + 1][yn] + beta[t + 1][yn]);
            beta[t][y] = log_sum_exp(&terms);
        }
    }
    beta
}

/// `log Z`: log of the summed exponentiated scores of all `3^n` labelings.
/// Zero for an empty sequence.
pub fn log_partition(p: &Potentials) -> f64 {
    match forward(p).last() {
        Some(last) => log_sum_exp(last),
        None => 0.0,
    }
}

/// Posterior marginals from forward-backward.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub log_z: f64,
    /// `node[t][y] = P(y_t = y)`.
    pub node: Vec<[f64; L]>,
    /// `edge[t][a][b] = P(y_{t-1} = a, y_t = b)`; `edge[0]` is all zero.
    pub edge: Vec<[[f64; L]; L]>,
}

pub fn forward_backward(p: &Potentials) -> Marginals {
    let n = p.len();
    let alpha = forward(p);
    let beta = backward(p);
    let log_z = alpha.last().map_or(0.0, |a| log_sum_exp(a));
    let node = (0..n)
        .map(|t| core::array::from_fn(|y| libm::exp(alpha[t][y] + beta[t][y] - log_z)))
        .collect();
    let edge = (0..n)
        .map(|t| {
            if t == 0 {
                return [[0.0; L]; L];
            }
            core::array::from_fn(|a| {
                core::array::from_fn(|b| {
                    libm::exp(alpha[t - 1][a] + p.trans[a][b] + p.emit[t][b] + beta[t][b] - log_z)
                })
            })
        })
        .collect();
    Marginals { log_z, node, edge }
}

fn allowed(constrained: bool, from: Option<Tag>, to: Tag) -> bool {
    if !constrained || to != Tag::I {
        return true;
    }
    // I may not start the sequence or follow O
    matches!(from, Some(Tag::B) | Some(Tag::I))
}

/// Highest-scoring labeling and its score. With `constrained`, the result
/// never starts with `I` and never has `O` followed by `I`. Ties are broken
/// towards the earlier label in `B < I < O`, both for backpointers and for
/// the final label.
pub fn viterbi(p: &Potentials, constrained: bool) -> (Vec<Tag>, f64) {
    let n = p.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta: Vec<[f64; L]> = Vec::with_capacity(n);
    let mut back: Vec<[usize; L]> = Vec::with_capacity(n);
    let first: [f64; L] = core::array::from_fn(|y| {
        if allowed(constrained, None, Tag::from_index(y)) {
            p.emit[0][y]
        } else {
            f64::NEG_INFINITY
        }
    });
    delta.push(first);
    back.push([0; L]);
    for t in 1..n {
        let mut cur = [f64::NEG_INFINITY; L];
        let mut bp = [0usize; L];
        for y in 0..L {
            let mut best = f64::NEG_INFINITY;
            let mut arg = usize::MAX;
            for yp in 0..L {
                if delta[t - 1][yp] == f64::NEG_INFINITY
                    || !allowed(constrained, Some(Tag::from_index(yp)), Tag::from_index(y))
                {
                    continue;
                }
                let v = delta[t - 1][yp] + p.trans[yp][y];
                if arg == usize::MAX || v > best {
                    best = v;
                    arg = yp;
                }
            }
            if arg != usize::MAX {
                cur[y] = best + p.emit[t][y];
                bp[y] = arg;
            }
        }
        delta.push(cur);
        back.push(bp);
    }
    let last = &delta[n - 1];
    let mut y = 0;
    for k in 1..L {
        if last[k] > last[y] {
            y = k;
        }
    }
    let score = last[y];
    let mut path = alloc::vec![Tag::O; n];
    for t in (0..n).rev() {
        path[t] = Tag::from_index(y);
        y = back[t][y];
    }
    (path, score)
}
