//! CART regression trees with exact greedy variance-reduction splits.
//!
//! Rows are presorted once per design. Each tree keeps one sorted segment
//! per feature for every node and partitions all of them stably when a node
//! splits, so split search never re-sorts.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Node {
    /// Split feature, or `LEAF`.
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
}

/// A fitted regression tree. Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            if node.feature == LEAF {
                return node.value;
            }
            i = if x[node.feature as usize] <= node.threshold { node.left } else { node.right } as usize;
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.feature == LEAF {
                0
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.nodes.iter().filter(|n| n.feature != LEAF).map(|n| n.feature as usize).collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// `None` grows until the leaf-size rule stops it.
    pub max_depth: Option<usize>,
    /// Minimum (bootstrap-weighted) observations per leaf.
    pub min_leaf: usize,
    /// Features drawn per split; `>= p` means all.
    pub mtry: usize,
}

/// Per-feature row orders, sorted by value then row index.
pub(crate) struct Presorted {
    n: usize,
    order: Vec<u32>,
}

impl Presorted {
    pub(crate) fn new(x: &DMatrix<f64>) -> Self {
        let (n, p) = x.shape();
        let data = x.as_slice();
        let mut order = Vec::with_capacity(n * p);
        for f in 0..p {
            let col = &data[f * n..(f + 1) * n];
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            order.extend(idx);
        }
        Presorted { n, order }
    }
}

struct Split {
    feature: usize,
    /// Number of segment entries going left.
    left_len: usize,
    threshold: f64,
    score: f64,
}

/// Grow one tree on rows with positive `weights` (bootstrap counts).
pub(crate) fn grow<R: Rng>(
    x: &DMatrix<f64>,
    y: &[f64],
    weights: &[u32],
    pre: &Presorted,
    params: &TreeParams,
    rng: &mut R,
) -> RegressionTree {
    let (n, p) = x.shape();
    debug_assert_eq!(pre.n, n);
    let data = x.as_slice();
    let m0 = weights.iter().filter(|&&w| w > 0).count();
    let mut buf = Vec::with_capacity(p * m0);
    for f in 0..p {
        buf.extend(pre.order[f * n..(f + 1) * n].iter().filter(|&&r| weights[r as usize] > 0));
    }
    let mut tmp = vec![0u32; m0 + 1];
    let mut goes_left = vec![false; n];
    let min_leaf = params.min_leaf.max(1) as f64;
    let all_features: Vec<usize> = (0..p).collect();
    let wt: Vec<f64> = weights.iter().map(|&w| w as f64).collect();
    let wy: Vec<f64> = wt.iter().zip(y).map(|(w, v)| w * v).collect();

    let mut nodes = vec![Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 }];
    // (node, segment start, segment end, depth)
    let mut stack = vec![(0usize, 0usize, m0, 0usize)];
    while let Some((id, start, end, depth)) = stack.pop() {
        // node statistics from any one segment; feature 0's if present
        let rows: &[u32] = if p > 0 { &buf[start..end] } else { &[] };
        let (mut w_tot, mut s_tot) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        if p > 0 {
            for &r in rows {
                let w = weights[r as usize] as f64;
                let v = y[r as usize];
                w_tot += w;
                s_tot += w * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        } else {
            for (r, &w) in weights.iter().enumerate() {
                if w > 0 {
                    w_tot += w as f64;
                    s_tot += w as f64 * y[r];
                }
            }
        }
        nodes[id].value = if w_tot > 0.0 { s_tot / w_tot } else { 0.0 };
        if p == 0 || w_tot < 2.0 * min_leaf || params.max_depth.is_some_and(|d| depth >= d) || lo == hi {
            continue;
        }

        let sampled;
        let features: &[usize] = if params.mtry >= p {
            &all_features
        } else {
            let mut s = rand::seq::index::sample(rng, p, params.mtry).into_vec();
            s.sort_unstable();
            sampled = s;
            &sampled
        };

        let mut best: Option<Split> = None;
        for &f in features {
            let seg = &buf[f * m0 + start..f * m0 + end];
            let col = &data[f * n..(f + 1) * n];
            let (mut wl, mut sl) = (0.0, 0.0);
            let mut prev = col[seg[0] as usize];
            for i in 0..seg.len() - 1 {
                let r = seg[i] as usize;
                wl += wt[r];
                sl += wy[r];
                let (a, b) = (prev, col[seg[i + 1] as usize]);
                prev = b;
                if a >= b {
                    continue;
                }
                let wr = w_tot - wl;
                if wl < min_leaf || wr < min_leaf {
                    continue;
                }
                let sr = s_tot - sl;
                let score = sl * sl / wl + sr * sr / wr;
                if best.as_ref().is_none_or(|s| score > s.score) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(Split { feature: f, left_len: i + 1, threshold, score });
                }
            }
        }
        let Some(split) = best else { continue };

        let chosen = &buf[split.feature * m0 + start..split.feature * m0 + end];
        for (i, &r) in chosen.iter().enumerate() {
            goes_left[r as usize] = i < split.left_len;
        }
        for f in 0..p {
            let seg = &mut buf[f * m0 + start..f * m0 + end];
            // branch-free stable partition: lefts compact in place, rights
            // go through `tmp` (one spare slot)
            let (mut l, mut k) = (0, 0);
            for i in 0..seg.len() {
                let r = seg[i];
                let left = goes_left[r as usize] as usize;
                seg[l] = r;
                tmp[k] = r;
                l += left;
                k += 1 - left;
            }
            seg[split.left_len..].copy_from_slice(&tmp[..k]);
        }

        let left = nodes.len();
        nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
        nodes.push(Node { feature: LEAF, threshold: 0.0, left: 0, right: 0, value: 0.0 });
        let node = &mut nodes[id];
        node.feature = split.feature as u32;
        node.threshold = split.threshold;
        node.left = left as u32;
        node.right = left as u32 + 1;
        let mid = start + split.left_len;
        stack.push((left + 1, mid, end, depth + 1));
        stack.push((left, start, mid, depth + 1));
    }
    RegressionTree { nodes }
}
