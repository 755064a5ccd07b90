//! CART trees grown on presorted feature columns.
//!
//! Every feature keeps its node samples sorted by value; a split stably
//! partitions each feature's segment, so no re-sorting happens below the
//! root.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::real::Real;

/// One tree node. Leaves have `feature_idx == None`; internal nodes send
/// `x[feature_idx] <= threshold` to `left`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Node<T> {
    pub feature_idx: Option<usize>,
    pub threshold: T,
    pub left: usize,
    pub right: usize,
    pub leaf_value: T,
}

impl<T: Real> Node<T> {
    fn leaf(value: T) -> Self {
        Self { feature_idx: None, threshold: T::zero(), left: 0, right: 0, leaf_value: value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Real> Tree<T> {
    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            match node.feature_idx {
                None => return node.leaf_value,
                Some(f) => i = if x[f] <= node.threshold { node.left } else { node.right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature_idx.is_none()).count()
    }

    /// Same split structure (features and thresholds), ignoring leaf values.
    pub fn same_structure(&self, other: &Tree<T>) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| {
                a.feature_idx == b.feature_idx
                    && a.left == b.left
                    && a.right == b.right
                    && (a.feature_idx.is_none() || a.threshold == b.threshold)
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_leaf: 1, max_features: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impurity {
    /// Weighted child variance; leaves predict the mean.
    Variance,
    /// Weighted child Gini; leaves predict the majority class (lowest on
    /// ties). Targets must be class indices `0..n_classes`.
    Gini { n_classes: usize },
}

/// Row-major samples to column-major features.
pub fn columns<T: Real>(x: &[Vec<T>]) -> Vec<Vec<T>> {
    let n_features = x.first().map_or(0, Vec::len);
    (0..n_features).map(|f| x.iter().map(|row| row[f]).collect()).collect()
}

struct Split<T> {
    feature: usize,
    threshold: T,
    /// Number of samples going left.
    n_left: usize,
}

struct Grower<'a, T> {
    cols: &'a [Vec<T>],
    /// Original sample index per position.
    rows: &'a [usize],
    /// Target per position.
    ys: Vec<T>,
    /// Per feature, positions sorted by feature value within node segments.
    sorted: Vec<Vec<u32>>,
    go_left: Vec<bool>,
    scratch: Vec<u32>,
    params: TreeParams,
    impurity: Impurity,
}

impl<'a, T: Real> Grower<'a, T> {
    fn value(&self, f: usize, p: u32) -> T {
        self.cols[f][self.rows[p as usize]]
    }

    fn leaf_value(&self, seg: &[u32]) -> T {
        match self.impurity {
            Impurity::Variance => {
                let s: T = seg.iter().map(|&p| self.ys[p as usize]).sum();
                s / T::from_count(seg.len())
            }
            Impurity::Gini { n_classes } => {
                let mut counts = vec![0usize; n_classes];
                for &p in seg {
                    counts[class_of(self.ys[p as usize])] += 1;
                }
                let best = crate::metrics::argmax(&counts).unwrap_or(0);
                T::from_count(best)
            }
        }
    }

    fn is_pure(&self, seg: &[u32]) -> bool {
        let first = self.ys[seg[0] as usize];
        seg.iter().all(|&p| self.ys[p as usize] == first)
    }

    /// Best split of feature `f`, with its gain. `None` if the feature is
    /// constant over the node or no split respects `min_leaf`.
    fn scan(&self, f: usize, seg: &[u32], node: &NodeStats<T>) -> Option<(T, T, usize)> {
        match self.impurity {
            Impurity::Variance => self.scan_variance(f, seg, node),
            Impurity::Gini { n_classes } => self.scan_gini(f, seg, n_classes),
        }
    }

    fn candidate_ok(&self, f: usize, seg: &[u32], k: usize) -> Option<(T, T)> {
        let n = seg.len();
        let n_left = k + 1;
        if n_left < self.params.min_leaf || n - n_left < self.params.min_leaf {
            return None;
        }
        let a = self.value(f, seg[k]);
        let b = self.value(f, seg[k + 1]);
        if a == b {
            return None;
        }
        Some((a, b))
    }

    /// Mean, summed deviation and tie tolerance of a node, computed once so
    /// every feature scores candidates against the same values.
    fn node_stats(&self, seg: &[u32]) -> NodeStats<T> {
        let n = T::from_count(seg.len());
        if let Impurity::Gini { .. } = self.impurity {
            return NodeStats { mean: T::zero(), total_dev: T::zero(), tol: T::zero() };
        }
        let mean = seg.iter().map(|&p| self.ys[p as usize]).sum::<T>() / n;
        let (total_dev, sst) = seg.iter().fold((T::zero(), T::zero()), |(s, q), &p| {
            let d = self.ys[p as usize] - mean;
            (s + d, q + d * d)
        });
        // gains are n times the between-group sum of squares
        let tol = n * sst * T::epsilon() * T::lit(4.0) * n;
        NodeStats { mean, total_dev, tol }
    }

    /// Works on deviations from the node mean so the scores do not carry
    /// rounding from the targets' offset; shifting every target by a
    /// constant leaves split choices unchanged.
    fn scan_variance(&self, f: usize, seg: &[u32], node: &NodeStats<T>) -> Option<(T, T, usize)> {
        let n = seg.len();
        let mut best: Option<(T, T, usize)> = None;
        let mut left_sum = T::zero();
        for k in 0..n - 1 {
            left_sum = left_sum + (self.ys[seg[k] as usize] - node.mean);
            let Some((a, b)) = self.candidate_ok(f, seg, k) else { continue };
            let nl = T::from_count(k + 1);
            let nr = T::from_count(n - k - 1);
            let diff = left_sum / nl - (node.total_dev - left_sum) / nr;
            // proportional to the drop in summed squared error
            let gain = nl * nr * diff * diff;
            if gain > node.tol && best.as_ref().is_none_or(|(g, _, _)| beats(gain, *g, node.tol)) {
                best = Some((gain, midpoint(a, b), k + 1));
            }
        }
        best
    }

    fn scan_gini(&self, f: usize, seg: &[u32], n_classes: usize) -> Option<(T, T, usize)> {
        let n = seg.len();
        let mut right = vec![0usize; n_classes];
        for &p in seg {
            right[class_of(self.ys[p as usize])] += 1;
        }
        let mut left = vec![0usize; n_classes];
        let mut sq_right: usize = right.iter().map(|c| c * c).sum();
        let mut sq_left = 0usize;
        let parent = sq_right as f64 / n as f64;
        let mut best: Option<(T, T, usize)> = None;
        for k in 0..n - 1 {
            let c = class_of(self.ys[seg[k] as usize]);
            sq_left += 2 * left[c] + 1;
            left[c] += 1;
            sq_right -= 2 * right[c] - 1;
            right[c] -= 1;
            let Some((a, b)) = self.candidate_ok(f, seg, k) else { continue };
            let score = sq_left as f64 / (k + 1) as f64 + sq_right as f64 / (n - k - 1) as f64;
            let gain = T::lit(score - parent);
            if gain > T::zero() && best.as_ref().is_none_or(|(g, _, _)| beats(gain, *g, gini_tol(*g))) {
                best = Some((gain, midpoint(a, b), k + 1));
            }
        }
        best
    }

    fn best_split<R: Rng>(&self, start: usize, end: usize, rng: &mut R) -> Option<Split<T>> {
        let n_features = self.cols.len();
        let mut order: Vec<usize> = (0..n_features).collect();
        let limit = self.params.max_features.unwrap_or(n_features).clamp(1, n_features);
        if limit < n_features {
            order.shuffle(rng);
        }
        let node = self.node_stats(&self.sorted[0][start..end]);
        let tol_of = |g: T| match self.impurity {
            Impurity::Variance => node.tol,
            Impurity::Gini { .. } => gini_tol(g),
        };
        let mut best: Option<(T, Split<T>)> = None;
        let mut visited = 0;
        for f in order {
            // keep looking past the quota until some valid split exists
            if visited >= limit && best.is_some() {
                break;
            }
            let seg = &self.sorted[f][start..end];
            if self.value(f, seg[0]) == self.value(f, seg[seg.len() - 1]) {
                continue;
            }
            visited += 1;
            if let Some((gain, threshold, n_left)) = self.scan(f, seg, &node) {
                if best.as_ref().is_none_or(|(g, _)| beats(gain, *g, tol_of(*g))) {
                    best = Some((gain, Split { feature: f, threshold, n_left }));
                }
            }
        }
        best.map(|(_, s)| s)
    }

    fn partition(&mut self, split: &Split<T>, start: usize, end: usize) {
        let f = split.feature;
        for k in start..end {
            let p = self.sorted[f][k];
            self.go_left[p as usize] = k - start < split.n_left;
        }
        for g in 0..self.sorted.len() {
            self.scratch.clear();
            let seg = &self.sorted[g][start..end];
            self.scratch.extend(seg.iter().filter(|&&p| self.go_left[p as usize]));
            self.scratch.extend(seg.iter().filter(|&&p| !self.go_left[p as usize]));
            self.sorted[g][start..end].copy_from_slice(&self.scratch);
        }
    }

    fn grow<R: Rng>(mut self, rng: &mut R) -> Tree<T> {
        let m = self.rows.len();
        let mut nodes = vec![Node::leaf(T::zero())];
        // (node, start, end, depth)
        let mut stack = vec![(0usize, 0usize, m, 0usize)];
        while let Some((id, start, end, depth)) = stack.pop() {
            let seg0: Vec<u32> = self.sorted[0][start..end].to_vec();
            nodes[id] = Node::leaf(self.leaf_value(&seg0));
            let n = end - start;
            let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
            if depth_capped || n < 2 * self.params.min_leaf.max(1) || self.is_pure(&seg0) {
                continue;
            }
            let Some(split) = self.best_split(start, end, rng) else { continue };
            self.partition(&split, start, end);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::leaf(T::zero()));
            nodes.push(Node::leaf(T::zero()));
            nodes[id] = Node {
                feature_idx: Some(split.feature),
                threshold: split.threshold,
                left,
                right,
                leaf_value: nodes[id].leaf_value,
            };
            let mid = start + split.n_left;
            stack.push((right, mid, end, depth + 1));
            stack.push((left, start, mid, depth + 1));
        }
        Tree { nodes }
    }
}

struct NodeStats<T> {
    mean: T,
    total_dev: T,
    /// Gains closer than this are ties.
    tol: T,
}

/// Strictly better by more than `tol`. Ties (e.g. the same partition reached
/// through different features) keep the earlier candidate.
fn beats<T: Real>(gain: T, best: T, tol: T) -> bool {
    gain > best + tol
}

fn gini_tol<T: Real>(best: T) -> T {
    best.abs() * T::epsilon() * T::lit(1024.0)
}

fn class_of<T: Real>(v: T) -> usize {
    v.to_usize().expect("class labels are non-negative integers")
}

/// Midpoint that stays strictly below `b` so `x <= threshold` sends `a` left
/// and `b` right.
fn midpoint<T: Real>(a: T, b: T) -> T {
    let mid = a + (b - a) / T::lit(2.0);
    if mid >= b {
        a
    } else {
        mid
    }
}

/// Grows one tree on the samples listed in `rows` (duplicates allowed).
/// `cols` is column-major; `y` is indexed by original sample.
pub fn grow_tree<T: Real, R: Rng>(
    cols: &[Vec<T>],
    y: &[T],
    rows: &[usize],
    params: &TreeParams,
    impurity: Impurity,
    rng: &mut R,
) -> Tree<T> {
    assert!(!rows.is_empty(), "cannot grow a tree on zero samples");
    let m = rows.len();
    let ys: Vec<T> = rows.iter().map(|&r| y[r]).collect();
    let sorted = cols
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..m as u32).collect();
            idx.sort_by(|&a, &b| col[rows[a as usize]].partial_cmp(&col[rows[b as usize]]).expect("finite features"));
            idx
        })
        .collect::<Vec<_>>();
    // trees on zero features still need one column to hold positions
    let sorted = if sorted.is_empty() { vec![(0..m as u32).collect()] } else { sorted };
    Grower {
        cols,
        rows,
        ys,
        sorted,
        go_left: vec![false; m],
        scratch: Vec::with_capacity(m),
        params: *params,
        impurity,
    }
    .grow(rng)
}
