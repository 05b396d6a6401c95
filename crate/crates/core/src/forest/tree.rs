//! Single decision tree: node storage and the greedy CART builder.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Tree node in a flat arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf(Leaf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Leaf {
    /// Bootstrap-weighted class counts.
    Classes { positive: u32, negative: u32 },
    /// Training-row ids, repeated by bootstrap multiplicity.
    Rows(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf reached by `x`; rows with `x[feature] <= threshold` go left.
    pub fn leaf(&self, x: &[f64]) -> &Leaf {
        let mut id = 0usize;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf(leaf) => return leaf,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
                Node::Leaf(_) => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Leaf> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(l) => Some(l),
            Node::Split { .. } => None,
        })
    }

    pub(crate) fn max_feature_index(&self) -> Option<u32> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf(_) => None,
            })
            .max()
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Target<'a> {
    Classes { labels: &'a [bool], weight: f64 },
    Values(&'a [f64]),
}

pub(crate) struct Builder<'a, R: Rng> {
    pub target: Target<'a>,
    /// Bootstrap multiplicity per training row.
    pub mult: &'a [u32],
    pub max_depth: Option<usize>,
    pub min_samples_leaf: u64,
    pub mtry: usize,
    pub rng: R,
    nodes: Vec<Node>,
    /// In-bag rows per feature with their values. A node owns the same range
    /// `lo..hi` in every column, sorted by that column's feature.
    cols: Vec<Vec<Entry>>,
    /// Per-row stats for value targets.
    stats: Vec<Stats>,
    goes_left: Vec<bool>,
    buf: Vec<Entry>,
    features: Vec<usize>,
}

#[derive(Clone, Copy)]
struct Entry {
    value: f64,
    row: u32,
    /// Bootstrap multiplicity, with the class label in the top bit.
    tag: u32,
}

const LABEL_BIT: u32 = 1 << 31;

#[derive(Clone, Copy)]
struct Stats {
    w: f64,
    a: f64,
    b: f64,
}

impl Stats {
    const ZERO: Stats = Stats {
        w: 0.0,
        a: 0.0,
        b: 0.0,
    };
}

/// Per-row contribution: for classes `a` is the weighted positive mass and
/// `b` the negative mass; for values `a = w·y`, `b = w·y²`.
fn row_stats(target: Target<'_>, mult: &[u32], r: u32) -> Stats {
    let w = mult[r as usize] as f64;
    match target {
        Target::Classes { labels, weight } => {
            if labels[r as usize] {
                Stats { w, a: w * weight, b: 0.0 }
            } else {
                Stats { w, a: 0.0, b: w }
            }
        }
        Target::Values(y) => {
            let v = y[r as usize];
            Stats { w, a: w * v, b: w * v * v }
        }
    }
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
    left: Stats,
}

impl<'a, R: Rng> Builder<'a, R> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_features: usize,
        target: Target<'a>,
        mult: &'a [u32],
        order: &[Vec<(f64, u32)>],
        max_depth: Option<usize>,
        min_samples_leaf: usize,
        mtry: usize,
        rng: R,
    ) -> Self {
        // zero tag means out of bag
        let tags: Vec<u32> = match target {
            Target::Classes { labels, .. } => mult
                .iter()
                .zip(labels)
                .map(|(&m, &l)| if m > 0 && l { m | LABEL_BIT } else { m })
                .collect(),
            Target::Values(_) => mult.to_vec(),
        };
        let in_bag = tags.iter().filter(|&&t| t != 0).count();
        let cols = if n_features == 0 {
            let mut col = Vec::with_capacity(in_bag);
            col.extend((0..mult.len() as u32).filter_map(|row| {
                let tag = tags[row as usize];
                (tag != 0).then_some(Entry { value: 0.0, row, tag })
            }));
            vec![col]
        } else {
            order
                .iter()
                .map(|o| {
                    let mut col = Vec::with_capacity(in_bag);
                    for &(value, row) in o {
                        let tag = tags[row as usize];
                        if tag != 0 {
                            col.push(Entry { value, row, tag });
                        }
                    }
                    col
                })
                .collect()
        };
        let stats = match target {
            Target::Values(_) => (0..mult.len() as u32)
                .map(|r| row_stats(target, mult, r))
                .collect(),
            Target::Classes { .. } => Vec::new(),
        };
        Self {
            target,
            mult,
            max_depth,
            min_samples_leaf: min_samples_leaf as u64,
            mtry,
            rng,
            nodes: Vec::new(),
            cols,
            stats,
            goes_left: vec![false; mult.len()],
            buf: vec![Entry { value: 0.0, row: 0, tag: 0 }; in_bag.max(1)],
            features: (0..n_features).collect(),
        }
    }

    pub fn build(mut self) -> Tree {
        let n = self.cols[0].len();
        self.grow(0, n, 0);
        Tree { nodes: self.nodes }
    }

    #[inline]
    fn entry_stats(&self, e: &Entry) -> Stats {
        match self.target {
            Target::Classes { weight, .. } => {
                let w = (e.tag & !LABEL_BIT) as f64;
                if e.tag & LABEL_BIT != 0 {
                    Stats { w, a: w * weight, b: 0.0 }
                } else {
                    Stats { w, a: 0.0, b: w }
                }
            }
            Target::Values(_) => self.stats[e.row as usize],
        }
    }

    /// Split proxy: larger is better; the sum over children is compared.
    fn proxy(&self, s: &Stats) -> f64 {
        match self.target {
            Target::Classes { .. } => {
                let tot = s.a + s.b;
                if tot > 0.0 {
                    (s.a * s.a + s.b * s.b) / tot
                } else {
                    0.0
                }
            }
            Target::Values(_) => {
                if s.w > 0.0 {
                    s.a * s.a / s.w
                } else {
                    0.0
                }
            }
        }
    }

    /// Stopping rules that need only the node's stats. Class purity is
    /// included; value purity is checked by `is_pure`.
    fn stops(&self, depth: usize, s: &Stats) -> bool {
        self.max_depth.is_some_and(|d| depth >= d)
            || (s.w as u64) < 2 * self.min_samples_leaf
            || matches!(self.target, Target::Classes { .. } if s.a == 0.0 || s.b == 0.0)
    }

    fn is_pure(&self, rows: &[Entry], s: &Stats) -> bool {
        match self.target {
            Target::Classes { .. } => s.a == 0.0 || s.b == 0.0,
            Target::Values(y) => {
                let first = y[rows[0].row as usize];
                rows.iter().all(|e| y[e.row as usize] == first)
            }
        }
    }

    fn leaf(&self, rows: &[Entry]) -> Leaf {
        match self.target {
            Target::Classes { labels, .. } => {
                let (mut positive, mut negative) = (0u32, 0u32);
                for &Entry { row: r, .. } in rows {
                    if labels[r as usize] {
                        positive += self.mult[r as usize];
                    } else {
                        negative += self.mult[r as usize];
                    }
                }
                Leaf::Classes { positive, negative }
            }
            Target::Values(_) => {
                let mut out = Vec::new();
                for &Entry { row: r, .. } in rows {
                    out.extend(std::iter::repeat_n(r, self.mult[r as usize] as usize));
                }
                out.sort_unstable();
                Leaf::Rows(out)
            }
        }
    }

    fn grow(&mut self, lo: usize, hi: usize, depth: usize) -> u32 {
        let id = self.nodes.len() as u32;
        let mut total = Stats::ZERO;
        for e in &self.cols[0][lo..hi] {
            let s = self.entry_stats(e);
            total.w += s.w;
            total.a += s.a;
            total.b += s.b;
        }
        let stop = self.stops(depth, &total) || self.is_pure(&self.cols[0][lo..hi], &total);
        let best = if stop { None } else { self.best_split(lo, hi, &total) };
        let Some(best) = best else {
            let leaf = self.leaf(&self.cols[0][lo..hi]);
            self.nodes.push(Node::Leaf(leaf));
            return id;
        };

        let mut n_left = 0;
        for e in &self.cols[best.feature][lo..hi] {
            let left = e.value <= best.threshold;
            self.goes_left[e.row as usize] = left;
            n_left += left as usize;
        }
        let right = Stats {
            w: total.w - best.left.w,
            a: total.a - best.left.a,
            b: total.b - best.left.b,
        };
        // leaves only read column 0
        let both_leaves = self.stops(depth + 1, &best.left) && self.stops(depth + 1, &right);
        for (f, col) in self.cols.iter_mut().enumerate() {
            if f == best.feature || (both_leaves && f != 0) {
                continue;
            }
            // stable partition keeps every column sorted within the children
            let (mut w, mut k) = (lo, 0);
            let buf = &mut self.buf[..hi - lo];
            for i in lo..hi {
                let e = col[i];
                let left = self.goes_left[e.row as usize];
                col[w] = e;
                buf[k] = e;
                w += left as usize;
                k += !left as usize;
            }
            col[w..hi].copy_from_slice(&buf[..k]);
        }
        self.nodes.push(Node::Split {
            feature: best.feature as u32,
            threshold: best.threshold,
            left: 0,
            right: 0,
        });
        let mid = lo + n_left;
        let left = self.grow(lo, mid, depth + 1);
        let right = self.grow(mid, hi, depth + 1);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[id as usize]
        {
            *l = left;
            *r = right;
        }
        id
    }

    fn best_split(&mut self, lo: usize, hi: usize, total: &Stats) -> Option<Best> {
        let mut features = std::mem::take(&mut self.features);
        features.shuffle(&mut self.rng);
        let mut best: Option<Best> = None;
        let mut visited = 0;
        let msl = self.min_samples_leaf as f64;
        for &f in &features {
            if visited >= self.mtry {
                break;
            }
            let col = &self.cols[f][lo..hi];
            if col[0].value == col[col.len() - 1].value {
                // constant features do not count towards mtry
                continue;
            }
            visited += 1;
            let mut left = Stats::ZERO;
            for i in 0..col.len() - 1 {
                let s = self.entry_stats(&col[i]);
                left.w += s.w;
                left.a += s.a;
                left.b += s.b;
                let (a, b) = (col[i].value, col[i + 1].value);
                if a == b || left.w < msl || total.w - left.w < msl {
                    continue;
                }
                let right = Stats {
                    w: total.w - left.w,
                    a: total.a - left.a,
                    b: total.b - left.b,
                };
                let score = self.proxy(&left) + self.proxy(&right);
                if best.as_ref().is_none_or(|bst| score > bst.score) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Best {
                        feature: f,
                        threshold,
                        score,
                        left,
                    });
                }
            }
        }
        self.features = features;
        best
    }
}
