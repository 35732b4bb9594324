//! Exact Euclidean nearest neighbours with seeded uniform tie-breaking.
//!
//! Rows are first collapsed into classes of identical rows. A row with at
//! least one duplicate has all of its duplicates (and nothing else) at
//! distance zero. Rows without duplicates query an exact k-d tree over the
//! distinct rows, which reports every distinct row at the minimal squared
//! distance. The minimisers are ordered by row index and one of them is
//! picked with the counter-based draw `(seed, row)`, so the result does not
//! depend on traversal order.

use rayon::prelude::*;

use crate::data::{ObservationSet, RowClasses};
use crate::error::{Error, Result};
use crate::rng;

/// Above this dimension the index falls back to an exhaustive scan.
pub const BRUTE_FORCE_ABOVE_DIM: usize = 12;

const LEAF_SIZE: usize = 16;

/// Nearest-neighbour assignment `N(k)` for every row (0-based indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborMap {
    neighbor: Vec<usize>,
    tie_counts: Vec<usize>,
    seed: u64,
}

impl NeighborMap {
    pub fn neighbors(&self) -> &[usize] {
        &self.neighbor
    }

    /// Number of rows at the minimal distance from each row.
    pub fn tie_counts(&self) -> &[usize] {
        &self.tie_counts
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.neighbor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbor.is_empty()
    }
}

/// Squared Euclidean distance, accumulated in coordinate order.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (u, v) in a.iter().zip(b) {
        let d = u - v;
        s += d * d;
    }
    s
}

/// Position in `0..ties` of the minimiser chosen for `row`.
#[inline]
pub fn tie_break(seed: u64, row: usize, ties: usize) -> usize {
    if ties <= 1 {
        0
    } else {
        rng::index(seed, row as u64, ties)
    }
}

pub fn build_neighbor_map(x: &[f64], p: usize, seed: u64) -> Result<NeighborMap> {
    if p == 0 {
        return Err(Error::NoPredictors);
    }
    let n = x.len() / p;
    if n < 2 {
        return Err(Error::TooFewObservations { required: 2, got: n });
    }
    Ok(build_with_classes(x, p, seed, &RowClasses::build(x, p)))
}

pub(crate) fn build_with_classes(x: &[f64], p: usize, seed: u64, classes: &RowClasses) -> NeighborMap {
    let n = x.len() / p;
    let m = classes.len();

    let mut class_of = vec![0u32; n];
    let mut pos_in_class = vec![0u32; n];
    let mut distinct = Vec::with_capacity(m * p);
    for g in 0..m {
        let members = classes.members(g);
        for (i, &k) in members.iter().enumerate() {
            class_of[k] = g as u32;
            pos_in_class[k] = i as u32;
        }
        distinct.extend_from_slice(&x[members[0] * p..(members[0] + 1) * p]);
    }

    let index = if p > BRUTE_FORCE_ABOVE_DIM {
        Index::Scan
    } else {
        Index::Tree(KdTree::build(&distinct, p))
    };

    // singleton classes are queried in tree order so that consecutive
    // searches touch the same leaves
    let order: Vec<u32> = match &index {
        Index::Tree(tree) => tree.ids.clone(),
        Index::Scan => (0..m as u32).collect(),
    };
    let singles: Vec<(usize, usize, usize)> = (0..m)
        .into_par_iter()
        .filter(|&slot| classes.members(order[slot] as usize).len() == 1)
        .map_init(Vec::new, |tied, slot| {
            let g = order[slot];
            let k = classes.members(g as usize)[0];
            tied.clear();
            match &index {
                Index::Tree(tree) => tree.nearest_all(tree.point(slot), g, tied),
                Index::Scan => {
                    let q = &distinct[g as usize * p..(g as usize + 1) * p];
                    scan_nearest_all(&distinct, p, q, g, tied)
                }
            }
            let ties: usize = tied.iter().map(|&c| classes.members(c as usize).len()).sum();
            let r = tie_break(seed, k, ties);
            let chosen = if tied.len() == 1 {
                classes.members(tied[0] as usize)[r]
            } else {
                let mut all: Vec<usize> = tied
                    .iter()
                    .flat_map(|&c| classes.members(c as usize).iter().copied())
                    .collect();
                all.sort_unstable();
                all[r]
            };
            (k, chosen, ties)
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let members = classes.members(class_of[k] as usize);
            if members.len() < 2 {
                return (usize::MAX, 0);
            }
            let ties = members.len() - 1;
            let r = tie_break(seed, k, ties);
            let skip = usize::from(r >= pos_in_class[k] as usize);
            (members[r + skip], ties)
        })
        .collect();
    for (k, chosen, ties) in singles {
        pairs[k] = (chosen, ties);
    }

    let (neighbor, tie_counts) = pairs.into_iter().unzip();
    NeighborMap {
        neighbor,
        tie_counts,
        seed,
    }
}

pub fn neighbor_map_for(obs: &ObservationSet, seed: u64) -> Result<NeighborMap> {
    build_neighbor_map(obs.x(), obs.p(), seed)
}

enum Index {
    Tree(KdTree),
    Scan,
}

fn scan_nearest_all(pts: &[f64], p: usize, q: &[f64], exclude: u32, out: &mut Vec<u32>) {
    let mut best = f64::INFINITY;
    for (id, pt) in pts.chunks_exact(p).enumerate() {
        if id as u32 == exclude {
            continue;
        }
        let d = squared_distance(q, pt);
        if d < best {
            best = d;
            out.clear();
            out.push(id as u32);
        } else if d == best {
            out.push(id as u32);
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { dim: u32, value: f64, left: u32, right: u32 },
}

/// Exact k-d tree over distinct points, median split on the widest
/// coordinate. Points equal to a split value may sit on either side, which
/// is why the far side is visited whenever its plane distance is `<=` the
/// incumbent.
struct KdTree {
    p: usize,
    ids: Vec<u32>,
    nodes: Vec<Node>,
    /// Points in leaf order: slot `i` holds point `ids[i]`.
    leaf_pts: Vec<f64>,
}

impl KdTree {
    fn build(pts: &[f64], p: usize) -> Self {
        let m = pts.len() / p;
        let mut tree = KdTree {
            p,
            ids: (0..m as u32).collect(),
            nodes: Vec::with_capacity(2 * m / LEAF_SIZE + 1),
            leaf_pts: pts.to_vec(),
        };
        let mut scratch = Vec::new();
        tree.build_node(0, m, &mut scratch);
        tree
    }

    /// Splits `lo..hi` at the median of its widest coordinate. Points and
    /// ids are permuted physically so every level reads memory in order.
    fn build_node(&mut self, lo: usize, hi: usize, scratch: &mut Vec<(f64, u32)>) -> u32 {
        let p = self.p;
        let slot = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf {
            start: lo as u32,
            end: hi as u32,
        });
        if hi - lo <= LEAF_SIZE {
            return slot;
        }
        let mut min = vec![f64::INFINITY; p];
        let mut max = vec![f64::NEG_INFINITY; p];
        for row in self.leaf_pts[lo * p..hi * p].chunks_exact(p) {
            for d in 0..p {
                min[d] = min[d].min(row[d]);
                max[d] = max[d].max(row[d]);
            }
        }
        let (dim, widest) = (0..p)
            .map(|d| (d, max[d] - min[d]))
            .fold((0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if widest <= 0.0 {
            return slot;
        }
        let mid = (lo + hi) / 2;
        scratch.clear();
        scratch.extend((lo..hi).map(|i| (self.leaf_pts[i * p + dim], (i - lo) as u32)));
        scratch.select_nth_unstable_by(mid - lo, |a, b| a.0.total_cmp(&b.0));
        let value = scratch[mid - lo].0;
        let old_pts = self.leaf_pts[lo * p..hi * p].to_vec();
        let old_ids = self.ids[lo..hi].to_vec();
        for (i, &(_, src)) in scratch.iter().enumerate() {
            let src = src as usize;
            self.ids[lo + i] = old_ids[src];
            self.leaf_pts[(lo + i) * p..(lo + i + 1) * p].copy_from_slice(&old_pts[src * p..(src + 1) * p]);
        }
        let left = self.build_node(lo, mid, scratch);
        let right = self.build_node(mid, hi, scratch);
        self.nodes[slot as usize] = Node::Split {
            dim: dim as u32,
            value,
            left,
            right,
        };
        slot
    }

    #[inline]
    fn point(&self, slot: usize) -> &[f64] {
        &self.leaf_pts[slot * self.p..(slot + 1) * self.p]
    }

    /// All distinct points (other than `exclude`) at the minimal squared
    /// distance from `q`, in unspecified order.
    fn nearest_all(&self, q: &[f64], exclude: u32, out: &mut Vec<u32>) {
        let mut best = f64::INFINITY;
        self.search(0, q, exclude, &mut best, out);
    }

    fn search(&self, node: u32, q: &[f64], exclude: u32, best: &mut f64, out: &mut Vec<u32>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for slot in start as usize..end as usize {
                    let id = self.ids[slot];
                    if id == exclude {
                        continue;
                    }
                    let at = slot * self.p;
                    let d = squared_distance(q, &self.leaf_pts[at..at + self.p]);
                    if d < *best {
                        *best = d;
                        out.clear();
                        out.push(id);
                    } else if d == *best {
                        out.push(id);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim as usize] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, exclude, best, out);
                if diff * diff <= *best {
                    self.search(far, q, exclude, best, out);
                }
            }
        }
    }
}
