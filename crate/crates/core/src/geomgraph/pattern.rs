use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

pub const MAX_PATTERN_ORDER: usize = 5;

/// Position of the pair `{i, j}` (i < j) in the row-major upper triangle.
#[inline]
pub(crate) fn pair_index(i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * k - i * (i + 1) / 2 + (j - i - 1)
}

#[inline]
pub(crate) fn pair_count(k: usize) -> usize {
    k * (k - 1) / 2
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Relabel vertex `v` as `perm[v]`.
fn permute(mask: u16, perm: &[usize]) -> u16 {
    let k = perm.len();
    let mut out = 0u16;
    for i in 0..k {
        for j in i + 1..k {
            if mask >> pair_index(i, j, k) & 1 == 1 {
                let (a, b) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
                out |= 1 << pair_index(a, b, k);
            }
        }
    }
    out
}

fn mask_string(mask: u16, k: usize) -> String {
    (0..pair_count(k)).map(|p| if mask >> p & 1 == 1 { '1' } else { '0' }).collect()
}

fn connected(mask: u16, k: usize) -> bool {
    let mut seen = 1u32;
    let mut frontier = 1u32;
    while frontier != 0 {
        let mut next = 0u32;
        for v in 0..k {
            if frontier >> v & 1 == 0 {
                continue;
            }
            for u in 0..k {
                if u != v && seen >> u & 1 == 0 {
                    let (a, b) = (u.min(v), u.max(v));
                    if mask >> pair_index(a, b, k) & 1 == 1 {
                        next |= 1 << u;
                    }
                }
            }
        }
        seen |= next;
        frontier = next;
    }
    seen == (1u32 << k) - 1
}

/// A connected graph on `k ∈ [2, 5]` vertices, up to isomorphism.
///
/// Edges are stored as a bit mask over the upper triangle (pair `{i, j}` at
/// [`pair_index`]). The canonical form is the lexicographically smallest
/// adjacency string over all vertex relabellings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPattern {
    order: usize,
    mask: u16,
    canonical: String,
    /// `iso[mask]` is true iff the graph with that mask is isomorphic to this one.
    iso: Vec<bool>,
}

impl GraphPattern {
    pub fn new(order: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if !(2..=MAX_PATTERN_ORDER).contains(&order) {
            return Err(invalid("order", format!("pattern order must lie in [2, {MAX_PATTERN_ORDER}], got {order}")));
        }
        let mut mask = 0u16;
        for &(i, j) in edges {
            if i == j || i >= order || j >= order {
                return Err(invalid("edges", format!("bad edge ({i}, {j}) for order {order}")));
            }
            mask |= 1 << pair_index(i.min(j), i.max(j), order);
        }
        Self::from_mask(order, mask)
    }

    fn from_mask(order: usize, mask: u16) -> Result<Self> {
        if !connected(mask, order) {
            return Err(invalid("pattern", "pattern graph must be connected"));
        }
        let mut iso = vec![false; 1 << pair_count(order)];
        let mut canonical: Option<String> = None;
        for perm in permutations(order) {
            let m = permute(mask, &perm);
            iso[m as usize] = true;
            let s = mask_string(m, order);
            if canonical.as_ref().is_none_or(|c| s < *c) {
                canonical = Some(s);
            }
        }
        Ok(Self { order, mask, canonical: canonical.unwrap_or_default(), iso })
    }

    /// Parse an adjacency string (upper triangle, row-major, `'0'`/`'1'`).
    pub fn parse(s: &str) -> Result<Self> {
        let len = s.chars().count();
        let order = (2..=MAX_PATTERN_ORDER).find(|&k| pair_count(k) == len).ok_or_else(|| {
            invalid("pattern", format!("adjacency string of length {len} matches no order in [2, 5]"))
        })?;
        let mut mask = 0u16;
        for (p, c) in s.chars().enumerate() {
            match c {
                '1' => mask |= 1 << p,
                '0' => {}
                _ => return Err(invalid("pattern", format!("unexpected character {c:?}"))),
            }
        }
        Self::from_mask(order, mask)
    }

    pub fn edge() -> Self {
        Self::path(2)
    }

    pub fn triangle() -> Self {
        Self::complete(3)
    }

    /// The path on `k` vertices.
    pub fn path(k: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..k).map(|i| (i - 1, i)).collect();
        Self::new(k, &edges).expect("paths are connected")
    }

    pub fn complete(k: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                edges.push((i, j));
            }
        }
        Self::new(k, &edges).expect("complete graphs are connected")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mask(&self) -> u16 {
        self.mask
    }

    pub fn edge_count(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn is_isomorphic(&self, other: &GraphPattern) -> bool {
        self.order == other.order && self.canonical == other.canonical
    }

    /// Whether a graph on `order` vertices with edge mask `mask` is isomorphic
    /// to the pattern.
    #[inline]
    pub fn matches(&self, mask: u16) -> bool {
        self.iso[mask as usize]
    }

    /// All connected patterns of a given order, one per isomorphism class.
    pub fn all_connected(order: usize) -> Result<Vec<GraphPattern>> {
        if !(2..=MAX_PATTERN_ORDER).contains(&order) {
            return Err(invalid("order", format!("pattern order must lie in [2, {MAX_PATTERN_ORDER}]")));
        }
        let mut out: Vec<GraphPattern> = Vec::new();
        for mask in 0..(1u16 << pair_count(order)) {
            if !connected(mask, order) || out.iter().any(|p| p.matches(mask)) {
                continue;
            }
            out.push(Self::from_mask(order, mask)?);
        }
        Ok(out)
    }
}
