use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::pattern::{pair_index, GraphPattern};
use crate::error::{invalid, Result};
use crate::space::Configuration;

/// Edge rule: `‖a − b‖ ∈ (0, t)`, open at both ends, so coincident points
/// are never adjacent.
#[inline]
pub fn adjacent(a: &[f64], b: &[f64], t: f64) -> bool {
    if a.len() == 1 {
        let d = (a[0] - b[0]).abs();
        return d > 0.0 && d < t;
    }
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    d2 > 0.0 && d2 < t * t
}

/// Edge mask of the graph induced on `points`, in [`pair_index`] order.
pub fn induced_mask(points: &[&[f64]], t: f64) -> u16 {
    let k = points.len();
    let mut mask = 0u16;
    for i in 0..k {
        for j in i + 1..k {
            if adjacent(points[i], points[j], t) {
                mask |= 1 << pair_index(i, j, k);
            }
        }
    }
    mask
}

/// Marker for the virtual vertex added by a derivative query.
const VIRTUAL: u32 = u32::MAX;

/// Disk graph on a configuration, with a spatial hash of cell size `t`.
#[derive(Debug, Clone)]
pub struct DiskGraph<'a> {
    config: &'a Configuration,
    t: f64,
    /// Cell key of every point, `dim` entries per point.
    keys: Vec<i64>,
    /// Point indices sorted by cell key.
    order: Vec<u32>,
    neighbors: Vec<Vec<u32>>,
}

impl<'a> DiskGraph<'a> {
    pub fn new(config: &'a Configuration, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(invalid("t", "radius must be positive and finite"));
        }
        let dim = config.dim();
        let n = config.len();
        let mut keys = Vec::with_capacity(n * dim);
        for p in config.points() {
            keys.extend(p.iter().map(|&x| libm::floor(x / t) as i64));
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| Self::cmp_keys(&keys, dim, a, b));
        let mut g = Self { config, t, keys, order, neighbors: Vec::new() };
        let mut neighbors = vec![Vec::new(); n];
        for (i, list) in neighbors.iter_mut().enumerate() {
            let p = config.point(i);
            let key: Vec<i64> = g.keys[i * dim..(i + 1) * dim].to_vec();
            g.for_candidates(&key, 1, |j| {
                if j as usize != i && adjacent(p, config.point(j as usize), t) {
                    list.push(j);
                }
            });
            list.sort_unstable();
        }
        g.neighbors = neighbors;
        Ok(g)
    }

    fn cmp_keys(keys: &[i64], dim: usize, a: u32, b: u32) -> Ordering {
        let (a, b) = (a as usize, b as usize);
        keys[a * dim..(a + 1) * dim].cmp(&keys[b * dim..(b + 1) * dim]).then(a.cmp(&b))
    }

    /// Points whose cell lies within `reach` cells of `key` along every axis.
    fn for_candidates<F: FnMut(u32)>(&self, key: &[i64], reach: i64, mut f: F) {
        let dim = key.len();
        let mut offset = vec![-reach; dim];
        let mut cell = vec![0i64; dim];
        loop {
            for a in 0..dim {
                cell[a] = key[a] + offset[a];
            }
            let lo = self.order.partition_point(|&i| self.key(i) < &cell[..]);
            for &i in &self.order[lo..] {
                if self.key(i) != &cell[..] {
                    break;
                }
                f(i);
            }
            let mut a = 0;
            loop {
                if a == dim {
                    return;
                }
                if offset[a] < reach {
                    offset[a] += 1;
                    break;
                }
                offset[a] = -reach;
                a += 1;
            }
        }
    }

    #[inline]
    fn key(&self, i: u32) -> &[i64] {
        let dim = self.config.dim();
        &self.keys[i as usize * dim..(i as usize + 1) * dim]
    }

    pub fn config(&self) -> &'a Configuration {
        self.config
    }

    pub fn radius(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.config.len()
    }

    pub fn is_empty(&self) -> bool {
        self.config.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    pub fn edge_count(&self) -> u64 {
        self.neighbors.iter().map(|l| l.len() as u64).sum::<u64>() / 2
    }

    /// Configuration points within distance `< radius` of `z`, `z` itself
    /// excluded only if it is not a configuration point.
    pub fn points_near(&self, z: &[f64], radius: f64) -> Vec<u32> {
        let key: Vec<i64> = z.iter().map(|&x| libm::floor(x / self.t) as i64).collect();
        let reach = libm::ceil(radius / self.t) as i64;
        let mut out = Vec::new();
        self.for_candidates(&key, reach, |j| {
            let p = self.config.point(j as usize);
            let d2: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < radius * radius {
                out.push(j);
            }
        });
        out.sort_unstable();
        out
    }

    fn position<'b>(&'b self, v: u32, z: &'b [f64]) -> &'b [f64] {
        if v == VIRTUAL {
            z
        } else {
            self.config.point(v as usize)
        }
    }

    /// Enumerate every connected vertex set of size `k` exactly once (ESU
    /// enumeration rooted at each vertex in turn).
    pub fn for_each_connected<F: FnMut(&[u32])>(&self, k: usize, mut f: F) {
        let mut sub = Vec::with_capacity(k);
        for v in 0..self.len() as u32 {
            sub.push(v);
            let ext: Vec<u32> = self.neighbors[v as usize].iter().copied().filter(|&u| u > v).collect();
            self.extend(k, v, &[], &mut sub, ext, &mut f);
            sub.pop();
        }
    }

    /// Connected sets of size `k` in `config + δ_z` that contain `z`; the
    /// virtual vertex is reported first in each set.
    pub fn for_each_connected_with<F: FnMut(&[u32])>(&self, z: &[f64], k: usize, mut f: F) {
        let ext = self.points_near(z, self.t);
        let ext: Vec<u32> = ext.into_iter().filter(|&u| adjacent(z, self.config.point(u as usize), self.t)).collect();
        let mut sub = Vec::with_capacity(k);
        sub.push(VIRTUAL);
        self.extend(k, VIRTUAL, z, &mut sub, ext, &mut f);
    }

    fn extend<F: FnMut(&[u32])>(
        &self,
        k: usize,
        root: u32,
        z: &[f64],
        sub: &mut Vec<u32>,
        mut ext: Vec<u32>,
        f: &mut F,
    ) {
        if sub.len() == k {
            f(sub);
            return;
        }
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &self.neighbors[w as usize] {
                // With a virtual root every real vertex is admissible.
                if root != VIRTUAL && u <= root {
                    continue;
                }
                if sub.contains(&u) {
                    continue;
                }
                let pu = self.config.point(u as usize);
                if sub.iter().any(|&s| adjacent(self.position(s, z), pu, self.t)) {
                    continue;
                }
                next.push(u);
            }
            sub.push(w);
            self.extend(k, root, z, sub, next, f);
            sub.pop();
        }
    }

    fn mask_of(&self, set: &[u32], z: &[f64]) -> u16 {
        let mut pts: [&[f64]; super::pattern::MAX_PATTERN_ORDER] = [&[]; super::pattern::MAX_PATTERN_ORDER];
        for (i, &v) in set.iter().enumerate() {
            pts[i] = self.position(v, z);
        }
        induced_mask(&pts[..set.len()], self.t)
    }

    /// Induced copies of each pattern; one traversal per distinct order.
    pub fn count_patterns(&self, patterns: &[&GraphPattern]) -> Vec<u64> {
        let mut counts = vec![0u64; patterns.len()];
        let mut orders: Vec<usize> = patterns.iter().map(|p| p.order()).collect();
        orders.sort_unstable();
        orders.dedup();
        for k in orders {
            if k == 2 {
                let e = self.edge_count();
                for (c, p) in counts.iter_mut().zip(patterns) {
                    if p.order() == 2 {
                        *c += e;
                    }
                }
                continue;
            }
            self.for_each_connected(k, |set| {
                let mask = self.mask_of(set, &[]);
                for (c, p) in counts.iter_mut().zip(patterns) {
                    if p.order() == k && p.matches(mask) {
                        *c += 1;
                    }
                }
            });
        }
        counts
    }

    /// Induced copies of `pattern` in `config + δ_z` that use `z`.
    pub fn count_with_point(&self, z: &[f64], pattern: &GraphPattern) -> u64 {
        let mut c = 0;
        self.for_each_connected_with(z, pattern.order(), |set| {
            if pattern.matches(self.mask_of(set, z)) {
                c += 1;
            }
        });
        c
    }
}

/// Number of `k`-subsets of the configuration whose induced disk graph is
/// isomorphic to `pattern`.
pub fn count_induced(config: &Configuration, t: f64, pattern: &GraphPattern) -> Result<u64> {
    Ok(DiskGraph::new(config, t)?.count_patterns(&[pattern])[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use crate::space::{sample_iid, ControlMeasure};

    #[test]
    fn hand_examples() {
        let c = Configuration::from_scalars(&[0.0, 0.5, 1.0]);
        assert_eq!(count_induced(&c, 0.6, &GraphPattern::path(3)).unwrap(), 1);
        assert_eq!(count_induced(&c, 0.6, &GraphPattern::triangle()).unwrap(), 0);
        let c = Configuration::from_scalars(&[0.0, 0.1, 0.2]);
        assert_eq!(count_induced(&c, 0.6, &GraphPattern::path(3)).unwrap(), 0);
        assert_eq!(count_induced(&c, 0.6, &GraphPattern::triangle()).unwrap(), 1);
        // Coincident points are not adjacent.
        let c = Configuration::from_scalars(&[0.3, 0.3]);
        assert_eq!(count_induced(&c, 0.6, &GraphPattern::edge()).unwrap(), 0);
    }

    fn brute(config: &Configuration, t: f64, p: &GraphPattern) -> u64 {
        let n = config.len();
        let k = p.order();
        let mut idx: Vec<usize> = (0..k).collect();
        let mut count = 0;
        if n < k {
            return 0;
        }
        loop {
            let pts: Vec<&[f64]> = idx.iter().map(|&i| config.point(i)).collect();
            if p.matches(induced_mask(&pts, t)) {
                count += 1;
            }
            let mut a = k;
            loop {
                if a == 0 {
                    return count;
                }
                a -= 1;
                if idx[a] < n - k + a {
                    idx[a] += 1;
                    for b in a + 1..k {
                        idx[b] = idx[b - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn matches_exhaustive_in_two_dimensions() {
        let m = ControlMeasure::uniform_unit(2, 1.0).unwrap();
        for r in 0..5 {
            let mut rng = replicate_rng(11, r);
            let c = sample_iid(&m, 40, &mut rng).unwrap();
            for p in GraphPattern::all_connected(3).unwrap().iter().chain(&GraphPattern::all_connected(4).unwrap()) {
                assert_eq!(count_induced(&c, 0.25, p).unwrap(), brute(&c, 0.25, p));
            }
        }
    }

    #[test]
    fn derivative_counts_match_recount() {
        let m = ControlMeasure::uniform_unit(1, 1.0).unwrap();
        let mut rng = replicate_rng(5, 0);
        let c = sample_iid(&m, 30, &mut rng).unwrap();
        let g = DiskGraph::new(&c, 0.08).unwrap();
        for p in [GraphPattern::triangle(), GraphPattern::path(3), GraphPattern::edge()] {
            for z in [0.1, 0.37, 0.5, 0.93] {
                let plus = c.with_point(&[z]);
                let diff = count_induced(&plus, 0.08, &p).unwrap() - count_induced(&c, 0.08, &p).unwrap();
                assert_eq!(g.count_with_point(&[z], &p), diff);
            }
        }
    }
}
