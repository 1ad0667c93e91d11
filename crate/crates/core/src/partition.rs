//! Tree of partitions over axis-aligned boxes.
//!
//! The domain is mapped affinely onto the unit cube. A node at depth `h` has
//! been split `h` times, always along its longest edge (ties to the lowest
//! axis), which for a cube means the axis `h mod D`. Each node stores its
//! integer cell coordinate per axis, so cell arithmetic is exact.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "bounds must be non-empty and of equal length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (a, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidDomain(format!("axis {a}: need finite lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(BoxDomain { lower, upper })
    }

    /// `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        BoxDomain { lower: vec![0.0; dim], upper: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    /// Sup-norm diameter, i.e. the longest side.
    pub fn max_side(&self) -> f64 {
        (0..self.dim()).map(|a| self.side(a)).fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(a, v)| *v >= self.lower[a] && *v <= self.upper[a])
    }

    /// Unit-cube coordinates of a user-space point.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(a, v)| (v - self.lower[a]) / self.side(a)).collect()
    }

    /// User-space coordinates of a unit-cube point.
    pub fn denormalize(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(a, v)| self.lower[a] + v * self.side(a)).collect()
    }

    /// Cartesian product `self x other`, with `self`'s axes first.
    pub fn product(&self, other: &BoxDomain) -> BoxDomain {
        let mut lower = self.lower.clone();
        lower.extend_from_slice(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        BoxDomain { lower, upper }
    }
}

/// Geometry of the tree on the normalized unit cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionParams {
    pub n_split: u32,
    pub dim: usize,
    pub rho: f64,
    pub v1: f64,
    pub v2: f64,
}

impl PartitionParams {
    pub fn new(n_split: u32, dim: usize) -> Result<Self> {
        if n_split < 2 {
            return Err(Error::InvalidConfig(format!("n_split must be >= 2, got {n_split}")));
        }
        if dim == 0 {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        let n = n_split as f64;
        let d = dim as f64;
        Ok(PartitionParams {
            n_split,
            dim,
            rho: n.powf(-1.0 / d),
            v1: n.powf((d - 1.0) / d) / 2.0,
            v2: 1.0 / (2.0 * n),
        })
    }

    /// Guaranteed outer sup-norm radius `v1 rho^h` of depth-`h` cells.
    pub fn cell_radius(&self, h: u32) -> f64 {
        self.v1 * self.rho.powi(h as i32)
    }

    /// Splits applied to `axis` in a depth-`h` cell.
    pub fn splits(&self, h: u32, axis: usize) -> u32 {
        let d = self.dim as u32;
        h / d + u32::from((axis as u32) < h % d)
    }

    /// Deepest level whose cell coordinates stay exact in `f64`.
    pub fn max_depth(&self) -> u32 {
        let per_axis = (53.0 / (self.n_split as f64).log2()).floor() as u32;
        per_axis * self.dim as u32
    }
}

/// A node `(h, i)` of the tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    depth: u32,
    coords: Vec<u64>,
}

impl Node {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Integer cell coordinate along each axis.
    pub fn coords(&self) -> &[u64] {
        &self.coords
    }
}

/// The tree of partitions over a particular domain.
#[derive(Debug, Clone)]
pub struct Partition {
    domain: BoxDomain,
    params: PartitionParams,
}

impl Partition {
    pub fn new(domain: BoxDomain, n_split: u32) -> Result<Self> {
        let params = PartitionParams::new(n_split, domain.dim())?;
        Ok(Partition { domain, params })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn params(&self) -> &PartitionParams {
        &self.params
    }

    pub fn root(&self) -> Node {
        Node { depth: 0, coords: vec![0; self.params.dim] }
    }

    /// Axis split when expanding a depth-`h` node.
    pub fn split_axis(&self, h: u32) -> usize {
        (h as usize) % self.params.dim
    }

    fn cells_on_axis(&self, h: u32, axis: usize) -> u64 {
        (self.params.n_split as u64).pow(self.params.splits(h, axis))
    }

    /// The `N` children in slab order.
    pub fn children(&self, node: &Node) -> Vec<Node> {
        assert!(
            node.depth < self.params.max_depth(),
            "depth {} exceeds exact-arithmetic limit {}",
            node.depth,
            self.params.max_depth()
        );
        let axis = self.split_axis(node.depth);
        let n = self.params.n_split as u64;
        (0..n)
            .map(|j| {
                let mut coords = node.coords.clone();
                coords[axis] = coords[axis] * n + j;
                Node { depth: node.depth + 1, coords }
            })
            .collect()
    }

    pub fn parent(&self, node: &Node) -> Option<Node> {
        if node.depth == 0 {
            return None;
        }
        let axis = self.split_axis(node.depth - 1);
        let mut coords = node.coords.clone();
        coords[axis] /= self.params.n_split as u64;
        Some(Node { depth: node.depth - 1, coords })
    }

    /// Position `j` in `0..N` of a node among its siblings.
    pub fn child_slot(&self, node: &Node) -> Option<u64> {
        if node.depth == 0 {
            return None;
        }
        let axis = self.split_axis(node.depth - 1);
        Some(node.coords[axis] % self.params.n_split as u64)
    }

    /// The 1-based global index `i` with children `N(i-1)+1 ..= N i`, when it
    /// fits in `u128`.
    pub fn index(&self, node: &Node) -> Option<u128> {
        let n = self.params.n_split as u128;
        let mut i: u128 = 0;
        for g in 0..node.depth {
            i = i.checked_mul(n)?.checked_add(self.digit(node, g) as u128)?;
        }
        Some(i + 1)
    }

    // The slab chosen at the `g`-th split on the way to `node`.
    fn digit(&self, node: &Node, g: u32) -> u64 {
        let axis = self.split_axis(g);
        let level = g / self.params.dim as u32;
        let s = self.params.splits(node.depth, axis);
        let n = self.params.n_split as u64;
        (node.coords[axis] / n.pow(s - level - 1)) % n
    }

    /// Order of global indices for nodes of equal depth.
    pub fn cmp_index(&self, a: &Node, b: &Node) -> Ordering {
        debug_assert_eq!(a.depth, b.depth);
        for g in 0..a.depth {
            match self.digit(a, g).cmp(&self.digit(b, g)) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    /// Normalized cell as `(lower, upper)` in the unit cube.
    pub fn unit_cell(&self, node: &Node) -> (Vec<f64>, Vec<f64>) {
        let mut lo = Vec::with_capacity(self.params.dim);
        let mut hi = Vec::with_capacity(self.params.dim);
        for a in 0..self.params.dim {
            let m = self.cells_on_axis(node.depth, a) as f64;
            lo.push(node.coords[a] as f64 / m);
            hi.push((node.coords[a] + 1) as f64 / m);
        }
        (lo, hi)
    }

    /// Cell in user coordinates.
    pub fn cell(&self, node: &Node) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.unit_cell(node);
        (self.domain.denormalize(&lo), self.domain.denormalize(&hi))
    }

    /// Cell side length along `axis` in unit-cube units.
    pub fn unit_side(&self, node: &Node, axis: usize) -> f64 {
        1.0 / self.cells_on_axis(node.depth, axis) as f64
    }

    /// Center `x_{h,i}` in user coordinates.
    pub fn center(&self, node: &Node) -> Vec<f64> {
        let u: Vec<f64> = (0..self.params.dim)
            .map(|a| (2 * node.coords[a] + 1) as f64 / (2 * self.cells_on_axis(node.depth, a)) as f64)
            .collect();
        self.domain.denormalize(&u)
    }

    /// Whether the user-space point lies in the node's half-open cell (closed
    /// at the domain's upper faces).
    pub fn contains(&self, node: &Node, x: &[f64]) -> bool {
        let u = self.domain.normalize(x);
        (0..self.params.dim).all(|a| self.axis_contains(node, a, u[a]))
    }

    /// Whether unit coordinate `u` along `axis` lies in the node's slab.
    pub fn axis_contains(&self, node: &Node, axis: usize, u: f64) -> bool {
        let m = self.cells_on_axis(node.depth, axis);
        let c = node.coords[axis];
        let pos = u * m as f64;
        if c + 1 == m {
            pos >= c as f64 && u <= 1.0
        } else {
            pos >= c as f64 && pos < (c + 1) as f64
        }
    }

    /// Leaf of depth `h` containing `x`.
    pub fn locate(&self, x: &[f64], h: u32) -> Node {
        let u = self.domain.normalize(x);
        let coords = (0..self.params.dim)
            .map(|a| {
                let m = self.cells_on_axis(h, a);
                ((u[a] * m as f64).floor().max(0.0) as u64).min(m - 1)
            })
            .collect();
        Node { depth: h, coords }
    }

    /// Whether `anc` is an ancestor of (or equal to) `node`.
    pub fn is_ancestor(&self, anc: &Node, node: &Node) -> bool {
        if anc.depth > node.depth {
            return false;
        }
        let n = self.params.n_split as u64;
        (0..self.params.dim).all(|a| {
            let shift = self.params.splits(node.depth, a) - self.params.splits(anc.depth, a);
            node.coords[a] / n.pow(shift) == anc.coords[a]
        })
    }

    /// Checks exactly that `leaves` tile the domain: no leaf contains another
    /// and the volumes, counted in units of the deepest cell, sum to the whole.
    pub fn check_tiling(&self, leaves: &[&Node]) -> bool {
        let Some(deepest) = leaves.iter().map(|l| l.depth).max() else {
            return false;
        };
        let n = self.params.n_split as u128;
        let mut total: u128 = 0;
        for l in leaves {
            match n.checked_pow(deepest - l.depth).and_then(|v| total.checked_add(v)) {
                Some(t) => total = t,
                None => return false,
            }
        }
        if Some(total) != n.checked_pow(deepest) {
            return false;
        }
        let mut sorted: Vec<&Node> = leaves.to_vec();
        sorted.sort_by_key(|l| l.depth);
        for (i, a) in sorted.iter().enumerate() {
            for b in &sorted[i + 1..] {
                if self.is_ancestor(a, b) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_partition(d: usize, n: u32) -> Partition {
        Partition::new(BoxDomain::unit(d), n).unwrap()
    }

    #[test]
    fn roots() {
        let p = unit_partition(1, 3);
        assert_eq!(p.center(&p.root()), vec![0.5]);
        let p = unit_partition(2, 3);
        assert_eq!(p.center(&p.root()), vec![0.5, 0.5]);
        let p = Partition::new(BoxDomain::new(vec![-2.0], vec![4.0]).unwrap(), 3).unwrap();
        assert_eq!(p.center(&p.root()), vec![1.0]);
        assert_eq!(p.index(&p.root()), Some(1));
    }

    #[test]
    fn ternary_split() {
        let p = unit_partition(1, 3);
        let kids = p.children(&p.root());
        let centers: Vec<f64> = kids.iter().map(|k| p.center(k)[0]).collect();
        assert!((centers[0] - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(centers[1], 0.5);
        assert!((centers[2] - 5.0 / 6.0).abs() < 1e-15);
        assert!(p.contains(&kids[0], &[0.0]) && !p.contains(&kids[0], &[1.0 / 3.0]));
        assert!(p.contains(&kids[2], &[1.0]));
        let idx: Vec<u128> = kids.iter().map(|k| p.index(k).unwrap()).collect();
        assert_eq!(idx, vec![1, 2, 3]);
        let grand: Vec<u128> = p.children(&kids[1]).iter().map(|k| p.index(k).unwrap()).collect();
        assert_eq!(grand, vec![4, 5, 6]);
    }

    #[test]
    fn square_splits_alternate() {
        let p = unit_partition(2, 3);
        let gen1 = p.children(&p.root());
        for c in &gen1 {
            assert_eq!(p.unit_side(c, 0), 1.0 / 3.0);
            assert_eq!(p.unit_side(c, 1), 1.0);
        }
        let gen2: Vec<Node> = gen1.iter().flat_map(|c| p.children(c)).collect();
        assert_eq!(gen2.len(), 9);
        for c in &gen2 {
            assert_eq!(p.unit_side(c, 1), 1.0 / 3.0);
        }
        let refs: Vec<&Node> = gen2.iter().collect();
        assert!(p.check_tiling(&refs));
    }

    #[test]
    fn middle_child_keeps_center() {
        for (d, n) in [(1, 3), (2, 5), (3, 3)] {
            let p = unit_partition(d, n);
            let mut node = p.root();
            for _ in 0..7 {
                let kids = p.children(&node);
                assert_eq!(p.center(&kids[(n / 2) as usize]), p.center(&node));
                node = kids[0].clone();
            }
        }
    }

    #[test]
    fn radius_examples() {
        let pp = PartitionParams::new(3, 2).unwrap();
        assert!((pp.cell_radius(0) - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((pp.cell_radius(2) * 3.0 - pp.cell_radius(0)).abs() < 1e-15);
    }

    // P1-P3 exhaustively, with containment checked in integer arithmetic.
    #[test]
    fn well_behaved_exhaustive() {
        for d in 1..=3usize {
            for n in [3u32, 5] {
                let p = unit_partition(d, n);
                let pp = *p.params();
                let max_h = if n == 5 && d == 3 { 5 } else { 6 };
                let mut level = vec![p.root()];
                for h in 0..=max_h {
                    let refs: Vec<&Node> = level.iter().collect();
                    assert_eq!(level.len() as u64, (n as u64).pow(h));
                    assert!(p.check_tiling(&refs));
                    // Side along each axis is N^{-s_a}; sup radius is half the longest side.
                    let q = h / d as u32;
                    let m = h % d as u32;
                    let long = (n as f64).powi(-(q as i32)) / 2.0;
                    let short = (n as f64).powi(-(q as i32 + 1)) / 2.0;
                    let node = &level[0];
                    let count_short = (0..d).filter(|&a| p.unit_side(node, a) < (n as f64).powi(-(q as i32))).count();
                    assert_eq!(count_short as u32, m);
                    let outer = if m == d as u32 { short } else { long };
                    let inner = if m > 0 { short } else { long };
                    assert!(outer <= pp.cell_radius(h) * (1.0 + 1e-12), "d={d} n={n} h={h}");
                    assert!(pp.v2 * pp.rho.powi(h as i32) <= inner * (1.0 + 1e-12), "d={d} n={n} h={h}");
                    if h < max_h {
                        let mut next = Vec::with_capacity(level.len() * n as usize);
                        for node in &level {
                            let kids = p.children(node);
                            for k in &kids {
                                assert_eq!(p.parent(k).as_ref(), Some(node));
                                assert!(p.is_ancestor(node, k));
                            }
                            next.extend(kids);
                        }
                        level = next;
                    }
                }
            }
        }
    }

    #[test]
    fn index_order_matches_global_index() {
        let p = unit_partition(2, 3);
        let mut level = vec![p.root()];
        for _ in 0..4 {
            level = level.iter().flat_map(|c| p.children(c)).collect();
        }
        for w in level.windows(2) {
            assert_eq!(p.cmp_index(&w[0], &w[1]), Ordering::Less);
            assert!(p.index(&w[0]).unwrap() < p.index(&w[1]).unwrap());
        }
    }

    #[test]
    fn locate_finds_containing_cell() {
        let p = Partition::new(BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 4.0]).unwrap(), 3).unwrap();
        for x in [[-1.0, 0.0], [1.0, 4.0], [0.1, 2.2], [0.33, 3.999]] {
            for h in 0..8 {
                let node = p.locate(&x, h);
                assert!(p.contains(&node, &x), "{x:?} {h}");
            }
        }
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![], vec![]).is_err());
        assert!(BoxDomain::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![f64::NEG_INFINITY], vec![1.0]).is_err());
    }
}
