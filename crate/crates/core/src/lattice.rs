//! Finite boxes of `Z^d` and their vertex/edge indexing.
//!
//! Vertices of `[-L, L]^d` are ranked row-major with the first coordinate
//! most significant, so rank order is lexicographic coordinate order.
//! The canonical index of the edge `(x, x + e_i)` is `i * V + rank(x)`.
//! Edges are stored compactly: slot order is canonical order with the
//! non-existent indices (`x_i = L`) skipped, which keeps the bit array
//! exactly as long as the edge count of the box.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest box (in edges) we agree to allocate: 2^33 bits, i.e. 1 GiB.
pub const MAX_EDGES: u128 = 1 << 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxSpec {
    pub d: usize,
    pub half_width: i64,
    pub margin: i64,
}

impl BoxSpec {
    pub fn new(d: usize, half_width: i64, margin: i64) -> Result<Self> {
        let spec = BoxSpec {
            d,
            half_width,
            margin,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Box with the default margin `ceil(L / 5)`.
    pub fn with_default_margin(d: usize, half_width: i64) -> Result<Self> {
        Self::new(d, half_width, (half_width + 4) / 5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Parameter(format!("dimension {} < 2", self.d)));
        }
        if self.half_width < 1 {
            return Err(Error::Parameter(format!(
                "half width {} < 1",
                self.half_width
            )));
        }
        if self.margin < 0 || self.margin >= self.half_width {
            return Err(Error::Parameter(format!(
                "margin {} outside [0, {})",
                self.margin, self.half_width
            )));
        }
        Ok(())
    }

    pub fn side(&self) -> i64 {
        2 * self.half_width + 1
    }

    /// Half width of the analysis region `[-L+M, L-M]^d`.
    pub fn analysis_half_width(&self) -> i64 {
        self.half_width - self.margin
    }

    /// Saturates at `u128::MAX`.
    pub fn edge_count_u128(&self) -> u128 {
        let s = self.side() as u128;
        s.checked_pow(self.d as u32 - 1)
            .and_then(|x| x.checked_mul(s - 1))
            .and_then(|x| x.checked_mul(self.d as u128))
            .unwrap_or(u128::MAX)
    }
}

/// Index arithmetic for a validated [`BoxSpec`].
#[derive(Debug, Clone)]
pub struct Lattice {
    pub spec: BoxSpec,
    side: usize,
    strides: Vec<usize>,
    vertex_count: usize,
    edges_per_dir: usize,
    /// Row-major strides of the sub-grid used for each direction's slots.
    edge_strides: Vec<Vec<usize>>,
}

impl Lattice {
    pub fn new(spec: BoxSpec) -> Result<Self> {
        spec.validate()?;
        let edges = spec.edge_count_u128();
        if edges > MAX_EDGES || edges > usize::MAX as u128 {
            return Err(Error::Capacity(format!(
                "box d={} L={} has {} edges, limit is {}",
                spec.d, spec.half_width, edges, MAX_EDGES
            )));
        }
        let d = spec.d;
        let side = spec.side() as usize;
        let mut strides = vec![1usize; d];
        for i in (0..d - 1).rev() {
            strides[i] = strides[i + 1] * side;
        }
        let vertex_count = strides[0] * side;
        let edges_per_dir = side.pow(d as u32 - 1) * (side - 1);
        let edge_strides = (0..d)
            .map(|dir| {
                let mut st = vec![1usize; d];
                for i in (0..d - 1).rev() {
                    let extent = if i + 1 == dir { side - 1 } else { side };
                    st[i] = st[i + 1] * extent;
                }
                st
            })
            .collect();
        Ok(Lattice {
            spec,
            side,
            strides,
            vertex_count,
            edges_per_dir,
            edge_strides,
        })
    }

    pub fn d(&self) -> usize {
        self.spec.d
    }

    pub fn half_width(&self) -> i64 {
        self.spec.half_width
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges_per_dir * self.spec.d
    }

    pub fn origin(&self) -> usize {
        self.strides.iter().sum::<usize>() * self.spec.half_width as usize
    }

    pub fn rank(&self, x: &[i64]) -> Option<usize> {
        let l = self.spec.half_width;
        let mut r = 0usize;
        for (i, &xi) in x.iter().enumerate() {
            if xi < -l || xi > l {
                return None;
            }
            r += (xi + l) as usize * self.strides[i];
        }
        Some(r)
    }

    #[inline]
    pub fn coord(&self, rank: usize, i: usize) -> i64 {
        ((rank / self.strides[i]) % self.side) as i64 - self.spec.half_width
    }

    pub fn coords(&self, rank: usize) -> Vec<i64> {
        (0..self.spec.d).map(|i| self.coord(rank, i)).collect()
    }

    /// Neighbor of `rank` along `+e_dir` (`positive`) or `-e_dir`.
    #[inline]
    pub fn neighbor(&self, rank: usize, dir: usize, positive: bool) -> Option<usize> {
        let c = (rank / self.strides[dir]) % self.side;
        if positive {
            (c + 1 < self.side).then(|| rank + self.strides[dir])
        } else {
            (c > 0).then(|| rank - self.strides[dir])
        }
    }

    /// Compact slot of the edge `(x, x + e_dir)` where `x` has rank `rank`.
    #[inline]
    pub fn edge_slot(&self, rank: usize, dir: usize) -> Option<usize> {
        let mut compact = 0usize;
        let st = &self.edge_strides[dir];
        for i in 0..self.spec.d {
            let c = (rank / self.strides[i]) % self.side;
            if i == dir && c + 1 >= self.side {
                return None;
            }
            compact += c * st[i];
        }
        Some(dir * self.edges_per_dir + compact)
    }

    /// Slot of the edge joining two adjacent vertices, in either order.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let diff = hi - lo;
        let dir = self.strides.iter().position(|&s| s == diff)?;
        if self.neighbor(lo, dir, true) != Some(hi) {
            return None;
        }
        self.edge_slot(lo, dir)
    }

    /// Endpoints `(x, x + e_dir)` of a slot.
    pub fn edge_endpoints(&self, slot: usize) -> (usize, usize) {
        let dir = slot / self.edges_per_dir;
        let mut rest = slot % self.edges_per_dir;
        let st = &self.edge_strides[dir];
        let mut rank = 0usize;
        for i in 0..self.spec.d {
            let c = rest / st[i];
            rest %= st[i];
            rank += c * self.strides[i];
        }
        (rank, rank + self.strides[dir])
    }

    pub fn edge_direction(&self, slot: usize) -> usize {
        slot / self.edges_per_dir
    }

    /// Canonical (portable) index `i * V + rank(x)` of a slot.
    pub fn canonical_index(&self, slot: usize) -> usize {
        let (a, _) = self.edge_endpoints(slot);
        self.edge_direction(slot) * self.vertex_count + a
    }

    /// All `(neighbor, edge slot)` pairs of a vertex.
    pub fn incident(&self, rank: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.spec.d).flat_map(move |dir| {
            let up = self
                .neighbor(rank, dir, true)
                .map(|nb| (nb, self.edge_slot(rank, dir).expect("edge exists")));
            let down = self
                .neighbor(rank, dir, false)
                .map(|nb| (nb, self.edge_slot(nb, dir).expect("edge exists")));
            up.into_iter().chain(down)
        })
    }

    pub fn linf(&self, rank: usize) -> i64 {
        (0..self.spec.d)
            .map(|i| self.coord(rank, i).abs())
            .max()
            .unwrap_or(0)
    }

    /// True if the vertex lies on the outer face of the box.
    pub fn on_outer_face(&self, rank: usize) -> bool {
        self.linf(rank) == self.spec.half_width
    }

    pub fn in_analysis_region(&self, rank: usize) -> bool {
        self.linf(rank) <= self.spec.analysis_half_width()
    }

    /// All `2d` incident edges of the vertex exist in the box.
    pub fn is_interior(&self, rank: usize) -> bool {
        self.linf(rank) < self.spec.half_width
    }

    pub fn position(&self, rank: usize) -> Vec<f64> {
        (0..self.spec.d).map(|i| self.coord(rank, i) as f64).collect()
    }
}

/// Visit every integer point of the box `[lo, hi]` in lexicographic order.
pub fn for_each_point(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let d = lo.len();
    let mut x = lo.to_vec();
    loop {
        f(&x);
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if x[i] < hi[i] {
                x[i] += 1;
                break;
            }
            x[i] = lo[i];
        }
    }
}
