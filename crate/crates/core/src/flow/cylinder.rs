//! Oriented cylinders, their lattice discretisation and the minimal open
//! cutset capacity `tau`.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::maxflow::{FlowNetwork, INF};
use crate::lattice::for_each_point;
use crate::percolation::BondConfiguration;
use crate::{Error, Result};

/// Snap tolerance for membership tests; points on the boundary are inside.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Cross-section of a cylinder, in coordinates of [`orthonormal_complement`]
/// of the normal, relative to the cylinder center and before scaling by `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Base {
    /// Centered hyperrectangle with the given side lengths (`d - 1` of them).
    Rectangle(Vec<f64>),
    /// Convex polygon, counter-clockwise (`d = 3` only).
    Polygon(Vec<[f64; 2]>),
}

impl Base {
    pub fn measure(&self) -> f64 {
        match self {
            Base::Rectangle(sides) => sides.iter().product(),
            Base::Polygon(pts) => polygon_area(pts).abs(),
        }
    }

    fn contains(&self, u: &[f64], scale: f64) -> bool {
        match self {
            Base::Rectangle(sides) => sides
                .iter()
                .zip(u)
                .all(|(s, c)| c.abs() <= 0.5 * s * scale + MEMBERSHIP_TOL),
            Base::Polygon(pts) => {
                let k = pts.len();
                (0..k).all(|i| {
                    let a = pts[i];
                    let b = pts[(i + 1) % k];
                    let (ex, ey) = ((b[0] - a[0]) * scale, (b[1] - a[1]) * scale);
                    let (px, py) = (u[0] - a[0] * scale, u[1] - a[1] * scale);
                    let len = (ex * ex + ey * ey).sqrt();
                    // signed distance to the edge line, positive inside
                    (ex * py - ey * px) / len >= -MEMBERSHIP_TOL
                })
            }
        }
    }

    /// Corners of the base, scaled.
    fn corners(&self, scale: f64) -> Vec<Vec<f64>> {
        match self {
            Base::Rectangle(sides) => {
                let k = sides.len();
                (0..1usize << k)
                    .map(|m| {
                        (0..k)
                            .map(|j| {
                                let s = if m >> j & 1 == 1 { 0.5 } else { -0.5 };
                                s * sides[j] * scale
                            })
                            .collect()
                    })
                    .collect()
            }
            Base::Polygon(pts) => pts.iter().map(|p| vec![p[0] * scale, p[1] * scale]).collect(),
        }
    }
}

pub(crate) fn polygon_area(pts: &[[f64; 2]]) -> f64 {
    let k = pts.len();
    0.5 * (0..k)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % k]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

/// Orthonormal basis of the hyperplane normal to the unit vector `v`:
/// Gram-Schmidt over the standard axes, skipping the one most aligned with
/// `v`. For `v = e_d` this is `e_1, ..., e_{d-1}`; in `d = 2` it is the
/// rotation of `v` by +90 degrees up to sign.
pub fn orthonormal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let d = v.len();
    if d == 2 {
        return vec![vec![-v[1], v[0]]];
    }
    let skip = (0..d)
        .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
        .expect("d >= 2");
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    for axis in (0..d).filter(|&i| i != skip) {
        let mut w = vec![0.0; d];
        w[axis] = 1.0;
        for b in &basis {
            let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            for i in 0..d {
                w[i] -= dot * b[i];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        basis.push(w.iter().map(|x| x / norm).collect());
    }
    basis.remove(0);
    basis
}

/// The cylinder `n * center + {x + t v : x in n A, |t| <= n h}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderSpec {
    pub d: usize,
    /// Center of the base, in unscaled units.
    pub center: Vec<f64>,
    pub base: Base,
    /// Unit normal.
    pub normal: Vec<f64>,
    /// Half height, in unscaled units.
    pub h: f64,
    /// Lattice scale.
    pub n: f64,
}

impl CylinderSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if self.center.len() != d || self.normal.len() != d {
            return Err(Error::Parameter("cylinder vectors must have length d".into()));
        }
        let norm = self.normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("normal has length {norm}, expected 1")));
        }
        if !(self.h > 0.0) || !(self.n > 0.0) {
            return Err(Error::Parameter("cylinder height and scale must be positive".into()));
        }
        match &self.base {
            Base::Rectangle(s) if s.len() != d - 1 => {
                return Err(Error::Parameter(format!(
                    "rectangle base needs {} sides, got {}",
                    d - 1,
                    s.len()
                )))
            }
            Base::Polygon(_) if d != 3 => {
                return Err(Error::Parameter("polygon bases need d = 3".into()))
            }
            _ => {}
        }
        if !(self.base.measure() > 0.0) {
            return Err(Error::Parameter("cylinder base has zero measure".into()));
        }
        Ok(())
    }

    /// `H^{d-1}(nA)`.
    pub fn scaled_base_measure(&self) -> f64 {
        self.base.measure() * self.n.powi(self.d as i32 - 1)
    }

    fn physical_center(&self) -> Vec<f64> {
        self.center.iter().map(|c| c * self.n).collect()
    }

    /// Signed height `t` and base coordinates of a point, in lattice units.
    pub fn local_coords(&self, x: &[f64], basis: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let c = self.physical_center();
        let y: Vec<f64> = x.iter().zip(&c).map(|(a, b)| a - b).collect();
        let t = dot(&y, &self.normal);
        let u = basis.iter().map(|b| dot(&y, b)).collect();
        (t, u)
    }

    pub fn contains(&self, x: &[f64], basis: &[Vec<f64>]) -> bool {
        let (t, u) = self.local_coords(x, basis);
        t.abs() <= self.h * self.n + MEMBERSHIP_TOL && self.base.contains(&u, self.n)
    }

    /// Axis-aligned integer bounding box `[lo, hi]` of the cylinder.
    pub fn lattice_bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let basis = orthonormal_complement(&self.normal);
        let c = self.physical_center();
        let hh = self.h * self.n;
        let mut lo = vec![f64::INFINITY; self.d];
        let mut hi = vec![f64::NEG_INFINITY; self.d];
        for corner in self.base.corners(self.n) {
            for s in [-hh, hh] {
                for i in 0..self.d {
                    let mut x = c[i] + s * self.normal[i];
                    for (b, u) in basis.iter().zip(&corner) {
                        x += u * b[i];
                    }
                    lo[i] = lo[i].min(x);
                    hi[i] = hi[i].max(x);
                }
            }
        }
        (
            lo.iter().map(|x| (x - MEMBERSHIP_TOL).floor() as i64).collect(),
            hi.iter().map(|x| (x + MEMBERSHIP_TOL).ceil() as i64).collect(),
        )
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lattice points of a cylinder with the open edges between them.
#[derive(Debug, Clone)]
pub struct CylinderNetwork {
    /// Box ranks of the cylinder's lattice points, in increasing order.
    pub vertices: Vec<usize>,
    /// Local indices of `C'_1` (below the base, with a neighbor outside).
    pub side1: Vec<usize>,
    /// Local indices of `C'_2`.
    pub side2: Vec<usize>,
    /// Lattice edges with both endpoints inside: (local a, local b, slot).
    pub edges: Vec<(usize, usize, usize)>,
    /// Open status of each entry of `edges`.
    pub open: Vec<bool>,
}

impl CylinderNetwork {
    pub fn open_edge_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }
}

pub fn discretize_cylinder(spec: &CylinderSpec, config: &BondConfiguration) -> Result<CylinderNetwork> {
    spec.validate()?;
    let lat = config.lattice();
    let d = lat.d();
    if spec.d != d {
        return Err(Error::Parameter(format!(
            "cylinder has d = {}, configuration has d = {d}",
            spec.d
        )));
    }
    let (lo, hi) = spec.lattice_bounds();
    let l = lat.half_width();
    if lo.iter().chain(&hi).any(|&x| x < -l || x > l) {
        return Err(Error::Geometry(format!(
            "cylinder spans {lo:?}..{hi:?}, outside the box [-{l}, {l}]^{d}"
        )));
    }
    let basis = orthonormal_complement(&spec.normal);
    let mut vertices = Vec::new();
    let mut heights = Vec::new();
    let mut xf = vec![0.0; d];
    for_each_point(&lo, &hi, |x| {
        for i in 0..d {
            xf[i] = x[i] as f64;
        }
        if spec.contains(&xf, &basis) {
            vertices.push(lat.rank(x).expect("bounds checked"));
            heights.push(spec.local_coords(&xf, &basis).0);
        }
    });
    // Enumeration is lexicographic, so ranks are already sorted.
    let local = |r: usize| vertices.binary_search(&r).ok();
    let mut side1 = Vec::new();
    let mut side2 = Vec::new();
    let mut edges = Vec::new();
    let mut open = Vec::new();
    for (i, &v) in vertices.iter().enumerate() {
        let coords = lat.coords(v);
        let mut leaks = false;
        for dir in 0..d {
            for delta in [-1i64, 1] {
                let mut y = coords.clone();
                y[dir] += delta;
                let yr = lat.rank(&y);
                let inside = yr.and_then(local);
                match inside {
                    Some(j) => {
                        if delta == 1 {
                            let slot = lat.edge_slot(v, dir).expect("neighbor exists");
                            edges.push((i, j, slot));
                            open.push(config.is_open(slot));
                        }
                    }
                    None => leaks = true,
                }
            }
        }
        if leaks {
            let t = heights[i];
            if t < -MEMBERSHIP_TOL {
                side1.push(i);
            } else if t > MEMBERSHIP_TOL {
                side2.push(i);
            }
        }
    }
    Ok(CylinderNetwork {
        vertices,
        side1,
        side2,
        edges,
        open,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutsetResult {
    /// Number of open edges in the minimal cutset, equal to the max flow.
    pub capacity: usize,
    /// Slots of the open edges of the cutset.
    pub cut_edges: Vec<usize>,
    /// Slots of all cylinder edges (open or closed) leaving the source side;
    /// a cutset of the full lattice restricted to the cylinder.
    pub boundary_edges: Vec<usize>,
    /// Box ranks of `C'_1` and `C'_2`.
    pub side1: Vec<usize>,
    pub side2: Vec<usize>,
    /// Box ranks on the source side of the cut.
    pub source_side: Vec<usize>,
    pub stats: CutStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutStats {
    pub vertices: usize,
    pub open_edges: usize,
    pub elapsed_secs: f64,
}

/// Minimal number of open edges separating `C'_1` from `C'_2` inside the
/// cylinder. The separation of the returned cut is checked by search on
/// every call.
pub fn tau(spec: &CylinderSpec, config: &BondConfiguration) -> Result<CutsetResult> {
    let start = Instant::now();
    let net = discretize_cylinder(spec, config)?;
    let m = net.vertices.len();
    let (s, t) = (m, m + 1);
    let mut g = FlowNetwork::new(m + 2);
    for (k, &(a, b, _)) in net.edges.iter().enumerate() {
        if net.open[k] {
            g.add_edge(a, b, 1);
        }
    }
    for &a in &net.side1 {
        g.add_arc(s, a, INF);
    }
    for &b in &net.side2 {
        g.add_arc(b, t, INF);
    }
    let flow = g.max_flow(s, t);
    let reach = g.residual_reachable(s);
    let mut cut_edges = Vec::new();
    let mut boundary_edges = Vec::new();
    let mut cut_mask = vec![false; net.edges.len()];
    for (k, &(a, b, slot)) in net.edges.iter().enumerate() {
        if reach[a] != reach[b] {
            boundary_edges.push(slot);
            if net.open[k] {
                cut_edges.push(slot);
                cut_mask[k] = true;
            }
        }
    }
    if cut_edges.len() as i64 != flow {
        return Err(Error::Contract(format!(
            "cut has {} open edges but the flow is {flow}",
            cut_edges.len()
        )));
    }
    if !separates(&net, &cut_mask) {
        return Err(Error::Contract("reported cutset does not separate C'_1 from C'_2".into()));
    }
    let ranks = |ix: &[usize]| ix.iter().map(|&i| net.vertices[i]).collect::<Vec<_>>();
    let source_side: Vec<usize> = (0..m).filter(|&i| reach[i]).map(|i| net.vertices[i]).collect();
    Ok(CutsetResult {
        capacity: cut_edges.len(),
        cut_edges,
        boundary_edges,
        side1: ranks(&net.side1),
        side2: ranks(&net.side2),
        source_side,
        stats: CutStats {
            vertices: m,
            open_edges: net.open_edge_count(),
            elapsed_secs: start.elapsed().as_secs_f64(),
        },
    })
}

/// True if no open path avoiding the removed edges joins `C'_1` to `C'_2`.
pub fn separates(net: &CylinderNetwork, removed: &[bool]) -> bool {
    let m = net.vertices.len();
    let mut adj = vec![Vec::new(); m];
    for (k, &(a, b, _)) in net.edges.iter().enumerate() {
        if net.open[k] && !removed[k] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; m];
    let mut queue: VecDeque<usize> = net.side1.iter().copied().collect();
    for &a in &net.side1 {
        seen[a] = true;
    }
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    net.side2.iter().all(|&b| !seen[b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxSpec;
    use crate::percolation::sample_configuration;

    fn axis_spec(n: f64, width: f64, h: f64) -> CylinderSpec {
        CylinderSpec {
            d: 2,
            center: vec![0.25 / n, 0.25 / n],
            base: Base::Rectangle(vec![width]),
            normal: vec![0.0, 1.0],
            h,
            n,
        }
    }

    #[test]
    fn complement_is_orthonormal() {
        for v in [
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![0.3, -0.2, 0.9],
            vec![1.0, 0.0, 0.0, 0.0],
        ] {
            let n = dot(&v, &v).sqrt();
            let v: Vec<f64> = v.iter().map(|x| x / n).collect();
            let b = orthonormal_complement(&v);
            assert_eq!(b.len(), v.len() - 1);
            for (i, bi) in b.iter().enumerate() {
                assert!(dot(bi, &v).abs() < 1e-12);
                assert!((dot(bi, bi) - 1.0).abs() < 1e-12);
                for bj in &b[i + 1..] {
                    assert!(dot(bi, bj).abs() < 1e-12);
                }
            }
        }
        let b = orthonormal_complement(&[0.0, 0.0, 1.0]);
        assert_eq!(b, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
    }

    #[test]
    fn axis_cylinder_sides_are_slabs() {
        let c = sample_configuration(BoxSpec::new(2, 10, 0).unwrap(), 1.0, 0).unwrap();
        let spec = axis_spec(8.0, 1.0, 0.25);
        let net = discretize_cylinder(&spec, &c).unwrap();
        let lat = c.lattice();
        // base covers x in [-3.75, 4.25] -> 8 columns; heights y in [-1.75, 2.25]
        assert_eq!(net.vertices.len(), 8 * 4);
        for &i in &net.side1 {
            let x = lat.coords(net.vertices[i]);
            // center height is 0.25, so y = 0 lies below the base
            assert!(x[1] <= 0);
            assert!(x[1] == -1 || x[0] == -3 || x[0] == 4);
        }
        let bottom = net
            .side1
            .iter()
            .filter(|&&i| lat.coord(net.vertices[i], 1) == -1)
            .count();
        assert_eq!(bottom, 8);
    }

    #[test]
    fn p_one_axis_capacity_counts_columns() {
        let c = sample_configuration(BoxSpec::new(2, 20, 0).unwrap(), 1.0, 0).unwrap();
        for n in [4.0, 7.0, 12.0] {
            let r = tau(&axis_spec(n, 1.0, 0.25), &c).unwrap();
            assert_eq!(r.capacity, n as usize);
        }
    }

    #[test]
    fn p_zero_capacity_zero() {
        let c = sample_configuration(BoxSpec::new(2, 20, 0).unwrap(), 0.0, 0).unwrap();
        let r = tau(&axis_spec(10.0, 1.0, 0.25), &c).unwrap();
        assert_eq!(r.capacity, 0);
        assert_eq!(r.stats.open_edges, 0);
    }

    #[test]
    fn tilted_membership_matches_pointwise_oracle() {
        let c = sample_configuration(BoxSpec::new(2, 12, 0).unwrap(), 1.0, 0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let spec = CylinderSpec {
            d: 2,
            center: vec![0.01, -0.02],
            base: Base::Rectangle(vec![1.0]),
            normal: vec![s, s],
            h: 0.3,
            n: 6.0,
        };
        let net = discretize_cylinder(&spec, &c).unwrap();
        let mut oracle = Vec::new();
        for x in -12i64..=12 {
            for y in -12i64..=12 {
                // direct rotated-frame test
                let (px, py) = (x as f64 - 0.06, y as f64 + 0.12);
                let t = (px + py) * s;
                let u = (py - px) * s;
                if t.abs() <= 1.8 + 1e-9 && u.abs() <= 3.0 + 1e-9 {
                    oracle.push(c.lattice().rank(&[x, y]).unwrap());
                }
            }
        }
        assert_eq!(net.vertices, oracle);
    }

    #[test]
    fn escaping_cylinder_is_a_geometry_error() {
        let c = sample_configuration(BoxSpec::new(2, 3, 0).unwrap(), 1.0, 0).unwrap();
        assert!(matches!(tau(&axis_spec(10.0, 1.0, 0.25), &c), Err(Error::Geometry(_))));
    }

    #[test]
    fn polygon_base_in_three_dimensions() {
        let c = sample_configuration(BoxSpec::new(3, 8, 0).unwrap(), 1.0, 0).unwrap();
        let spec = CylinderSpec {
            d: 3,
            center: vec![0.05, 0.05, 0.0],
            base: Base::Polygon(vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]),
            normal: vec![0.0, 0.0, 1.0],
            h: 0.25,
            n: 5.0,
        };
        // base x, y in [-2.25, 2.75] -> 5 x 5 columns
        assert_eq!(tau(&spec, &c).unwrap().capacity, 25);
    }
}
