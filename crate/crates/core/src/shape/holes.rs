//! Hulls of edge sets and the small/large hole decomposition of a
//! subgraph.
//!
//! "Infinity" is the exterior of the analysis region: the vertices of the
//! box with `|x|_inf > a`, or the outer face of the box when the margin is
//! zero. A vertex is in `hull(S)` when every lattice path from it to
//! infinity uses an edge of `S`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cheeger::AnchoredSubgraph;
use crate::lattice::Lattice;
use crate::percolation::{infinite_cluster_proxy, label_clusters, BondConfiguration};
use crate::Result;

/// Region vertices enclosed by the edge set `slots`, sorted by rank.
pub fn hull(lattice: &Lattice, slots: &[usize]) -> Vec<usize> {
    let mut blocked = vec![false; lattice.edge_count()];
    for &s in slots {
        blocked[s] = true;
    }
    hull_mask(lattice, &blocked)
}

fn hull_mask(lattice: &Lattice, blocked: &[bool]) -> Vec<usize> {
    let a = lattice.spec.analysis_half_width();
    let at_infinity = |v: usize| {
        if a < lattice.half_width() {
            lattice.linf(v) > a
        } else {
            lattice.on_outer_face(v)
        }
    };
    let nv = lattice.vertex_count();
    let mut seen = vec![false; nv];
    let mut queue: VecDeque<usize> = (0..nv).filter(|&v| at_infinity(v)).collect();
    for &v in &queue {
        seen[v] = true;
    }
    while let Some(u) = queue.pop_front() {
        for (w, slot) in lattice.incident(u) {
            if !blocked[slot] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    (0..nv).filter(|&v| !seen[v]).collect()
}

/// Every lattice edge with exactly one endpoint in the sorted set `h`.
pub fn edge_boundary(lattice: &Lattice, h: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for &u in h {
        for (w, slot) in lattice.incident(u) {
            if h.binary_search(&w).is_err() {
                out.push(slot);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `ceil(n^(1 - 1/(2(d-1))))`, computed exactly: the least `k` with
/// `k^(2d-2) >= n^(2d-3)`.
pub fn hole_threshold(n: usize, d: usize) -> usize {
    assert!(d >= 2, "holes need d >= 2");
    let (num, den) = (2 * d as u32 - 3, 2 * d as u32 - 2);
    let target = (n as u128).pow(num);
    let mut k = ((n as f64).powf(num as f64 / den as f64).floor() as u128).saturating_sub(1);
    while k.pow(den) < target {
        k += 1;
    }
    k as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoleDecomposition {
    pub n: usize,
    pub threshold: usize,
    /// Components of size at least `threshold`, each sorted; ordered by
    /// smallest rank.
    pub large: Vec<Vec<usize>>,
    pub small: Vec<Vec<usize>>,
}

impl HoleDecomposition {
    /// `m(G)`, the number of large holes.
    pub fn m(&self) -> usize {
        self.large.len()
    }

    pub fn small_volume(&self) -> usize {
        self.small.iter().map(Vec::len).sum()
    }

    pub fn large_volume(&self) -> usize {
        self.large.iter().map(Vec::len).sum()
    }
}

/// Open components of `proxy \ G` enclosed by the edge boundary of `G`.
pub fn decompose_holes(g: &AnchoredSubgraph, config: &BondConfiguration, n: usize) -> Result<HoleDecomposition> {
    let lat = config.lattice();
    let proxy = proxy_mask(config);
    let enclosed = mask_of(lat.vertex_count(), &hull(lat, &edge_boundary(lat, &g.vertices)));
    let in_g = mask_of(lat.vertex_count(), &g.vertices);
    let threshold = hole_threshold(n, lat.d());
    let mut seen = vec![false; lat.vertex_count()];
    let (mut large, mut small) = (Vec::new(), Vec::new());
    for s in 0..lat.vertex_count() {
        if seen[s] || !enclosed[s] || !proxy[s] || in_g[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            let u = comp[i];
            i += 1;
            for w in config.open_neighbors(u) {
                if !seen[w] && !in_g[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        comp.sort_unstable();
        if comp.len() >= threshold {
            large.push(comp);
        } else {
            small.push(comp);
        }
    }
    Ok(HoleDecomposition {
        n,
        threshold,
        large,
        small,
    })
}

/// `F = G ∪ S_1 ∪ ... ∪ S_N`, sorted.
pub fn fill_small_holes(g: &AnchoredSubgraph, holes: &HoleDecomposition) -> Vec<usize> {
    let mut f = g.vertices.clone();
    for s in &holes.small {
        f.extend_from_slice(s);
    }
    f.sort_unstable();
    f
}

/// `hull(∂G)` minus the hulls of the edge boundaries of the large holes:
/// the vertex set thickened into the continuous set.
pub fn enclosed_set(g: &AnchoredSubgraph, config: &BondConfiguration, holes: &HoleDecomposition) -> Vec<usize> {
    let lat = config.lattice();
    let mut out = hull(lat, &edge_boundary(lat, &g.vertices));
    let mut cut = vec![false; lat.vertex_count()];
    for l in &holes.large {
        for v in hull(lat, &edge_boundary(lat, l)) {
            cut[v] = true;
        }
    }
    out.retain(|&v| !cut[v]);
    out
}

pub(crate) fn proxy_mask(config: &BondConfiguration) -> Vec<bool> {
    let lat = config.lattice();
    let labels = label_clusters(config);
    mask_of(lat.vertex_count(), &infinite_cluster_proxy(&labels, lat))
}

fn mask_of(len: usize, v: &[usize]) -> Vec<bool> {
    let mut m = vec![false; len];
    for &x in v {
        m[x] = true;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheeger::construct_polytope_candidate;
    use crate::geometry::Polytope;
    use crate::lattice::{for_each_point, BoxSpec};
    use crate::percolation::sample_configuration;
    use proptest::prelude::*;

    fn full(l: i64) -> BondConfiguration {
        sample_configuration(BoxSpec::with_default_margin(2, l).unwrap(), 1.0, 0).unwrap()
    }

    fn block_without(c: &BondConfiguration, r: i64, holes: &[[i64; 2]]) -> AnchoredSubgraph {
        let lat = c.lattice();
        let mut v = Vec::new();
        for_each_point(&[-r, -r], &[r, r], |x| {
            if !holes.iter().any(|h| h[..] == *x) {
                v.push(lat.rank(x).unwrap());
            }
        });
        AnchoredSubgraph::from_vertices(c, v).unwrap()
    }

    #[test]
    fn trivial_hulls() {
        let c = full(6);
        let lat = c.lattice();
        let v = lat.rank(&[1, 2]).unwrap();
        let ring: Vec<usize> = lat.incident(v).map(|(_, s)| s).collect();
        assert_eq!(hull(lat, &ring), vec![v]);
        assert!(hull(lat, &[]).is_empty());
    }

    #[test]
    fn thresholds() {
        assert_eq!(hole_threshold(100, 2), 10);
        assert_eq!(hole_threshold(101, 2), 11);
        assert_eq!(hole_threshold(4, 2), 2);
        // 16^(3/4) = 8
        assert_eq!(hole_threshold(16, 3), 8);
        assert_eq!(hole_threshold(17, 3), 9);
    }

    #[test]
    fn ring_with_small_hole() {
        let c = full(6);
        let lat = c.lattice();
        let g = block_without(&c, 3, &[[1, 1], [2, 1]]);
        let holes = decompose_holes(&g, &c, 100).unwrap();
        assert_eq!(holes.m(), 0);
        assert_eq!(holes.small.len(), 1);
        let hole: Vec<usize> = vec![lat.rank(&[1, 1]).unwrap(), lat.rank(&[2, 1]).unwrap()];
        let mut sorted = hole.clone();
        sorted.sort_unstable();
        assert_eq!(holes.small[0], sorted);
        let f = fill_small_holes(&g, &holes);
        assert_eq!(f.len(), g.volume + 2);
        assert_eq!(f, block_without(&c, 3, &[]).vertices);
        assert_eq!(enclosed_set(&g, &c, &holes), f);
    }

    #[test]
    fn hole_at_threshold_is_large() {
        let c = full(6);
        let g = block_without(&c, 3, &[[1, 1], [2, 1]]);
        let holes = decompose_holes(&g, &c, 4).unwrap();
        assert_eq!((holes.m(), holes.small.len()), (1, 0));
        assert_eq!(fill_small_holes(&g, &holes), g.vertices);
        assert_eq!(enclosed_set(&g, &c, &holes), g.vertices);
    }

    #[test]
    fn full_cluster_has_no_holes() {
        let c = full(6);
        let g = block_without(&c, 4, &[]);
        let holes = decompose_holes(&g, &c, 10).unwrap();
        assert!(holes.large.is_empty() && holes.small.is_empty());
        assert_eq!(fill_small_holes(&g, &holes), g.vertices);
    }

    /// Open component of the origin inside the ball of radius `r`.
    fn ball_component(c: &BondConfiguration, r: i64) -> Option<AnchoredSubgraph> {
        let lat = c.lattice();
        let proxy = proxy_mask(c);
        if !proxy[lat.origin()] {
            return None;
        }
        let mut seen = vec![false; lat.vertex_count()];
        seen[lat.origin()] = true;
        let mut comp = vec![lat.origin()];
        let mut i = 0;
        while i < comp.len() {
            let u = comp[i];
            i += 1;
            for w in c.open_neighbors(u) {
                if !seen[w] && lat.linf(w) <= r {
                    seen[w] = true;
                    comp.push(w);
                }
            }
        }
        AnchoredSubgraph::from_vertices(c, comp).ok()
    }

    #[test]
    fn filled_set_is_enclosed_set_in_the_cluster() {
        let spec = BoxSpec::with_default_margin(2, 12).unwrap();
        let mut checked = 0;
        for seed in 0..40 {
            let c = sample_configuration(spec, 0.6, seed).unwrap();
            let Some(g) = ball_component(&c, 6) else { continue };
            let proxy = proxy_mask(&c);
            for n in [4, 9, 100] {
                let holes = decompose_holes(&g, &c, n).unwrap();
                let f = fill_small_holes(&g, &holes);
                let mut h = enclosed_set(&g, &c, &holes);
                h.retain(|&v| proxy[v]);
                assert_eq!(f, h, "seed {seed} n {n}");
            }
            checked += 1;
        }
        assert!(checked >= 20);
    }

    #[test]
    fn certificate_cutset_encloses_the_cluster_in_np() {
        let c = sample_configuration(BoxSpec::with_default_margin(2, 24).unwrap(), 0.7, 1).unwrap();
        let sq = Polytope::cuboid(&[-0.25; 2], &[0.25; 2]).unwrap();
        let (con, _) = construct_polytope_candidate(&c, &sq, 0.1, 20).unwrap();
        let lat = c.lattice();
        let enclosed = hull(lat, &con.gamma);
        let proxy = proxy_mask(&c);
        for v in 0..lat.vertex_count() {
            let x: Vec<f64> = lat.coords(v).iter().map(|&t| t as f64 / 20.0).collect();
            if proxy[v] && sq.contains(&x) {
                assert!(enclosed.binary_search(&v).is_ok());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hull_is_monotone(picks in proptest::collection::vec(0usize..10_000, 0..120), extra in proptest::collection::vec(0usize..10_000, 0..40)) {
            let lat = Lattice::new(BoxSpec::with_default_margin(2, 5).unwrap()).unwrap();
            let e = lat.edge_count();
            let s: Vec<usize> = picks.iter().map(|p| p % e).collect();
            let mut t = s.clone();
            t.extend(extra.iter().map(|p| p % e));
            let hs = hull(&lat, &s);
            let ht = hull(&lat, &t);
            prop_assert!(hs.iter().all(|v| ht.binary_search(v).is_ok()));
        }
    }
}
