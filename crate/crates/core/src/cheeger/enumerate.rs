//! Exhaustive enumeration of anchored connected subgraphs.

use std::cmp::Ordering;

use super::{check_cap, cmp_fraction, ranks_before, Anchor, AnchoredSubgraph, RatioKind, RatioResult};
use crate::percolation::BondConfiguration;
use crate::{Error, Result};

/// Largest volume the enumerator accepts.
pub const MAX_ENUMERATION_VOLUME: usize = 12;

/// Default limit on the number of visited subgraphs.
pub const DEFAULT_SET_BUDGET: u64 = 2_000_000_000;

/// Exact `phi` over connected open subgraphs containing the origin with at
/// most `vol_cap` vertices.
pub fn brute_force_phi(
    config: &BondConfiguration,
    n: usize,
    vol_cap: usize,
) -> Result<(RatioResult, AnchoredSubgraph)> {
    brute_force_phi_with_budget(config, n, vol_cap, DEFAULT_SET_BUDGET)
}

pub fn brute_force_phi_with_budget(
    config: &BondConfiguration,
    n: usize,
    vol_cap: usize,
    max_sets: u64,
) -> Result<(RatioResult, AnchoredSubgraph)> {
    check_cap(vol_cap)?;
    if vol_cap > MAX_ENUMERATION_VOLUME {
        return Err(Error::Capacity(format!(
            "enumeration is limited to volume {MAX_ENUMERATION_VOLUME}, asked for {vol_cap}"
        )));
    }
    let anchor = Anchor::new(config)?;
    let vcount = config.lattice().vertex_count();
    let mut e = Enumerator {
        config,
        admissible: &anchor.admissible,
        cap: vol_cap,
        in_set: vec![false; vcount],
        blocked: vec![false; vcount],
        set: vec![anchor.origin],
        visited: 0,
        max_sets,
        best: None,
    };
    e.in_set[anchor.origin] = true;
    e.blocked[anchor.origin] = true;
    let b0 = config.open_degree(anchor.origin);
    let ext: Vec<usize> = e.candidates_of(anchor.origin, &[]);
    e.extend(ext, b0)?;
    let (bb, bset) = e.best.expect("the singleton is always visited");
    let h = AnchoredSubgraph::from_vertices(config, bset)?;
    debug_assert_eq!(h.boundary, bb);
    Ok((h.ratio_result(RatioKind::ExactOracle, n), h))
}

struct Enumerator<'a> {
    config: &'a BondConfiguration,
    admissible: &'a [bool],
    cap: usize,
    in_set: Vec<bool>,
    /// Vertices already handled by an earlier sibling branch (or in the set).
    blocked: Vec<bool>,
    set: Vec<usize>,
    visited: u64,
    max_sets: u64,
    best: Option<(usize, Vec<usize>)>,
}

impl Enumerator<'_> {
    /// Open admissible neighbors of `v` that are neither blocked nor already
    /// in `ext`.
    fn candidates_of(&self, v: usize, ext: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for w in self.config.open_neighbors(v) {
            if self.admissible[w] && !self.blocked[w] && !ext.contains(&w) && !out.contains(&w) {
                out.push(w);
            }
        }
        out
    }

    fn visit(&mut self, boundary: usize) -> Result<()> {
        self.visited += 1;
        if self.visited > self.max_sets {
            return Err(Error::Capacity(format!(
                "enumeration budget of {} subgraphs exceeded",
                self.max_sets
            )));
        }
        if let Some((bb, bset)) = &self.best {
            if cmp_fraction(boundary, self.set.len(), *bb, bset.len()) == Ordering::Greater {
                return Ok(());
            }
        }
        let mut sorted = self.set.clone();
        sorted.sort_unstable();
        let take = match &self.best {
            None => true,
            Some((bb, bset)) => ranks_before(boundary, &sorted, *bb, bset),
        };
        if take {
            self.best = Some((boundary, sorted));
        }
        Ok(())
    }

    fn extend(&mut self, mut ext: Vec<usize>, boundary: usize) -> Result<()> {
        self.visit(boundary)?;
        if self.set.len() == self.cap {
            return Ok(());
        }
        let mut released = Vec::new();
        while let Some(v) = ext.pop() {
            let inner = self
                .config
                .open_neighbors(v)
                .filter(|&w| self.in_set[w])
                .count();
            let b = boundary + self.config.open_degree(v) - 2 * inner;
            self.blocked[v] = true;
            released.push(v);
            let mut next = ext.clone();
            next.extend(self.candidates_of(v, &ext));
            self.in_set[v] = true;
            self.set.push(v);
            let r = self.extend(next, b);
            self.set.pop();
            self.in_set[v] = false;
            r?;
        }
        for v in released {
            self.blocked[v] = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxSpec;
    use crate::percolation::{open_edge_boundary, sample_configuration};
    use std::collections::{BTreeSet, HashSet};

    fn full(d: usize, l: i64) -> BondConfiguration {
        sample_configuration(BoxSpec::with_default_margin(d, l).unwrap(), 1.0, 0).unwrap()
    }

    #[test]
    fn full_lattice_square_is_optimal() {
        let c = full(2, 6);
        let (r, h) = brute_force_phi(&c, 2, 4).unwrap();
        assert_eq!((r.boundary, r.volume), (8, 4));
        assert_eq!(r.ratio, 2.0);
        // the 2x2 square through the origin that is smallest in rank order
        let lat = c.lattice();
        let coords: BTreeSet<Vec<i64>> = h.vertices.iter().map(|&v| lat.coords(v)).collect();
        assert_eq!(
            coords,
            [vec![-1, -1], vec![-1, 0], vec![0, -1], vec![0, 0]].into_iter().collect()
        );
        let (r1, _) = brute_force_phi(&c, 1, 1).unwrap();
        assert_eq!(r1.ratio, 4.0);
    }

    #[test]
    fn budget_and_cap_errors() {
        let c = full(2, 8);
        assert!(matches!(brute_force_phi(&c, 4, 13), Err(Error::Capacity(_))));
        assert!(matches!(
            brute_force_phi_with_budget(&c, 4, 8, 100),
            Err(Error::Capacity(_))
        ));
        let closed = sample_configuration(BoxSpec::with_default_margin(2, 4).unwrap(), 0.0, 0).unwrap();
        assert!(matches!(brute_force_phi(&closed, 2, 4), Err(Error::Conditioning(_))));
    }

    /// Grows sets one admissible open neighbor at a time, deduplicating
    /// through a hash set: breadth-first over volumes, unlike the
    /// depth-first enumerator.
    fn all_sets(c: &BondConfiguration, cap: usize) -> Vec<Vec<usize>> {
        let lat = c.lattice();
        let anchor = Anchor::new(c).unwrap();
        let ok = |v: usize| anchor.admissible[v];
        let mut layer: HashSet<Vec<usize>> = HashSet::from([vec![lat.origin()]]);
        let mut all: Vec<Vec<usize>> = layer.iter().cloned().collect();
        for _ in 1..cap {
            let mut next = HashSet::new();
            for s in &layer {
                for &u in s {
                    for w in c.open_neighbors(u) {
                        if ok(w) && !s.contains(&w) {
                            let mut t = s.clone();
                            t.push(w);
                            t.sort_unstable();
                            next.insert(t);
                        }
                    }
                }
            }
            all.extend(next.iter().cloned());
            layer = next;
        }
        all
    }

    #[test]
    fn matches_independent_enumerator() {
        let spec = BoxSpec::with_default_margin(2, 4).unwrap();
        let mut compared = 0;
        for seed in 0..100 {
            let c = sample_configuration(spec, 0.65, seed).unwrap();
            let Ok((r, h)) = brute_force_phi(&c, 2, 6) else {
                continue;
            };
            compared += 1;
            let mut best: Option<(usize, Vec<usize>)> = None;
            for s in all_sets(&c, 6) {
                let b = open_edge_boundary(&s, &c).unwrap();
                let replace = match &best {
                    None => true,
                    Some((bb, bs)) => match cmp_fraction(b, s.len(), *bb, bs.len()) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => s.len() > bs.len() || (s.len() == bs.len() && s < *bs),
                    },
                };
                if replace {
                    best = Some((b, s));
                }
            }
            let (bb, bs) = best.unwrap();
            assert_eq!((r.boundary, r.volume), (bb, bs.len()), "seed {seed}");
            assert_eq!(h.vertices, bs, "seed {seed}");
        }
        assert!(compared > 50);
    }

    #[test]
    fn counts_every_connected_set_once() {
        // animals of size <= 4 rooted at a fixed cell: 1 + 4 + 18 + 76
        let c = full(2, 8);
        let anchor = Anchor::new(&c).unwrap();
        let vcount = c.lattice().vertex_count();
        let mut e = Enumerator {
            config: &c,
            admissible: &anchor.admissible,
            cap: 4,
            in_set: vec![false; vcount],
            blocked: vec![false; vcount],
            set: vec![anchor.origin],
            visited: 0,
            max_sets: u64::MAX,
            best: None,
        };
        e.in_set[anchor.origin] = true;
        e.blocked[anchor.origin] = true;
        let ext = e.candidates_of(anchor.origin, &[]);
        e.extend(ext, 4).unwrap();
        assert_eq!(e.visited, 1 + 4 + 18 + 76);
        assert_eq!(all_sets(&c, 4).len(), 99);
    }
}
