//! Simulated annealing over anchored connected subgraphs, followed by a
//! greedy polish.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{better, check_cap, Anchor, AnchoredSubgraph, RatioKind, RatioResult};
use crate::percolation::BondConfiguration;
use crate::rng;
use crate::{Error, Result};

/// Temperature falls geometrically from `t_start` to `t_end` over `steps`
/// proposals. Temperatures are in units of boundary edges: a move that
/// changes `|∂°H|` by `+k` at fixed volume is accepted with probability
/// about `exp(-k / t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub steps: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub seed: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            steps: 20_000,
            t_start: 1.5,
            t_end: 0.02,
            seed: 0,
        }
    }
}

struct State<'a> {
    config: &'a BondConfiguration,
    admissible: &'a [bool],
    origin: usize,
    members: Vec<usize>,
    /// Position in `members`, `usize::MAX` when absent.
    pos: Vec<usize>,
    boundary: usize,
    /// Visit stamps for connectivity checks.
    stamp: Vec<u32>,
    epoch: u32,
}

impl State<'_> {
    fn contains(&self, v: usize) -> bool {
        self.pos[v] != usize::MAX
    }

    fn inner_degree(&self, v: usize) -> usize {
        self.config.open_neighbors(v).filter(|&w| self.contains(w)).count()
    }

    fn add_delta(&self, v: usize) -> isize {
        self.config.open_degree(v) as isize - 2 * self.inner_degree(v) as isize
    }

    fn remove_delta(&self, v: usize) -> isize {
        -(self.config.open_degree(v) as isize) + 2 * self.inner_degree(v) as isize
    }

    fn add(&mut self, v: usize) {
        self.boundary = (self.boundary as isize + self.add_delta(v)) as usize;
        self.pos[v] = self.members.len();
        self.members.push(v);
    }

    fn remove(&mut self, v: usize) {
        self.boundary = (self.boundary as isize + self.remove_delta(v)) as usize;
        let i = self.pos[v];
        self.members.swap_remove(i);
        if i < self.members.len() {
            self.pos[self.members[i]] = i;
        }
        self.pos[v] = usize::MAX;
    }

    /// True if removing `v` keeps the set connected.
    fn removable(&mut self, v: usize) -> bool {
        if v == self.origin {
            return false;
        }
        let nb: Vec<usize> = self.config.open_neighbors(v).filter(|&w| self.contains(w)).collect();
        if nb.len() <= 1 {
            return true;
        }
        // search from the origin avoiding v
        self.epoch += 1;
        let e = self.epoch;
        self.stamp[v] = e;
        self.stamp[self.origin] = e;
        let mut stack = vec![self.origin];
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for w in self.config.open_neighbors(u) {
                if self.contains(w) && self.stamp[w] != e {
                    self.stamp[w] = e;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.members.len() - 1
    }

    fn snapshot(&self) -> (usize, Vec<usize>) {
        let mut v = self.members.clone();
        v.sort_unstable();
        (self.boundary, v)
    }

    /// Admissible open neighbors of the set, outside it.
    fn frontier(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for &u in &self.members {
            for w in self.config.open_neighbors(u) {
                if self.admissible[w] && !self.contains(w) {
                    out.push(w);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn ratio_delta(b: usize, v: usize, db: isize, dv: isize) -> f64 {
    (b as isize + db) as f64 / (v as isize + dv) as f64 - b as f64 / v as f64
}

/// Anneals from `candidate`, never returning anything worse than it.
pub fn local_search_refine(
    candidate: &AnchoredSubgraph,
    config: &BondConfiguration,
    n: usize,
    vol_cap: usize,
    schedule: Schedule,
) -> Result<(RatioResult, AnchoredSubgraph)> {
    check_cap(vol_cap)?;
    let anchor = Anchor::new(config)?;
    if !candidate.connected
        || candidate.volume > vol_cap
        || candidate.vertices.iter().any(|&v| !anchor.admissible[v])
    {
        return Err(Error::Precondition(
            "local search needs a connected admissible candidate within the volume cap".into(),
        ));
    }
    let vcount = config.lattice().vertex_count();
    let mut st = State {
        config,
        admissible: &anchor.admissible,
        origin: anchor.origin,
        members: Vec::new(),
        pos: vec![usize::MAX; vcount],
        boundary: 0,
        stamp: vec![0; vcount],
        epoch: 0,
    };
    for &v in &candidate.vertices {
        st.add(v);
    }
    debug_assert_eq!(st.boundary, candidate.boundary);
    let mut best = candidate.clone();
    let mut rng = rng::stream(rng::mix(schedule.seed, 0, rng::tag::ANNEAL));
    let steps = schedule.steps.max(1);
    let cool = (schedule.t_end / schedule.t_start).powf(1.0 / steps as f64);
    let mut temp = schedule.t_start;
    for _ in 0..schedule.steps {
        temp *= cool;
        let vol = st.members.len();
        let grow = rng.gen_bool(0.5);
        if grow {
            if vol >= vol_cap {
                continue;
            }
            let u = st.members[rng.gen_range(0..vol)];
            let nbs: Vec<usize> = config
                .open_neighbors(u)
                .filter(|&w| anchor.admissible[w] && !st.contains(w))
                .collect();
            if nbs.is_empty() {
                continue;
            }
            let w = nbs[rng.gen_range(0..nbs.len())];
            let dr = ratio_delta(st.boundary, vol, st.add_delta(w), 1);
            if dr <= 0.0 || rng.gen::<f64>() < (-dr * vol as f64 / temp).exp() {
                st.add(w);
            }
        } else {
            if vol <= 1 {
                continue;
            }
            let w = st.members[rng.gen_range(0..vol)];
            if !st.removable(w) {
                continue;
            }
            let dr = ratio_delta(st.boundary, vol, st.remove_delta(w), -1);
            if dr <= 0.0 || rng.gen::<f64>() < (-dr * vol as f64 / temp).exp() {
                st.remove(w);
            }
        }
        consider(&st, &mut best, config)?;
    }
    // restart from the best state and descend greedily
    while let Some(&v) = st.members.last() {
        st.remove(v);
    }
    for &v in &best.vertices {
        st.add(v);
    }
    for _ in 0..4 * vol_cap.min(1 << 20) + 16 {
        let (b, vol) = (st.boundary, st.members.len());
        let mut pick: Option<(f64, usize, bool)> = None;
        if vol < vol_cap {
            for w in st.frontier() {
                let dr = ratio_delta(b, vol, st.add_delta(w), 1);
                if dr < -1e-15 && pick.is_none_or(|p| dr < p.0) {
                    pick = Some((dr, w, true));
                }
            }
        }
        let mut members = st.members.clone();
        members.sort_unstable();
        for w in members {
            let dr = ratio_delta(b, vol, st.remove_delta(w), -1);
            if dr < -1e-15 && pick.is_none_or(|p| dr < p.0) && st.removable(w) {
                pick = Some((dr, w, false));
            }
        }
        match pick {
            Some((_, w, true)) => st.add(w),
            Some((_, w, false)) => st.remove(w),
            None => break,
        }
        consider(&st, &mut best, config)?;
    }
    Ok((best.ratio_result(RatioKind::LocalSearch, n), best))
}

fn consider(st: &State, best: &mut AnchoredSubgraph, config: &BondConfiguration) -> Result<()> {
    use std::cmp::Ordering;
    if super::cmp_fraction(st.boundary, st.members.len(), best.boundary, best.volume) == Ordering::Greater {
        return Ok(());
    }
    let (b, verts) = st.snapshot();
    if super::ranks_before(b, &verts, best.boundary, &best.vertices) {
        let h = AnchoredSubgraph::from_vertices(config, verts)?;
        debug_assert_eq!(h.boundary, b);
        debug_assert!(better(&h, best));
        *best = h;
    }
    Ok(())
}
