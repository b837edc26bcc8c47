//! The anchored isoperimetric profile `phi_n`: the least open-boundary to
//! volume ratio over connected open subgraphs `H` of the origin's cluster
//! with `0 in H` and `|H| <= vol_cap` (by default `n^d`).
//!
//! Subgraphs are restricted to the analysis region of the box, where every
//! vertex has its full set of `2d` incident edges.

mod anneal;
mod construction;
mod enumerate;
mod parametric;
mod pipeline;

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::percolation::{infinite_cluster_proxy, label_clusters, BondConfiguration};
use crate::{Error, Result};

pub use anneal::{local_search_refine, Schedule};
pub use construction::{
    construct_polytope_candidate, default_delta, BridgeSet, CutsetConstruction, FaceCutset,
    ZETA_PER_DIMENSION,
};
pub use enumerate::{brute_force_phi, brute_force_phi_with_budget, DEFAULT_SET_BUDGET, MAX_ENUMERATION_VOLUME};
pub use parametric::{
    anchored_min_cut, parametric_phi, parametric_sweep, Domain, ParametricOutcome, Repair,
    SweepPoint,
};
pub use pipeline::{phi_pipeline, pipeline_box, CertificateSummary, PipelineOptions, PipelineReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioKind {
    ExactOracle,
    Parametric,
    LocalSearch,
    PolytopeCertificate,
}

impl RatioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RatioKind::ExactOracle => "exact-oracle",
            RatioKind::Parametric => "parametric",
            RatioKind::LocalSearch => "local-search",
            RatioKind::PolytopeCertificate => "polytope-certificate",
        }
    }
}

/// `|∂°H| / |H|` with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioResult {
    pub boundary: usize,
    pub volume: usize,
    pub ratio: f64,
    pub kind: RatioKind,
    pub n: usize,
}

impl RatioResult {
    pub fn new(boundary: usize, volume: usize, kind: RatioKind, n: usize) -> Self {
        RatioResult {
            boundary,
            volume,
            ratio: boundary as f64 / volume as f64,
            kind,
            n,
        }
    }

    /// Exact comparison of the ratios by cross multiplication.
    pub fn cmp_ratio(&self, other: &RatioResult) -> Ordering {
        cmp_fraction(self.boundary, self.volume, other.boundary, other.volume)
    }

    /// `n * ratio`, the quantity with a deterministic limit.
    pub fn scaled(&self) -> f64 {
        self.n as f64 * self.ratio
    }
}

pub(crate) fn cmp_fraction(b1: usize, v1: usize, b2: usize, v2: usize) -> Ordering {
    (b1 as u128 * v2 as u128).cmp(&(b2 as u128 * v1 as u128))
}

/// Candidate order: smaller ratio, then larger volume, then the
/// lexicographically smaller sorted vertex list.
pub(crate) fn better(a: &AnchoredSubgraph, b: &AnchoredSubgraph) -> bool {
    ranks_before(a.boundary, &a.vertices, b.boundary, &b.vertices)
}

/// [`better`] on raw (boundary, sorted vertices) pairs.
pub(crate) fn ranks_before(b1: usize, s1: &[usize], b2: usize, s2: &[usize]) -> bool {
    match cmp_fraction(b1, s1.len(), b2, s2.len()) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => match s1.len().cmp(&s2.len()) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => s1 < s2,
        },
    }
}

/// A vertex set containing the origin, with cached volume and open boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchoredSubgraph {
    /// Box ranks, sorted.
    pub vertices: Vec<usize>,
    /// Seed of the host configuration.
    pub host_seed: u64,
    /// Connected through open edges inside the set (checked on construction).
    pub connected: bool,
    pub volume: usize,
    pub boundary: usize,
}

impl AnchoredSubgraph {
    pub fn from_vertices(config: &BondConfiguration, mut vertices: Vec<usize>) -> Result<Self> {
        let lat = config.lattice();
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.binary_search(&lat.origin()).is_err() {
            return Err(Error::Contract("anchored subgraph does not contain the origin".into()));
        }
        if vertices.last().is_some_and(|&v| v >= lat.vertex_count()) {
            return Err(Error::Parameter("vertex rank outside the box".into()));
        }
        let mut inside = vec![false; lat.vertex_count()];
        for &v in &vertices {
            inside[v] = true;
        }
        let boundary = boundary_of_mask(config, &vertices, &inside);
        let connected = open_component(config, lat.origin(), &inside).len() == vertices.len();
        Ok(AnchoredSubgraph {
            volume: vertices.len(),
            vertices,
            host_seed: config.seed(),
            connected,
            boundary,
        })
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.vertices.binary_search(&rank).is_ok()
    }

    pub fn ratio_result(&self, kind: RatioKind, n: usize) -> RatioResult {
        RatioResult::new(self.boundary, self.volume, kind, n)
    }

    /// True if the set is a legitimate `phi_n` candidate in this box.
    pub fn is_valid(&self, config: &BondConfiguration, vol_cap: usize) -> bool {
        let lat = config.lattice();
        self.connected
            && self.volume <= vol_cap
            && self
                .vertices
                .iter()
                .all(|&v| lat.in_analysis_region(v) && lat.is_interior(v))
    }
}

/// Open edges with exactly one endpoint in the set marked by `inside`.
pub(crate) fn boundary_of_mask(config: &BondConfiguration, vertices: &[usize], inside: &[bool]) -> usize {
    vertices
        .iter()
        .map(|&v| config.open_neighbors(v).filter(|&w| !inside[w]).count())
        .sum()
}

/// Vertices reachable from `start` through open edges while staying in the
/// marked set, in breadth-first order.
pub(crate) fn open_component(config: &BondConfiguration, start: usize, inside: &[bool]) -> Vec<usize> {
    let mut seen = vec![false; inside.len()];
    let mut order = Vec::new();
    if !inside[start] {
        return order;
    }
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for w in config.open_neighbors(u) {
            if inside[w] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    order
}

/// Where anchored subgraphs may live: the origin's cluster (which must reach
/// the outer face) intersected with the analysis region.
pub(crate) struct Anchor<'a> {
    pub config: &'a BondConfiguration,
    pub origin: usize,
    /// Indexed by box rank.
    pub admissible: Vec<bool>,
}

impl<'a> Anchor<'a> {
    pub fn new(config: &'a BondConfiguration) -> Result<Self> {
        let lat = config.lattice();
        let origin = lat.origin();
        if config.open_degree(origin) == 0 {
            return Err(Error::Conditioning("the origin is isolated".into()));
        }
        let labeling = label_clusters(config);
        let proxy = infinite_cluster_proxy(&labeling, lat);
        if proxy.is_empty() {
            return Err(Error::Conditioning(
                "the origin's cluster does not reach the boundary of the box".into(),
            ));
        }
        let mut admissible = vec![false; lat.vertex_count()];
        for v in proxy {
            if lat.in_analysis_region(v) && lat.is_interior(v) {
                admissible[v] = true;
            }
        }
        if !admissible[origin] {
            return Err(Error::Precondition("the origin lies outside the analysis region".into()));
        }
        Ok(Anchor {
            config,
            origin,
            admissible,
        })
    }

    pub fn singleton(&self) -> AnchoredSubgraph {
        AnchoredSubgraph::from_vertices(self.config, vec![self.origin]).expect("origin is in the box")
    }
}

pub(crate) fn check_cap(vol_cap: usize) -> Result<()> {
    if vol_cap == 0 {
        return Err(Error::Parameter("vol_cap must be at least 1".into()));
    }
    Ok(())
}

/// `n^d`, saturating.
pub fn default_vol_cap(n: usize, d: usize) -> usize {
    n.checked_pow(d as u32).unwrap_or(usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxSpec;
    use crate::percolation::sample_configuration;
    use crate::percolation::open_edge_boundary;

    #[test]
    fn subgraph_caches_match_recomputation() {
        let c = sample_configuration(BoxSpec::with_default_margin(2, 6).unwrap(), 0.7, 4).unwrap();
        let lat = c.lattice();
        let o = lat.origin();
        let mut set = vec![o];
        set.extend(c.open_neighbors(o));
        let h = AnchoredSubgraph::from_vertices(&c, set.clone()).unwrap();
        assert!(h.connected);
        assert_eq!(h.boundary, open_edge_boundary(&set, &c).unwrap());
        let far = lat.rank(&[3, 3]).unwrap();
        let g = AnchoredSubgraph::from_vertices(&c, vec![o, far]).unwrap();
        assert!(!g.connected);
        assert!(AnchoredSubgraph::from_vertices(&c, vec![far]).is_err());
    }

    #[test]
    fn ratio_comparison_is_exact() {
        let a = RatioResult::new(1, 3, RatioKind::Parametric, 1);
        let b = RatioResult::new(2, 6, RatioKind::ExactOracle, 1);
        assert_eq!(a.cmp_ratio(&b), Ordering::Equal);
        assert_eq!(RatioResult::new(2, 7, RatioKind::Parametric, 1).cmp_ratio(&a), Ordering::Less);
    }

    #[test]
    fn isolated_origin_is_a_conditioning_error() {
        let c = sample_configuration(BoxSpec::with_default_margin(2, 5).unwrap(), 0.0, 1).unwrap();
        assert!(matches!(Anchor::new(&c), Err(Error::Conditioning(_))));
    }
}
