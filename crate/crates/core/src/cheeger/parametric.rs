//! Parametric min-cut for `min |∂°H| - lambda |H|` over anchored sets, with
//! Dinkelbach iteration on `lambda`.
//!
//! For a domain `D` containing the origin, the network has a node per vertex
//! of `D` plus a source `s` and sink `t`:
//!
//! * `s -> 0` with infinite capacity, `s -> u` with capacity `lambda` for
//!   every other `u`;
//! * capacity 1 on each open edge inside `D`, and `u -> t` with capacity 1
//!   for each open edge from `u` leaving `D`.
//!
//! A cut with source side `H` costs `|∂°H| + lambda |D \ H|`, so minimal cuts
//! minimise `|∂°H| - lambda |H|`. `lambda = num / den` is kept rational and
//! all capacities are multiplied by `den`. The relaxation ignores
//! connectivity; each solution is repaired to the origin's open component.
//!
//! The volume constraint is enforced through the domains: every domain has
//! at most `vol_cap` vertices, so every solution does too. Domains are the
//! breadth-first open ball around the origin, the Euclidean disc, axis
//! boxes of side `floor(vol_cap^(1/d))` through the origin, and open balls
//! and discs centred at the first `SHIFTED_CENTERS` vertices reached from
//! the origin, kept when they contain it.
//!
//! Sets near the cap whose boundary follows closed edges rarely fit inside
//! a capped domain, so the volume constraint is also handled by Lagrangian
//! bisection: on wide domains of up to `WIDE_FACTOR * vol_cap` vertices,
//! minimal minimisers grow with `lambda`, and bisection on
//! `lambda = num / LAMBDA_DEN` finds the largest one within the cap. Every
//! solution within the cap met along the way is a candidate.
//!
//! Lagrangian families on wide domains still jump from small sets straight
//! past the cap. Band cuts bound the jump: around each of a few centres,
//! the admissible vertices within `BAND_INNER * r` are forced into the set
//! and those beyond `BAND_OUTER * r` are excluded, `r` being the radius of
//! the `vol_cap` admissible vertices nearest the centre. A signed `lambda`
//! (negative values penalise volume) is bisected for the largest minimal
//! minimiser within the cap.

use serde::{Deserialize, Serialize};

use super::{
    better, boundary_of_mask, check_cap, open_component, Anchor, AnchoredSubgraph, RatioKind,
    RatioResult,
};
use crate::flow::maxflow::{FlowNetwork, INF};
use crate::percolation::BondConfiguration;
use crate::{Error, Result};

const MAX_DINKELBACH_STEPS: usize = 200;

const SHIFTED_CENTERS: usize = 24;

const WIDE_FACTOR: usize = 4;

const LAMBDA_DEN: u64 = 1 << 12;

const BAND_INNER: f64 = 0.7;

const BAND_OUTER: f64 = 1.3;

/// A vertex set (sorted box ranks) containing the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub vertices: Vec<usize>,
}

impl Domain {
    pub fn new(name: impl Into<String>, mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        Domain {
            name: name.into(),
            vertices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub domain: String,
    pub lambda_num: i64,
    pub lambda_den: u64,
    /// `den * |∂°H| - num * |H|` at the minimal minimiser `H`.
    pub value: i128,
    pub volume: usize,
    pub boundary: usize,
}

impl SweepPoint {
    pub fn lambda(&self) -> f64 {
        self.lambda_num as f64 / self.lambda_den as f64
    }
}

/// A relaxation solution that was not connected, before and after keeping
/// the origin's component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub domain: String,
    pub lambda: f64,
    pub before: (usize, usize),
    pub after: (usize, usize),
}

impl Repair {
    pub fn ratio_before(&self) -> f64 {
        self.before.0 as f64 / self.before.1 as f64
    }

    pub fn ratio_after(&self) -> f64 {
        self.after.0 as f64 / self.after.1 as f64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParametricOutcome {
    pub result: RatioResult,
    pub subgraph: AnchoredSubgraph,
    /// Every min-cut solved, in order.
    pub steps: Vec<SweepPoint>,
    pub repairs: Vec<Repair>,
    /// Repaired candidates that were evaluated, as (boundary, volume).
    pub candidates: Vec<(usize, usize)>,
}

/// Minimal minimiser of `den |∂°H| - num |H|` over `0 in H ⊆ domain`, and
/// the minimum value.
pub fn anchored_min_cut(
    config: &BondConfiguration,
    domain: &Domain,
    num: u64,
    den: u64,
) -> Result<(Vec<usize>, i128)> {
    let lat = config.lattice();
    let origin = lat.origin();
    let dv = &domain.vertices;
    if dv.binary_search(&origin).is_err() {
        return Err(Error::Parameter(format!("domain `{}` misses the origin", domain.name)));
    }
    if den == 0 || num > (INF as u64) / 16 || den > (INF as u64) / 16 {
        return Err(Error::Parameter(format!("lambda = {num}/{den} out of range")));
    }
    let m = dv.len();
    let (s, t) = (m, m + 1);
    let mut g = FlowNetwork::new(m + 2);
    for (i, &u) in dv.iter().enumerate() {
        let mut leaving = 0i64;
        for w in config.open_neighbors(u) {
            match dv.binary_search(&w) {
                Ok(j) if u < w => {
                    g.add_edge(i, j, den as i64);
                }
                Ok(_) => {}
                Err(_) => leaving += 1,
            }
        }
        if leaving > 0 {
            g.add_arc(i, t, leaving * den as i64);
        }
        g.add_arc(s, i, if u == origin { INF } else { num as i64 });
    }
    g.max_flow(s, t);
    let reach = g.residual_reachable(s);
    let h: Vec<usize> = (0..m).filter(|&i| reach[i]).map(|i| dv[i]).collect();
    let mut inside = vec![false; lat.vertex_count()];
    for &v in &h {
        inside[v] = true;
    }
    let b = boundary_of_mask(config, &h, &inside);
    let value = den as i128 * b as i128 - num as i128 * h.len() as i128;
    Ok((h, value))
}

/// Solves the min-cut at each `lambda = num / den` on one domain.
pub fn parametric_sweep(
    config: &BondConfiguration,
    domain: &Domain,
    lambdas: &[(u64, u64)],
) -> Result<Vec<SweepPoint>> {
    lambdas
        .iter()
        .map(|&(num, den)| {
            let (h, value) = anchored_min_cut(config, domain, num, den)?;
            let b = ((value + num as i128 * h.len() as i128) / den as i128) as usize;
            Ok(SweepPoint {
                domain: domain.name.clone(),
                lambda_num: num as i64,
                lambda_den: den,
                value,
                volume: h.len(),
                boundary: b,
            })
        })
        .collect()
}

/// Best ratio over the parametric solutions on the standard domains, each
/// repaired to the origin's component, with the singleton as fallback.
pub fn parametric_phi(config: &BondConfiguration, n: usize, vol_cap: usize) -> Result<ParametricOutcome> {
    check_cap(vol_cap)?;
    let anchor = Anchor::new(config)?;
    let domains = standard_domains(&anchor, vol_cap);
    let lat = config.lattice();
    let mut best = anchor.singleton();
    let mut steps = Vec::new();
    let mut repairs = Vec::new();
    let mut candidates = vec![(best.boundary, best.volume)];
    let mut consider = |dom: &Domain, num: i64, den: u64, h: &[usize], value: i128| -> Result<usize> {
        let hb = ((value + num as i128 * h.len() as i128) / den as i128) as usize;
        steps.push(SweepPoint {
            domain: dom.name.clone(),
            lambda_num: num,
            lambda_den: den,
            value,
            volume: h.len(),
            boundary: hb,
        });
        let mut inside = vec![false; lat.vertex_count()];
        for &v in h {
            inside[v] = true;
        }
        let comp = open_component(config, anchor.origin, &inside);
        let cand = AnchoredSubgraph::from_vertices(config, comp)?;
        if cand.volume != h.len() {
            repairs.push(Repair {
                domain: dom.name.clone(),
                lambda: num as f64 / den as f64,
                before: (hb, h.len()),
                after: (cand.boundary, cand.volume),
            });
            log::debug!(
                "domain {}: repair {}/{} -> {}/{}",
                dom.name,
                hb,
                h.len(),
                cand.boundary,
                cand.volume
            );
        }
        candidates.push((cand.boundary, cand.volume));
        if cand.volume <= vol_cap && better(&cand, &best) {
            best = cand;
        }
        Ok(hb)
    };
    for dom in &domains {
        let (mut num, mut den) = (config.open_degree(anchor.origin) as u64, 1u64);
        for _ in 0..MAX_DINKELBACH_STEPS {
            let (h, value) = anchored_min_cut(config, dom, num, den)?;
            let hb = consider(dom, num as i64, den, &h, value)?;
            if value >= 0 {
                break;
            }
            let g = gcd(hb as u64, h.len() as u64).max(1);
            num = hb as u64 / g;
            den = h.len() as u64 / g;
        }
    }
    for dom in wide_domains(&anchor, vol_cap) {
        let (h, value) = anchored_min_cut(config, &dom, 0, LAMBDA_DEN)?;
        if h.len() > vol_cap {
            continue;
        }
        consider(&dom, 0, LAMBDA_DEN, &h, value)?;
        // beyond 2d per unit volume every vertex joins, and the domain
        // exceeds the cap
        let (mut lo, mut hi) = (0u64, 2 * lat.d() as u64 * LAMBDA_DEN + 1);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let (h, value) = anchored_min_cut(config, &dom, mid, LAMBDA_DEN)?;
            consider(&dom, mid as i64, LAMBDA_DEN, &h, value)?;
            if h.len() <= vol_cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let bound = 2 * lat.d() as i64 * LAMBDA_DEN as i64 + 1;
    for (dom, forced) in band_domains(&anchor, n, vol_cap) {
        let (h, value) = band_min_cut(config, &dom, &forced, -bound, LAMBDA_DEN)?;
        if h.len() > vol_cap {
            continue;
        }
        consider(&dom, -bound, LAMBDA_DEN, &h, value)?;
        let (mut lo, mut hi) = (-bound, bound);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let (h, value) = band_min_cut(config, &dom, &forced, mid, LAMBDA_DEN)?;
            consider(&dom, mid, LAMBDA_DEN, &h, value)?;
            if h.len() <= vol_cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok(ParametricOutcome {
        result: best.ratio_result(RatioKind::Parametric, n),
        subgraph: best,
        steps,
        repairs,
        candidates,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest `s` with `s^d <= cap`.
fn integer_root(cap: usize, d: usize) -> usize {
    let mut s = (cap as f64).powf(1.0 / d as f64).round() as usize + 1;
    while s > 0 && s.checked_pow(d as u32).is_none_or(|v| v > cap) {
        s -= 1;
    }
    s
}

/// Minimal minimiser of `den |∂°H| - num |H|` over `H ⊆ domain` containing
/// the origin and every forced vertex; `num` may be negative.
fn band_min_cut(
    config: &BondConfiguration,
    domain: &Domain,
    forced: &[bool],
    num: i64,
    den: u64,
) -> Result<(Vec<usize>, i128)> {
    let lat = config.lattice();
    let origin = lat.origin();
    let dv = &domain.vertices;
    let m = dv.len();
    let (s, t) = (m, m + 1);
    let mut g = FlowNetwork::new(m + 2);
    for (i, &u) in dv.iter().enumerate() {
        let mut leaving = 0i64;
        for w in config.open_neighbors(u) {
            match dv.binary_search(&w) {
                Ok(j) if u < w => {
                    g.add_edge(i, j, den as i64);
                }
                Ok(_) => {}
                Err(_) => leaving += 1,
            }
        }
        if leaving > 0 {
            g.add_arc(i, t, leaving * den as i64);
        }
        if u == origin || forced[u] {
            g.add_arc(s, i, INF);
        } else if num > 0 {
            g.add_arc(s, i, num);
        } else if num < 0 {
            g.add_arc(i, t, -num);
        }
    }
    g.max_flow(s, t);
    let reach = g.residual_reachable(s);
    let h: Vec<usize> = (0..m).filter(|&i| reach[i]).map(|i| dv[i]).collect();
    let mut inside = vec![false; lat.vertex_count()];
    for &v in &h {
        inside[v] = true;
    }
    let b = boundary_of_mask(config, &h, &inside);
    let value = den as i128 * b as i128 - num as i128 * h.len() as i128;
    Ok((h, value))
}

/// Bands around the origin and around the points `n/4` away along each
/// axis and diagonal direction; the forced mask is indexed by box rank.
fn band_domains(anchor: &Anchor, n: usize, vol_cap: usize) -> Vec<(Domain, Vec<bool>)> {
    let lat = anchor.config.lattice();
    let d = lat.d();
    let admissible: Vec<usize> = (0..lat.vertex_count()).filter(|&v| anchor.admissible[v]).collect();
    if admissible.len() <= vol_cap {
        return Vec::new();
    }
    let shift = n as f64 / 4.0;
    let mut centers = vec![vec![0.0; d]];
    for i in 0..d {
        for s in [-1.0, 1.0] {
            let mut c = vec![0.0; d];
            c[i] = s * shift;
            centers.push(c);
        }
    }
    for mask in 0..(1u32 << d) {
        let r = shift / (d as f64).sqrt();
        centers.push((0..d).map(|i| if mask >> i & 1 == 1 { r } else { -r }).collect());
    }
    let mut out: Vec<(Domain, Vec<bool>)> = Vec::new();
    for c in centers {
        let mut by_distance: Vec<(f64, usize)> = admissible
            .iter()
            .map(|&v| {
                let x = lat.position(v);
                (x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), v)
            })
            .collect();
        by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let r = by_distance[vol_cap - 1].0;
        let mut forced = vec![false; lat.vertex_count()];
        let mut vs = Vec::new();
        for &(dist, v) in &by_distance {
            if dist > BAND_OUTER * r {
                break;
            }
            forced[v] = dist <= BAND_INNER * r;
            vs.push(v);
        }
        let label: Vec<String> = c.iter().map(|x| format!("{x:.1}")).collect();
        let dom = Domain::new(format!("band@({})", label.join(",")), vs);
        if !out.iter().any(|(o, _)| o.vertices == dom.vertices) {
            out.push((dom, forced));
        }
    }
    out
}

/// Disc and open ball of `WIDE_FACTOR * vol_cap` vertices around the
/// origin, when they exceed the cap.
fn wide_domains(anchor: &Anchor, vol_cap: usize) -> Vec<Domain> {
    let config = anchor.config;
    let lat = config.lattice();
    let size = vol_cap.saturating_mul(WIDE_FACTOR);
    let mut by_distance: Vec<(i64, usize)> = (0..lat.vertex_count())
        .filter(|&v| anchor.admissible[v])
        .map(|v| (lat.coords(v).iter().map(|x| x * x).sum::<i64>(), v))
        .collect();
    by_distance.sort_unstable();
    let disc = Domain::new("wide-disc", by_distance.iter().take(size).map(|&(_, v)| v).collect());
    let ball = Domain::new(
        "wide-open-ball",
        open_component(config, anchor.origin, &anchor.admissible)
            .into_iter()
            .take(size)
            .collect(),
    );
    let mut out = Vec::new();
    for dom in [disc, ball] {
        if dom.vertices.len() > vol_cap && !out.iter().any(|o: &Domain| o.vertices == dom.vertices) {
            out.push(dom);
        }
    }
    out
}

pub(crate) fn standard_domains(anchor: &Anchor, vol_cap: usize) -> Vec<Domain> {
    let config = anchor.config;
    let lat = config.lattice();
    let d = lat.d();
    let mut out: Vec<Domain> = Vec::new();
    let mut push = |dom: Domain| {
        if !out.iter().any(|o| o.vertices == dom.vertices) {
            out.push(dom);
        }
    };
    let ball: Vec<usize> = open_component(config, anchor.origin, &anchor.admissible)
        .into_iter()
        .take(vol_cap)
        .collect();
    push(Domain::new("open-ball", ball));

    let mut by_distance: Vec<(i64, usize)> = (0..lat.vertex_count())
        .filter(|&v| anchor.admissible[v])
        .map(|v| (lat.coords(v).iter().map(|x| x * x).sum::<i64>(), v))
        .collect();
    by_distance.sort_unstable();
    push(Domain::new(
        "disc",
        by_distance.iter().take(vol_cap).map(|&(_, v)| v).collect(),
    ));

    let s = integer_root(vol_cap, d) as i64;
    if s >= 1 {
        let mut corners: Vec<(String, Vec<i64>)> = vec![("box-centered".into(), vec![-(s / 2); d])];
        for mask in 0..(1u32 << d) {
            let lo = (0..d)
                .map(|i| if mask >> i & 1 == 1 { 0 } else { -(s - 1) })
                .collect();
            corners.push((format!("box-corner-{mask}"), lo));
        }
        for (name, lo) in corners {
            let hi: Vec<i64> = lo.iter().map(|x| x + s - 1).collect();
            let mut vs = Vec::new();
            crate::lattice::for_each_point(&lo, &hi, |x| {
                if let Some(r) = lat.rank(x) {
                    if anchor.admissible[r] {
                        vs.push(r);
                    }
                }
            });
            push(Domain::new(name, vs));
        }
    }

    let reach = open_component(config, anchor.origin, &anchor.admissible);
    for &c in reach.iter().skip(1).take(SHIFTED_CENTERS.min(vol_cap)) {
        let ball: Vec<usize> = open_component(config, c, &anchor.admissible)
            .into_iter()
            .take(vol_cap)
            .collect();
        if ball.contains(&anchor.origin) {
            push(Domain::new(format!("open-ball@{c}"), ball));
        }
        let cc = lat.coords(c);
        let mut near: Vec<(i64, usize)> = by_distance
            .iter()
            .map(|&(_, v)| {
                let dist = lat.coords(v).iter().zip(&cc).map(|(x, y)| (x - y) * (x - y)).sum::<i64>();
                (dist, v)
            })
            .collect();
        near.sort_unstable();
        let disc: Vec<usize> = near.iter().take(vol_cap).map(|&(_, v)| v).collect();
        if disc.contains(&anchor.origin) {
            push(Domain::new(format!("disc@{c}"), disc));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheeger::brute_force_phi;
    use crate::lattice::BoxSpec;
    use crate::percolation::sample_configuration;
    use proptest::prelude::*;

    fn full(d: usize, l: i64) -> BondConfiguration {
        sample_configuration(BoxSpec::with_default_margin(d, l).unwrap(), 1.0, 0).unwrap()
    }

    #[test]
    fn integer_roots() {
        assert_eq!(integer_root(4, 2), 2);
        assert_eq!(integer_root(8, 2), 2);
        assert_eq!(integer_root(9, 2), 3);
        assert_eq!(integer_root(1000, 3), 10);
        assert_eq!(integer_root(999, 3), 9);
        assert_eq!(integer_root(1, 3), 1);
    }

    #[test]
    fn full_lattice_values() {
        let c = full(2, 6);
        assert_eq!(parametric_phi(&c, 2, 4).unwrap().result.ratio, 2.0);
        for d in [2, 3] {
            let c = full(d, 4);
            assert_eq!(parametric_phi(&c, 1, 1).unwrap().result.ratio, 2.0 * d as f64);
        }
    }

    #[test]
    fn never_below_brute_force() {
        let spec = BoxSpec::with_default_margin(2, 6).unwrap();
        let (mut equal, mut runs) = (0, 0);
        for seed in 0..100 {
            let c = sample_configuration(spec, 0.75, seed).unwrap();
            let Ok((exact, _)) = brute_force_phi(&c, 3, 9) else {
                continue;
            };
            let par = parametric_phi(&c, 3, 9).unwrap();
            runs += 1;
            assert_ne!(par.result.cmp_ratio(&exact), std::cmp::Ordering::Less, "seed {seed}");
            assert!(par.subgraph.connected && par.subgraph.volume <= 9);
            if par.result.cmp_ratio(&exact) == std::cmp::Ordering::Equal {
                equal += 1;
            }
        }
        // regression fixture: 54 of 98 when recorded; local search closes
        // most of the remaining gap
        assert_eq!(runs, 98);
        assert!(equal >= 54, "{equal}/{runs}");
    }

    #[test]
    fn dinkelbach_steps_decrease_lambda() {
        let c = sample_configuration(BoxSpec::with_default_margin(2, 12).unwrap(), 0.7, 3).unwrap();
        let Ok(out) = parametric_phi(&c, 8, 64) else {
            return;
        };
        for w in out.steps.windows(2) {
            if w[0].domain == w[1].domain && !w[0].domain.starts_with("wide-") && !w[0].domain.starts_with("band@") {
                assert!(w[1].lambda() < w[0].lambda());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sweep_is_concave_and_monotone(seed in 0u64..1000, p in 0.6f64..1.0) {
            let c = sample_configuration(BoxSpec::with_default_margin(2, 8).unwrap(), p, seed).unwrap();
            let Ok(anchor) = Anchor::new(&c) else { return Ok(()); };
            let dom = standard_domains(&anchor, 40).remove(0);
            let lambdas: Vec<(u64, u64)> = (0..=24).map(|k| (k, 4)).collect();
            let pts = parametric_sweep(&c, &dom, &lambdas).unwrap();
            for w in pts.windows(2) {
                prop_assert!(w[1].volume >= w[0].volume);
            }
            // g(lambda) = min (|∂°H| - lambda |H|), on a common denominator
            let g: Vec<i128> = pts.iter().map(|q| q.value).collect();
            for k in 1..g.len() - 1 {
                prop_assert!(2 * g[k] >= g[k - 1] + g[k + 1]);
            }
        }
    }
}
