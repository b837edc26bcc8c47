//! Upper-bound certificate from a convex polytope `P`: a cutset `Gamma`
//! enclosing `nP`, assembled from minimal cutsets of the face cylinders and
//! bridge edges around the face intersections, and the subgraph `H` it
//! harvests from the origin.
//!
//! For a face `F` with outer normal `v`, the cylinder has base `n(F + δv)`
//! and half height `nδ`, so it fills the slab of width `2nδ` just outside
//! `nF`. Its minimal cutset (every cut edge, open or closed) enters `Gamma`.
//! For faces `F, G` sharing a side `S`, every lattice edge lying in
//! `{x : nδ - ζ < d(x, nS) <= nδ + ζ}` outside `nP` enters `Gamma`, with
//! `ζ = 4d`. A face too small to hold a lattice cell at scale `n` gets no
//! cylinder; the edges within `nδ + ζ` of it outside `nP` join the bridges.
//!
//! `H` is the set of vertices joined to the origin by open paths avoiding
//! `Gamma`. Every open edge of `∂H` lies in `Gamma`, so
//! `|∂°H| <= |Gamma|_o` whenever `H` stays inside the box.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{boundary_of_mask, Anchor, AnchoredSubgraph, RatioKind, RatioResult};
use crate::flow::{orthonormal_complement, tau, Base, CylinderSpec};
use crate::geometry::{distance_to_face, Face, Polytope};
use crate::lattice::for_each_point;
use crate::percolation::BondConfiguration;
use crate::{Error, Result};

/// `ζ = ZETA_PER_DIMENSION * d` lattice units.
pub const ZETA_PER_DIMENSION: f64 = 4.0;

/// `0.1 * diam(P)`.
pub fn default_delta(p: &Polytope) -> f64 {
    0.1 * p.diameter()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceCutset {
    /// Index into the polytope's faces.
    pub face: usize,
    pub cylinder: CylinderSpec,
    /// `tau` of the cylinder: open edges in the cutset.
    pub capacity: usize,
    /// Slots of every edge of the cutset.
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BridgeSet {
    /// The two faces sharing a side, or a single degenerate face.
    pub faces: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutsetConstruction {
    pub polytope: Polytope,
    pub delta: f64,
    pub n: usize,
    pub zeta: f64,
    pub faces: Vec<FaceCutset>,
    pub bridges: Vec<BridgeSet>,
    /// Sorted slots of `Gamma`.
    pub gamma: Vec<usize>,
    /// `|Gamma|_o`.
    pub gamma_open: usize,
    /// The harvested subgraph.
    pub harvested: AnchoredSubgraph,
    /// No open path avoiding `Gamma` joins a cluster vertex of `nP` to the
    /// boundary of the analysis region.
    pub separated: bool,
    /// `|∂°H| <= |Gamma|_o`.
    pub bound_holds: bool,
    /// `H` is a legitimate `phi_n` candidate (inside the analysis region,
    /// `|H| <= n^d`).
    pub valid: bool,
}

impl CutsetConstruction {
    /// One row per edge of `Gamma`: endpoint coordinates and open status.
    pub fn write_gamma_csv(&self, config: &BondConfiguration, w: impl Write) -> Result<()> {
        let lat = config.lattice();
        let d = lat.d();
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        header.extend((1..=d).map(|i| format!("y{i}")));
        header.push("open".into());
        out.write_record(&header)?;
        for &slot in &self.gamma {
            let (a, b) = lat.edge_endpoints(slot);
            let mut rec: Vec<String> = lat.coords(a).iter().map(|x| x.to_string()).collect();
            rec.extend(lat.coords(b).iter().map(|x| x.to_string()));
            rec.push(u8::from(config.is_open(slot)).to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Builds `Gamma` and `H` for `nP`. Fails with a conditioning error when the
/// origin is not in the infinite-cluster proxy.
pub fn construct_polytope_candidate(
    config: &BondConfiguration,
    p: &Polytope,
    delta: f64,
    n: usize,
) -> Result<(CutsetConstruction, RatioResult)> {
    let lat = config.lattice();
    let d = lat.d();
    if p.d != d || !(2..=3).contains(&d) {
        return Err(Error::Parameter(format!(
            "polytope has d = {}, configuration d = {d}; construction needs d in 2..=3",
            p.d
        )));
    }
    if !(delta > 0.0) || n == 0 {
        return Err(Error::Parameter("delta and n must be positive".into()));
    }
    if !p.contains(&vec![0.0; d]) {
        return Err(Error::Precondition("the polytope does not contain the origin".into()));
    }
    let nf = n as f64;
    let zeta = ZETA_PER_DIMENSION * d as f64;
    let a = lat.spec.analysis_half_width();
    let reach = nf * p.vertices.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, x| m.max(x.abs()))
        + (2.0 * nf * delta).max(nf * delta + zeta)
        + 1.0;
    if reach > a as f64 {
        return Err(Error::Geometry(format!(
            "nP with its collar reaches {reach:.2}, beyond the analysis half width {a}"
        )));
    }
    let anchor = Anchor::new(config)?;
    let np = p.scaled(nf);

    let (big, small): (Vec<usize>, Vec<usize>) =
        (0..p.faces.len()).partition(|&i| np.faces[i].measure >= 1.0);
    let faces = big
        .par_iter()
        .map(|&i| {
            let cyl = face_cylinder(&p.faces[i], delta, nf)?;
            let cut = tau(&cyl, config)?;
            Ok(FaceCutset {
                face: i,
                cylinder: cyl,
                capacity: cut.capacity,
                edges: cut.boundary_edges,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut bridges = Vec::new();
    let lo_r = nf * delta - zeta;
    let hi_r = nf * delta + zeta;
    for i in 0..np.faces.len() {
        for j in i + 1..np.faces.len() {
            if let Some(side) = shared_side(&np.faces[i], &np.faces[j]) {
                let edges = shell_edges(config, &np, &side, |x| {
                    let r = distance_to_simplex(&side, x);
                    r > lo_r && r <= hi_r
                });
                bridges.push(BridgeSet {
                    faces: vec![i, j],
                    edges,
                });
            }
        }
    }
    for &i in &small {
        let f = &np.faces[i];
        let edges = shell_edges(config, &np, &f.vertices, |x| distance_to_face(f, x) <= hi_r);
        bridges.push(BridgeSet {
            faces: vec![i],
            edges,
        });
    }

    let mut gamma: Vec<usize> = faces
        .iter()
        .flat_map(|f| f.edges.iter().copied())
        .chain(bridges.iter().flat_map(|b| b.edges.iter().copied()))
        .collect();
    gamma.sort_unstable();
    gamma.dedup();
    let gamma_open = gamma.iter().filter(|&&s| config.is_open(s)).count();
    let mut cut = vec![false; lat.edge_count()];
    for &s in &gamma {
        cut[s] = true;
    }

    // separation: search from every cluster vertex of nP
    let mut starts = Vec::new();
    let mut xf = vec![0.0; d];
    for_each_point(&vec![-a; d], &vec![a; d], |x| {
        for i in 0..d {
            xf[i] = x[i] as f64;
        }
        if np.contains(&xf) {
            let r = lat.rank(x).expect("inside the box");
            if anchor.admissible[r] {
                starts.push(r);
            }
        }
    });
    let region = flood(config, &starts, &cut);
    let separated = region.iter().all(|&v| lat.linf(v) < a);

    let harvested = flood(config, &[anchor.origin], &cut);
    let mut inside = vec![false; lat.vertex_count()];
    for &v in &harvested {
        inside[v] = true;
    }
    let boundary = boundary_of_mask(config, &harvested, &inside);
    let h = AnchoredSubgraph::from_vertices(config, harvested)?;
    debug_assert_eq!(h.boundary, boundary);
    let cap = super::default_vol_cap(n, d);
    let valid = separated && h.is_valid(config, cap);
    let result = h.ratio_result(RatioKind::PolytopeCertificate, n);
    Ok((
        CutsetConstruction {
            polytope: p.clone(),
            delta,
            n,
            zeta,
            faces,
            bridges,
            gamma,
            gamma_open,
            bound_holds: boundary <= gamma_open,
            harvested: h,
            separated,
            valid,
        },
        result,
    ))
}

/// `cyl(F + δv, δ)` at scale `n`.
fn face_cylinder(f: &Face, delta: f64, n: f64) -> Result<CylinderSpec> {
    let d = f.normal.len();
    let center: Vec<f64> = f.centroid.iter().zip(&f.normal).map(|(c, v)| c + delta * v).collect();
    let base = if d == 2 {
        Base::Rectangle(vec![f.measure])
    } else {
        let basis = orthonormal_complement(&f.normal);
        let mut pts: Vec<[f64; 2]> = f
            .vertices
            .iter()
            .map(|x| {
                let y: Vec<f64> = x.iter().zip(&f.centroid).map(|(a, b)| a - b).collect();
                [dot(&y, &basis[0]), dot(&y, &basis[1])]
            })
            .collect();
        let twice: f64 = (0..pts.len())
            .map(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
                p[0] * q[1] - p[1] * q[0]
            })
            .sum();
        if twice < 0.0 {
            pts.reverse();
        }
        Base::Polygon(pts)
    };
    let spec = CylinderSpec {
        d,
        center,
        base,
        normal: f.normal.clone(),
        h: delta,
        n,
    };
    spec.validate()?;
    Ok(spec)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Common side of two faces: a shared vertex in `d = 2`, a shared edge
/// (two vertices) in `d = 3`.
fn shared_side(f: &Face, g: &Face) -> Option<Vec<Vec<f64>>> {
    let d = f.normal.len();
    let scale = f
        .vertices
        .iter()
        .flat_map(|v| v.iter())
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-9 * scale;
    let mut common: Vec<Vec<f64>> = Vec::new();
    for v in &f.vertices {
        if g.vertices.iter().any(|w| dist(v, w) <= tol) && !common.iter().any(|c| dist(c, v) <= tol) {
            common.push(v.clone());
        }
    }
    if common.len() < d - 1 {
        return None;
    }
    if d == 3 && common.len() > 2 {
        // keep the two farthest apart
        let mut best = (0, 1, 0.0);
        for i in 0..common.len() {
            for j in i + 1..common.len() {
                let r = dist(&common[i], &common[j]);
                if r > best.2 {
                    best = (i, j, r);
                }
            }
        }
        common = vec![common[best.0].clone(), common[best.1].clone()];
    }
    Some(common)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance to a point or a segment.
fn distance_to_simplex(s: &[Vec<f64>], x: &[f64]) -> f64 {
    if s.len() == 1 {
        return dist(&s[0], x);
    }
    let (a, b) = (&s[0], &s[1]);
    let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
    let ax: Vec<f64> = x.iter().zip(a).map(|(p, q)| p - q).collect();
    let len2 = dot(&ab, &ab);
    let t = if len2 > 0.0 { (dot(&ax, &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let proj: Vec<f64> = a.iter().zip(&ab).map(|(p, q)| p + t * q).collect();
    dist(&proj, x)
}

/// Box edges whose endpoints and midpoint lie outside `np` and satisfy
/// `in_shell`, searched near the points `anchor_pts`.
fn shell_edges(
    config: &BondConfiguration,
    np: &Polytope,
    anchor_pts: &[Vec<f64>],
    in_shell: impl Fn(&[f64]) -> bool,
) -> Vec<usize> {
    let lat = config.lattice();
    let d = lat.d();
    let l = lat.half_width();
    let zeta = ZETA_PER_DIMENSION * d as f64;
    // generous search window: the shell never reaches farther than the
    // largest anchor distance plus the collar
    let pad = (np.diameter() + zeta + 2.0).ceil() as i64;
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for p in anchor_pts {
        for i in 0..d {
            lo[i] = lo[i].min((p[i].floor() as i64 - pad).max(-l));
            hi[i] = hi[i].max((p[i].ceil() as i64 + pad).min(l));
        }
    }
    let ok = |x: &[f64]| !np.contains(x) && in_shell(x);
    let mut out = Vec::new();
    for_each_point(&lo, &hi, |x| {
        let xf: Vec<f64> = x.iter().map(|&c| c as f64).collect();
        if !ok(&xf) {
            return;
        }
        let r = lat.rank(x).expect("window inside the box");
        for dir in 0..d {
            if x[dir] >= l {
                continue;
            }
            let mut y = xf.clone();
            y[dir] += 1.0;
            let mut mid = xf.clone();
            mid[dir] += 0.5;
            if ok(&y) && ok(&mid) {
                out.push(lat.edge_slot(r, dir).expect("neighbor inside the box"));
            }
        }
    });
    out.sort_unstable();
    out
}

/// Vertices reachable from `starts` through open edges not marked in `cut`.
fn flood(config: &BondConfiguration, starts: &[usize], cut: &[bool]) -> Vec<usize> {
    let lat = config.lattice();
    let mut seen = vec![false; lat.vertex_count()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut out = Vec::new();
    for &s in starts {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        out.push(u);
        for (w, slot) in lat.incident(u) {
            if config.is_open(slot) && !cut[slot] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxSpec;
    use crate::percolation::{open_edge_boundary, sample_configuration};

    fn square(side: f64) -> Polytope {
        Polytope::cuboid(&[-side / 2.0; 2], &[side / 2.0; 2]).unwrap()
    }

    /// Independent harvest: plain search over the full lattice with `Gamma`
    /// as a hash set.
    fn direct_harvest(c: &BondConfiguration, gamma: &[usize]) -> Vec<usize> {
        use std::collections::HashSet;
        let lat = c.lattice();
        let g: HashSet<usize> = gamma.iter().copied().collect();
        let mut seen = HashSet::from([lat.origin()]);
        let mut stack = vec![lat.origin()];
        while let Some(u) = stack.pop() {
            for dir in 0..lat.d() {
                for pos in [false, true] {
                    if let Some(w) = lat.neighbor(u, dir, pos) {
                        let slot = lat.edge_between(u, w).unwrap();
                        if c.is_open(slot) && !g.contains(&slot) && seen.insert(w) {
                            stack.push(w);
                        }
                    }
                }
            }
        }
        let mut v: Vec<usize> = seen.into_iter().collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn full_lattice_square() {
        let n = 20;
        let c = sample_configuration(BoxSpec::with_default_margin(2, 24).unwrap(), 1.0, 0).unwrap();
        let (con, r) = construct_polytope_candidate(&c, &square(0.5), 0.1, n).unwrap();
        assert!(con.separated && con.bound_holds);
        assert_eq!(con.harvested.vertices, direct_harvest(&c, &con.gamma));
        assert_eq!(r.boundary, open_edge_boundary(&con.harvested.vertices, &c).unwrap());
        assert!(r.boundary <= con.gamma_open);
        // the lateral points of C'_1 push each face cut one column past nF:
        // H is the 13 x 13 square without its corners, 21% below the
        // continuum 4 / (0.5 n)
        assert_eq!((r.boundary, r.volume), (52, 165));
        let continuum = 4.0 * (0.5 * n as f64) / (0.5 * n as f64).powi(2);
        assert!((r.ratio - continuum).abs() / continuum < 0.22);
        assert_eq!(con.faces.len(), 4);
        assert_eq!(con.bridges.len(), 4);
        for f in &con.faces {
            assert_eq!(f.capacity, 11);
        }
    }

    #[test]
    fn closed_configuration_fails() {
        let c = sample_configuration(BoxSpec::with_default_margin(2, 24).unwrap(), 0.0, 0).unwrap();
        assert!(matches!(
            construct_polytope_candidate(&c, &square(0.5), 0.1, 20),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn oversized_polytope_is_rejected() {
        let c = sample_configuration(BoxSpec::with_default_margin(2, 12).unwrap(), 1.0, 0).unwrap();
        assert!(matches!(
            construct_polytope_candidate(&c, &square(0.5), 0.1, 20),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn supercritical_square_separates() {
        let spec = BoxSpec::with_default_margin(2, 24).unwrap();
        let mut ok = 0;
        for seed in 0..10 {
            let c = sample_configuration(spec, 0.7, seed).unwrap();
            let Ok((con, r)) = construct_polytope_candidate(&c, &square(0.5), 0.1, 20) else {
                continue;
            };
            ok += 1;
            assert!(con.separated, "seed {seed}");
            assert!(con.bound_holds);
            assert_eq!(con.harvested.vertices, direct_harvest(&c, &con.gamma));
            assert!(r.ratio > 0.0);
        }
        assert!(ok >= 5);
    }

    #[test]
    fn cube_in_three_dimensions() {
        let n = 8;
        let c = sample_configuration(BoxSpec::with_default_margin(3, 23).unwrap(), 1.0, 0).unwrap();
        let cube = Polytope::cuboid(&[-0.5; 3], &[0.5; 3]).unwrap();
        let (con, r) = construct_polytope_candidate(&c, &cube, 0.125, n).unwrap();
        assert!(con.separated && con.bound_holds);
        assert_eq!(con.faces.len(), 6);
        assert_eq!(con.bridges.len(), 12);
        assert!(r.volume >= 9 * 9 * 9);
    }

    #[test]
    fn gamma_csv_has_one_row_per_edge() {
        let c = sample_configuration(BoxSpec::with_default_margin(2, 24).unwrap(), 1.0, 0).unwrap();
        let (con, _) = construct_polytope_candidate(&c, &square(0.5), 0.1, 20).unwrap();
        let mut buf = Vec::new();
        con.write_gamma_csv(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), con.gamma.len() + 1);
        assert!(text.starts_with("x1,x2,y1,y2,open"));
    }
}
