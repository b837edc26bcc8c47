//! Bounded convex polytopes given by halfspaces, with exact face
//! enumeration in `d = 2, 3`.
//!
//! Construction clips a large box (`[-R, R]^d`, `R = 1e7`) by every
//! halfspace in turn. A vertex counts as inside a halfspace when
//! `x . v <= phi + 1e-11 max(1, |phi|)`, so halfspaces that only graze the
//! body (including ones off by rounding) leave no face. A face of the
//! clipping box that survives means the input does not bound a region.
//! The clip is then repeated inside a box of twice the body's extent so
//! rounding in the crossing points scales with the body, not with `R`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BIG: f64 = 1e7;
const SNAP: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    /// Unit outer normal.
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// `{x : x . v <= offset}` with `v` normalised (the offset is rescaled).
    pub fn new(normal: &[f64], offset: f64) -> Result<Self> {
        let norm = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() || !offset.is_finite() {
            return Err(Error::Geometry(format!("degenerate halfspace {normal:?} <= {offset}")));
        }
        Ok(Halfspace {
            normal: normal.iter().map(|x| x / norm).collect(),
            offset: offset / norm,
        })
    }

    fn excess(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    fn tol(&self) -> f64 {
        SNAP * self.offset.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Face {
    /// Index of the supporting halfspace.
    pub halfspace: usize,
    pub normal: Vec<f64>,
    /// `(d-1)`-measure: length in `d = 2`, area in `d = 3`.
    pub measure: f64,
    pub centroid: Vec<f64>,
    /// Boundary of the face, counter-clockwise seen from outside in `d = 3`;
    /// the two endpoints (in boundary order) in `d = 2`.
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub d: usize,
    pub halfspaces: Vec<Halfspace>,
    /// Empty when `d >= 4`.
    pub faces: Vec<Face>,
    /// Counter-clockwise loop in `d = 2`; unordered in `d = 3`.
    pub vertices: Vec<Vec<f64>>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Crossing point of segment `a -> b` with the halfspace boundary.
fn crossing(h: &Halfspace, a: &[f64], b: &[f64]) -> Vec<f64> {
    let (sa, sb) = (h.excess(a), h.excess(b));
    lerp(a, b, sa / (sa - sb))
}

impl Polytope {
    pub fn from_halfspaces(d: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        if d < 2 {
            return Err(Error::Geometry(format!("dimension {d} < 2")));
        }
        if halfspaces.iter().any(|h| h.normal.len() != d) {
            return Err(Error::Geometry("halfspace dimension mismatch".into()));
        }
        match d {
            // a second pass in a box just enclosing the first result keeps
            // crossing points accurate to the scale of the body
            2 => build_2d(halfspaces, BIG).and_then(|p| build_2d(p.halfspaces, refit(&p.vertices))),
            3 => build_3d(halfspaces, BIG).and_then(|p| build_3d(p.halfspaces, refit(&p.vertices))),
            _ => Ok(Polytope {
                d,
                halfspaces,
                faces: Vec::new(),
                vertices: Vec::new(),
            }),
        }
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        let mut hs = Vec::with_capacity(2 * d);
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            hs.push(Halfspace::new(&e, hi[i])?);
            e[i] = -1.0;
            hs.push(Halfspace::new(&e, -lo[i])?);
        }
        Self::from_halfspaces(d, hs)
    }

    pub fn exact(&self) -> bool {
        self.d <= 3
    }

    fn require_exact(&self) -> Result<()> {
        if self.exact() {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "exact geometry needs d <= 3, got d = {}",
                self.d
            )))
        }
    }

    /// Lebesgue measure: shoelace in `d = 2`, signed tetrahedra in `d = 3`.
    pub fn volume(&self) -> Result<f64> {
        self.require_exact()?;
        if self.d == 2 {
            let v = &self.vertices;
            let k = v.len();
            let twice: f64 = (0..k)
                .map(|i| {
                    let (a, b) = (&v[i], &v[(i + 1) % k]);
                    a[0] * b[1] - a[1] * b[0]
                })
                .sum();
            return Ok(0.5 * twice);
        }
        let c = self.vertex_mean();
        let mut six = 0.0;
        for f in &self.faces {
            let p = &f.vertices;
            for i in 1..p.len() - 1 {
                let (a, b, e) = (sub(&p[0], &c), sub(&p[i], &c), sub(&p[i + 1], &c));
                six += dot(&a, &cross(&b, &e));
            }
        }
        Ok(six / 6.0)
    }

    pub fn vertex_mean(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for v in &self.vertices {
            for i in 0..self.d {
                c[i] += v[i];
            }
        }
        let k = self.vertices.len().max(1) as f64;
        c.iter().map(|x| x / k).collect()
    }

    /// Sum of face measures times face normals; zero for a closed surface.
    pub fn closure_defect(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.d];
        for f in &self.faces {
            for i in 0..self.d {
                s[i] += f.measure * f.normal[i];
            }
        }
        s
    }

    pub fn surface_measure(&self) -> f64 {
        self.faces.iter().map(|f| f.measure).sum()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|h| h.excess(x) <= h.tol())
    }

    /// Support function `max_{x in P} x . u` over the vertices.
    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max(dist(a, b));
            }
        }
        best
    }

    /// Image under `x -> s x` (`s > 0`).
    pub fn scaled(&self, s: f64) -> Polytope {
        let sc = |v: &Vec<f64>| v.iter().map(|x| x * s).collect::<Vec<_>>();
        Polytope {
            d: self.d,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace {
                    normal: h.normal.clone(),
                    offset: h.offset * s,
                })
                .collect(),
            faces: self
                .faces
                .iter()
                .map(|f| Face {
                    halfspace: f.halfspace,
                    normal: f.normal.clone(),
                    measure: f.measure * s.powi(self.d as i32 - 1),
                    centroid: sc(&f.centroid),
                    vertices: f.vertices.iter().map(sc).collect(),
                })
                .collect(),
            vertices: self.vertices.iter().map(sc).collect(),
        }
    }

    /// Image under `x -> x + t`.
    pub fn translated(&self, t: &[f64]) -> Polytope {
        let sh = |v: &Vec<f64>| v.iter().zip(t).map(|(x, y)| x + y).collect::<Vec<_>>();
        Polytope {
            d: self.d,
            halfspaces: self
                .halfspaces
                .iter()
                .map(|h| Halfspace {
                    normal: h.normal.clone(),
                    offset: h.offset + dot(&h.normal, t),
                })
                .collect(),
            faces: self
                .faces
                .iter()
                .map(|f| Face {
                    centroid: sh(&f.centroid),
                    vertices: f.vertices.iter().map(sh).collect(),
                    ..f.clone()
                })
                .collect(),
            vertices: self.vertices.iter().map(sh).collect(),
        }
    }

    /// Euclidean distance from `x` to the polytope (0 inside), via the
    /// nearest point on the boundary faces (`d <= 3`).
    pub fn distance(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            return 0.0;
        }
        self.faces
            .iter()
            .map(|f| distance_to_face(f, x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Signed distance: negative inside (depth to the boundary), positive
    /// outside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        if self.contains(x) {
            let depth = self
                .faces
                .iter()
                .map(|f| self.halfspaces[f.halfspace].offset - dot(&f.normal, x))
                .fold(f64::INFINITY, f64::min);
            -depth.max(0.0)
        } else {
            self.distance(x)
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn closest_on_segment(a: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        (dot(&sub(x, a), &ab) / len2).clamp(0.0, 1.0)
    };
    lerp(a, b, t)
}

pub(crate) fn distance_to_face(f: &Face, x: &[f64]) -> f64 {
    if f.vertices.len() == 2 {
        return dist(x, &closest_on_segment(&f.vertices[0], &f.vertices[1], x));
    }
    // project onto the face plane; inside the polygon the distance is the
    // plane distance, otherwise the nearest boundary segment
    let off = dot(&f.normal, &sub(x, &f.vertices[0]));
    let proj: Vec<f64> = x.iter().zip(&f.normal).map(|(a, n)| a - off * n).collect();
    let k = f.vertices.len();
    let inside = (0..k).all(|i| {
        let e = sub(&f.vertices[(i + 1) % k], &f.vertices[i]);
        let w = sub(&proj, &f.vertices[i]);
        dot(&cross(&e, &w), &f.normal) >= -1e-12
    });
    if inside {
        return off.abs();
    }
    (0..k)
        .map(|i| dist(x, &closest_on_segment(&f.vertices[i], &f.vertices[(i + 1) % k], x)))
        .fold(f64::INFINITY, f64::min)
}

fn refit(vertices: &[Vec<f64>]) -> f64 {
    2.0 * vertices
        .iter()
        .flat_map(|v| v.iter())
        .fold(f64::MIN_POSITIVE, |m, x| m.max(x.abs()))
}

fn build_2d(halfspaces: Vec<Halfspace>, big: f64) -> Result<Polytope> {
    // loop of (vertex, label of the edge leaving it)
    let mut poly: Vec<(Vec<f64>, Option<usize>)> = vec![
        (vec![-big, -big], None),
        (vec![big, -big], None),
        (vec![big, big], None),
        (vec![-big, big], None),
    ];
    for (k, h) in halfspaces.iter().enumerate() {
        let tol = h.tol();
        if poly.iter().all(|(v, _)| h.excess(v) <= tol) {
            continue;
        }
        let m = poly.len();
        let mut out = Vec::with_capacity(m + 1);
        for i in 0..m {
            let (a, lab) = &poly[i];
            let b = &poly[(i + 1) % m].0;
            let (ina, inb) = (h.excess(a) <= tol, h.excess(b) <= tol);
            match (ina, inb) {
                (true, true) => out.push((a.clone(), *lab)),
                (true, false) => {
                    out.push((a.clone(), *lab));
                    out.push((crossing(h, a, b), Some(k)));
                }
                (false, true) => out.push((crossing(h, a, b), *lab)),
                (false, false) => {}
            }
        }
        if out.len() < 3 {
            return Err(Error::Geometry("halfspace intersection is empty".into()));
        }
        poly = out;
    }
    let scale = poly.iter().flat_map(|(v, _)| v.iter()).fold(1.0f64, |m, x| m.max(x.abs()));
    let len_tol = 1e-12 * scale;
    // drop zero-length edges
    let mut i = 0;
    while i < poly.len() && poly.len() > 2 {
        let j = (i + 1) % poly.len();
        if dist(&poly[i].0, &poly[j].0) <= len_tol {
            poly[i].1 = poly[j].1;
            poly.remove(j);
            if j < i {
                i -= 1;
            }
        } else {
            i += 1;
        }
    }
    if poly.len() < 3 {
        return Err(Error::Geometry("halfspace intersection has no interior".into()));
    }
    if poly.iter().any(|(v, lab)| lab.is_none() || v.iter().any(|x| x.abs() >= 0.5 * BIG)) {
        return Err(Error::Geometry(
            "halfspaces do not positively span the plane: intersection is unbounded".into(),
        ));
    }
    let m = poly.len();
    let faces = (0..m)
        .map(|i| {
            let (a, lab) = &poly[i];
            let b = &poly[(i + 1) % m].0;
            let k = lab.expect("checked above");
            Face {
                halfspace: k,
                normal: halfspaces[k].normal.clone(),
                measure: dist(a, b),
                centroid: lerp(a, b, 0.5),
                vertices: vec![a.clone(), b.clone()],
            }
        })
        .collect();
    let p = Polytope {
        d: 2,
        vertices: poly.into_iter().map(|(v, _)| v).collect(),
        halfspaces,
        faces,
    };
    if !(p.volume()? > 0.0) {
        return Err(Error::Geometry("halfspace intersection has no interior".into()));
    }
    Ok(p)
}

struct Facet3 {
    label: Option<usize>,
    pts: Vec<Vec<f64>>,
}

fn polygon_area_normal(pts: &[Vec<f64>]) -> [f64; 3] {
    // Newell's method: twice the area times the unit normal
    let mut n = [0.0; 3];
    let k = pts.len();
    for i in 0..k {
        let (a, b) = (&pts[i], &pts[(i + 1) % k]);
        n[0] += (a[1] - b[1]) * (a[2] + b[2]);
        n[1] += (a[2] - b[2]) * (a[0] + b[0]);
        n[2] += (a[0] - b[0]) * (a[1] + b[1]);
    }
    n
}

fn dedup_loop(pts: &mut Vec<Vec<f64>>, tol: f64) {
    let mut i = 0;
    while i < pts.len() && pts.len() > 1 {
        let j = (i + 1) % pts.len();
        if dist(&pts[i], &pts[j]) <= tol {
            pts.remove(j);
            if j < i {
                i -= 1;
            }
        } else {
            i += 1;
        }
    }
}

fn plane_basis(n: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = cross(n, &a);
    let l = dot(&e1, &e1).sqrt();
    let e1: Vec<f64> = e1.iter().map(|x| x / l).collect();
    let e2 = cross(n, &e1).to_vec();
    (e1, e2)
}

fn build_3d(halfspaces: Vec<Halfspace>, big: f64) -> Result<Polytope> {
    let c = |x: f64, y: f64, z: f64| vec![x * big, y * big, z * big];
    let quad = |pts: [Vec<f64>; 4]| Facet3 {
        label: None,
        pts: pts.to_vec(),
    };
    let mut facets = vec![
        quad([c(-1., -1., -1.), c(-1., 1., -1.), c(1., 1., -1.), c(1., -1., -1.)]),
        quad([c(-1., -1., 1.), c(1., -1., 1.), c(1., 1., 1.), c(-1., 1., 1.)]),
        quad([c(-1., -1., -1.), c(1., -1., -1.), c(1., -1., 1.), c(-1., -1., 1.)]),
        quad([c(-1., 1., -1.), c(-1., 1., 1.), c(1., 1., 1.), c(1., 1., -1.)]),
        quad([c(-1., -1., -1.), c(-1., -1., 1.), c(-1., 1., 1.), c(-1., 1., -1.)]),
        quad([c(1., -1., -1.), c(1., 1., -1.), c(1., 1., 1.), c(1., -1., 1.)]),
    ];
    for (k, h) in halfspaces.iter().enumerate() {
        let tol = h.tol();
        if facets
            .iter()
            .all(|f| f.pts.iter().all(|v| h.excess(v) <= tol))
        {
            continue;
        }
        let mut cap: Vec<Vec<f64>> = Vec::new();
        let mut next = Vec::with_capacity(facets.len() + 1);
        for f in facets {
            let m = f.pts.len();
            let mut out = Vec::with_capacity(m + 1);
            for i in 0..m {
                let a = &f.pts[i];
                let b = &f.pts[(i + 1) % m];
                let (sa, sb) = (h.excess(a), h.excess(b));
                let (ina, inb) = (sa <= tol, sb <= tol);
                if inb {
                    if !ina {
                        let p = crossing(h, a, b);
                        cap.push(p.clone());
                        out.push(p);
                    }
                    if sb.abs() <= tol {
                        cap.push(b.clone());
                    }
                    out.push(b.clone());
                } else if ina {
                    let p = crossing(h, a, b);
                    cap.push(p.clone());
                    out.push(p);
                }
            }
            if out.len() >= 3 {
                next.push(Facet3 {
                    label: f.label,
                    pts: out,
                });
            }
        }
        facets = next;
        if facets.is_empty() {
            return Err(Error::Geometry("halfspace intersection is empty".into()));
        }
        // order the cap counter-clockwise around the outer normal
        let mut uniq: Vec<Vec<f64>> = Vec::new();
        for p in cap {
            let tol = 1e-12 * (1.0 + p.iter().fold(0.0f64, |m, x| m.max(x.abs())));
            if !uniq.iter().any(|q| dist(q, &p) <= tol) {
                uniq.push(p);
            }
        }
        if uniq.len() >= 3 {
            let mut ctr = vec![0.0; 3];
            for p in &uniq {
                for i in 0..3 {
                    ctr[i] += p[i] / uniq.len() as f64;
                }
            }
            let (e1, e2) = plane_basis(&h.normal);
            uniq.sort_by(|p, q| {
                let ap = dot(&sub(p, &ctr), &e2).atan2(dot(&sub(p, &ctr), &e1));
                let aq = dot(&sub(q, &ctr), &e2).atan2(dot(&sub(q, &ctr), &e1));
                ap.total_cmp(&aq)
            });
            facets.push(Facet3 {
                label: Some(k),
                pts: uniq,
            });
        }
    }
    let scale = facets
        .iter()
        .flat_map(|f| f.pts.iter().flat_map(|v| v.iter()))
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let len_tol = 1e-12 * scale;
    let mut faces = Vec::new();
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for mut f in facets {
        dedup_loop(&mut f.pts, len_tol);
        if f.pts.len() < 3 {
            continue;
        }
        let an = polygon_area_normal(&f.pts);
        let area = 0.5 * dot(&an, &an).sqrt();
        if area <= len_tol * scale {
            continue;
        }
        let k = match f.label {
            Some(k) => k,
            None => {
                return Err(Error::Geometry(
                    "halfspaces do not positively span space: intersection is unbounded".into(),
                ))
            }
        };
        // area centroid by triangle fan
        let mut cen = vec![0.0; 3];
        let mut tot = 0.0;
        for i in 1..f.pts.len() - 1 {
            let t = cross(&sub(&f.pts[i], &f.pts[0]), &sub(&f.pts[i + 1], &f.pts[0]));
            let a = 0.5 * dot(&t, &halfspaces[k].normal);
            for j in 0..3 {
                cen[j] += a * (f.pts[0][j] + f.pts[i][j] + f.pts[i + 1][j]) / 3.0;
            }
            tot += a;
        }
        let centroid = cen.iter().map(|x| x / tot).collect();
        for p in &f.pts {
            if !vertices.iter().any(|q| dist(q, p) <= len_tol) {
                vertices.push(p.clone());
            }
        }
        faces.push(Face {
            halfspace: k,
            normal: halfspaces[k].normal.clone(),
            measure: area,
            centroid,
            vertices: f.pts,
        });
    }
    if faces.len() < 4 || vertices.iter().any(|v| v.iter().any(|x| x.abs() >= 0.5 * BIG)) {
        return Err(Error::Geometry(
            "halfspace intersection is unbounded or has no interior".into(),
        ));
    }
    let p = Polytope {
        d: 3,
        halfspaces,
        faces,
        vertices,
    };
    if !(p.volume()? > 0.0) {
        return Err(Error::Geometry("halfspace intersection has no interior".into()));
    }
    Ok(p)
}

/// Monte Carlo volume of `{x : x . v_i <= phi_i}` inside `[-r, r]^d`, for
/// any `d`. Returns the estimate and its standard error.
pub fn monte_carlo_volume(halfspaces: &[Halfspace], r: f64, samples: usize, seed: u64) -> (f64, f64) {
    use rand::Rng;
    let d = halfspaces.first().map_or(0, |h| h.normal.len());
    let mut rng = crate::rng::stream(seed);
    let mut x = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..samples {
        for xi in x.iter_mut() {
            *xi = rng.gen_range(-r..r);
        }
        if halfspaces.iter().all(|h| h.excess(&x) <= 0.0) {
            hits += 1;
        }
    }
    let cube = (2.0 * r).powi(d as i32);
    let q = hits as f64 / samples as f64;
    (q * cube, cube * (q * (1.0 - q) / samples as f64).sqrt())
}

/// SVG drawing of planar polytopes in a common frame.
pub fn polygons_svg(shapes: &[(&Polytope, &str)], size: f64) -> String {
    let pts: Vec<&Vec<f64>> = shapes.iter().flat_map(|(p, _)| p.vertices.iter()).collect();
    let ext = pts
        .iter()
        .flat_map(|v| v.iter())
        .fold(1e-9f64, |m, x| m.max(x.abs()))
        * 1.1;
    let map = |v: &[f64]| ((v[0] / ext + 1.0) * size / 2.0, (1.0 - v[1] / ext) * size / 2.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    );
    for (p, color) in shapes {
        let path: Vec<String> = p
            .vertices
            .iter()
            .map(|v| {
                let (x, y) = map(v);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        s += &format!(
            "  <polygon points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        );
    }
    s += "</svg>\n";
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;
    use proptest::prelude::*;

    fn hs(n: &[f64], o: f64) -> Halfspace {
        Halfspace::new(n, o).unwrap()
    }

    #[test]
    fn unit_square_and_cube() {
        let sq = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sq.volume().unwrap(), 1.0);
        assert_eq!(sq.faces.len(), 4);
        let cube = Polytope::cuboid(&[-1.0; 3], &[1.0; 3]).unwrap();
        assert!((cube.volume().unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(cube.faces.len(), 6);
        assert_eq!(cube.vertices.len(), 8);
        assert!((cube.surface_measure() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_and_empty_inputs() {
        let half = vec![hs(&[1.0, 0.0], 1.0), hs(&[0.0, 1.0], 1.0), hs(&[-1.0, 0.0], 1.0)];
        assert!(matches!(Polytope::from_halfspaces(2, half), Err(Error::Geometry(_))));
        let empty = vec![
            hs(&[1.0, 0.0], -1.0),
            hs(&[-1.0, 0.0], -1.0),
            hs(&[0.0, 1.0], 1.0),
            hs(&[0.0, -1.0], 1.0),
        ];
        assert!(Polytope::from_halfspaces(2, empty).is_err());
        let open3 = vec![hs(&[1.0, 0.0, 0.0], 1.0), hs(&[0.0, 1.0, 0.0], 1.0)];
        assert!(Polytope::from_halfspaces(3, open3).is_err());
    }

    #[test]
    fn grazing_halfspace_leaves_no_face() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut h = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap().halfspaces;
        h.push(hs(&[s, s], 2.0 * s - 2.2e-16));
        let p = Polytope::from_halfspaces(2, h).unwrap();
        assert_eq!(p.faces.len(), 4);
        let mut h3 = Polytope::cuboid(&[-1.0; 3], &[1.0; 3]).unwrap().halfspaces;
        h3.push(hs(&[s, 0.0, s], 2.0 * s - 2.2e-16));
        let p3 = Polytope::from_halfspaces(3, h3).unwrap();
        assert_eq!(p3.faces.len(), 6);
    }

    /// Exact shoelace on integer vertices.
    fn rational_area(v: &[(i64, i64)]) -> Rational64 {
        let k = v.len();
        let mut s = Rational64::from_integer(0);
        for i in 0..k {
            let (a, b) = (v[i], v[(i + 1) % k]);
            s += Rational64::from_integer(a.0 * b.1 - a.1 * b.0);
        }
        s / 2
    }

    #[test]
    fn integer_polygon_matches_rational_area() {
        // lattice hexagon
        let v = [(3, 0), (2, 2), (-1, 3), (-3, 1), (-2, -2), (1, -3)];
        let k = v.len();
        let halfs: Vec<Halfspace> = (0..k)
            .map(|i| {
                let (a, b) = (v[i], v[(i + 1) % k]);
                let n = [(b.1 - a.1) as f64, -(b.0 - a.0) as f64];
                hs(&n, n[0] * a.0 as f64 + n[1] * a.1 as f64)
            })
            .collect();
        let p = Polytope::from_halfspaces(2, halfs).unwrap();
        let exact = rational_area(&v);
        let exact = *exact.numer() as f64 / *exact.denom() as f64;
        assert!((p.volume().unwrap() - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn octahedron_volume() {
        let mut h = Vec::new();
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    h.push(hs(&[sx, sy, sz], 1.0));
                }
            }
        }
        let p = Polytope::from_halfspaces(3, h).unwrap();
        assert!((p.volume().unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.vertices.len(), 6);
        assert_eq!(p.faces.len(), 8);
    }

    #[test]
    fn random_polygon_monte_carlo_volume() {
        let h: Vec<Halfspace> = (0..12)
            .map(|i| {
                let a = i as f64 * 0.52 + 0.1 * (i as f64).sin();
                hs(&[a.cos(), a.sin()], 0.8 + 0.3 * ((3 * i) as f64).cos().abs())
            })
            .collect();
        let p = Polytope::from_halfspaces(2, h.clone()).unwrap();
        let (mc, se) = monte_carlo_volume(&h, 1.5, 1_000_000, 3);
        assert!((p.volume().unwrap() - mc).abs() <= 3.0 * se, "{} vs {mc}", p.volume().unwrap());
    }

    #[test]
    fn distances() {
        let sq = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(sq.distance(&[0.5, 0.0]), 0.0);
        assert!((sq.distance(&[2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-12);
        assert!((sq.signed_distance(&[0.5, 0.0]) + 0.5).abs() < 1e-12);
        let cube = Polytope::cuboid(&[-1.0; 3], &[1.0; 3]).unwrap();
        assert!((cube.distance(&[3.0, 0.0, 0.0]) - 2.0).abs() < 1e-12);
        assert!((cube.distance(&[2.0, 2.0, 0.0]) - 2f64.sqrt()).abs() < 1e-12);
    }

    fn random_polytope(d: usize, angles: &[f64], radii: &[f64]) -> Result<Polytope> {
        let mut h = Polytope::cuboid(&vec![-2.0; d], &vec![2.0; d])?.halfspaces;
        for (i, &r) in radii.iter().enumerate() {
            let n: Vec<f64> = (0..d).map(|j| (angles[i] * (j as f64 + 1.3)).sin() + 0.01).collect();
            h.push(Halfspace::new(&n, r)?);
        }
        Polytope::from_halfspaces(d, h)
    }

    proptest! {
        #[test]
        fn closed_surface_and_scaling(
            d in 2usize..4,
            angles in proptest::collection::vec(0.0f64..6.3, 8),
            radii in proptest::collection::vec(0.5f64..1.5, 8),
            s in 0.2f64..5.0,
        ) {
            let p = random_polytope(d, &angles, &radii).unwrap();
            for c in p.closure_defect() {
                prop_assert!(c.abs() < 1e-9);
            }
            let v = p.volume().unwrap();
            let q = p.scaled(s);
            prop_assert!((q.volume().unwrap() - s.powi(d as i32) * v).abs() <= 1e-9 * s.powi(d as i32) * v);
            let rebuilt = Polytope::from_halfspaces(d, q.halfspaces.clone()).unwrap();
            prop_assert!((rebuilt.volume().unwrap() - q.volume().unwrap()).abs() <= 1e-9 * q.volume().unwrap());
            prop_assert!((rebuilt.surface_measure() - s.powi(d as i32 - 1) * p.surface_measure()).abs()
                <= 1e-9 * rebuilt.surface_measure());
        }

        #[test]
        fn redundant_halfspace_is_inert(
            d in 2usize..4,
            angles in proptest::collection::vec(0.0f64..6.3, 6),
            radii in proptest::collection::vec(0.5f64..1.5, 6),
            dir in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let p = random_polytope(d, &angles, &radii).unwrap();
            let n = &dir[..d];
            prop_assume!(n.iter().map(|x| x * x).sum::<f64>() > 0.01);
            let norm = n.iter().map(|x| x * x).sum::<f64>().sqrt();
            let u: Vec<f64> = n.iter().map(|x| x / norm).collect();
            let mut h = p.halfspaces.clone();
            h.push(Halfspace::new(&u, p.support(&u) + 0.1).unwrap());
            let q = Polytope::from_halfspaces(d, h).unwrap();
            prop_assert!((q.volume().unwrap() - p.volume().unwrap()).abs() <= 1e-12 * p.volume().unwrap().max(1.0));
            prop_assert!((q.surface_measure() - p.surface_measure()).abs() <= 1e-12 * p.surface_measure().max(1.0));
        }
    }

    #[test]
    fn svg_has_one_polygon_per_shape() {
        let sq = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let svg = polygons_svg(&[(&sq, "black"), (&sq.scaled(0.5), "red")], 200.0);
        assert_eq!(svg.matches("<polygon").count(), 2);
    }
}
