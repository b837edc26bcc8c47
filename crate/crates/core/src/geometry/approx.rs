//! Inner and outer polytope approximations from boundary samples.

use serde::{Deserialize, Serialize};

use super::polytope::{dot, Halfspace, Polytope};
use super::wulff::surface_energy_with;
use crate::flow::fibonacci_sphere;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Approximation {
    /// Convex hull of the samples; contained in the original.
    pub inner: Polytope,
    /// Intersection of the supporting halfspaces at the samples; contains
    /// the original.
    pub outer: Polytope,
    pub inner_energy: f64,
    pub outer_energy: f64,
    /// `outer_energy - inner_energy`.
    pub gap: f64,
    pub samples: usize,
}

/// `k` boundary points: equally spaced in arc length from the first vertex
/// in `d = 2`, radial projections of a Fibonacci sphere from the vertex mean
/// in `d = 3`.
pub fn boundary_samples(p: &Polytope, k: usize) -> Result<Vec<Vec<f64>>> {
    match p.d {
        2 => {
            let v = &p.vertices;
            let m = v.len();
            let lens: Vec<f64> = (0..m)
                .map(|i| {
                    let (a, b) = (&v[i], &v[(i + 1) % m]);
                    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
                })
                .collect();
            let total: f64 = lens.iter().sum();
            let mut out = Vec::with_capacity(k);
            let (mut edge, mut start) = (0usize, 0.0f64);
            for j in 0..k {
                let s = total * j as f64 / k as f64;
                while edge + 1 < m && start + lens[edge] <= s {
                    start += lens[edge];
                    edge += 1;
                }
                let t = if lens[edge] > 0.0 { (s - start) / lens[edge] } else { 0.0 };
                let (a, b) = (&v[edge], &v[(edge + 1) % m]);
                out.push(vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
            Ok(out)
        }
        3 => {
            let c = p.vertex_mean();
            Ok(fibonacci_sphere(k)
                .into_iter()
                .map(|u| {
                    let t = p
                        .halfspaces
                        .iter()
                        .filter(|h| dot(&h.normal, &u) > 1e-15)
                        .map(|h| (h.offset - dot(&h.normal, &c)) / dot(&h.normal, &u))
                        .fold(f64::INFINITY, f64::min);
                    c.iter().zip(&u).map(|(a, b)| a + t * b).collect()
                })
                .collect())
        }
        d => Err(Error::Geometry(format!("boundary sampling needs d <= 3, got {d}"))),
    }
}

/// Inner hull and outer supporting-halfspace polytope through the given
/// boundary points, with their energies under `norm`.
pub fn inner_outer_from_points(
    p: &Polytope,
    points: &[Vec<f64>],
    norm: impl Fn(&[f64]) -> f64,
) -> Result<Approximation> {
    let inner = convex_hull(p.d, points)?;
    let mut active: Vec<usize> = Vec::new();
    for x in points {
        for f in &p.faces {
            let h = &p.halfspaces[f.halfspace];
            if (dot(&h.normal, x) - h.offset).abs() <= 1e-9 * h.offset.abs().max(1.0)
                && !active.contains(&f.halfspace)
            {
                active.push(f.halfspace);
            }
        }
    }
    active.sort_unstable();
    let outer = Polytope::from_halfspaces(
        p.d,
        active.iter().map(|&i| p.halfspaces[i].clone()).collect(),
    )?;
    let inner_energy = surface_energy_with(&inner, &norm);
    let outer_energy = surface_energy_with(&outer, &norm);
    Ok(Approximation {
        inner,
        outer,
        inner_energy,
        outer_energy,
        gap: outer_energy - inner_energy,
        samples: points.len(),
    })
}

pub fn inner_outer_approximation(
    p: &Polytope,
    samples: usize,
    norm: impl Fn(&[f64]) -> f64,
) -> Result<Approximation> {
    let pts = boundary_samples(p, samples)?;
    inner_outer_from_points(p, &pts, norm)
}

/// Doubles the sample count from `start` until the energy gap is at most
/// `eps` or `max_samples` is reached.
pub fn approximate_within(
    p: &Polytope,
    eps: f64,
    start: usize,
    max_samples: usize,
    norm: impl Fn(&[f64]) -> f64 + Copy,
) -> Result<Approximation> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps = {eps} must be positive")));
    }
    let mut k = start.max(p.d + 1);
    loop {
        let a = inner_outer_approximation(p, k, norm)?;
        if a.gap <= eps || 2 * k > max_samples {
            return Ok(a);
        }
        k *= 2;
    }
}

/// Convex hull as a polytope: monotone chain in `d = 2`, facet enumeration
/// over point triples in `d = 3`.
pub fn convex_hull(d: usize, points: &[Vec<f64>]) -> Result<Polytope> {
    match d {
        2 => {
            let mut pts: Vec<[f64; 2]> = points.iter().map(|v| [v[0], v[1]]).collect();
            pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            pts.dedup();
            if pts.len() < 3 {
                return Err(Error::Geometry("hull of fewer than 3 points".into()));
            }
            let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
                (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
            };
            let mut hull: Vec<[f64; 2]> = Vec::new();
            for pass in 0..2 {
                let start = hull.len();
                let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
                    Box::new(pts.iter())
                } else {
                    Box::new(pts.iter().rev())
                };
                for &q in iter {
                    while hull.len() >= start + 2
                        && turn(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 1e-14
                    {
                        hull.pop();
                    }
                    hull.push(q);
                }
                hull.pop();
            }
            let k = hull.len();
            let hs = (0..k)
                .map(|i| {
                    let (a, b) = (hull[i], hull[(i + 1) % k]);
                    let n = [b[1] - a[1], a[0] - b[0]];
                    Halfspace::new(&n, n[0] * a[0] + n[1] * a[1])
                })
                .collect::<Result<Vec<_>>>()?;
            Polytope::from_halfspaces(2, hs)
        }
        3 => {
            let m = points.len();
            let scale = points
                .iter()
                .flat_map(|v| v.iter())
                .fold(1.0f64, |a, x| a.max(x.abs()));
            let tol = 1e-10 * scale;
            let mut planes: Vec<Halfspace> = Vec::new();
            for i in 0..m {
                for j in i + 1..m {
                    for l in j + 1..m {
                        let (a, b, c) = (&points[i], &points[j], &points[l]);
                        let u: Vec<f64> = (0..3).map(|t| b[t] - a[t]).collect();
                        let w: Vec<f64> = (0..3).map(|t| c[t] - a[t]).collect();
                        let n = [
                            u[1] * w[2] - u[2] * w[1],
                            u[2] * w[0] - u[0] * w[2],
                            u[0] * w[1] - u[1] * w[0],
                        ];
                        let len = dot(&n, &n).sqrt();
                        if len <= tol * scale {
                            continue;
                        }
                        let n: Vec<f64> = n.iter().map(|x| x / len).collect();
                        let off = dot(&n, a);
                        let (mut above, mut below) = (false, false);
                        for q in points {
                            let s = dot(&n, q) - off;
                            above |= s > tol;
                            below |= s < -tol;
                        }
                        let h = match (above, below) {
                            (false, _) => Halfspace { normal: n, offset: off },
                            (true, false) => Halfspace {
                                normal: n.iter().map(|x| -x).collect(),
                                offset: -off,
                            },
                            _ => continue,
                        };
                        if !planes.iter().any(|g| {
                            (g.offset - h.offset).abs() <= tol
                                && g.normal.iter().zip(&h.normal).all(|(x, y)| (x - y).abs() <= 1e-9)
                        }) {
                            planes.push(h);
                        }
                    }
                }
            }
            Polytope::from_halfspaces(3, planes)
        }
        _ => Err(Error::Geometry(format!("convex hull needs d <= 3, got {d}"))),
    }
}
