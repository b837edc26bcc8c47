//! Wulff crystals of tabulated norms, surface energies and the
//! isoperimetric constant.

use serde::{Deserialize, Serialize};

use super::polytope::{dot, Halfspace, Polytope};
use crate::flow::NormTable;
use crate::{Error, Result};

fn angle(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Evaluates a tabulated norm off the table directions.
///
/// Exact table hits (within 1e-9) return the tabulated value. Otherwise the
/// nearest direction must lie within twice the mesh spacing (the largest
/// nearest-neighbour angle in the table), and the value is interpolated:
/// linearly in angle between the two bracketing directions in `d = 2`,
/// barycentrically over a spherical triangle of nearby directions in
/// `d = 3`. With interpolation off, or when no bracket exists, the nearest
/// value is used.
#[derive(Debug, Clone)]
pub struct NormEvaluator {
    d: usize,
    dirs: Vec<Vec<f64>>,
    values: Vec<f64>,
    angles: Vec<f64>,
    pub tolerance: f64,
    pub interpolate: bool,
}

impl NormEvaluator {
    pub fn new(table: &NormTable, interpolate: bool) -> Result<Self> {
        if table.rows.is_empty() {
            return Err(Error::Parameter("norm table is empty".into()));
        }
        let dirs: Vec<Vec<f64>> = table.rows.iter().map(|r| r.direction.clone()).collect();
        let values = table.rows.iter().map(|r| r.beta_hat).collect();
        let spacing = dirs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                dirs.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| angle(a, b))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max);
        let angles = if table.d == 2 {
            dirs.iter().map(|v| v[1].atan2(v[0])).collect()
        } else {
            Vec::new()
        };
        Ok(NormEvaluator {
            d: table.d,
            dirs,
            values,
            angles,
            tolerance: 2.0 * spacing,
            interpolate,
        })
    }

    pub fn eval(&self, u: &[f64]) -> Result<f64> {
        let (nearest, best) = self
            .dirs
            .iter()
            .enumerate()
            .map(|(i, v)| (i, angle(u, v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty table");
        if best <= 1e-9 {
            return Ok(self.values[nearest]);
        }
        if !(best <= self.tolerance) {
            return Err(Error::Coverage {
                direction: u.to_vec(),
                angle: best,
            });
        }
        if self.interpolate {
            let v = match self.d {
                2 => self.circular(u),
                3 => self.barycentric(u),
                _ => None,
            };
            if let Some(v) = v {
                return Ok(v);
            }
        }
        Ok(self.values[nearest])
    }

    fn circular(&self, u: &[f64]) -> Option<f64> {
        use std::f64::consts::TAU;
        let a = u[1].atan2(u[0]);
        // closest table angle strictly below and above, going round
        let mut lo: Option<(f64, usize)> = None;
        let mut hi: Option<(f64, usize)> = None;
        for (i, &b) in self.angles.iter().enumerate() {
            let below = (a - b).rem_euclid(TAU);
            let above = (b - a).rem_euclid(TAU);
            if lo.map_or(true, |(g, _)| below < g) {
                lo = Some((below, i));
            }
            if hi.map_or(true, |(g, _)| above < g) {
                hi = Some((above, i));
            }
        }
        let ((g1, i), (g2, j)) = (lo?, hi?);
        if i == j || g1 + g2 >= std::f64::consts::PI {
            return None;
        }
        Some((self.values[i] * g2 + self.values[j] * g1) / (g1 + g2))
    }

    fn barycentric(&self, u: &[f64]) -> Option<f64> {
        let mut order: Vec<usize> = (0..self.dirs.len()).collect();
        order.sort_by(|&a, &b| angle(u, &self.dirs[a]).total_cmp(&angle(u, &self.dirs[b])));
        order.truncate(10);
        let k = order.len();
        for x in 0..k {
            for y in x + 1..k {
                for z in y + 1..k {
                    let (a, b, c) = (
                        &self.dirs[order[x]],
                        &self.dirs[order[y]],
                        &self.dirs[order[z]],
                    );
                    if let Some(w) = solve3(a, b, c, u) {
                        if w.iter().all(|&t| t >= -1e-12) {
                            let s: f64 = w.iter().sum();
                            let idx = [order[x], order[y], order[z]];
                            return Some(
                                w.iter()
                                    .zip(idx)
                                    .map(|(t, i)| t / s * self.values[i])
                                    .sum(),
                            );
                        }
                    }
                }
            }
        }
        None
    }
}

/// Coefficients of `u` in the basis `(a, b, c)`, by Cramer's rule.
fn solve3(a: &[f64], b: &[f64], c: &[f64], u: &[f64]) -> Option<[f64; 3]> {
    let det = |p: &[f64], q: &[f64], r: &[f64]| {
        p[0] * (q[1] * r[2] - q[2] * r[1]) - q[0] * (p[1] * r[2] - p[2] * r[1])
            + r[0] * (p[1] * q[2] - p[2] * q[1])
    };
    let m = det(a, b, c);
    if m.abs() < 1e-12 {
        return None;
    }
    Some([det(u, b, c) / m, det(a, u, c) / m, det(a, b, u) / m])
}

/// `{x : x . u <= beta(u)}` over the table directions.
pub fn wulff_from_norm(table: &NormTable) -> Result<Polytope> {
    let d = table.d;
    if table.rows.len() < d + 1 {
        return Err(Error::Geometry(format!(
            "{} directions cannot positively span R^{d}",
            table.rows.len()
        )));
    }
    let hs = table
        .rows
        .iter()
        .map(|r| Halfspace::new(&r.direction, r.beta_hat))
        .collect::<Result<Vec<_>>>()?;
    Polytope::from_halfspaces(d, hs)
}

/// `sum_i beta(v_i) |F_i|` over the faces of `p`.
pub fn surface_energy(p: &Polytope, norm: &NormEvaluator) -> Result<f64> {
    if !p.exact() {
        return Err(Error::Geometry("surface energy needs d <= 3".into()));
    }
    p.faces
        .iter()
        .map(|f| Ok(norm.eval(&f.normal)? * f.measure))
        .sum()
}

/// Surface energy under an arbitrary direction function.
pub fn surface_energy_with(p: &Polytope, norm: impl Fn(&[f64]) -> f64) -> f64 {
    p.faces.iter().map(|f| norm(&f.normal) * f.measure).sum()
}

/// Dilate about the origin so the volume equals `target`; returns the
/// dilate and the factor `s = (target / vol)^(1/d)`.
pub fn dilate_to_volume(p: &Polytope, target: f64) -> Result<(Polytope, f64)> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::Parameter(format!("target volume {target} must be positive")));
    }
    let vol = p.volume()?;
    let s = (target / vol).powf(1.0 / p.d as f64);
    Ok((p.scaled(s), s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WulffShape {
    pub polytope: Polytope,
    /// Content hash of the norm table the crystal was built from.
    pub source_table: String,
    pub dilation: f64,
    pub theta: f64,
}

impl WulffShape {
    /// Wulff crystal of `table`, dilated to volume `1 / theta`.
    pub fn build(table: &NormTable, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::Parameter(format!("theta = {theta} must lie in (0, 1]")));
        }
        let raw = wulff_from_norm(table)?;
        let (polytope, dilation) = dilate_to_volume(&raw, 1.0 / theta)?;
        Ok(WulffShape {
            polytope,
            source_table: table.config_hash.clone(),
            dilation,
            theta,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricConstant {
    /// `I(W)`.
    pub energy: f64,
    /// `I(W) / (theta vol(W))`.
    pub ratio: f64,
}

pub fn isoperimetric_constant(w: &WulffShape, norm: &NormEvaluator) -> Result<IsoperimetricConstant> {
    let vol = w.polytope.volume()?;
    if (vol * w.theta - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "Wulff shape has volume {vol}, expected 1/theta = {}",
            1.0 / w.theta
        )));
    }
    let energy = surface_energy(&w.polytope, norm)?;
    let ratio = energy / (w.theta * vol);
    if (ratio - energy).abs() > 1e-9 * energy.abs().max(1.0) {
        return Err(Error::Contract(format!(
            "ratio {ratio} and energy {energy} disagree after normalisation"
        )));
    }
    Ok(IsoperimetricConstant { energy, ratio })
}

/// Scale-free isoperimetric quotient `I(P) / vol(P)^((d-1)/d)`.
pub fn isoperimetric_quotient(p: &Polytope, norm: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let d = p.d as f64;
    Ok(surface_energy_with(p, norm) / p.volume()?.powf((d - 1.0) / d))
}

/// Energy of the Wulff crystal of an analytic table in `d >= 4`, from a
/// Monte Carlo volume and the identity `I(W) = d vol(W)`, which holds
/// because every face of `W` carries a tabulated normal. Flagged inexact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighDimensionalEstimate {
    pub volume: f64,
    pub volume_se: f64,
    pub energy: f64,
    pub exact: bool,
}

pub fn high_dimensional_wulff(table: &NormTable, samples: usize, seed: u64) -> Result<HighDimensionalEstimate> {
    let d = table.d;
    let mut r: f64 = 0.0;
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = sign;
            let b = table.get(&e).ok_or_else(|| {
                Error::Geometry("d >= 4 volume needs every signed axis in the table".into())
            })?;
            r = r.max(b);
        }
    }
    let hs = table
        .rows
        .iter()
        .map(|row| Halfspace::new(&row.direction, row.beta_hat))
        .collect::<Result<Vec<_>>>()?;
    let (volume, volume_se) = super::polytope::monte_carlo_volume(&hs, r, samples, seed);
    Ok(HighDimensionalEstimate {
        volume,
        volume_se,
        energy: d as f64 * volume,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{axis_and_diagonals, circle_directions, fibonacci_sphere, NormTable};
    use std::f64::consts::PI;

    fn l1(v: &[f64]) -> f64 {
        v.iter().map(|x| x.abs()).sum()
    }

    fn linf(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    #[test]
    fn constant_norm_gives_polygonal_disc() {
        let k = 360;
        let t = NormTable::from_fn(&circle_directions(k), |_| 1.0).unwrap();
        let w = wulff_from_norm(&t).unwrap();
        let area = w.volume().unwrap();
        // circumscribed regular K-gon: K tan(pi / K)
        let exact = k as f64 * (PI / k as f64).tan();
        assert!((area - exact).abs() < 1e-9);
        assert!((area - PI).abs() <= 2.0 * PI * (PI * PI / (k * k) as f64));
        assert!((area - PI).abs() / PI < 1e-3);
    }

    #[test]
    fn l1_norm_gives_cube() {
        for d in [2, 3] {
            let t = NormTable::from_fn(&axis_and_diagonals(d), l1).unwrap();
            let w = wulff_from_norm(&t).unwrap();
            assert_eq!(w.faces.len(), 2 * d);
            assert!((w.volume().unwrap() - 2f64.powi(d as i32)).abs() < 1e-9);
        }
    }

    #[test]
    fn linf_norm_gives_cross_polytope() {
        let t = NormTable::from_fn(&circle_directions(8), linf).unwrap();
        let w = wulff_from_norm(&t).unwrap();
        assert_eq!(w.vertices.len(), 4);
        let mut got: Vec<(i64, i64)> = w
            .vertices
            .iter()
            .map(|v| ((v[0] * 1e9).round() as i64, (v[1] * 1e9).round() as i64))
            .collect();
        got.sort();
        let e = 1_000_000_000;
        assert_eq!(got, vec![(-e, 0), (0, -e), (0, e), (e, 0)]);
        let t3 = NormTable::from_fn(&axis_and_diagonals(3), linf).unwrap();
        let w3 = wulff_from_norm(&t3).unwrap();
        assert_eq!(w3.vertices.len(), 6);
        assert!((w3.volume().unwrap() - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_directions() {
        let t = NormTable::from_fn(&[vec![1.0, 0.0], vec![0.0, 1.0]], |_| 1.0).unwrap();
        assert!(matches!(wulff_from_norm(&t), Err(Error::Geometry(_))));
        let t = NormTable::from_fn(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.1]], |_| 1.0).unwrap();
        assert!(matches!(wulff_from_norm(&t), Err(Error::Geometry(_))));
    }

    #[test]
    fn square_energies() {
        let sq = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let c = NormTable::from_fn(&circle_directions(8), |_| 1.0).unwrap();
        assert_eq!(surface_energy(&sq, &NormEvaluator::new(&c, true).unwrap()).unwrap(), 8.0);
        let t = NormTable::from_fn(&circle_directions(8), l1).unwrap();
        assert_eq!(surface_energy(&sq, &NormEvaluator::new(&t, true).unwrap()).unwrap(), 8.0);
    }

    #[test]
    fn hexagon_matches_hand_summation() {
        let dirs = circle_directions(6);
        let betas = [1.0, 1.2, 0.9, 1.1, 1.3, 0.8];
        let t = NormTable::from_fn(&dirs, |v| {
            let i = dirs.iter().position(|d| (d[0] - v[0]).abs() + (d[1] - v[1]).abs() < 1e-12).unwrap();
            betas[i]
        })
        .unwrap();
        let hex = Polytope::from_halfspaces(
            2,
            dirs.iter().map(|d| Halfspace::new(d, 1.0).unwrap()).collect(),
        )
        .unwrap();
        // regular hexagon of inradius 1: side 2 / sqrt 3
        let side = 2.0 / 3f64.sqrt();
        let oracle: f64 = betas.iter().map(|b| b * side).sum();
        let e = surface_energy(&hex, &NormEvaluator::new(&t, true).unwrap()).unwrap();
        assert!((e - oracle).abs() < 1e-12);
    }

    #[test]
    fn coverage_error_without_nearby_direction() {
        let t = NormTable::from_fn(&circle_directions(36), |_| 1.0).unwrap();
        let mut ev = NormEvaluator::new(&t, false).unwrap();
        ev.tolerance = 1e-6;
        let a: f64 = 0.05;
        assert!(matches!(ev.eval(&[a.cos(), a.sin()]), Err(Error::Coverage { .. })));
    }

    #[test]
    fn interpolation_is_linear_in_angle() {
        let t = NormTable::from_fn(&circle_directions(4), |v| 1.0 + v[1].max(0.0)).unwrap();
        let ev = NormEvaluator::new(&t, true).unwrap();
        let a = PI / 8.0;
        assert!((ev.eval(&[a.cos(), a.sin()]).unwrap() - 1.25).abs() < 1e-12);
        let t3 = NormTable::from_fn(&fibonacci_sphere(200), l1).unwrap();
        let ev3 = NormEvaluator::new(&t3, true).unwrap();
        let u = [0.48, 0.6, 0.64];
        assert!((ev3.eval(&u).unwrap() - l1(&u)).abs() < 0.05);
    }

    #[test]
    fn dilation() {
        let sq = Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let (q, s) = dilate_to_volume(&sq, 1.0).unwrap();
        assert_eq!(s, 0.5);
        assert!((q.volume().unwrap() - 1.0).abs() < 1e-12);
        let (r, s) = dilate_to_volume(&sq, 4.0).unwrap();
        assert_eq!(s, 1.0);
        assert_eq!(r, sq);
        let cube = Polytope::cuboid(&[-1.0; 3], &[1.0; 3]).unwrap();
        let theta = 0.96;
        let (c, _) = dilate_to_volume(&cube, 1.0 / theta).unwrap();
        assert!((c.volume().unwrap() - 1.041_666_666_666_666_7).abs() < 1e-9);
        assert!(dilate_to_volume(&sq, 0.0).is_err());
    }

    #[test]
    fn energy_scales_with_dilation() {
        let t = NormTable::from_fn(&circle_directions(24), |v| 1.0 + 0.3 * v[0].abs()).unwrap();
        let ev = NormEvaluator::new(&t, true).unwrap();
        let w = wulff_from_norm(&t).unwrap();
        let (q, s) = dilate_to_volume(&w, 0.7).unwrap();
        let (e0, e1) = (surface_energy(&w, &ev).unwrap(), surface_energy(&q, &ev).unwrap());
        assert!((e1 - s * e0).abs() < 1e-9 * e1);
    }

    #[test]
    fn l1_constant_is_two_d() {
        for d in [2usize, 3] {
            let t = NormTable::from_fn(&axis_and_diagonals(d), l1).unwrap();
            let w = WulffShape::build(&t, 1.0).unwrap();
            let c = isoperimetric_constant(&w, &NormEvaluator::new(&t, true).unwrap()).unwrap();
            assert!((c.ratio - 2.0 * d as f64).abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn constant_norm_constant_is_circle_isoperimetry() {
        let c = 1.7;
        let t = NormTable::from_fn(&circle_directions(720), |_| c).unwrap();
        let w = WulffShape::build(&t, 1.0).unwrap();
        let k = isoperimetric_constant(&w, &NormEvaluator::new(&t, true).unwrap()).unwrap();
        let oracle = c * 2.0 * PI.sqrt();
        assert!((k.ratio - oracle).abs() / oracle < 1e-4);
    }

    #[test]
    fn unnormalised_shape_is_a_contract_error() {
        let t = NormTable::from_fn(&axis_and_diagonals(2), l1).unwrap();
        let mut w = WulffShape::build(&t, 0.5).unwrap();
        w.theta = 0.6;
        assert!(matches!(
            isoperimetric_constant(&w, &NormEvaluator::new(&t, true).unwrap()),
            Err(Error::Contract(_))
        ));
    }

    /// Perturbed polytopes never beat the crystal at equal volume.
    #[test]
    fn wulff_is_optimal_among_perturbations() {
        let norms: Vec<(&str, Box<dyn Fn(&[f64]) -> f64>)> = vec![
            ("constant", Box::new(|_: &[f64]| 1.0)),
            ("l1", Box::new(l1)),
            ("linf", Box::new(linf)),
        ];
        for d in [2usize, 3] {
            let dirs = if d == 2 { circle_directions(48) } else { fibonacci_sphere(150) };
            let dirs: Vec<Vec<f64>> = dirs.into_iter().chain(axis_and_diagonals(d)).collect();
            for (_, f) in &norms {
                let t = NormTable::from_fn(&dirs, f).unwrap();
                let w = wulff_from_norm(&t).unwrap();
                let wq = isoperimetric_quotient(&w, f).unwrap();
                for trial in 0..20 {
                    let hs: Vec<Halfspace> = t
                        .rows
                        .iter()
                        .enumerate()
                        .map(|(i, r)| {
                            let wiggle = 1.0 + 0.3 * ((i * 7 + trial * 13) as f64).sin().abs();
                            Halfspace::new(&r.direction, r.beta_hat * wiggle).unwrap()
                        })
                        .collect();
                    let p = Polytope::from_halfspaces(d, hs).unwrap();
                    let pq = isoperimetric_quotient(&p, f).unwrap();
                    assert!(wq <= pq + 1e-9, "d={d} trial={trial}: {wq} > {pq}");
                }
            }
        }
    }

    #[test]
    fn high_dimensional_cube_volume() {
        let t = NormTable::from_fn(&axis_and_diagonals(4), l1).unwrap();
        let est = high_dimensional_wulff(&t, 20_000, 1).unwrap();
        assert!(!est.exact);
        assert!((est.volume - 16.0).abs() < 1e-9);
    }
}
