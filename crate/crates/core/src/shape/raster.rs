//! Rasterized translates `n(x + W)` and the symmetric-difference distance
//! of a subgraph to them.
//!
//! A voxel `z` belongs to `n(x + W)` when its centre does, faces included.
//! Translations are handled in lattice units `c = n x`. The search moves `c`
//! on dyadic grids, so an integer shift of the data shifts every visited
//! centre by exactly that integer.

use serde::{Deserialize, Serialize};

use super::voxel::VoxelSet;
use crate::geometry::Polytope;
use crate::lattice::for_each_point;
use crate::{Error, Result};

/// Slack for the centre rule, relative to the scaled offsets.
const TIE_TOL: f64 = 1e-12;

/// Volume centroid, by cones from the vertex mean over the faces.
pub fn volume_centroid(p: &Polytope) -> Vec<f64> {
    let o = p.vertex_mean();
    let d = p.d as f64;
    let mut acc = vec![0.0; p.d];
    let mut total = 0.0;
    for f in &p.faces {
        let h = p.halfspaces[f.halfspace].offset
            - f.normal.iter().zip(&o).map(|(a, b)| a * b).sum::<f64>();
        let vol = f.measure * h / d;
        for i in 0..p.d {
            acc[i] += vol * (o[i] + d / (d + 1.0) * (f.centroid[i] - o[i]));
        }
        total += vol;
    }
    acc.iter().map(|a| a / total).collect()
}

/// Voxels of `n W + c` (`c` in lattice units) within a mask of the given
/// shape. Fails if the translate leaves the mask.
pub fn rasterize_center(w: &Polytope, n: usize, c: &[f64], d: usize, half_width: i64) -> Result<VoxelSet> {
    let (lo, hi) = raster_bounds(w, n, c, half_width)?;
    let mut out = VoxelSet::empty(d, half_width)?;
    each_raster_point(w, n, c, &lo, &hi, |x| {
        out.insert(x);
    });
    Ok(out)
}

/// `rasterize_center` at `c = n x` over the analysis region of `template`.
pub fn rasterize_translate(w: &Polytope, n: usize, x: &[f64], template: &VoxelSet) -> Result<VoxelSet> {
    let c: Vec<f64> = x.iter().map(|t| t * n as f64).collect();
    rasterize_center(w, n, &c, template.d(), template.half_width())
}

fn raster_bounds(w: &Polytope, n: usize, c: &[f64], half_width: i64) -> Result<(Vec<i64>, Vec<i64>)> {
    let nf = n as f64;
    let d = w.d;
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for v in &w.vertices {
        for i in 0..d {
            let y = nf * v[i] + c[i];
            lo[i] = lo[i].min(y.floor() as i64);
            hi[i] = hi[i].max(y.ceil() as i64);
        }
    }
    for i in 0..d {
        if lo[i] < -half_width - 1 || hi[i] > half_width + 1 {
            return Err(Error::Geometry(format!(
                "translate spans [{}, {}] along axis {i}, outside the region of half width {half_width}",
                lo[i], hi[i]
            )));
        }
        // pad against rounding at the extreme vertices
        lo[i] = (lo[i] - 1).max(-half_width);
        hi[i] = (hi[i] + 1).min(half_width);
    }
    Ok((lo, hi))
}

fn each_raster_point(w: &Polytope, n: usize, c: &[f64], lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    let nf = n as f64;
    let hs: Vec<(&[f64], f64)> = w
        .halfspaces
        .iter()
        .map(|h| (&h.normal[..], nf * h.offset + TIE_TOL * (nf * h.offset.abs()).max(1.0)))
        .collect();
    let mut y = vec![0.0; c.len()];
    for_each_point(lo, hi, |z| {
        // exact for dyadic c, so joint integer shifts of z and c agree
        for i in 0..y.len() {
            y[i] = z[i] as f64 - c[i];
        }
        let inside = hs.iter().all(|&(nv, off)| {
            let s: f64 = nv.iter().zip(&y).map(|(a, b)| a * b).sum();
            s <= off
        });
        if inside {
            f(z);
        }
    });
}

/// Pattern search schedule, in lattice units. Steps are powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_evaluations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            initial_step: 4.0,
            min_step: 0.125,
            max_evaluations: 2000,
        }
    }
}

impl SearchOptions {
    fn validate(&self) -> Result<()> {
        let dyadic = |s: f64| s > 0.0 && s.log2().fract() == 0.0;
        if !dyadic(self.initial_step) || !dyadic(self.min_step) || self.min_step > self.initial_step {
            return Err(Error::Parameter(
                "search steps must be powers of two with min_step <= initial_step".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    /// Centre in lattice units.
    pub center: Vec<f64>,
    pub step: f64,
    pub mismatch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricDifference {
    /// Best translation `x` at unit scale.
    pub x: Vec<f64>,
    /// `|G Δ (n(x + W) ∩ cluster)|`.
    pub mismatch: usize,
    /// `mismatch / n^d`, an upper bound on the infimum over `x`.
    pub value: f64,
    pub evaluations: usize,
    /// Accepted moves, starting from the initial centre.
    pub trace: Vec<SearchStep>,
}

/// `min_x |G Δ (n(x+W) ∩ cluster)| / n^d` by pattern search from the
/// centroid match: start at `round_8(centroid(G) - n centroid(W))`, try
/// `± step` along every axis, move to the best strict improvement, halve the
/// step when none improves, stop below `min_step` or at the evaluation cap.
/// Translates leaving the region are skipped.
pub fn symmetric_difference_distance(
    g: &VoxelSet,
    cluster: &VoxelSet,
    w: &Polytope,
    n: usize,
    opts: SearchOptions,
) -> Result<SymmetricDifference> {
    opts.validate()?;
    let d = g.d();
    if w.d != d || cluster.d() != d || cluster.half_width() != g.half_width() {
        return Err(Error::Parameter("mask and shape dimensions disagree".into()));
    }
    let gcount = g.count();
    let hw = g.half_width();
    let eval = |c: &[f64]| -> Option<usize> {
        let (lo, hi) = raster_bounds(w, n, c, hw).ok()?;
        let (mut r, mut both) = (0usize, 0usize);
        each_raster_point(w, n, c, &lo, &hi, |z| {
            if cluster.contains(z) {
                r += 1;
                if g.contains(z) {
                    both += 1;
                }
            }
        });
        Some(gcount + r - 2 * both)
    };

    let scale = (1.0 / opts.min_step).round() as i128;
    let sums = g.coordinate_sums();
    let wc = volume_centroid(w);
    let mut c: Vec<f64> = (0..d)
        .map(|i| {
            let q = if gcount == 0 { 0 } else { div_round(sums[i] * scale, gcount as i128) };
            let qw = (wc[i] * n as f64 * scale as f64).round() as i128;
            (q - qw) as f64 / scale as f64
        })
        .collect();
    let mut evaluations = 1;
    let mut best = eval(&c).ok_or_else(|| {
        Error::Geometry("the centroid-matched translate does not fit the region".into())
    })?;
    let mut step = opts.initial_step;
    let mut trace = vec![SearchStep {
        center: c.clone(),
        step,
        mismatch: best,
    }];
    while step >= opts.min_step && evaluations < opts.max_evaluations {
        let mut pick: Option<(usize, Vec<f64>)> = None;
        'moves: for i in 0..d {
            for s in [-1.0, 1.0] {
                if evaluations >= opts.max_evaluations {
                    break 'moves;
                }
                let mut y = c.clone();
                y[i] += s * step;
                evaluations += 1;
                if let Some(m) = eval(&y) {
                    if m < best && pick.as_ref().is_none_or(|p| m < p.0) {
                        pick = Some((m, y));
                    }
                }
            }
        }
        match pick {
            Some((m, y)) => {
                best = m;
                c = y;
                trace.push(SearchStep {
                    center: c.clone(),
                    step,
                    mismatch: m,
                });
            }
            None => step /= 2.0,
        }
    }
    Ok(SymmetricDifference {
        x: c.iter().map(|t| t / n as f64).collect(),
        mismatch: best,
        value: best as f64 / (n as f64).powi(d as i32),
        evaluations,
        trace,
    })
}

/// `round(a / b)` for `b > 0`, halves away from zero.
fn div_round(a: i128, b: i128) -> i128 {
    let q = a.div_euclid(b);
    let r = a.rem_euclid(b);
    if 2 * r >= b {
        q + 1
    } else {
        q
    }
}
