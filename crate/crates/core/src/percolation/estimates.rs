use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{label_clusters, sample_configuration, warn_if_subcritical, BondConfiguration, UnionFind};
use crate::lattice::{for_each_point, BoxSpec};
use crate::rng::{self, tag};
use crate::stats::{proportion, summarize};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationEstimates {
    /// Fraction of replicates whose origin cluster reaches the outer face.
    pub theta_hat: f64,
    pub ci_radius: f64,
    pub replicates: usize,
    /// Mean density of the largest cluster inside the analysis region.
    pub density_hat: f64,
    pub density_ci_radius: f64,
}

/// Monte Carlo estimate of `theta_p`. Replicate `r` uses the configuration
/// seeded with `mix(seed, r, THETA)`.
pub fn estimate_theta(
    d: usize,
    p: f64,
    spec: BoxSpec,
    replicates: usize,
    seed: u64,
) -> Result<PercolationEstimates> {
    if replicates == 0 {
        return Err(Error::Parameter("replicates must be at least 1".into()));
    }
    if spec.d != d {
        return Err(Error::Parameter(format!(
            "box dimension {} differs from d = {d}",
            spec.d
        )));
    }
    warn_if_subcritical(d, p);
    let outcomes: Vec<(bool, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<(bool, f64)> {
            let config = sample_configuration(spec, p, rng::mix(seed, r as u64, tag::THETA))?;
            let lab = label_clusters(&config);
            let lat = config.lattice();
            let touches = lab.touches_outer_face(lab.origin);
            let region: Vec<usize> = (0..lat.vertex_count())
                .filter(|&v| lat.in_analysis_region(v))
                .collect();
            let in_largest = region
                .iter()
                .filter(|&&v| lab.label(v) == lab.largest)
                .count();
            Ok((touches, in_largest as f64 / region.len() as f64))
        })
        .collect::<Result<_>>()?;
    let hits = outcomes.iter().filter(|o| o.0).count();
    let theta = proportion(hits, replicates);
    let density = summarize(&outcomes.iter().map(|o| o.1).collect::<Vec<_>>());
    Ok(PercolationEstimates {
        theta_hat: theta.mean,
        ci_radius: theta.ci_radius,
        replicates,
        density_hat: density.mean,
        density_ci_radius: density.ci_radius,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeFlags {
    /// Lowest corner of the cube `B_j`.
    pub corner: Vec<i64>,
    /// Exactly one open cluster of `B'_j` has diameter at least the cube side.
    pub unique_crossing: bool,
    /// Fraction of `B_j` occupied by the giant-cluster proxy.
    pub density: f64,
    pub density_ok: bool,
}

impl CubeFlags {
    pub fn good(&self) -> bool {
        self.unique_crossing && self.density_ok
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodCubeReport {
    pub cube_side: usize,
    pub delta: f64,
    pub theta_hat: f64,
    pub cubes: Vec<CubeFlags>,
    pub good_fraction: f64,
}

/// Renormalisation diagnostic on cubes of side `2k` tiling the analysis
/// region from its low corner (partial cubes are dropped). `B'_j` is the
/// `3^d` block around `B_j`, clipped to the box; cluster diameters are
/// measured in the sup norm. Density uses the largest cluster reaching the
/// outer face as the stand-in for the infinite cluster.
pub fn good_cube_scan(
    config: &BondConfiguration,
    k: usize,
    delta: f64,
    theta_hat: f64,
) -> Result<GoodCubeReport> {
    let lat = config.lattice();
    let d = lat.d();
    let side = 2 * k;
    let a = lat.spec.analysis_half_width();
    let region_side = (2 * a + 1) as usize;
    if k == 0 || side > region_side {
        return Err(Error::Parameter(format!(
            "cube side {side} does not fit in the analysis region side {region_side}"
        )));
    }
    let per_axis = region_side / side;
    let lab = label_clusters(config);
    let giant = lab.giant();
    let l = lat.half_width();
    let total = per_axis.pow(d as u32);
    let mut cubes = Vec::with_capacity(total);
    for idx in 0..total {
        let mut corner = vec![0i64; d];
        let mut rest = idx;
        for i in (0..d).rev() {
            corner[i] = -a + ((rest % per_axis) * side) as i64;
            rest /= per_axis;
        }
        let lo: Vec<i64> = corner.iter().map(|&c| c.max(-l)).collect();
        let hi: Vec<i64> = corner.iter().map(|&c| c + side as i64 - 1).collect();
        // density over B_j
        let mut in_giant = 0usize;
        for_each_point(&lo, &hi, |x| {
            let v = lat.rank(x).expect("cube inside the box");
            if Some(lab.label(v)) == giant {
                in_giant += 1;
            }
        });
        let density = in_giant as f64 / side.pow(d as u32) as f64;
        let blo: Vec<i64> = corner.iter().map(|&c| (c - side as i64).max(-l)).collect();
        let bhi: Vec<i64> = corner
            .iter()
            .map(|&c| (c + 2 * side as i64 - 1).min(l))
            .collect();
        let unique_crossing = crossing_clusters(config, &blo, &bhi, side as i64) == 1;
        cubes.push(CubeFlags {
            corner,
            unique_crossing,
            density,
            density_ok: density > theta_hat - delta && density < theta_hat + delta,
        });
    }
    let good = cubes.iter().filter(|c| c.good()).count();
    Ok(GoodCubeReport {
        cube_side: side,
        delta,
        theta_hat,
        good_fraction: good as f64 / cubes.len() as f64,
        cubes,
    })
}

/// Number of open clusters of the sub-box `[lo, hi]` (edges inside it only)
/// whose sup-norm diameter is at least `threshold`.
fn crossing_clusters(config: &BondConfiguration, lo: &[i64], hi: &[i64], threshold: i64) -> usize {
    let lat = config.lattice();
    let d = lat.d();
    let ext: Vec<usize> = lo.iter().zip(hi).map(|(a, b)| (b - a + 1) as usize).collect();
    let count: usize = ext.iter().product();
    let local = |x: &[i64]| -> usize {
        let mut r = 0;
        for i in 0..d {
            r = r * ext[i] + (x[i] - lo[i]) as usize;
        }
        r
    };
    let mut uf = UnionFind::new(count);
    let mut pts = Vec::with_capacity(count);
    for_each_point(lo, hi, |x| pts.push(x.to_vec()));
    for x in &pts {
        let v = lat.rank(x).expect("inside box");
        for dir in 0..d {
            if x[dir] < hi[dir] {
                let slot = lat.edge_slot(v, dir).expect("edge exists");
                if config.is_open(slot) {
                    let mut y = x.clone();
                    y[dir] += 1;
                    uf.union(local(x), local(&y));
                }
            }
        }
    }
    let mut mins = vec![vec![i64::MAX; d]; count];
    let mut maxs = vec![vec![i64::MIN; d]; count];
    for x in &pts {
        let r = uf.find(local(x));
        for i in 0..d {
            mins[r][i] = mins[r][i].min(x[i]);
            maxs[r][i] = maxs[r][i].max(x[i]);
        }
    }
    (0..count)
        .filter(|&r| uf.find(r) == r)
        .filter(|&r| (0..d).any(|i| maxs[r][i] - mins[r][i] >= threshold))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_is_exact_at_extremes() {
        for l in [3, 8] {
            let spec = BoxSpec::with_default_margin(2, l).unwrap();
            for reps in [1, 5] {
                assert_eq!(estimate_theta(2, 1.0, spec, reps, 1).unwrap().theta_hat, 1.0);
                assert_eq!(estimate_theta(2, 0.0, spec, reps, 1).unwrap().theta_hat, 0.0);
            }
        }
        let spec3 = BoxSpec::with_default_margin(3, 4).unwrap();
        assert_eq!(estimate_theta(3, 1.0, spec3, 3, 2).unwrap().theta_hat, 1.0);
    }

    #[test]
    fn theta_rejects_bad_input() {
        let spec = BoxSpec::with_default_margin(2, 5).unwrap();
        assert!(estimate_theta(2, 0.7, spec, 0, 1).is_err());
        assert!(estimate_theta(3, 0.7, spec, 3, 1).is_err());
    }

    #[test]
    fn cube_scan_extremes() {
        let spec = BoxSpec::with_default_margin(2, 20).unwrap();
        let full = sample_configuration(spec, 1.0, 0).unwrap();
        let r = good_cube_scan(&full, 2, 0.1, 1.0).unwrap();
        assert_eq!(r.good_fraction, 1.0);
        let empty = sample_configuration(spec, 0.0, 0).unwrap();
        let r = good_cube_scan(&empty, 2, 0.1, 1.0).unwrap();
        assert_eq!(r.good_fraction, 0.0);
    }

    #[test]
    fn cube_scan_rejects_oversized_cubes() {
        let spec = BoxSpec::with_default_margin(2, 10).unwrap();
        let c = sample_configuration(spec, 1.0, 0).unwrap();
        assert!(matches!(good_cube_scan(&c, 10, 0.1, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(good_cube_scan(&c, 0, 0.1, 1.0), Err(Error::Parameter(_))));
    }
}
