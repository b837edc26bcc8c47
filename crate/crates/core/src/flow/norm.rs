//! Monte Carlo estimates of the flow constant and tables of them over
//! direction sets.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cylinder::{orthonormal_complement, tau, Base, CylinderSpec};
use crate::digest::blob_hash;
use crate::lattice::BoxSpec;
use crate::percolation::{sample_configuration, warn_if_subcritical};
use crate::rng::{self, tag};
use crate::stats::summarize;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub direction: Vec<f64>,
    pub beta_hat: f64,
    pub ci_radius: f64,
    pub n: usize,
    /// Cylinder half height in lattice units.
    pub h: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub n: usize,
    /// Half height relative to `n`; the lattice half height is `n * h_rel`.
    pub h_rel: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Estimate once per signed-permutation orbit and add all orbit members.
    pub symmetry: bool,
    /// Flag the table when some CI radius exceeds this.
    pub ci_threshold: Option<f64>,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            n: 20,
            h_rel: 0.25,
            replicates: 20,
            seed: 0,
            symmetry: true,
            ci_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormTable {
    pub d: usize,
    /// Percolation parameter; `None` for analytic tables.
    pub p: Option<f64>,
    pub seed: u64,
    pub symmetry_expanded: bool,
    /// Set when some row's CI radius exceeds the configured threshold.
    pub ci_warning: bool,
    pub config_hash: String,
    pub rows: Vec<NormRow>,
}

fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Parameter(format!("direction {v:?} cannot be normalized")));
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Shortest length of a nonzero integer vector parallel to the unit vector
/// `b`, searched over integer vectors with entries up to 12.
pub fn lattice_period(b: &[f64]) -> Option<f64> {
    let top = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        return None;
    }
    (1..=12).find_map(|m| {
        let w: Vec<f64> = b.iter().map(|x| x / top * m as f64).collect();
        w.iter()
            .all(|x| (x - x.round()).abs() < 1e-9)
            .then(|| w.iter().map(|x| x.round().powi(2)).sum::<f64>().sqrt())
    })
}

/// Cylinder used for `beta` along `v`: a hyperrectangle base of sides about
/// `n`, half height `n * h_rel`.
///
/// Along each base axis that is a lattice direction, the side is rounded to
/// a whole number of lattice periods; otherwise it is `n`. Commensurate
/// bases remove the aliasing bias of the cross-section count (a diagonal
/// base of length `n` holds `floor(n / sqrt 2)` lattice rows). The center
/// sits at `(1/4, ..., 1/4)` lattice units, off every lattice hyperplane
/// through the origin, so axis bases cover exactly `n` columns per axis.
pub fn beta_cylinder(v: &[f64], n: usize, h_rel: f64) -> Result<CylinderSpec> {
    let d = v.len();
    let normal = normalize(v)?;
    let nf = n as f64;
    let sides = orthonormal_complement(&normal)
        .iter()
        .map(|b| match lattice_period(b) {
            Some(period) => (nf / period).round().max(1.0) * period / nf,
            None => 1.0,
        })
        .collect();
    let spec = CylinderSpec {
        d,
        center: vec![0.25 / nf; d],
        base: Base::Rectangle(sides),
        normal,
        h: h_rel,
        n: nf,
    };
    spec.validate()?;
    Ok(spec)
}

fn enclosing_box(spec: &CylinderSpec) -> Result<BoxSpec> {
    let (lo, hi) = spec.lattice_bounds();
    let reach = lo.iter().chain(&hi).map(|x| x.abs()).max().unwrap_or(1);
    BoxSpec::new(spec.d, reach + 1, 0)
}

/// Mean of `tau / H^{d-1}(nA)` over replicates, with a 95% CI radius.
/// Replicate `r` samples with `mix(seed, r, BETA)`; seeds do not depend on
/// `p`, so tables at different `p` are monotonically coupled.
pub fn estimate_beta(
    direction: &[f64],
    p: f64,
    n: usize,
    h_rel: f64,
    replicates: usize,
    seed: u64,
) -> Result<NormRow> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Parameter(format!("p = {p} must lie in (0, 1]")));
    }
    if n == 0 || replicates == 0 {
        return Err(Error::Parameter("n and replicates must be at least 1".into()));
    }
    let spec = beta_cylinder(direction, n, h_rel)?;
    let bx = enclosing_box(&spec)?;
    let area = spec.scaled_base_measure();
    let values: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let config = sample_configuration(bx, p, rng::mix(seed, r as u64, tag::BETA))?;
            Ok(tau(&spec, &config)?.capacity as f64 / area)
        })
        .collect::<Result<_>>()?;
    let s = summarize(&values);
    Ok(NormRow {
        direction: spec.normal.clone(),
        beta_hat: s.mean,
        ci_radius: s.ci_radius,
        n,
        h: h_rel * n as f64,
        replicates,
    })
}

/// `K` equally spaced unit directions on the circle, starting at `e_1`.
pub fn circle_directions(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / k as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// `K` points of the Fibonacci spiral on the unit sphere in `R^3`.
pub fn fibonacci_sphere(k: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..k)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / k as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            vec![r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Normalised nonzero vectors of `{-1, 0, 1}^d`: axes and all diagonals.
pub fn axis_and_diagonals(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let total = 3usize.pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let v: Vec<f64> = (0..d)
            .map(|_| {
                let x = (c % 3) as f64 - 1.0;
                c /= 3;
                x
            })
            .collect();
        if v.iter().any(|&x| x != 0.0) {
            out.push(normalize(&v).expect("nonzero"));
        }
    }
    out
}

fn same_direction(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

/// Image of `v` under every signed permutation of coordinates, without
/// duplicates, in a fixed order.
pub fn symmetry_orbit(v: &[f64]) -> Vec<Vec<f64>> {
    let d = v.len();
    let mut perms: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..d {
        perms = perms
            .into_iter()
            .flat_map(|p| {
                (0..d)
                    .filter(|i| !p.contains(i))
                    .map(|i| {
                        let mut q = p.clone();
                        q.push(i);
                        q
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    for perm in &perms {
        for signs in 0..1usize << d {
            let w: Vec<f64> = (0..d)
                .map(|i| {
                    let x = v[perm[i]];
                    if signs >> i & 1 == 1 {
                        -x
                    } else {
                        x
                    }
                })
                .map(|x| if x == 0.0 { 0.0 } else { x })
                .collect();
            if !out.iter().any(|u| same_direction(u, &w)) {
                out.push(w);
            }
        }
    }
    out
}

/// Orbit invariant: sorted absolute values, quantised.
fn orbit_key(v: &[f64]) -> Vec<i64> {
    let mut a: Vec<i64> = v.iter().map(|x| (x.abs() * 1e9).round() as i64).collect();
    a.sort_unstable_by(|x, y| y.cmp(x));
    a
}

pub fn build_norm_table(p: f64, directions: &[Vec<f64>], opts: NormOptions) -> Result<NormTable> {
    let first = directions
        .first()
        .ok_or_else(|| Error::Parameter("direction set is empty".into()))?;
    let d = first.len();
    if d < 2 || directions.iter().any(|v| v.len() != d) {
        return Err(Error::Parameter("directions must share a dimension d >= 2".into()));
    }
    warn_if_subcritical(d, p);
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for v in directions {
        let u = normalize(v)?;
        if unique.iter().any(|w| same_direction(w, &u)) {
            log::warn!("duplicate direction {v:?} collapsed");
        } else {
            unique.push(u);
        }
    }
    // (direction, index of the representative it takes its value from)
    let mut members: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut reps: Vec<Vec<f64>> = Vec::new();
    if opts.symmetry {
        let mut keys: Vec<Vec<i64>> = Vec::new();
        for u in &unique {
            let key = orbit_key(u);
            let idx = match keys.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    keys.push(key);
                    reps.push(u.clone());
                    reps.len() - 1
                }
            };
            for w in std::iter::once(u.clone()).chain(symmetry_orbit(u)) {
                if !members.iter().any(|(m, _)| same_direction(m, &w)) {
                    members.push((w, idx));
                }
            }
        }
    } else {
        for (i, u) in unique.iter().enumerate() {
            reps.push(u.clone());
            members.push((u.clone(), i));
        }
    }
    let estimates: Vec<NormRow> = reps
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            estimate_beta(
                v,
                p,
                opts.n,
                opts.h_rel,
                opts.replicates,
                rng::mix(opts.seed, i as u64, tag::BETA),
            )
        })
        .collect::<Result<_>>()?;
    let rows: Vec<NormRow> = members
        .into_iter()
        .map(|(dir, i)| NormRow {
            direction: dir,
            ..estimates[i].clone()
        })
        .collect();
    let ci_warning = match opts.ci_threshold {
        Some(t) => rows.iter().any(|r| r.ci_radius > t),
        None => false,
    };
    if ci_warning {
        log::warn!("norm table has CI radii above {:?}", opts.ci_threshold);
    }
    let config_hash = blob_hash(
        serde_json::to_string(&(p, &unique, &opts))
            .expect("plain data serializes")
            .as_bytes(),
    );
    Ok(NormTable {
        d,
        p: Some(p),
        seed: opts.seed,
        symmetry_expanded: opts.symmetry,
        ci_warning,
        config_hash,
        rows,
    })
}

impl NormTable {
    /// Table of an analytic norm, with zero CI radii.
    pub fn from_fn(directions: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Result<NormTable> {
        let d = directions
            .first()
            .ok_or_else(|| Error::Parameter("direction set is empty".into()))?
            .len();
        let mut rows: Vec<NormRow> = Vec::new();
        for v in directions {
            let u = normalize(v)?;
            if rows.iter().any(|r| same_direction(&r.direction, &u)) {
                continue;
            }
            rows.push(NormRow {
                beta_hat: f(&u),
                direction: u,
                ci_radius: 0.0,
                n: 0,
                h: 0.0,
                replicates: 0,
            });
        }
        let config_hash = blob_hash(serde_json::to_string(&rows).expect("serializes").as_bytes());
        Ok(NormTable {
            d,
            p: None,
            seed: 0,
            symmetry_expanded: false,
            ci_warning: false,
            config_hash,
            rows,
        })
    }

    pub fn directions(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.iter().map(|r| r.direction.as_slice())
    }

    /// Exact (to 1e-9) table entry for a unit direction.
    pub fn get(&self, v: &[f64]) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| same_direction(&r.direction, v))
            .map(|r| r.beta_hat)
    }

    pub fn max_ci_radius(&self) -> f64 {
        self.rows.iter().map(|r| r.ci_radius).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.d).map(|i| format!("u{i}")).collect();
        header.extend(
            ["beta_hat", "ci_radius", "n", "h", "replicates"]
                .iter()
                .map(|s| s.to_string()),
        );
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.direction.iter().map(|x| x.to_string()).collect();
            rec.push(r.beta_hat.to_string());
            rec.push(r.ci_radius.to_string());
            rec.push(r.n.to_string());
            rec.push(r.h.to_string());
            rec.push(r.replicates.to_string());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "format": "percolab-norm/1",
            "table": self,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<NormTable> {
        let v: serde_json::Value = serde_json::from_str(s)?;
        let table = v
            .get("table")
            .ok_or_else(|| Error::Config("norm JSON lacks a `table` field".into()))?;
        Ok(serde_json::from_value(table.clone())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_one_axis_is_exactly_one() {
        for n in [3, 8, 15] {
            let r = estimate_beta(&[1.0, 0.0], 1.0, n, 0.25, 2, 0).unwrap();
            assert_eq!(r.beta_hat, 1.0);
            assert_eq!(r.ci_radius, 0.0);
        }
        let r = estimate_beta(&[0.0, 0.0, 1.0], 1.0, 6, 0.25, 1, 0).unwrap();
        assert_eq!(r.beta_hat, 1.0);
    }

    #[test]
    fn p_one_diagonal_near_l1_norm() {
        let r = estimate_beta(&[1.0, 1.0], 1.0, 20, 0.25, 1, 0).unwrap();
        let target = 2f64.sqrt();
        assert!((r.beta_hat - target).abs() / target < 0.05, "{}", r.beta_hat);
    }

    #[test]
    fn monotone_in_p() {
        let lo = estimate_beta(&[1.0, 0.0], 0.6, 12, 0.25, 10, 3).unwrap();
        let hi = estimate_beta(&[1.0, 0.0], 0.9, 12, 0.25, 10, 3).unwrap();
        assert!(lo.beta_hat <= hi.beta_hat + 2.0 * (lo.ci_radius + hi.ci_radius));
    }

    #[test]
    fn square_orbit_of_axis() {
        let o = symmetry_orbit(&[1.0, 0.0]);
        assert_eq!(o.len(), 4);
        assert_eq!(symmetry_orbit(&[0.6, 0.8]).len(), 8);
        assert_eq!(symmetry_orbit(&[1.0, 1.0, 1.0]).len(), 8);
    }

    #[test]
    fn table_expands_orbits_with_equal_values() {
        let opts = NormOptions {
            n: 6,
            replicates: 3,
            seed: 5,
            ..NormOptions::default()
        };
        let t = build_norm_table(0.7, &[vec![1.0, 0.0]], opts).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows.iter().all(|r| r.beta_hat == t.rows[0].beta_hat));
        let t1 = build_norm_table(1.0, &axis_and_diagonals(2)[..], opts).unwrap();
        for r in &t1.rows {
            if r.direction.iter().filter(|&&x| x != 0.0).count() == 1 {
                assert_eq!(r.beta_hat, 1.0);
            }
        }
    }

    #[test]
    fn duplicates_are_collapsed() {
        let opts = NormOptions {
            n: 4,
            replicates: 1,
            symmetry: false,
            ..NormOptions::default()
        };
        let t = build_norm_table(1.0, &[vec![1.0, 0.0], vec![2.0, 0.0]], opts).unwrap();
        assert_eq!(t.rows.len(), 1);
    }

    #[test]
    fn ci_threshold_flags() {
        let opts = NormOptions {
            n: 5,
            replicates: 4,
            symmetry: false,
            ci_threshold: Some(0.0),
            ..NormOptions::default()
        };
        let t = build_norm_table(0.6, &circle_directions(4), opts).unwrap();
        assert_eq!(t.ci_warning, t.max_ci_radius() > 0.0);
    }

    #[test]
    fn direction_sets() {
        assert_eq!(axis_and_diagonals(2).len(), 8);
        assert_eq!(axis_and_diagonals(3).len(), 26);
        for v in fibonacci_sphere(50) {
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(circle_directions(36).len(), 36);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let t = NormTable::from_fn(&circle_directions(8), |v| v[0].abs() + v[1].abs()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u1,u2,beta_hat,ci_radius,n,h,replicates\n"));
        assert_eq!(text.lines().count(), 9);
        let back = NormTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back.rows, t.rows);
    }
}
