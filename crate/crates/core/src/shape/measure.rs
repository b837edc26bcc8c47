//! Empirical measures of subgraphs and their comparison with voxel
//! measures on a family of test functions.

use serde::{Deserialize, Serialize};

use super::voxel::VoxelSet;
use crate::geometry::Polytope;
use crate::lattice::Lattice;
use crate::{Error, Result};

/// Point masses `1/n^d` at `x/n` for `x` in the vertex set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub n: usize,
    pub d: usize,
    pub points: Vec<Vec<f64>>,
    pub total_mass: f64,
}

impl EmpiricalMeasure {
    pub fn from_ranks(lattice: &Lattice, ranks: &[usize], n: usize) -> Result<Self> {
        let points: Vec<Vec<f64>> = ranks
            .iter()
            .map(|&r| {
                if !lattice.in_analysis_region(r) {
                    return Err(Error::Precondition("vertex outside the analysis region".into()));
                }
                Ok(lattice.coords(r).iter().map(|&c| c as f64 / n as f64).collect())
            })
            .collect::<Result<_>>()?;
        let d = lattice.d();
        Ok(EmpiricalMeasure {
            n,
            d,
            total_mass: points.len() as f64 / (n as f64).powi(d as i32),
            points,
        })
    }

    /// `sum_x f(x/n)`, before the `1/n^d` weight.
    fn raw_sum(&self, f: &TestFunction) -> f64 {
        self.points.iter().map(|x| f.eval(x)).sum()
    }

    pub fn integrate(&self, f: &TestFunction) -> f64 {
        self.raw_sum(f) / (self.n as f64).powi(self.d as i32)
    }
}

/// `theta` times Lebesgue measure on the unit cubes of a mask, rescaled by
/// `1/n`. Integrals use the cube centres.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelMeasure {
    pub voxels: VoxelSet,
    pub n: usize,
    pub theta: f64,
}

impl VoxelMeasure {
    fn raw_sum(&self, f: &TestFunction) -> f64 {
        let n = self.n as f64;
        self.voxels
            .points()
            .iter()
            .map(|z| {
                let x: Vec<f64> = z.iter().map(|&c| c as f64 / n).collect();
                f.eval(&x)
            })
            .sum()
    }

    pub fn integrate(&self, f: &TestFunction) -> f64 {
        self.theta * self.raw_sum(f) / (self.n as f64).powi(self.voxels.d() as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Constant,
    /// `clamp(sd(x)/delta, -1, 1)` with `sd` the signed distance to the
    /// shape (negative inside).
    Profile { shape: Polytope, delta: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::Profile { shape, delta } => (shape.signed_distance(x) / delta).clamp(-1.0, 1.0),
        }
    }
}

/// `0.05 * diam(W)`.
pub fn default_profile_delta(w: &Polytope) -> f64 {
    0.05 * w.diameter()
}

/// The constant function and the profiles of `W + z` for each centre `z`.
pub fn profile_family(w: &Polytope, centers: &[Vec<f64>], delta: f64) -> Result<Vec<TestFunction>> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("profile delta = {delta} must be positive")));
    }
    let mut out = vec![TestFunction::Constant];
    out.extend(centers.iter().map(|z| TestFunction::Profile {
        shape: w.translated(z),
        delta,
    }));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    /// `|mu(f) - nu(f)|` for each function of the family, in order.
    pub per_function: Vec<f64>,
    pub sup: f64,
    pub argmax: usize,
}

/// `sup_f |mu(f) - nu(f)|` over the family, by direct summation.
pub fn measure_compare(mu: &EmpiricalMeasure, nu: &VoxelMeasure, family: &[TestFunction]) -> Result<Discrepancy> {
    if mu.n != nu.n || mu.d != nu.voxels.d() {
        return Err(Error::Parameter("measures at different scales or dimensions".into()));
    }
    if family.is_empty() {
        return Err(Error::Parameter("empty test family".into()));
    }
    let vol = (mu.n as f64).powi(mu.d as i32);
    let per_function: Vec<f64> = family
        .iter()
        .map(|f| (mu.raw_sum(f) - nu.theta * nu.raw_sum(f)).abs() / vol)
        .collect();
    let (argmax, sup) = per_function
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, v)| if v > b.1 { (i, v) } else { b });
    Ok(Discrepancy {
        per_function,
        sup,
        argmax,
    })
}
