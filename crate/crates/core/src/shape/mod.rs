//! Shape of minimizers: hulls and hole filling, voxel sets and their
//! perimeter, rasterized Wulff translates, symmetric-difference distances
//! and empirical measures.

mod holes;
mod measure;
mod raster;
mod voxel;

pub use holes::{
    decompose_holes, edge_boundary, enclosed_set, fill_small_holes, hole_threshold, hull, HoleDecomposition,
};
pub use measure::{
    default_profile_delta, measure_compare, profile_family, Discrepancy, EmpiricalMeasure, TestFunction,
    VoxelMeasure,
};
pub use raster::{
    rasterize_center, rasterize_translate, symmetric_difference_distance, volume_centroid, SearchOptions,
    SearchStep, SymmetricDifference,
};
pub use voxel::{continuous_set_and_perimeter, ContinuousSet, VoxelSet};

use crate::percolation::BondConfiguration;
use crate::Result;

/// Mask of the infinite-cluster proxy within the analysis region.
pub fn cluster_mask(config: &BondConfiguration) -> Result<VoxelSet> {
    let lat = config.lattice();
    let proxy = holes::proxy_mask(config);
    let mut v = VoxelSet::for_region(lat)?;
    for (r, &inside) in proxy.iter().enumerate() {
        if inside && lat.in_analysis_region(r) {
            v.insert(&lat.coords(r));
        }
    }
    Ok(v)
}
