//! Minimal open cutsets in cylinders and the flow constant.

pub mod maxflow;
mod cylinder;
mod norm;

pub use cylinder::{
    discretize_cylinder, orthonormal_complement, separates, tau, Base, CutStats, CutsetResult,
    CylinderNetwork, CylinderSpec, MEMBERSHIP_TOL,
};
pub use norm::{
    axis_and_diagonals, beta_cylinder, build_norm_table, circle_directions, estimate_beta,
    fibonacci_sphere, lattice_period, symmetry_orbit, NormOptions, NormRow, NormTable,
};
