//! Numerical laboratory for the anchored isoperimetric profile of
//! supercritical bond percolation on `Z^d`.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] and [`percolation`]: boxes of `Z^d`, bit-packed bond
//!   configurations, cluster labelling, `theta_p` estimation and good-cube
//!   diagnostics.
//! * [`flow`]: unit-capacity max-flow on discretised cylinders, the cutset
//!   capacity `tau_p` and Monte Carlo estimates of the flow constant `beta_p`.
//! * [`geometry`]: convex polytopes from halfspaces (exact in `d = 2, 3`),
//!   Wulff crystals, surface energies and inner/outer approximations.
//! * [`cheeger`]: exact, parametric and heuristic solvers for the anchored
//!   profile `phi_n`, plus the polytope cutset certificate.
//! * [`shape`]: hulls, hole filling, voxel sets, symmetric-difference
//!   distances to Wulff translates and measure comparisons.
//! * [`experiment`]: configuration, seeded orchestration and report emission.

pub mod cheeger;
pub mod digest;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod geometry;
pub mod lattice;
pub mod percolation;
pub mod rng;
pub mod shape;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{BoxSpec, Lattice};
pub use percolation::BondConfiguration;
