//! Convex polytopes, Wulff crystals and surface energies.

mod approx;
mod polytope;
mod wulff;

pub use approx::{
    approximate_within, boundary_samples, convex_hull, inner_outer_approximation,
    inner_outer_from_points, Approximation,
};
pub(crate) use polytope::distance_to_face;
pub use polytope::{monte_carlo_volume, polygons_svg, Face, Halfspace, Polytope};
pub use wulff::{
    dilate_to_volume, high_dimensional_wulff, isoperimetric_constant, isoperimetric_quotient,
    surface_energy, surface_energy_with, wulff_from_norm, HighDimensionalEstimate,
    IsoperimetricConstant, NormEvaluator, WulffShape,
};
