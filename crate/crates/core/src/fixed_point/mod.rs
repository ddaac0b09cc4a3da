//! Approximate zeros on `[0, 1]`, the price maps `g_r`, and a simplicial
//! search for approximate Kakutani fixed points on the price polytope.

mod gr;
mod ivt;
mod kakutani;
mod triangulate;

pub use gr::{
    g_r_membership, g_r_select, weak_approximability_check, weak_approximability_check_scaled,
    GrMap, WeakApproxReport,
};
pub use ivt::{approximate_zero, estimate_modulus, ZeroReport, MAX_MODULUS};
pub use kakutani::{
    kakutani_fixed_point, FixedPoint, FnProblem, Label, SearchError, SearchOptions,
    SelectionProblem,
};
pub use triangulate::{affine_dim, barycentric_subdivision, triangulate, Simplex};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedPointError {
    #[error("bracket invalid: f(0) = {f0:.3e}, f(1) = {f1:.3e} at band {band:.3e}")]
    BracketInvalid { f0: f64, f1: f64, band: f64 },
    #[error("no point with |f| <= eps found; best |f| = {best:.3e}")]
    ZeroNotFound { best: f64 },
    #[error("g_r empty at resolution: best net value {best:.6e} <= -r = {neg_r:.6e}")]
    GrEmpty { best: f64, neg_r: f64 },
    #[error("not a price: violates P by {violation:.3e}")]
    NotAPrice { violation: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
