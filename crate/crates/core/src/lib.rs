//! Approximate competitive equilibria for economies with uniformly rotund
//! quadratic preferences and a finitely generated aggregate production cone.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: convex bodies, finitely generated cones and their polars,
//!   nets, the boundary crossing map and the normalised price polytope.
//! * [`preferences`]: quadratic preferences and the net-refined demand function.
//! * [`fixed_point`]: approximate zeros on an interval, the `g_r` price maps and
//!   a simplicial search for approximate Kakutani fixed points.
//! * [`equilibrium`]: economies, hypothesis validation, the solver and an
//!   independent certificate checker.
//!
//! With the default `parallel` feature, net evaluations and vertex labelling
//! run on rayon's global pool. Without it every loop runs sequentially and
//! produces identical results.

pub mod equilibrium;
pub mod fixed_point;
pub mod geometry;
pub mod preferences;
pub mod serde_vec;

mod par;

pub use geometry::Vector;

/// Whether this build evaluates data-parallel loops on the rayon pool.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
