//! Convex geometry in commodity space.
//!
//! Everything here is a pure function of its inputs. Sets are represented so
//! that membership and distance are computable: boxes, balls and vertex
//! polytopes for consumption sets, generator lists for cones.

mod body;
mod cone;
mod crossing;
mod dd;
mod hull;
mod net;
mod nnls;
mod polytope;

pub use body::{BodyKind, ConvexBody};
pub use cone::{ClippedCone, FiniteCone, PolarCone};
pub use crossing::{boundary_crossing, crossing_modulus, Crossing};
pub use dd::{extreme_rays, ConeRays, DD_TOLERANCE};
pub use hull::{min_norm_point, MinNormPoint};
pub use net::{epsilon_net, epsilon_net_capped, grid_points, intersect_net, DEFAULT_POINT_CAP};
pub use nnls::{nnls, NNLS_TOLERANCE};
pub use polytope::{price_polytope, support_sup, PricePolytope, MAX_ENUMERATION_DIM};

use nalgebra::DVector;
use thiserror::Error;

/// A point or direction in commodity space.
pub type Vector = DVector<f64>;

/// Half-width of the band in which a constraint counts as tight.
pub const BOUNDARY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("projection failed: active set did not settle within {0} iterations")]
    ProjectionFailed(usize),
    #[error("resolution cap exceeded: net would need {needed:.0} points, cap is {cap}")]
    ResolutionCapExceeded { needed: f64, cap: usize },
    #[error("no interior witness")]
    NoInteriorWitness,
    #[error("modulus domain error: {0}")]
    ModulusDomain(String),
    #[error("P unbounded: normalizer is not interior to the cone")]
    Unbounded,
    #[error("dimension {dim} exceeds the vertex enumeration cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("degenerate generator {index}: {reason}")]
    DegenerateGenerator { index: usize, reason: &'static str },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A closed convex set with a computable depth function.
///
/// `depth(x)` is the distance from `x` to the boundary when `x` is inside and
/// some nonpositive number when it is outside. The minimum of two depths is a
/// depth for the intersection, which is what [`Intersection`] relies on.
pub trait ConvexRegion: Sync {
    fn dim(&self) -> usize;

    fn depth(&self, x: &Vector) -> f64;

    fn contains(&self, x: &Vector) -> bool {
        self.depth(x) >= -BOUNDARY_BAND
    }
}

impl<T: ConvexRegion + ?Sized> ConvexRegion for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn depth(&self, x: &Vector) -> f64 {
        (**self).depth(x)
    }
}

/// A bounded convex region that can produce finite ε-approximations of itself.
pub trait TotallyBounded: ConvexRegion {
    /// Largest distance from `x` to a point of the region.
    fn reach_from(&self, x: &Vector) -> f64;

    /// Every returned point lies in the region and every region point is
    /// strictly within `eps` of one of them.
    fn epsilon_net_capped(&self, eps: f64, cap: usize) -> Result<Vec<Vector>, GeometryError>;
}

/// The closed halfspace `{x : normal·x <= offset}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    normal: Vector,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        let norm = normal.norm();
        if !(norm > 0.0) || !norm.is_finite() || !offset.is_finite() {
            return Err(GeometryError::InvalidArgument(
                "halfspace normal must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl ConvexRegion for Halfspace {
    fn dim(&self) -> usize {
        self.normal.len()
    }
    fn depth(&self, x: &Vector) -> f64 {
        self.offset - self.normal.dot(x)
    }
}

/// Intersection of two convex regions.
#[derive(Debug, Clone)]
pub struct Intersection<A, B>(pub A, pub B);

impl<A: ConvexRegion, B: ConvexRegion> ConvexRegion for Intersection<A, B> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn depth(&self, x: &Vector) -> f64 {
        self.0.depth(x).min(self.1.depth(x))
    }
}

pub(crate) fn check_dim(expected: usize, v: &Vector) -> Result<(), GeometryError> {
    if v.len() != expected {
        return Err(GeometryError::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::InvalidArgument(
            "non-finite coordinate".into(),
        ));
    }
    Ok(())
}

/// Lexicographic comparison used for deterministic tie-breaking.
pub fn lex_cmp(a: &Vector, b: &Vector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Removes points closer than `tol` to an earlier point, keeping first occurrences.
pub(crate) fn dedup_points(points: Vec<Vector>, tol: f64) -> Vec<Vector> {
    use std::collections::HashMap;
    let cell = tol.max(1e-15);
    let key = |v: &Vector| -> Vec<i64> { v.iter().map(|c| (c / cell).round() as i64).collect() };
    let mut seen: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut out: Vec<Vector> = Vec::with_capacity(points.len());
    'outer: for p in points {
        let k = key(&p);
        // neighbours in adjacent cells can also be within tol
        let dim = k.len();
        let mut offsets = vec![-1i64; dim];
        loop {
            let probe: Vec<i64> = k.iter().zip(&offsets).map(|(a, b)| a + b).collect();
            if let Some(idx) = seen.get(&probe) {
                if idx.iter().any(|&i| (&out[i] - &p).norm() < tol) {
                    continue 'outer;
                }
            }
            let mut j = 0;
            while j < dim {
                offsets[j] += 1;
                if offsets[j] <= 1 {
                    break;
                }
                offsets[j] = -1;
                j += 1;
            }
            if j == dim {
                break;
            }
        }
        seen.entry(k).or_default().push(out.len());
        out.push(p);
    }
    out
}
