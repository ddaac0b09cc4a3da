use std::sync::OnceLock;

use super::dd::{extreme_rays, ConeRays};
use super::net::projected_grid_net;
use super::nnls::nnls;
use super::polytope::MAX_ENUMERATION_DIM;
use super::{check_dim, ConvexRegion, GeometryError, TotallyBounded, Vector};

/// The closed convex cone generated by finitely many nonzero vectors.
#[derive(Debug, Clone)]
pub struct FiniteCone {
    generators: Vec<Vector>,
    // unit normals d with cone = {x : d·x <= 0}; None when the cone is not
    // full-dimensional or the dimension is above the enumeration cap
    facets: OnceLock<Option<Vec<Vector>>>,
}

impl PartialEq for FiniteCone {
    fn eq(&self, other: &Self) -> bool {
        self.generators == other.generators
    }
}

impl FiniteCone {
    /// Rejects empty lists, zero vectors, mixed dimensions and duplicate directions.
    pub fn new(generators: Vec<Vector>) -> Result<Self, GeometryError> {
        let Some(first) = generators.first() else {
            return Err(GeometryError::InvalidArgument(
                "a cone needs at least one generator".into(),
            ));
        };
        let n = first.len();
        if n == 0 {
            return Err(GeometryError::InvalidArgument(
                "zero-dimensional generator".into(),
            ));
        }
        for (i, g) in generators.iter().enumerate() {
            check_dim(n, g)?;
            if g.norm() <= 1e-12 {
                return Err(GeometryError::DegenerateGenerator {
                    index: i,
                    reason: "zero vector",
                });
            }
            let gu = g / g.norm();
            if generators[..i]
                .iter()
                .any(|h| (h / h.norm() - &gu).norm() < 1e-9)
            {
                return Err(GeometryError::DegenerateGenerator {
                    index: i,
                    reason: "duplicate direction",
                });
            }
        }
        Ok(Self {
            generators,
            facets: OnceLock::new(),
        })
    }

    pub fn generators(&self) -> &[Vector] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators[0].len()
    }

    /// Nonnegative coefficients of the nearest cone point.
    pub fn coefficients(&self, x: &Vector) -> Result<Vector, GeometryError> {
        check_dim(self.dim(), x)?;
        nnls(&self.generators, x)
    }

    /// Nearest point of the cone to `x`.
    pub fn project(&self, x: &Vector) -> Result<Vector, GeometryError> {
        let lambda = self.coefficients(x)?;
        let mut y = Vector::zeros(self.dim());
        for (g, l) in self.generators.iter().zip(lambda.iter()) {
            y += g * *l;
        }
        Ok(y)
    }

    pub fn distance(&self, x: &Vector) -> Result<f64, GeometryError> {
        Ok((x - self.project(x)?).norm())
    }

    pub fn polar(&self) -> PolarCone {
        PolarCone {
            normals: self.generators.clone(),
        }
    }

    /// Unit facet normals when the cone is full-dimensional (its polar is pointed).
    pub fn facet_normals(&self) -> Option<&[Vector]> {
        self.facets
            .get_or_init(|| {
                if self.dim() > MAX_ENUMERATION_DIM + 2 {
                    return None;
                }
                let cr = extreme_rays(&self.generators, self.dim());
                cr.is_pointed().then_some(cr.rays)
            })
            .as_deref()
    }

    /// Same cone with every generator multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self, GeometryError> {
        if !(factor > 0.0) {
            return Err(GeometryError::InvalidArgument(
                "scale factor must be positive".into(),
            ));
        }
        Self::new(self.generators.iter().map(|g| g * factor).collect())
    }
}

impl ConvexRegion for FiniteCone {
    fn dim(&self) -> usize {
        FiniteCone::dim(self)
    }

    fn depth(&self, x: &Vector) -> f64 {
        if let Some(facets) = self.facet_normals() {
            return facets
                .iter()
                .map(|d| -d.dot(x))
                .fold(f64::INFINITY, f64::min);
        }
        match self.distance(x) {
            Ok(d) if d > super::BOUNDARY_BAND => -d,
            Ok(_) => 0.0,
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// H-representation of the polar cone: `p` is a member iff `p·g_j <= 0` for every generator.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCone {
    normals: Vec<Vector>,
}

impl PolarCone {
    pub fn inequality_normals(&self) -> &[Vector] {
        &self.normals
    }

    /// `max_j p·g_j/‖g_j‖ <= tol`.
    pub fn contains(&self, p: &Vector, tol: f64) -> bool {
        self.max_violation(p) <= tol
    }

    pub fn max_violation(&self, p: &Vector) -> f64 {
        self.normals
            .iter()
            .map(|g| p.dot(g) / g.norm())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Extreme rays and lineality of the polar, by double description.
    pub fn extreme_rays(&self) -> ConeRays {
        let dim = self.normals[0].len();
        extreme_rays(&self.normals, dim)
    }
}

/// A cone intersected with the closed ball `ball(0, radius)`.
#[derive(Debug, Clone)]
pub struct ClippedCone {
    pub cone: FiniteCone,
    pub radius: f64,
}

impl ClippedCone {
    pub fn new(cone: FiniteCone, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidArgument(
                "clip radius must be positive".into(),
            ));
        }
        Ok(Self { cone, radius })
    }

    /// Nearest point: the cone projection pulled radially into the ball.
    pub fn project(&self, x: &Vector) -> Result<Vector, GeometryError> {
        let y = self.cone.project(x)?;
        let n = y.norm();
        Ok(if n > self.radius {
            y * (self.radius / n)
        } else {
            y
        })
    }
}

impl ConvexRegion for ClippedCone {
    fn dim(&self) -> usize {
        self.cone.dim()
    }

    fn depth(&self, x: &Vector) -> f64 {
        self.cone.depth(x).min(self.radius - x.norm())
    }
}

impl TotallyBounded for ClippedCone {
    fn reach_from(&self, x: &Vector) -> f64 {
        x.norm() + self.radius
    }

    fn epsilon_net_capped(&self, eps: f64, cap: usize) -> Result<Vec<Vector>, GeometryError> {
        if !(eps > 0.0) {
            return Err(GeometryError::InvalidArgument(
                "eps must be positive".into(),
            ));
        }
        let n = self.dim();
        let lo = Vector::from_element(n, -self.radius);
        let hi = Vector::from_element(n, self.radius);
        projected_grid_net(&lo, &hi, eps, cap, |g| self.project(g).ok())
    }
}
