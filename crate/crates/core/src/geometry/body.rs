use super::dd::extreme_rays;
use super::hull::project_onto_hull;
use super::net::projected_grid_net;
use super::{check_dim, ConvexRegion, GeometryError, TotallyBounded, Vector};

/// Shape data of a [`ConvexBody`].
#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    Box {
        lo: Vector,
        hi: Vector,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
    /// Convex hull of `vertices`; `facets` holds unit normals `a` and offsets
    /// `c` with the hull equal to `{x : a·x <= c}`.
    VPolytope {
        vertices: Vec<Vector>,
        facets: Vec<(Vector, f64)>,
    },
}

/// A compact convex set with a certified interior ball.
///
/// `ball(interior_point, inner_radius)` lies inside the body and the body lies
/// inside `ball(0, outer_radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    kind: BodyKind,
    interior_point: Vector,
    inner_radius: f64,
    outer_radius: f64,
}

impl ConvexBody {
    pub fn new_box(lo: Vector, hi: Vector) -> Result<Self, GeometryError> {
        let n = lo.len();
        check_dim(n, &hi)?;
        check_dim(n, &lo)?;
        if n == 0 || lo.iter().zip(hi.iter()).any(|(a, b)| !(a < b)) {
            return Err(GeometryError::InvalidBody(
                "box needs lo < hi in every coordinate".into(),
            ));
        }
        let interior_point = (&lo + &hi) * 0.5;
        let inner_radius = (&hi - &lo)
            .iter()
            .fold(f64::INFINITY, |m, w| m.min(w * 0.5));
        let far = Vector::from_fn(n, |i, _| lo[i].abs().max(hi[i].abs()));
        Ok(Self {
            outer_radius: far.norm(),
            kind: BodyKind::Box { lo, hi },
            interior_point,
            inner_radius,
        })
    }

    pub fn new_ball(center: Vector, radius: f64) -> Result<Self, GeometryError> {
        check_dim(center.len(), &center)?;
        if center.is_empty() || !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidBody(
                "ball needs a positive finite radius".into(),
            ));
        }
        Ok(Self {
            outer_radius: center.norm() + radius,
            interior_point: center.clone(),
            inner_radius: radius,
            kind: BodyKind::Ball { center, radius },
        })
    }

    /// Convex hull of `vertices`, which must affinely span the space.
    /// Points that are not extreme are kept; they do not affect the hull.
    pub fn new_vpolytope(vertices: Vec<Vector>) -> Result<Self, GeometryError> {
        let n = vertices.first().map(|v| v.len()).unwrap_or(0);
        if n == 0 || vertices.len() < n + 1 {
            return Err(GeometryError::InvalidBody(
                "vpolytope needs at least dim+1 vertices".into(),
            ));
        }
        for v in &vertices {
            check_dim(n, v)?;
        }
        // facets are the extreme rays of {(a, b) : a·v + b <= 0 for all v}
        let rows: Vec<Vector> = vertices
            .iter()
            .map(|v| Vector::from_fn(n + 1, |i, _| if i < n { v[i] } else { 1.0 }))
            .collect();
        let cr = extreme_rays(&rows, n + 1);
        if !cr.is_pointed() {
            return Err(GeometryError::InvalidBody(
                "vpolytope vertices do not affinely span".into(),
            ));
        }
        let facets: Vec<(Vector, f64)> = cr
            .rays
            .iter()
            .filter_map(|r| {
                let a = r.rows(0, n).into_owned();
                let norm = a.norm();
                (norm > 1e-9).then(|| (a / norm, -r[n] / norm))
            })
            .collect();
        let centroid =
            vertices.iter().fold(Vector::zeros(n), |acc, v| acc + v) / vertices.len() as f64;
        let inner_radius = facets
            .iter()
            .map(|(a, c)| c - a.dot(&centroid))
            .fold(f64::INFINITY, f64::min);
        if !(inner_radius > 0.0) || facets.is_empty() {
            return Err(GeometryError::InvalidBody(
                "vpolytope has empty interior".into(),
            ));
        }
        let outer_radius = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Self {
            kind: BodyKind::VPolytope { vertices, facets },
            interior_point: centroid,
            inner_radius,
            outer_radius,
        })
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn interior_point(&self) -> &Vector {
        &self.interior_point
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Vector, Vector) {
        match &self.kind {
            BodyKind::Box { lo, hi } => (lo.clone(), hi.clone()),
            BodyKind::Ball { center, radius } => {
                (center.add_scalar(-radius), center.add_scalar(*radius))
            }
            BodyKind::VPolytope { vertices, .. } => {
                let n = vertices[0].len();
                let lo = Vector::from_fn(n, |i, _| {
                    vertices.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)
                });
                let hi = Vector::from_fn(n, |i, _| {
                    vertices
                        .iter()
                        .map(|v| v[i])
                        .fold(f64::NEG_INFINITY, f64::max)
                });
                (lo, hi)
            }
        }
    }

    /// Nearest point of the body.
    pub fn project(&self, x: &Vector) -> Vector {
        match &self.kind {
            BodyKind::Box { lo, hi } => Vector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i])),
            BodyKind::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center + d * (radius / n)
                }
            }
            BodyKind::VPolytope { vertices, facets } => {
                if facets.iter().all(|(a, c)| a.dot(x) <= *c) {
                    x.clone()
                } else {
                    project_onto_hull(vertices, x)
                }
            }
        }
    }

    pub fn distance(&self, x: &Vector) -> f64 {
        (x - self.project(x)).norm()
    }

    /// Minimiser of the linear functional `p·x` over the body.
    pub fn argmin_linear(&self, p: &Vector) -> Vector {
        match &self.kind {
            BodyKind::Box { lo, hi } => {
                Vector::from_fn(p.len(), |i, _| if p[i] > 0.0 { lo[i] } else { hi[i] })
            }
            BodyKind::Ball { center, radius } => {
                let n = p.norm();
                if n > 0.0 {
                    center - p * (radius / n)
                } else {
                    center.clone()
                }
            }
            BodyKind::VPolytope { vertices, .. } => vertices
                .iter()
                .min_by(|a, b| {
                    p.dot(a)
                        .total_cmp(&p.dot(b))
                        .then_with(|| super::lex_cmp(a, b))
                })
                .cloned()
                .unwrap(),
        }
    }
}

impl ConvexRegion for ConvexBody {
    fn dim(&self) -> usize {
        self.interior_point.len()
    }

    fn depth(&self, x: &Vector) -> f64 {
        match &self.kind {
            BodyKind::Box { lo, hi } => (0..x.len())
                .map(|i| (x[i] - lo[i]).min(hi[i] - x[i]))
                .fold(f64::INFINITY, f64::min),
            BodyKind::Ball { center, radius } => radius - (x - center).norm(),
            BodyKind::VPolytope { facets, .. } => facets
                .iter()
                .map(|(a, c)| c - a.dot(x))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

impl TotallyBounded for ConvexBody {
    fn reach_from(&self, x: &Vector) -> f64 {
        match &self.kind {
            BodyKind::Box { lo, hi } => Vector::from_fn(x.len(), |i, _| {
                (x[i] - lo[i]).abs().max((hi[i] - x[i]).abs())
            })
            .norm(),
            BodyKind::Ball { center, radius } => (x - center).norm() + radius,
            BodyKind::VPolytope { vertices, .. } => {
                vertices.iter().map(|v| (v - x).norm()).fold(0.0, f64::max)
            }
        }
    }

    fn epsilon_net_capped(&self, eps: f64, cap: usize) -> Result<Vec<Vector>, GeometryError> {
        if !(eps > 0.0) {
            return Err(GeometryError::InvalidArgument(
                "eps must be positive".into(),
            ));
        }
        if self.reach_from(&self.interior_point) < eps {
            return Ok(vec![self.interior_point.clone()]);
        }
        let (lo, hi) = self.bounding_box();
        let exact_grid = matches!(self.kind, BodyKind::Box { .. });
        projected_grid_net(&lo, &hi, eps, cap, |g| {
            if exact_grid {
                Some(g.clone())
            } else {
                Some(self.project(g))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn box_radii() {
        let b = ConvexBody::new_box(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(b.inner_radius(), 1.0);
        assert!((b.outer_radius() - 2f64.sqrt()).abs() < 1e-15);
        assert!(b.contains(&v(&[1.0, -1.0])));
        assert!(!b.contains(&v(&[1.0 + 1e-6, 0.0])));
        assert!(ConvexBody::new_box(v(&[0.0]), v(&[0.0])).is_err());
    }

    #[test]
    fn vpolytope_facets_of_triangle() {
        let t = ConvexBody::new_vpolytope(vec![v(&[0.0, 0.0]), v(&[2.0, 0.0]), v(&[0.0, 2.0])])
            .unwrap();
        let BodyKind::VPolytope { facets, .. } = t.kind() else {
            panic!()
        };
        assert_eq!(facets.len(), 3);
        assert!(t.contains(&v(&[1.0, 1.0])));
        assert!(!t.contains(&v(&[1.1, 1.0])));
        let centroid = v(&[2.0 / 3.0, 2.0 / 3.0]);
        assert!((t.interior_point() - centroid).norm() < 1e-12);
        assert!((t.inner_radius() - (2.0 - 4.0 / 3.0) / 2f64.sqrt()).abs() < 1e-12);
        assert!((t.project(&v(&[2.0, 2.0])) - v(&[1.0, 1.0])).norm() < 1e-10);
    }

    #[test]
    fn vpolytope_rejects_flat_input() {
        assert!(
            ConvexBody::new_vpolytope(vec![v(&[0.0, 0.0]), v(&[1.0, 1.0]), v(&[2.0, 2.0])])
                .is_err()
        );
    }

    #[test]
    fn ball_projection_and_argmin() {
        let b = ConvexBody::new_ball(v(&[1.0, 0.0]), 0.5).unwrap();
        assert!((b.project(&v(&[3.0, 0.0])) - v(&[1.5, 0.0])).norm() < 1e-15);
        assert!((b.argmin_linear(&v(&[1.0, 0.0])) - v(&[0.5, 0.0])).norm() < 1e-15);
        assert!((b.distance(&v(&[1.0, 2.0])) - 1.5).abs() < 1e-15);
    }
}
