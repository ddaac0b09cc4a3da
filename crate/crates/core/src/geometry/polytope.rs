use super::cone::FiniteCone;
use super::hull::project_onto_hull;
use super::net::grid_points;
use super::{check_dim, dedup_points, lex_cmp, GeometryError, Vector};
use crate::par;

/// Largest commodity dimension for which vertex enumeration is attempted.
pub const MAX_ENUMERATION_DIM: usize = 6;

const TOL: f64 = 1e-9;

/// The normalised price set `{p ∈ Y° : p·ξ̄ = −1}` in vertex form.
#[derive(Debug, Clone)]
pub struct PricePolytope {
    vertices: Vec<Vector>,
    normalizer: Vector,
    cone: FiniteCone,
    norm_bound: f64,
    m_const: f64,
    // indices of the generators g_j with v·g_j = 0, per vertex
    incidence: Vec<Vec<usize>>,
}

/// Enumerates `P = {p : p·g_j <= 0 for all j, p·ξ̄ = −1}`.
///
/// The vertices are the extreme rays `d` of the polar cone rescaled to
/// `d/(−d·ξ̄)`. A ray with `d·ξ̄ >= 0` or a polar lineality space means the
/// slice is unbounded, which happens exactly when `ξ̄` is not interior to the cone.
pub fn price_polytope(cone: &FiniteCone, xi_bar: &Vector) -> Result<PricePolytope, GeometryError> {
    let n = cone.dim();
    check_dim(n, xi_bar)?;
    if n > MAX_ENUMERATION_DIM {
        return Err(GeometryError::DimensionCap {
            dim: n,
            cap: MAX_ENUMERATION_DIM,
        });
    }
    let rays = cone.polar().extreme_rays();
    if !rays.is_pointed() || rays.rays.is_empty() {
        return Err(GeometryError::Unbounded);
    }
    let mut m_const = f64::NEG_INFINITY;
    let mut vertices = Vec::with_capacity(rays.rays.len());
    for d in &rays.rays {
        let s = d.dot(xi_bar);
        if s >= -TOL {
            return Err(GeometryError::Unbounded);
        }
        m_const = m_const.max(s);
        vertices.push(d / (-s));
    }
    vertices.sort_by(lex_cmp);
    let incidence = vertices
        .iter()
        .map(|v| {
            let scale = v.norm().max(1.0);
            cone.generators()
                .iter()
                .enumerate()
                .filter(|(_, g)| (v.dot(g) / g.norm()).abs() <= TOL * scale)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    Ok(PricePolytope {
        vertices,
        normalizer: xi_bar.clone(),
        cone: cone.clone(),
        norm_bound: -1.0 / m_const,
        m_const,
        incidence,
    })
}

/// `max p·y` over `P`, attained at a vertex.
pub fn support_sup(polytope: &PricePolytope, y: &Vector) -> f64 {
    polytope
        .vertices
        .iter()
        .map(|v| v.dot(y))
        .fold(f64::NEG_INFINITY, f64::max)
}

impl PricePolytope {
    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn normalizer(&self) -> &Vector {
        &self.normalizer
    }

    pub fn cone(&self) -> &FiniteCone {
        &self.cone
    }

    pub fn dim(&self) -> usize {
        self.normalizer.len()
    }

    /// `−1/M` where `M` is the largest `d·ξ̄` over unit polar rays.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// `M = max{p·ξ̄ : p ∈ Y°, ‖p‖ = 1}`, negative.
    pub fn m_const(&self) -> f64 {
        self.m_const
    }

    pub fn max_vertex_norm(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Generators tight at each vertex, in vertex order.
    pub fn incidence(&self) -> &[Vec<usize>] {
        &self.incidence
    }

    pub fn centroid(&self) -> Vector {
        let n = self.dim();
        self.vertices
            .iter()
            .fold(Vector::zeros(n), |acc, v| acc + v)
            / self.vertices.len() as f64
    }

    /// Membership with absolute tolerance on both the polar inequalities and
    /// the normalisation.
    pub fn contains(&self, p: &Vector, tol: f64) -> bool {
        p.len() == self.dim()
            && self.cone.polar().contains(p, tol)
            && (p.dot(&self.normalizer) + 1.0).abs() <= tol
    }

    /// Nearest point of `P`.
    pub fn project(&self, p: &Vector) -> Vector {
        project_onto_hull(&self.vertices, p)
    }

    /// Orthonormal basis of the hyperplane `ξ̄⊥`.
    fn hyperplane_basis(&self) -> Vec<Vector> {
        let n = self.dim();
        let u = &self.normalizer / self.normalizer.norm();
        let mut basis: Vec<Vector> = Vec::with_capacity(n - 1);
        for i in 0..n {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            e -= &u * u[i];
            for b in &basis {
                e -= b * b.dot(&e);
            }
            let norm = e.norm();
            if norm > 1e-6 {
                basis.push(e / norm);
            }
            if basis.len() == n - 1 {
                break;
            }
        }
        basis
    }

    /// An ε-net of `P`: a grid in the normalisation hyperplane pushed onto `P`,
    /// plus the vertices.
    pub fn epsilon_net(&self, eps: f64, cap: usize) -> Result<Vec<Vector>, GeometryError> {
        if !(eps > 0.0) {
            return Err(GeometryError::InvalidArgument(
                "eps must be positive".into(),
            ));
        }
        if self.dim() < 2 || self.vertices.len() == 1 {
            return Ok(self.vertices.clone());
        }
        let basis = self.hyperplane_basis();
        let origin = &self.normalizer * (-1.0 / self.normalizer.norm_squared());
        let coords: Vec<Vector> = self
            .vertices
            .iter()
            .map(|v| {
                Vector::from_iterator(basis.len(), basis.iter().map(|b| b.dot(&(v - &origin))))
            })
            .collect();
        let k = basis.len();
        let lo = Vector::from_fn(k, |i, _| {
            coords.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min)
        });
        let hi = Vector::from_fn(k, |i, _| {
            coords
                .iter()
                .map(|c| c[i])
                .fold(f64::NEG_INFINITY, f64::max)
        });
        let grid = grid_points(&lo, &hi, eps, cap)?;
        let lifted = par::map(&grid, |c| {
            let mut x = origin.clone();
            for (b, ci) in basis.iter().zip(c.iter()) {
                x += b * *ci;
            }
            let y = self.project(&x);
            // drop grid points that are far from P; they cover nothing
            ((&y - &x).norm() <= eps).then_some(y)
        });
        let mut net = self.vertices.clone();
        net.extend(lifted.into_iter().flatten());
        Ok(dedup_points(net, eps * 1e-9))
    }
}
