//! Double description: extreme rays of `{z : a_i·z <= 0}`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::Vector;

/// Floating-point tolerance for zero tests on normalised rows and rays.
pub const DD_TOLERANCE: f64 = 1e-9;

/// V-description of a polyhedral cone: `cone(rays) + span(lineality)`.
#[derive(Debug, Clone, Default)]
pub struct ConeRays {
    /// Unit extreme rays of the pointed part.
    pub rays: Vec<Vector>,
    /// Orthonormal basis of the lineality space.
    pub lineality: Vec<Vector>,
}

impl ConeRays {
    pub fn is_pointed(&self) -> bool {
        self.lineality.is_empty()
    }

    /// Membership in the cone these rays generate, via the inequalities of
    /// its polar: `x·d <= tol` on the rays and `|x·l| <= tol` on the lineality.
    /// This is the polar of the cone described by `self`, not the cone itself.
    pub fn polar_contains(&self, x: &Vector, tol: f64) -> bool {
        self.rays.iter().all(|d| x.dot(d) <= tol)
            && self.lineality.iter().all(|l| x.dot(l).abs() <= tol)
    }
}

struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
    fn clone_bits(&self) -> Bits {
        Bits(self.0.clone())
    }
}

/// Extreme rays and lineality space of the cone `{z ∈ R^dim : row·z <= 0 for every row}`.
pub fn extreme_rays(rows: &[Vector], dim: usize) -> ConeRays {
    let tol = DD_TOLERANCE;
    let mut normalized: Vec<Vector> = rows
        .iter()
        .filter_map(|r| {
            let n = r.norm();
            (n > tol).then(|| r / n)
        })
        .collect();

    let lineality = null_space(&normalized, dim);
    if lineality.len() == dim {
        return ConeRays {
            rays: Vec::new(),
            lineality,
        };
    }
    for l in &lineality {
        normalized.push(l.clone());
        normalized.push(-l);
    }
    let m = normalized.len();

    // initial simplicial cone from dim independent rows
    let mut basis_rows: Vec<usize> = Vec::with_capacity(dim);
    let mut ortho: Vec<Vector> = Vec::with_capacity(dim);
    for (i, r) in normalized.iter().enumerate() {
        let mut res = r.clone();
        for q in &ortho {
            res -= q * q.dot(&res);
        }
        let n = res.norm();
        if n > 1e-7 {
            ortho.push(res / n);
            basis_rows.push(i);
            if basis_rows.len() == dim {
                break;
            }
        }
    }
    debug_assert_eq!(basis_rows.len(), dim, "lineality removal leaves full rank");
    let b = DMatrix::from_fn(dim, dim, |i, j| normalized[basis_rows[i]][j]);
    let inv = match b.try_inverse() {
        Some(inv) => inv,
        None => {
            return ConeRays {
                rays: Vec::new(),
                lineality,
            }
        }
    };

    let mut rays: Vec<Vector> = Vec::new();
    let mut active: Vec<Bits> = Vec::new();
    for i in 0..dim {
        let r: Vector = -inv.column(i).into_owned();
        let r = &r / r.norm();
        let mut z = Bits::new(m);
        for (pos, &row) in basis_rows.iter().enumerate() {
            if pos != i {
                z.set(row);
            }
        }
        rays.push(r);
        active.push(z);
    }

    for (a_idx, a) in normalized.iter().enumerate() {
        if basis_rows.contains(&a_idx) {
            continue;
        }
        let vals: Vec<f64> = rays.iter().map(|r| a.dot(r)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] > tol).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] < -tol).collect();
        if pos.is_empty() {
            for (i, z) in active.iter_mut().enumerate() {
                if vals[i].abs() <= tol {
                    z.set(a_idx);
                }
            }
            continue;
        }

        let mut new_rays: Vec<Vector> = Vec::new();
        let mut new_active: Vec<Bits> = Vec::new();
        for &i in &pos {
            for &j in &neg {
                let common = active[i].and(&active[j]);
                if common.count() + 2 < dim {
                    continue;
                }
                let adjacent = (0..rays.len())
                    .filter(|&k| k != i && k != j)
                    .all(|k| !common.subset_of(&active[k]));
                if !adjacent {
                    continue;
                }
                let r = &rays[j] * vals[i] - &rays[i] * vals[j];
                let n = r.norm();
                if n <= tol {
                    continue;
                }
                let mut z = common;
                z.set(a_idx);
                new_rays.push(r / n);
                new_active.push(z);
            }
        }

        let mut kept_rays = Vec::with_capacity(rays.len() + new_rays.len());
        let mut kept_active = Vec::with_capacity(rays.len() + new_rays.len());
        for (i, r) in rays.into_iter().enumerate() {
            if vals[i] <= tol {
                let mut z = active[i].clone_bits();
                if vals[i].abs() <= tol {
                    z.set(a_idx);
                }
                kept_rays.push(r);
                kept_active.push(z);
            }
        }
        kept_rays.extend(new_rays);
        kept_active.extend(new_active);
        rays = kept_rays;
        active = kept_active;
    }

    let mut unique: Vec<Vector> = Vec::with_capacity(rays.len());
    for r in rays {
        if !unique.iter().any(|u| (u - &r).norm() < 1e-7) {
            unique.push(r);
        }
    }
    unique.sort_by(super::lex_cmp);
    ConeRays {
        rays: unique,
        lineality,
    }
}

fn null_space(rows: &[Vector], dim: usize) -> Vec<Vector> {
    if rows.is_empty() {
        return (0..dim)
            .map(|i| Vector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
    }
    let gram = DMatrix::from_fn(dim, dim, |i, j| {
        rows.iter().map(|r| r[i] * r[j]).sum::<f64>()
    });
    let eig = SymmetricEigen::new(gram);
    let threshold = 1e-14 * rows.len().max(1) as f64;
    let mut basis: Vec<Vector> = (0..dim)
        .filter(|&i| eig.eigenvalues[i].abs() <= threshold)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    basis.sort_by(super::lex_cmp);
    basis
}
