use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::geometry::{PricePolytope, Vector};

/// A geometric simplex given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vector>,
}

impl Simplex {
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    pub fn barycenter(&self) -> Vector {
        let n = self.vertices[0].len();
        self.vertices
            .iter()
            .fold(Vector::zeros(n), |acc, v| acc + v)
            / self.vertices.len() as f64
    }

    /// `Σ w_i v_i`.
    pub fn point(&self, weights: &[f64]) -> Vector {
        let n = self.vertices[0].len();
        self.vertices
            .iter()
            .zip(weights)
            .fold(Vector::zeros(n), |acc, (v, w)| acc + v * *w)
    }
}

/// Affine dimension of a point set.
pub fn affine_dim(points: &[&Vector]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let n = points[0].len();
    let base = points[0];
    let m = DMatrix::from_fn(n, points.len() - 1, |i, j| points[j + 1][i] - base[i]);
    let scale = m.amax().max(1e-300);
    m.svd(false, false)
        .singular_values
        .iter()
        .filter(|s| **s > 1e-9 * scale)
        .count()
}

/// Triangulates `P` by coning from face barycentres, recursively over faces.
///
/// Faces are read off the vertex incidence sets: a facet of a face is the set
/// of its vertices tight at one more generator, provided it has one dimension less.
pub fn triangulate(polytope: &PricePolytope) -> Vec<Simplex> {
    let verts = polytope.vertices();
    let all: Vec<usize> = (0..verts.len()).collect();
    let d = affine_dim(&verts.iter().collect::<Vec<_>>());
    let mut out = Vec::new();
    fan(polytope, &all, d, &mut Vec::new(), &mut out);
    out
}

fn fan(
    polytope: &PricePolytope,
    face: &[usize],
    d: usize,
    apexes: &mut Vec<Vector>,
    out: &mut Vec<Simplex>,
) {
    let verts = polytope.vertices();
    if face.len() == d + 1 {
        let mut vertices: Vec<Vector> = face.iter().map(|&i| verts[i].clone()).collect();
        vertices.extend(apexes.iter().cloned());
        out.push(Simplex { vertices });
        return;
    }
    let inc = polytope.incidence();
    let common: BTreeSet<usize> = face
        .iter()
        .map(|&i| inc[i].iter().copied().collect::<BTreeSet<_>>())
        .reduce(|a, b| &a & &b)
        .unwrap_or_default();
    let mut facets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for j in (0..polytope.cone().generators().len()).filter(|j| !common.contains(j)) {
        let sub: Vec<usize> = face
            .iter()
            .copied()
            .filter(|&i| inc[i].contains(&j))
            .collect();
        if sub.len() >= d
            && affine_dim(&sub.iter().map(|&i| &verts[i]).collect::<Vec<_>>()) + 1 == d
        {
            facets.insert(sub);
        }
    }
    let centre = face
        .iter()
        .fold(Vector::zeros(verts[0].len()), |acc, &i| acc + &verts[i])
        / face.len() as f64;
    apexes.push(centre);
    for f in &facets {
        fan(polytope, f, d - 1, apexes, out);
    }
    apexes.pop();
}

/// The `(d+1)!` simplices of the barycentric subdivision.
pub fn barycentric_subdivision(s: &Simplex) -> Vec<Simplex> {
    let k = s.vertices.len();
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..k).collect();
    permutations(&mut perm, 0, &mut |p| {
        let mut acc = Vector::zeros(s.vertices[0].len());
        let vertices = p
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                acc += &s.vertices[i];
                &acc / (j + 1) as f64
            })
            .collect();
        out.push(Simplex { vertices });
    });
    out
}

fn permutations(p: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        f(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permutations(p, start + 1, f);
        p.swap(start, i);
    }
}
