use nalgebra::{DMatrix, DVector};

use super::Vector;

/// Nearest point to the origin in the convex hull of a finite point set.
#[derive(Debug, Clone)]
pub struct MinNormPoint {
    pub point: Vector,
    /// Convex weights over the input points; `point = Σ weights[i]·points[i]`.
    pub weights: Vec<f64>,
}

/// Wolfe's algorithm for the minimum-norm point of `conv(points)`.
///
/// Panics on an empty input.
pub fn min_norm_point(points: &[Vector]) -> MinNormPoint {
    assert!(!points.is_empty(), "min_norm_point of an empty set");
    let n = points.len();
    let scale = points
        .iter()
        .map(|p| p.norm_squared())
        .fold(0.0, f64::max)
        .max(1e-300);
    let z1 = 1e-12;
    let z2 = 1e-10;

    let first = (0..n)
        .min_by(|&i, &j| {
            points[i]
                .norm_squared()
                .total_cmp(&points[j].norm_squared())
        })
        .unwrap();
    let mut corral: Vec<usize> = vec![first];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = points[first].clone();

    for _major in 0..(50 * n + 50) {
        let (j, val) = (0..n)
            .map(|i| (i, x.dot(&points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if val > x.norm_squared() - z1 * scale || corral.contains(&j) {
            break;
        }
        corral.push(j);
        lambda.push(0.0);

        for _minor in 0..(10 * n + 10) {
            let mu = affine_min_norm(points, &corral);
            if mu.iter().all(|&m| m > z2) {
                lambda = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in lambda.iter().zip(&mu) {
                if *m <= z2 {
                    let d = l - m;
                    if d > 0.0 {
                        theta = theta.min(l / d);
                    }
                }
            }
            for (l, m) in lambda.iter_mut().zip(&mu) {
                *l = theta * m + (1.0 - theta) * *l;
            }
            let mut keep_c = Vec::with_capacity(corral.len());
            let mut keep_l = Vec::with_capacity(corral.len());
            for (c, l) in corral.iter().zip(&lambda) {
                if *l > z2 {
                    keep_c.push(*c);
                    keep_l.push(*l);
                }
            }
            if keep_c.is_empty() {
                // numerical collapse: restart from the best single point
                keep_c.push(corral[0]);
                keep_l.push(1.0);
            }
            let total: f64 = keep_l.iter().sum();
            corral = keep_c;
            lambda = keep_l.into_iter().map(|l| l / total).collect();
        }
        x = combine(points, &corral, &lambda);
    }

    let mut weights = vec![0.0; n];
    for (c, l) in corral.iter().zip(&lambda) {
        weights[*c] += *l;
    }
    MinNormPoint { point: x, weights }
}

fn combine(points: &[Vector], idx: &[usize], w: &[f64]) -> Vector {
    let mut x = Vector::zeros(points[0].len());
    for (i, l) in idx.iter().zip(w) {
        x += &points[*i] * *l;
    }
    x
}

// min ‖Σ μ_i p_i‖ subject to Σ μ_i = 1, through the KKT system
fn affine_min_norm(points: &[Vector], idx: &[usize]) -> Vec<f64> {
    let k = idx.len();
    let mut m = DMatrix::<f64>::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = points[idx[a]].dot(&points[idx[b]]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|c| c.is_finite()))
        .unwrap_or_else(|| {
            m.svd(true, true)
                .solve(&rhs, 1e-14)
                .unwrap_or_else(|_| rhs.clone())
        });
    let mu: Vec<f64> = (0..k).map(|i| sol[i]).collect();
    let total: f64 = mu.iter().sum();
    if total.abs() > 1e-300 {
        mu.into_iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / k as f64; k]
    }
}

/// Euclidean projection of `x` onto `conv(vertices)`.
pub(crate) fn project_onto_hull(vertices: &[Vector], x: &Vector) -> Vector {
    let shifted: Vec<Vector> = vertices.iter().map(|v| v - x).collect();
    let mn = min_norm_point(&shifted);
    x + mn.point
}
