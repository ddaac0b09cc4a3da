use super::body::ConvexBody;
use super::crossing::boundary_crossing;
use super::{
    check_dim, dedup_points, ConvexRegion, GeometryError, Intersection, TotallyBounded, Vector,
};
use crate::par;

/// Default bound on the number of points a single net may hold.
pub const DEFAULT_POINT_CAP: usize = 1_000_000;

/// An ε-net of `body` with at most [`DEFAULT_POINT_CAP`] points.
pub fn epsilon_net<T: TotallyBounded + ?Sized>(
    body: &T,
    eps: f64,
) -> Result<Vec<Vector>, GeometryError> {
    body.epsilon_net_capped(eps, DEFAULT_POINT_CAP)
}

/// An ε-net of `body` with at most `cap` points.
pub fn epsilon_net_capped<T: TotallyBounded + ?Sized>(
    body: &T,
    eps: f64,
    cap: usize,
) -> Result<Vec<Vector>, GeometryError> {
    body.epsilon_net_capped(eps, cap)
}

/// Intervals per axis so that every point of the box is strictly within
/// `eps` of a grid vertex.
fn intervals(lo: &Vector, hi: &Vector, eps: f64) -> Vec<usize> {
    let root_n = (lo.len() as f64).sqrt();
    lo.iter()
        .zip(hi.iter())
        .map(|(a, b)| ((b - a).max(0.0) * root_n / (2.0 * eps)).floor() as usize + 1)
        .collect()
}

/// Rectangular grid over `[lo, hi]` whose vertices cover the box at radius `eps`.
pub fn grid_points(
    lo: &Vector,
    hi: &Vector,
    eps: f64,
    cap: usize,
) -> Result<Vec<Vector>, GeometryError> {
    check_dim(lo.len(), hi)?;
    if !(eps > 0.0) {
        return Err(GeometryError::InvalidArgument(
            "eps must be positive".into(),
        ));
    }
    let n = intervals(lo, hi, eps);
    let needed: f64 = n.iter().map(|k| (k + 1) as f64).product();
    if needed > cap as f64 {
        return Err(GeometryError::ResolutionCapExceeded { needed, cap });
    }
    let total = needed as usize;
    let dim = lo.len();
    Ok(par::map_range(total, |mut idx| {
        Vector::from_fn(dim, |i, _| {
            let k = idx % (n[i] + 1);
            idx /= n[i] + 1;
            if k == n[i] {
                hi[i]
            } else {
                lo[i] + (hi[i] - lo[i]) * k as f64 / n[i] as f64
            }
        })
    }))
}

/// Half-diagonal of one grid cell.
fn covering_radius(lo: &Vector, hi: &Vector, eps: f64) -> f64 {
    let n = intervals(lo, hi, eps);
    lo.iter()
        .zip(hi.iter())
        .zip(&n)
        .map(|((a, b), k)| ((b - a) / (2.0 * *k as f64)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Grid over the bounding box pushed into a convex set by a nonexpansive
/// `project`. Grid points farther than one cell radius from their image
/// are nobody's nearest vertex and are dropped.
pub(crate) fn projected_grid_net<F>(
    lo: &Vector,
    hi: &Vector,
    eps: f64,
    cap: usize,
    project: F,
) -> Result<Vec<Vector>, GeometryError>
where
    F: Fn(&Vector) -> Option<Vector> + Sync + Send,
{
    let grid = grid_points(lo, hi, eps, cap)?;
    let radius = covering_radius(lo, hi, eps);
    let mapped = par::map(&grid, |g| {
        project(g).filter(|y| (y - g).norm() <= radius * (1.0 + 1e-12))
    });
    let kept: Vec<Vector> = mapped.into_iter().flatten().collect();
    Ok(dedup_points(kept, eps * 1e-9))
}

enum Step {
    Keep(Vector),
    Drop,
    Refine,
}

/// A finite ε-approximation of `X ∩ Y` built from a net of `Y` alone.
///
/// Points of a fine net of `Y` that lie in `X` are kept, points just outside
/// `X` are pulled onto its boundary along the segment toward `xi`, and the
/// rest are dropped. The net is refined until every pulled point moved less
/// than the coverage slack, which the crossing map's uniform continuity
/// guarantees eventually.
pub fn intersect_net<Y: TotallyBounded + ?Sized>(
    x: &ConvexBody,
    y: &Y,
    eps: f64,
    xi: &Vector,
) -> Result<Vec<Vector>, GeometryError> {
    if !(eps > 0.0) {
        return Err(GeometryError::InvalidArgument(
            "eps must be positive".into(),
        ));
    }
    check_dim(x.dim(), xi)?;
    let both = Intersection(x, y);
    if !(both.depth(xi) > super::BOUNDARY_BAND) {
        return Err(GeometryError::NoInteriorWitness);
    }
    let mut delta = eps / 2.0;
    loop {
        let net = y.epsilon_net_capped(delta / 2.0, DEFAULT_POINT_CAP)?;
        let slack = eps - delta / 2.0;
        let mapped = par::map(&net, |p| -> Result<Step, GeometryError> {
            if x.contains(p) {
                return Ok(Step::Keep(p.clone()));
            }
            if x.distance(p) >= 0.75 * delta {
                return Ok(Step::Drop);
            }
            let h = boundary_crossing(x, xi, p)?;
            Ok(if (&h.point - p).norm() < slack {
                Step::Keep(h.point)
            } else {
                Step::Refine
            })
        });
        let mut out = Vec::with_capacity(mapped.len());
        let mut refine = false;
        for m in mapped {
            match m? {
                Step::Keep(p) => out.push(p),
                Step::Drop => {}
                Step::Refine => refine = true,
            }
        }
        if !refine {
            if out.is_empty() {
                out.push(xi.clone());
            }
            return Ok(dedup_points(out, eps * 1e-9));
        }
        log::debug!("intersect_net: crossing moved a point too far at delta {delta:e}, refining");
        delta /= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ClippedCone, FiniteCone};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn max_gap(
        region: &impl ConvexRegion,
        net: &[Vector],
        lo: f64,
        hi: f64,
        samples: usize,
    ) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = region.dim();
        let mut worst: f64 = 0.0;
        let mut taken = 0;
        while taken < samples {
            let s = Vector::from_fn(n, |_, _| rng.random_range(lo..hi));
            if !region.contains(&s) {
                continue;
            }
            taken += 1;
            let d = net
                .iter()
                .map(|p| (p - &s).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn unit_interval_half_net() {
        let b = ConvexBody::new_box(v(&[0.0]), v(&[1.0])).unwrap();
        let net = epsilon_net(&b, 0.5).unwrap();
        let coords: Vec<f64> = net.iter().map(|p| p[0]).collect();
        assert_eq!(coords, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn coarse_ball_net_is_center() {
        let b = ConvexBody::new_ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(epsilon_net(&b, 2.0).unwrap(), vec![v(&[0.0, 0.0])]);
    }

    #[test]
    fn square_net_size_and_coverage() {
        let b = ConvexBody::new_box(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        let net = epsilon_net(&b, 0.1).unwrap();
        assert!(net.len() <= 441);
        assert!(net.iter().all(|p| b.contains(p)));
        assert!(max_gap(&b, &net, -1.0, 1.0, 2000) < 0.1);
    }

    #[test]
    fn ball_net_coverage() {
        let b = ConvexBody::new_ball(v(&[0.5, -0.5, 0.0]), 0.7).unwrap();
        let net = epsilon_net(&b, 0.2).unwrap();
        assert!(net.iter().all(|p| b.contains(p)));
        assert!(max_gap(&b, &net, -1.2, 1.2, 2000) < 0.2);
    }

    #[test]
    fn cap_is_enforced() {
        let b = ConvexBody::new_box(v(&[0.0, 0.0, 0.0]), v(&[1.0, 1.0, 1.0])).unwrap();
        assert!(matches!(
            epsilon_net_capped(&b, 1e-3, 1000),
            Err(GeometryError::ResolutionCapExceeded { cap: 1000, .. })
        ));
    }

    #[test]
    fn intersect_identical_boxes() {
        let b = ConvexBody::new_box(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let net = intersect_net(&b, &b, 0.5, &v(&[0.5, 0.5])).unwrap();
        assert!(net.iter().all(|p| b.contains(p)));
        assert!(max_gap(&b, &net, 0.0, 1.0, 1000) < 0.5);
    }

    #[test]
    fn intersect_left_half_box() {
        let x = ConvexBody::new_box(v(&[-1.0, -1.0]), v(&[1.0, 1.0])).unwrap();
        let half = FiniteCone::new(vec![v(&[-1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.0, -1.0])]).unwrap();
        let y = ClippedCone::new(half, 1.5).unwrap();
        let net = intersect_net(&x, &y, 0.25, &v(&[-0.5, 0.0])).unwrap();
        let both = Intersection(&x, &y);
        assert!(net.iter().all(|p| both.contains(p)));
        assert!(max_gap(&both, &net, -1.0, 1.0, 2000) < 0.25);
    }

    #[test]
    fn intersect_needs_interior() {
        let x = ConvexBody::new_box(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let y = ConvexBody::new_box(v(&[2.0, 2.0]), v(&[3.0, 3.0])).unwrap();
        assert_eq!(
            intersect_net(&x, &y, 0.5, &v(&[0.5, 0.5])),
            Err(GeometryError::NoInteriorWitness)
        );
    }
}
