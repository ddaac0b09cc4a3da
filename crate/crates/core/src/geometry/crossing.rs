use super::{check_dim, ConvexRegion, GeometryError, Vector, BOUNDARY_BAND};

/// Length of the final bisection bracket along the segment.
const SEGMENT_TOLERANCE: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

/// Result of [`boundary_crossing`]: `point = t·xi + (1 − t)·z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub point: Vector,
    pub t: f64,
}

/// Sends `z` to where the segment from `xi` to `z` leaves the region, and
/// fixes points of the region.
///
/// `xi` must lie strictly inside. The boundary is bracketed by bisection on
/// membership; the returned point is the inner end of the final bracket, so it
/// belongs to the region and sits within `1e-10` of the boundary. `t` is in `[0, 1)`.
pub fn boundary_crossing<R: ConvexRegion + ?Sized>(
    region: &R,
    xi: &Vector,
    z: &Vector,
) -> Result<Crossing, GeometryError> {
    let n = region.dim();
    check_dim(n, xi)?;
    check_dim(n, z)?;
    if !(region.depth(xi) > BOUNDARY_BAND) {
        return Err(GeometryError::NoInteriorWitness);
    }
    if region.contains(z) {
        return Ok(Crossing {
            point: z.clone(),
            t: 0.0,
        });
    }
    let dir = z - xi;
    let len = dir.norm();
    // s = 0 is inside, s = 1 is outside
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..MAX_BISECTIONS {
        if (hi - lo) * len <= SEGMENT_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if region.contains(&(xi + &dir * mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Crossing {
        point: xi + &dir * lo,
        t: 1.0 - lo,
    })
}

/// Uniform continuity modulus of the crossing map for a region with
/// `ball(xi, inner_radius)` inside it and contained in `ball(xi, outer_radius)`.
///
/// `φ(δ) = δ|sin β| / |sin(α + θ)|` with `θ = acos(1 − δ²/2R²)`,
/// `β = acos(δ/2R)` and `α = asin(r/R)`.
pub fn crossing_modulus(
    outer_radius: f64,
    inner_radius: f64,
    delta: f64,
) -> Result<f64, GeometryError> {
    let (big_r, r) = (outer_radius, inner_radius);
    if !(delta > 0.0 && delta <= 2.0 * big_r) {
        return Err(GeometryError::ModulusDomain(format!(
            "delta {delta} outside (0, 2R] with R = {big_r}"
        )));
    }
    if !(r > 0.0 && r < big_r) {
        return Err(GeometryError::ModulusDomain(format!(
            "need 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let theta = (1.0 - delta * delta / (2.0 * big_r * big_r))
        .clamp(-1.0, 1.0)
        .acos();
    let beta = (delta / (2.0 * big_r)).acos();
    let alpha = (r / big_r).asin();
    let denom = (alpha + theta).sin().abs();
    if denom < 1e-300 {
        return Err(GeometryError::ModulusDomain("sin(α + θ) vanishes".into()));
    }
    Ok(delta * beta.sin().abs() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexBody, FiniteCone};

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn unit_ball_exit() {
        let ball = ConvexBody::new_ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let c = boundary_crossing(&ball, &v(&[0.0, 0.0]), &v(&[2.0, 0.0])).unwrap();
        assert!((c.point - v(&[1.0, 0.0])).norm() < 1e-9);
        assert!((c.t - 0.5).abs() < 1e-9);
    }

    #[test]
    fn interior_point_is_fixed() {
        let ball = ConvexBody::new_ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let xi = v(&[0.2, 0.1]);
        let c = boundary_crossing(&ball, &xi, &xi).unwrap();
        assert_eq!(c.point, xi);
        assert_eq!(c.t, 0.0);
    }

    #[test]
    fn cone_exit_through_vertical_facet() {
        // (-0.5 + s, 0.3 - 0.8 s) hits x1 = 0 at s = 0.5 before x1 + x2 = 0 at s = 1
        let y = FiniteCone::new(vec![v(&[-1.0, 1.0]), v(&[0.0, -1.0]), v(&[-1.0, 0.0])]).unwrap();
        let c = boundary_crossing(&y, &v(&[-0.5, 0.3]), &v(&[0.5, -0.5])).unwrap();
        assert!((&c.point - v(&[0.0, -0.1])).norm() < 1e-8, "{c:?}");
        assert!((c.t - 0.5).abs() < 1e-8);
        assert!(y.contains(&c.point));
    }

    #[test]
    fn exterior_xi_rejected() {
        let ball = ConvexBody::new_ball(v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(
            boundary_crossing(&ball, &v(&[1.0, 0.0]), &v(&[2.0, 0.0])),
            Err(GeometryError::NoInteriorWitness)
        );
    }

    #[test]
    fn modulus_value_and_limits() {
        let phi = crossing_modulus(2.0, 1.0, 0.1).unwrap();
        assert!((phi - 0.18420).abs() < 1e-4, "{phi}");
        assert!(crossing_modulus(2.0, 1.0, 1e-8).unwrap() < 1e-7);
        assert!(matches!(
            crossing_modulus(1.0, 1.0, 0.1),
            Err(GeometryError::ModulusDomain(_))
        ));
        assert!(matches!(
            crossing_modulus(1.0, 0.5, 2.5),
            Err(GeometryError::ModulusDomain(_))
        ));
    }
}
